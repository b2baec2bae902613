// bsrgan: synthesize benchmarks, train, evaluate, ablate and sweep.
//
// Exit codes: 0 success, 2 usage or validation failure, 3 numerical failure
// during training.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bsrgan/artifacts.hpp"
#include "bsrgan/checkpoint.hpp"
#include "bsrgan/config.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/errors.hpp"
#include "bsrgan/experiment.hpp"

namespace fs = std::filesystem;
using namespace bsrgan;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct Options {
  fs::path spec;
  fs::path config;
  fs::path out;
  fs::path run;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string task_mode;
  std::string modes;
  std::string param;
  std::string grid;
};

RunConfig load_config(const Options& o) {
  RunConfig c = load_run_config(o.config);
  if (o.seed) {
    c.experiment.train.seed = *o.seed;
    c.experiment.seen_classifier.seed = *o.seed;
    c.experiment.vsr_classifier.seed = *o.seed;
    c.experiment.softmax_classifier.seed = *o.seed;
  }
  if (o.jobs) c.jobs = *o.jobs;
  return c;
}

fs::path output_dir(const Options& o, const RunConfig& c) {
  if (!o.out.empty()) return o.out;
  if (c.output_dir) return *c.output_dir;
  throw ValidationError("config", "no output directory (pass --out or set output_dir)");
}

PreparedData prepare(const RunConfig& c) {
  return PreparedData::from_raw(materialize_data(c), data_source_json(c));
}

int synth_data(const Options& o) {
  const SyntheticSpec spec =
      synthetic_spec_from_json(parse_json_text(read_file(o.spec), o.spec.string()));
  const LabeledData data = make_synthetic(spec);
  fs::create_directories(o.out);
  write_dataset(data, o.out);
  std::cout << dataset_hash(data) << "\n";
  return kOk;
}

int train(const Options& o) {
  const RunConfig c = load_config(o);
  const fs::path out = output_dir(o, c);
  const PreparedData prepared = prepare(c);
  const ExperimentResult result = run_experiment(prepared, c.experiment);
  fs::create_directories(out);
  write_run(out, c, prepared, result);
  if (result.gan.trained) {
    const EvalReport& r = result.summary;
    std::cout << "a=" << format_double(*r.a) << " u=" << format_double(*r.u)
              << " s=" << format_double(*r.s) << " h=" << format_double(*r.h) << "\n";
  } else {
    std::cout << "epochs=0: wrote initialized checkpoints to " << out.string() << "\n";
  }
  return kOk;
}

int eval(const Options& o) {
  const TaskMode mode = parse_task_mode(o.task_mode);
  const LoadedRun run = load_run(o.run, mode);
  const EvalReport report = evaluate_run(run, mode);
  const fs::path out = o.out.empty() ? o.run : o.out;
  fs::create_directories(out);
  const std::string stem = "eval_" + to_string(mode);
  write_file(out / (stem + ".json"), dump_json(report.to_json()));
  write_file(out / ("predictions_" + to_string(mode) + ".csv"),
             predictions_csv(report.predictions));
  if (mode == TaskMode::zsl) {
    std::cout << "a=" << format_double(*report.a) << "\n";
  } else {
    std::cout << "u=" << format_double(*report.u) << " s=" << format_double(*report.s)
              << " h=" << format_double(*report.h) << "\n";
  }
  return kOk;
}

int write_table(const fs::path& out, const std::string& stem, const std::vector<ResultRow>& rows,
                std::uint64_t seed) {
  fs::create_directories(out);
  const std::string csv = results_csv(rows, seed);
  write_file(out / (stem + ".csv"), csv);
  write_file(out / (stem + ".json"), dump_json(results_json(rows)));
  std::cout << csv;
  return kOk;
}

int ablate(const Options& o) {
  const auto modes = parse_ablation_modes(o.modes);
  const RunConfig c = load_config(o);
  const fs::path out = output_dir(o, c);
  const auto rows = run_ablation(prepare(c), c.experiment, modes, c.jobs);
  return write_table(out, "ablation", rows, c.seed());
}

int sweep_cmd(const Options& o) {
  const SweepParam param = parse_sweep_param(o.param);
  const auto grid = parse_grid(o.grid);
  const RunConfig c = load_config(o);
  const fs::path out = output_dir(o, c);
  const auto rows = sweep(param, grid, prepare(c), c.experiment, c.jobs);
  return write_table(out, "sweep_" + to_string(param), rows, c.seed());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot learning with a conditional WGAN and bi-semantic reconstruction"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth-data", "Write a synthetic benchmark");
  synth->add_option("--spec", o.spec, "SyntheticSpec JSON file")->required();
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Run the full training pipeline");
  tr->add_option("--config", o.config, "Run config JSON")->required();
  tr->add_option("--out", o.out, "Output directory");
  tr->add_option("--seed", o.seed, "Override the config seed");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained run");
  ev->add_option("--run", o.run, "Run directory written by train")->required();
  ev->add_option("--mode", o.task_mode, "zsl or gzsl")->required();
  ev->add_option("--out", o.out, "Output directory (default: the run directory)");

  auto* ab = app.add_subcommand("ablate", "Compare ablation settings");
  ab->add_option("--config", o.config, "Run config JSON")->required();
  ab->add_option("--modes", o.modes, "Comma list of base, sr, bsr, vsr, bsr+vsr")->required();
  ab->add_option("--out", o.out, "Output directory");
  ab->add_option("--seed", o.seed, "Override the config seed");
  ab->add_option("--jobs", o.jobs, "Parallel runs");

  auto* sw = app.add_subcommand("sweep", "Sweep gamma or the synthesized count");
  sw->add_option("--config", o.config, "Run config JSON")->required();
  sw->add_option("--param", o.param, "gamma or n_syn")->required();
  sw->add_option("--grid", o.grid, "Comma list of values")->required();
  sw->add_option("--out", o.out, "Output directory");
  sw->add_option("--seed", o.seed, "Override the config seed");
  sw->add_option("--jobs", o.jobs, "Parallel runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (synth->parsed()) return synth_data(o);
    if (tr->parsed()) return train(o);
    if (ev->parsed()) return eval(o);
    if (ab->parsed()) return ablate(o);
    if (sw->parsed()) return sweep_cmd(o);
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
