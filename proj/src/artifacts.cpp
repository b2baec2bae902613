#include "bsrgan/artifacts.hpp"

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kRunFormat = "bsrgan-run";

json classifier_hyperparameters(const VsrClassifier& c, const ClassifierConfig& cfg) {
  return {{"class_index_map", c.class_index_map},
          {"mode", to_string(c.mode)},
          {"uses_descriptions", c.uses_descriptions},
          {"hidden", cfg.hidden},
          {"epochs", cfg.epochs}};
}

const char* classifier_name(TaskMode mode) {
  return mode == TaskMode::zsl ? "zsl_classifier" : "gzsl_classifier";
}

}  // namespace

std::string to_string(TaskMode mode) { return mode == TaskMode::zsl ? "zsl" : "gzsl"; }

TaskMode parse_task_mode(std::string_view text) {
  if (text == "zsl") return TaskMode::zsl;
  if (text == "gzsl") return TaskMode::gzsl;
  throw ValidationError("mode", "unknown task mode '" + std::string(text) +
                                    "' (expected zsl or gzsl)");
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_run(const fs::path& out, const RunConfig& config, const PreparedData& prepared,
               const ExperimentResult& result) {
  const fs::path ckpt = out / "checkpoints";
  fs::create_directories(ckpt);
  const ExperimentConfig& exp = config.experiment;
  std::vector<std::string> written;
  auto save = [&](const Mlp& net, const std::string& name, const json& hyper) {
    save_mlp(net, ckpt / name, hyper);
    written.push_back(name);
  };

  save(result.gan.generator, "generator",
       {{"noise_dim", result.gan.noise_dim}, {"d_attr", result.gan.d_attr}});
  save(result.gan.critic, "critic", {{"condition_critic", result.gan.condition_critic}});
  if (exp.train.alpha > 0.0) {
    save(result.seen_classifier, "seen_classifier",
         {{"class_index_map", prepared.data.split.seen_classes}});
  }
  if (result.bsr) {
    const json hyper = {{"gamma", result.bsr->gamma}, {"shared", result.bsr->shared}};
    save(result.bsr->r_s, "regressor_s", hyper);
    if (!result.bsr->shared) save(result.bsr->r_u, "regressor_u", hyper);
  }
  if (result.zsl_classifier) {
    const ClassifierConfig& cfg =
        result.zsl_classifier->uses_descriptions ? exp.vsr_classifier : exp.softmax_classifier;
    save(result.zsl_classifier->net, "zsl_classifier",
         classifier_hyperparameters(*result.zsl_classifier, cfg));
    save(result.gzsl_classifier->net, "gzsl_classifier",
         classifier_hyperparameters(*result.gzsl_classifier, cfg));
  }

  write_file(out / "train_log.jsonl", result.log.to_jsonl());
  if (result.gan.trained) write_file(out / "report.json", dump_json(result.summary.to_json()));

  const json manifest = {
      {"format", kRunFormat},
      {"version", 1},
      {"run", experiment_manifest(exp, data_source_json(config), result.gamma)},
      {"provenance", prepared.provenance()},
      {"trained", result.gan.trained},
      {"checkpoints", written},
      {"log_records", result.log.records.size()}};
  write_file(out / "manifest.json", dump_json(manifest));
}

LoadedRun load_run(const fs::path& dir, TaskMode mode) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kRunFormat) {
    throw FormatError(manifest_path.string() + ": not a run manifest");
  }

  const fs::path ckpt = dir / "checkpoints";
  const std::string name = classifier_name(mode);
  if (!fs::exists(ckpt / (name + ".json"))) {
    throw FormatError("run " + dir.string() + " has no " + name + " checkpoint");
  }

  LoadedRun run;
  try {
    run.config = run_config_from_json(manifest.at("run").at("config"));
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  const LabeledData raw = materialize_data(run.config);
  run.prepared = PreparedData::from_raw(raw, data_source_json(run.config));
  const std::string recorded =
      manifest.at("provenance").at("raw_data_sha256").get<std::string>();
  if (run.prepared.raw_hash != recorded) {
    throw ValidationError("data hash", "data now hashes to " + run.prepared.raw_hash +
                                           ", run was trained on " + recorded);
  }

  LoadedMlp clf = load_mlp(ckpt / name);
  try {
    run.classifier.net = std::move(clf.mlp);
    run.classifier.class_index_map =
        clf.hyperparameters.at("class_index_map").get<std::vector<std::size_t>>();
    run.classifier.mode = parse_task_mode(clf.hyperparameters.at("mode").get<std::string>());
    run.classifier.uses_descriptions = clf.hyperparameters.at("uses_descriptions").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(name + ": " + e.what());
  }

  if (fs::exists(ckpt / "regressor_s.json")) {
    LoadedMlp rs = load_mlp(ckpt / "regressor_s");
    BsrComponent bsr;
    bsr.gamma = rs.hyperparameters.at("gamma").get<double>();
    bsr.shared = rs.hyperparameters.at("shared").get<bool>();
    bsr.r_s = std::move(rs.mlp);
    if (!bsr.shared) bsr.r_u = load_mlp(ckpt / "regressor_u").mlp;
    run.bsr = std::move(bsr);
  }
  return run;
}

EvalReport evaluate_run(const LoadedRun& run, TaskMode mode) {
  const BsrComponent* bsr = run.bsr ? &*run.bsr : nullptr;
  const Dataset& data = run.prepared.data.dataset;
  const SplitSpec& split = run.prepared.data.split;
  EvalReport report = mode == TaskMode::zsl ? evaluate_zsl(run.classifier, bsr, data, split)
                                            : evaluate_gzsl(run.classifier, bsr, data, split);
  report.manifest = experiment_manifest(run.config.experiment, data_source_json(run.config),
                                        bsr ? bsr->gamma
                                            : run.config.experiment.train.gamma.value_or(
                                                  default_gamma(split)));
  report.provenance = run.prepared.provenance();
  return report;
}

}  // namespace bsrgan
