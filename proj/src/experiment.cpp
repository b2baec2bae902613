#include "bsrgan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "bsrgan/config.hpp"
#include "bsrgan/errors.hpp"
#include "bsrgan/rng.hpp"

namespace bsrgan {

namespace {

struct ModeSetup {
  ReconstructionUse use;
  bool shared;
  bool descriptions;
};

ModeSetup setup_for(AblationMode mode) {
  switch (mode) {
    case AblationMode::base: return {ReconstructionUse::none, false, false};
    case AblationMode::sr: return {ReconstructionUse::regularize, true, false};
    case AblationMode::bsr: return {ReconstructionUse::regularize, false, false};
    case AblationMode::vsr: return {ReconstructionUse::standalone, false, true};
    case AblationMode::bsr_vsr: return {ReconstructionUse::regularize, false, true};
  }
  throw ContractError("unknown ablation mode");
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    std::string_view item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index is handled by
// exactly one worker; the first exception (by index) is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<double> maybe(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::base: return "base";
    case AblationMode::sr: return "sr";
    case AblationMode::bsr: return "bsr";
    case AblationMode::vsr: return "vsr";
    case AblationMode::bsr_vsr: return "bsr+vsr";
  }
  return "?";
}

AblationMode parse_ablation_mode(std::string_view text) {
  for (AblationMode m : {AblationMode::base, AblationMode::sr, AblationMode::bsr,
                         AblationMode::vsr, AblationMode::bsr_vsr}) {
    if (text == to_string(m)) return m;
  }
  throw ValidationError("mode", "unknown ablation mode '" + std::string(text) +
                                    "' (expected base, sr, bsr, vsr or bsr+vsr)");
}

std::vector<AblationMode> parse_ablation_modes(std::string_view comma_separated) {
  std::vector<AblationMode> out;
  for (std::string_view item : split_commas(comma_separated)) {
    out.push_back(parse_ablation_mode(item));
  }
  return out;
}

PreparedData PreparedData::from_raw(const LabeledData& raw, nlohmann::json source) {
  validate(raw.dataset, raw.split);
  PreparedData p;
  p.raw_hash = dataset_hash(raw);
  p.standardizer = Standardizer::fit(raw.dataset.features, raw.split.train_idx);
  p.data = raw;
  p.data.dataset.features = p.standardizer.apply(raw.dataset.features);
  p.source = std::move(source);
  return p;
}

nlohmann::json PreparedData::provenance() const {
  return {{"raw_data_sha256", raw_hash},
          {"standardized_data_sha256", dataset_hash(data)},
          {"standardization",
           {{"fit_rows", "train_idx"},
            {"mean", standardizer.mean()},
            {"scale", standardizer.scale()}}}};
}

nlohmann::json experiment_manifest(const ExperimentConfig& config, const nlohmann::json& source,
                                   double gamma) {
  nlohmann::json run = to_json(config);
  for (const auto& [key, value] : source.items()) run[key] = value;
  const std::uint64_t seed = config.train.seed;
  nlohmann::json seeds = nlohmann::json::object();
  for (auto [name, stream] :
       {std::pair{"generator_init", Stream::generator_init},
        std::pair{"critic_init", Stream::critic_init},
        std::pair{"seen_classifier_init", Stream::seen_classifier_init},
        std::pair{"seen_classifier_batches", Stream::seen_classifier_batches},
        std::pair{"regressor_s_init", Stream::regressor_s_init},
        std::pair{"regressor_u_init", Stream::regressor_u_init},
        std::pair{"gan_batches", Stream::gan_batches},
        std::pair{"gan_noise", Stream::gan_noise},
        std::pair{"penalty_mix", Stream::penalty_mix},
        std::pair{"synthesis_zsl", Stream::synthesis},
        std::pair{"synthesis_gzsl", Stream::synthesis_gzsl},
        std::pair{"zsl_classifier", Stream::zsl_classifier},
        std::pair{"gzsl_classifier", Stream::gzsl_classifier}}) {
    seeds[name] = derive_seed(seed, stream);
  }
  return {{"config", run},
          {"seed", seed},
          {"seeds", seeds},
          {"gamma", gamma},
          {"n_syn_per_class", config.n_syn_per_class},
          {"ablation_mode", to_string(config.mode)},
          {"version", "bsrgan 1.0.0"}};
}

ExperimentResult run_experiment(const PreparedData& prepared, const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset& data = prepared.data.dataset;
  const SplitSpec& split = prepared.data.split;
  const std::uint64_t seed = config.train.seed;
  const ModeSetup setup = setup_for(config.mode);
  validate(config.train);
  if (config.n_syn_per_class == 0) throw ContractError("n_syn_per_class must be at least 1");

  ExperimentResult result;
  result.gamma = config.train.gamma.value_or(default_gamma(split));

  ClassifierConfig seen_cfg = config.seen_classifier;
  seen_cfg.seed = seed;
  if (config.train.epochs == 0) seen_cfg.epochs = 0;  // initialized networks only
  const bool use_classifier = config.train.alpha > 0.0;
  if (use_classifier) result.seen_classifier = pretrain_seen_classifier(data, split, seen_cfg);

  if (setup.use != ReconstructionUse::none) {
    result.bsr = BsrComponent::create(data.d_visual(), data.d_attr(), config.train.regressor_hidden,
                                      derive_seed(seed, Stream::regressor_s_init),
                                      derive_seed(seed, Stream::regressor_u_init), result.gamma,
                                      setup.shared);
  }
  BsrComponent* bsr = result.bsr ? &*result.bsr : nullptr;
  GanTrainResult trained = train_gan(data, split, config.train,
                                     use_classifier ? &result.seen_classifier : nullptr, bsr,
                                     setup.use);
  result.gan = std::move(trained.model);
  result.log = std::move(trained.log);
  if (config.tie_regressors && bsr && !bsr->shared) bsr->r_u = bsr->r_s;

  const nlohmann::json manifest = experiment_manifest(config, prepared.source, result.gamma);
  const nlohmann::json provenance = prepared.provenance();
  if (!result.gan.trained) {
    result.seconds = seconds_since(start);
    return result;
  }

  ClassifierConfig clf_cfg = setup.descriptions ? config.vsr_classifier : config.softmax_classifier;
  const ClassifierTrainSet zsl_set =
      build_train_set(data, split, result.gan, TaskMode::zsl, config.n_syn_per_class,
                      derive_seed(seed, Stream::synthesis));
  clf_cfg.seed = derive_seed(seed, Stream::zsl_classifier);
  result.zsl_classifier = train_classifier(zsl_set, clf_cfg, setup.descriptions).classifier;

  const ClassifierTrainSet gzsl_set =
      build_train_set(data, split, result.gan, TaskMode::gzsl, config.n_syn_per_class,
                      derive_seed(seed, Stream::synthesis_gzsl));
  clf_cfg.seed = derive_seed(seed, Stream::gzsl_classifier);
  result.gzsl_classifier = train_classifier(gzsl_set, clf_cfg, setup.descriptions).classifier;

  result.zsl = evaluate_zsl(*result.zsl_classifier, bsr, data, split);
  result.gzsl = evaluate_gzsl(*result.gzsl_classifier, bsr, data, split);
  result.summary = result.gzsl;
  result.summary.a = result.zsl.a;
  for (EvalReport* r : {&result.zsl, &result.gzsl, &result.summary}) {
    r->manifest = manifest;
    r->provenance = provenance;
  }
  result.seconds = seconds_since(start);
  return result;
}

std::vector<ResultRow> run_ablation(const PreparedData& prepared, const ExperimentConfig& config,
                                    const std::vector<AblationMode>& modes, std::size_t jobs) {
  if (modes.empty()) throw ValidationError("mode", "no ablation modes given");
  std::vector<ResultRow> rows(modes.size());
  parallel_for(modes.size(), jobs, [&](std::size_t i) {
    ExperimentConfig c = config;
    c.mode = modes[i];
    ExperimentResult r = run_experiment(prepared, c);
    rows[i] = {to_string(modes[i]), std::move(r.summary), r.seconds};
  });
  return rows;
}

std::string to_string(SweepParam param) {
  return param == SweepParam::gamma ? "gamma" : "n_syn";
}

SweepParam parse_sweep_param(std::string_view text) {
  if (text == "gamma") return SweepParam::gamma;
  if (text == "n_syn") return SweepParam::n_syn;
  throw ValidationError("param", "unknown sweep parameter '" + std::string(text) +
                                     "' (expected gamma or n_syn)");
}

std::vector<double> parse_grid(std::string_view comma_separated) {
  std::vector<double> out;
  for (std::string_view item : split_commas(comma_separated)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() ||
        !std::isfinite(v)) {
      throw ValidationError("grid", "'" + std::string(item) + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<ResultRow> sweep(SweepParam param, const std::vector<double>& grid,
                             const PreparedData& prepared, const ExperimentConfig& config,
                             std::size_t jobs) {
  if (grid.empty()) throw ValidationError("grid", "empty grid");
  std::vector<ExperimentConfig> configs;
  for (double v : grid) {
    ExperimentConfig c = config;
    if (param == SweepParam::gamma) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("grid", "gamma " + format_double(v) + " is outside [0, 1]");
      }
      c.train.gamma = v;
    } else {
      if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
        throw ValidationError("grid", "n_syn " + format_double(v) + " is not a positive integer");
      }
      c.n_syn_per_class = static_cast<std::size_t>(v);
    }
    configs.push_back(std::move(c));
  }
  std::vector<ResultRow> rows(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    ExperimentResult r = run_experiment(prepared, configs[i]);
    rows[i] = {format_double(grid[i]), std::move(r.summary), r.seconds};
  });
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows, std::uint64_t seed) {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "mode_or_param,a,u,s,h,seed\n";
  for (const ResultRow& r : rows) {
    out += r.label + "," + cell(r.report.a) + "," + cell(r.report.u) + "," + cell(r.report.s) +
           "," + cell(r.report.h) + "," + std::to_string(seed) + "\n";
  }
  return out;
}

nlohmann::json results_json(const std::vector<ResultRow>& rows) {
  nlohmann::json table = nlohmann::json::array();
  nlohmann::json argmax = nlohmann::json::object();
  for (const char* metric : {"a", "u", "s", "h"}) {
    std::optional<double> best;
    for (const ResultRow& r : rows) {
      const auto v = maybe(r.report.to_json()[metric]);
      if (v && (!best || *v > *best)) {
        best = v;
        argmax[metric] = {{"label", r.label}, {"value", *v}};
      }
    }
    if (!best) argmax[metric] = nullptr;
  }
  for (const ResultRow& r : rows) {
    table.push_back({{"label", r.label}, {"seconds", r.seconds}, {"report", r.report.to_json()}});
  }
  return {{"rows", table}, {"argmax", argmax}};
}

}  // namespace bsrgan
