#include "bsrgan/config.hpp"

#include <set>
#include <string>
#include <utility>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& detail) {
  throw ValidationError("config", path + ": " + detail);
}

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  /// The member under `key`, or nullptr when absent or null.
  const json* child(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void read(const std::string& key, std::size_t& out) {
    if (!present(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) {
      fail(where(key), "expected a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void read(const std::string& key, double& out) {
    if (!present(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(where(key), "expected a number");
    out = v.get<double>();
  }

  void read(const std::string& key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    double v = 0.0;
    read(key, v);
    out = v;
  }

  void read(const std::string& key, bool& out) {
    if (!present(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    out = v.get<bool>();
  }

  void read(const std::string& key, std::string& out) {
    if (!present(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    out = v.get<std::string>();
  }

  void read(const std::string& key, std::vector<std::size_t>& out) {
    if (!present(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(where(key), "expected an array of sizes");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number_unsigned() || e.get<std::size_t>() == 0) {
        fail(where(key), "expected positive integers");
      }
      out.push_back(e.get<std::size_t>());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(where(key), "unknown key");
    }
  }

 private:
  bool present(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

AdamConfig adam_from_json(const json& j, const std::string& path, AdamConfig out) {
  ObjectReader r(j, path);
  r.read("learning_rate", out.learning_rate);
  r.read("beta1", out.beta1);
  r.read("beta2", out.beta2);
  r.read("epsilon", out.epsilon);
  r.finish();
  if (!(out.learning_rate > 0.0)) fail(path + ".learning_rate", "must be positive");
  if (!(out.beta1 >= 0.0 && out.beta1 < 1.0)) fail(path + ".beta1", "must be in [0, 1)");
  if (!(out.beta2 >= 0.0 && out.beta2 < 1.0)) fail(path + ".beta2", "must be in [0, 1)");
  if (!(out.epsilon > 0.0)) fail(path + ".epsilon", "must be positive");
  return out;
}

json to_json(const AdamConfig& a) {
  return {{"learning_rate", a.learning_rate},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"epsilon", a.epsilon}};
}

ClassifierConfig classifier_from_json(const json& j, const std::string& path,
                                      ClassifierConfig out) {
  ObjectReader r(j, path);
  r.read("epochs", out.epochs);
  r.read("batch_size", out.batch_size);
  r.read("hidden", out.hidden);
  if (const json* a = r.child("adam")) out.adam = adam_from_json(*a, path + ".adam", out.adam);
  r.finish();
  if (out.batch_size == 0) fail(path + ".batch_size", "must be positive");
  return out;
}

// Classifier seeds are derived from the run seed, so they are not serialized.
json to_json(const ClassifierConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"hidden", c.hidden},
          {"adam", to_json(c.adam)}};
}

void gan_from_json(const json& j, TrainConfig& t) {
  ObjectReader r(j, "gan");
  r.read("n_critic", t.n_critic);
  r.read("batch_size", t.batch_size);
  r.read("epochs", t.epochs);
  r.read("alpha", t.alpha);
  r.read("beta", t.beta);
  r.read("lambda_rs", t.lambda_rs);
  r.read("lambda_ru", t.lambda_ru);
  r.read("noise_dim", t.noise_dim);
  r.read("condition_critic", t.condition_critic);
  r.read("generator_hidden", t.generator_hidden);
  r.read("critic_hidden", t.critic_hidden);
  r.read("regressor_hidden", t.regressor_hidden);
  r.read("regressor_real_seen", t.regressor_real_seen);
  if (const json* a = r.child("adam")) t.gan_adam = adam_from_json(*a, "gan.adam", t.gan_adam);
  if (const json* a = r.child("regressor_adam")) {
    t.regressor_adam = adam_from_json(*a, "gan.regressor_adam", t.regressor_adam);
  }
  r.finish();
}

json gan_to_json(const TrainConfig& t) {
  return {{"n_critic", t.n_critic},
          {"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"alpha", t.alpha},
          {"beta", t.beta},
          {"lambda_rs", t.lambda_rs},
          {"lambda_ru", t.lambda_ru},
          {"noise_dim", t.noise_dim},
          {"condition_critic", t.condition_critic},
          {"generator_hidden", t.generator_hidden},
          {"critic_hidden", t.critic_hidden},
          {"regressor_hidden", t.regressor_hidden},
          {"regressor_real_seen", t.regressor_real_seen},
          {"adam", to_json(t.gan_adam)},
          {"regressor_adam", to_json(t.regressor_adam)}};
}

// Reads every experiment key from `r`, leaving other keys to the caller.
ExperimentConfig read_experiment(ObjectReader& r) {
  ExperimentConfig c;
  std::size_t seed = 0;
  r.read("seed", seed);
  std::string mode = to_string(c.mode);
  r.read("mode", mode);
  try {
    c.mode = parse_ablation_mode(mode);
  } catch (const ValidationError& e) {
    fail("mode", e.what());
  }
  r.read("n_syn_per_class", c.n_syn_per_class);
  if (c.n_syn_per_class == 0) fail("n_syn_per_class", "must be positive");
  r.read("gamma", c.train.gamma);
  if (c.train.gamma && !(*c.train.gamma >= 0.0 && *c.train.gamma <= 1.0)) {
    fail("gamma", "must lie in [0, 1]");
  }
  r.read("tie_regressors", c.tie_regressors);
  if (const json* g = r.child("gan")) gan_from_json(*g, c.train);
  for (auto [key, slot] : {std::pair{"seen_classifier", &c.seen_classifier},
                           std::pair{"vsr_classifier", &c.vsr_classifier},
                           std::pair{"softmax_classifier", &c.softmax_classifier}}) {
    if (const json* k = r.child(key)) *slot = classifier_from_json(*k, key, *slot);
  }
  c.train.seed = seed;
  c.seen_classifier.seed = seed;
  c.vsr_classifier.seed = seed;
  c.softmax_classifier.seed = seed;
  try {
    validate(c.train);
  } catch (const ContractError& e) {
    fail("gan", e.what());
  }
  return c;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

json parse_json_text(std::string_view text, std::string_view source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string(source) + ": " + e.what());
  }
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec s;
  ObjectReader r(j, "synthetic");
  r.read("n_classes", s.n_classes);
  r.read("n_seen", s.n_seen);
  r.read("d_visual", s.d_visual);
  r.read("d_attr", s.d_attr);
  r.read("samples_per_class", s.samples_per_class);
  r.read("cluster_std", s.cluster_std);
  std::size_t seed = 0;
  r.read("seed", seed);
  s.seed = seed;
  r.finish();
  validate(s);
  return s;
}

json to_json(const SyntheticSpec& s) {
  return {{"n_classes", s.n_classes},
          {"n_seen", s.n_seen},
          {"d_visual", s.d_visual},
          {"d_attr", s.d_attr},
          {"samples_per_class", s.samples_per_class},
          {"cluster_std", s.cluster_std},
          {"seed", s.seed}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ObjectReader r(j, "");
  ExperimentConfig c = read_experiment(r);
  r.finish();
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"seed", c.train.seed},
          {"mode", to_string(c.mode)},
          {"n_syn_per_class", c.n_syn_per_class},
          {"gamma", c.train.gamma ? json(*c.train.gamma) : json()},
          {"tie_regressors", c.tie_regressors},
          {"gan", gan_to_json(c.train)},
          {"seen_classifier", to_json(c.seen_classifier)},
          {"vsr_classifier", to_json(c.vsr_classifier)},
          {"softmax_classifier", to_json(c.softmax_classifier)}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "");
  RunConfig c;
  c.experiment = read_experiment(r);
  if (const json* data = r.child("data")) {
    ObjectReader d(*data, "data");
    DataPaths paths;
    for (auto [key, slot] : {std::pair{"features", &paths.features},
                             std::pair{"attributes", &paths.attributes},
                             std::pair{"labels", &paths.labels},
                             std::pair{"splits", &paths.splits}}) {
      if (!d.has(key)) fail(std::string("data.") + key, "missing");
      std::string value;
      d.read(key, value);
      *slot = resolve(base_dir, value);
    }
    d.finish();
    c.data = paths;
  }
  if (const json* synthetic = r.child("synthetic")) {
    try {
      c.synthetic = synthetic_spec_from_json(*synthetic);
    } catch (const ValidationError& e) {
      if (e.clause() == "config") throw;
      fail("synthetic", e.what());
    }
  }
  if (c.data.has_value() == c.synthetic.has_value()) {
    fail("data", "exactly one of \"data\" and \"synthetic\" must be given");
  }
  r.read("jobs", c.jobs);
  if (c.jobs == 0) fail("jobs", "must be positive");
  std::string out;
  r.read("output_dir", out);
  if (!out.empty()) c.output_dir = resolve(base_dir, out);
  r.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const std::exception& e) {
    throw ValidationError("config", e.what());
  }
  return run_config_from_json(parse_json_text(text, file.string()), file.parent_path());
}

json data_source_json(const RunConfig& c) {
  json j = json::object();
  if (c.synthetic) {
    j["synthetic"] = to_json(*c.synthetic);
    return j;
  }
  j["data"] = {{"features", c.data->features.string()},
               {"attributes", c.data->attributes.string()},
               {"labels", c.data->labels.string()},
               {"splits", c.data->splits.string()}};
  return j;
}

json to_json(const RunConfig& c) {
  json j = to_json(c.experiment);
  j.update(data_source_json(c));
  j["jobs"] = c.jobs;
  j["output_dir"] = c.output_dir ? json(c.output_dir->string()) : json();
  return j;
}

LabeledData materialize_data(const RunConfig& c) {
  if (c.synthetic) return make_synthetic(*c.synthetic);
  return load_dataset(*c.data);
}

}  // namespace bsrgan
