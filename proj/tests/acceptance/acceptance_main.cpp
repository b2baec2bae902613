// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/config.hpp"
#include "bsrgan/experiment.hpp"
#include "checks.hpp"

namespace fs = std::filesystem;
using namespace bsrgan;

namespace {

constexpr std::uint64_t kSeed = 20240607;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

RunConfig pinned_config() {
  return load_run_config(fs::path(BSRGAN_SOURCE_DIR) / "configs" / "acceptance.json");
}

PreparedData prepare(const RunConfig& c) {
  return PreparedData::from_raw(materialize_data(c), data_source_json(c));
}

// Fraction of samples whose nearest class mean (over all samples) is their own class.
double nearest_center_accuracy(const LabeledData& d) {
  const Dataset& ds = d.dataset;
  Matrix centers(ds.n_classes(), ds.d_visual());
  std::vector<double> counts(ds.n_classes(), 0.0);
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    for (std::size_t c = 0; c < ds.d_visual(); ++c) centers(ds.labels[i], c) += ds.features(i, c);
    counts[ds.labels[i]] += 1.0;
  }
  for (std::size_t k = 0; k < ds.n_classes(); ++k) {
    for (std::size_t c = 0; c < ds.d_visual(); ++c) centers(k, c) /= counts[k];
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ds.n_classes(); ++k) {
      double dist = 0.0;
      for (std::size_t c = 0; c < ds.d_visual(); ++c) {
        const double diff = ds.features(i, c) - centers(k, c);
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    hits += best == ds.labels[i] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ds.n_samples());
}

Outcome from_check(const checks::CheckResult& r, double seconds, double limit) {
  Outcome o;
  o.pass = r.passed() && seconds < limit;
  o.detail = r.summary() + ", " + fmt(seconds) + " s";
  if (seconds >= limit) o.detail += " exceeds the " + fmt(limit) + " s budget";
  return o;
}

Outcome criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = checks::gradient_oracle(kSeed, 50);
  return from_check(r, seconds_since(t0), 120.0);
}

Outcome criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = checks::loss_oracle(kSeed, 20);
  return from_check(r, seconds_since(t0), std::numeric_limits<double>::infinity());
}

Outcome criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = checks::metric_identities(kSeed, 100);
  return from_check(r, seconds_since(t0), std::numeric_limits<double>::infinity());
}

Outcome criteria_4_and_5(Outcome& fifth) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = pinned_config();
  const LabeledData raw = materialize_data(cfg);
  const double oracle = nearest_center_accuracy(raw);
  const PreparedData prepared = prepare(cfg);
  const ExperimentResult full = run_experiment(prepared, cfg.experiment);
  const double elapsed = seconds_since(t0);
  const double a = full.summary.a.value_or(0.0);
  const double h = full.summary.h.value_or(0.0);

  Outcome o;
  o.pass = oracle == 100.0 && a >= 90.0 && h >= 70.0 && elapsed < 900.0;
  o.detail = "nearest-center oracle " + fmt(oracle) + "%, ZSL a=" + fmt(a) + " (>= 90), GZSL h=" +
             fmt(h) + " (>= 70), " + fmt(elapsed) + " s";

  ExperimentConfig base = cfg.experiment;
  base.mode = AblationMode::base;
  const ExperimentResult baseline = run_experiment(prepared, base);
  const double u_full = full.summary.u.value_or(0.0);
  const double u_base = baseline.summary.u.value_or(0.0);
  fifth.pass = u_full >= u_base;
  fifth.detail = "BSR+VSR u=" + fmt(u_full) + " vs base u=" + fmt(u_base);
  return o;
}

Outcome criterion_6() {
  RunConfig cfg = pinned_config();
  cfg.experiment.tie_regressors = true;
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto rows = sweep(SweepParam::gamma, grid, prepare(cfg), cfg.experiment);
  auto metrics = [](const EvalReport& r) {
    nlohmann::json j = r.to_json();
    j.erase("manifest");  // records gamma itself
    std::ostringstream s;
    s << j.dump();
    for (const auto& p : r.predictions) s << p.sample_index << ',' << p.predicted << ';';
    return s.str();
  };
  Outcome o;
  o.pass = rows.size() == grid.size();
  for (const auto& row : rows) o.pass = o.pass && metrics(row.report) == metrics(rows[0].report);
  const EvalReport& r = rows.at(0).report;
  o.detail = std::to_string(rows.size()) + " gamma values, " +
             (o.pass ? "all reports identical" : "reports differ") + " (a=" +
             fmt(r.a.value_or(0)) + " h=" + fmt(r.h.value_or(0)) + ")";
  return o;
}

std::string tree_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + read_file(f);
  return all;
}

Outcome criterion_7(const fs::path& scratch) {
  const fs::path config = fs::path(BSRGAN_SOURCE_DIR) / "configs" / "acceptance.json";
  Outcome o;
  std::vector<fs::path> runs{scratch / "determinism_a", scratch / "determinism_b"};
  for (const auto& out : runs) {
    fs::remove_all(out);
    const std::string cmd = std::string("\"") + BSRGAN_CLI_PATH + "\" train --config \"" +
                            config.string() + "\" --out \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      o.detail = "train command failed";
      return o;
    }
  }
  const bool logs = read_file(runs[0] / "train_log.jsonl") == read_file(runs[1] / "train_log.jsonl");
  const bool ckpts = tree_bytes(runs[0] / "checkpoints") == tree_bytes(runs[1] / "checkpoints");
  o.pass = logs && ckpts;
  o.detail = std::string("training logs ") + (logs ? "identical" : "differ") + ", checkpoints " +
             (ckpts ? "identical" : "differ");
  return o;
}

Outcome criterion_8(const fs::path& scratch) {
  const auto results = checks::all_properties(kSeed, BSRGAN_CLI_PATH, scratch / "cli");
  Outcome o;
  o.pass = !results.empty();
  std::size_t passed = 0;
  for (const auto& r : results) {
    std::cout << "    " << r.summary() << "\n";
    if (r.passed()) ++passed;
    o.pass = o.pass && r.passed();
  }
  o.detail = std::to_string(passed) + "/" + std::to_string(results.size()) + " property suites";
  return o;
}

void report(int n, const std::string& title, const Outcome& o, bool& all) {
  std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " " << title << ": "
            << o.detail << std::endl;
  all = all && o.pass;
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what()};
  }
}

}  // namespace

int main() {
  const fs::path scratch =
      fs::temp_directory_path() / ("bsrgan_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(scratch);
  bool all = true;

  report(1, "gradient oracle", guarded(criterion_1), all);
  report(2, "loss oracles", guarded(criterion_2), all);
  report(3, "metric identities", guarded(criterion_3), all);
  Outcome fifth{false, "not run"};
  report(4, "end-to-end synthetic ZSL", guarded([&] { return criteria_4_and_5(fifth); }), all);
  report(5, "ablation ordering", fifth, all);
  report(6, "combiner collapse", guarded(criterion_6), all);
  report(7, "determinism", guarded([&] { return criterion_7(scratch); }), all);
  report(8, "invariant suites", guarded([&] { return criterion_8(scratch); }), all);

  fs::remove_all(scratch);
  std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
  return all ? 0 : 1;
}
