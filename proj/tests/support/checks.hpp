#pragma once

// Randomized check suites shared by the unit tests and the acceptance runner.
// Each returns a CheckResult instead of asserting, so the acceptance binary
// can print one line per suite and gtest can assert on `passed()`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace checks {

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest error seen, when the suite measures one
  std::string detail;  // first failure, if any

  bool passed() const { return cases > 0 && failures == 0; }
  void fail(const std::string& what) {
    if (failures++ == 0) detail = what;
  }
  std::string summary() const;
};

// Gradients of the generator, critic (with and without the penalty),
// reconstruction and classifier losses against central differences.
CheckResult gradient_oracle(std::uint64_t seed, std::size_t configs = 50);

// Library loss values against straight-line re-computation.
CheckResult loss_oracle(std::uint64_t seed, std::size_t instances = 20);

// Published harmonic-mean rows and per-class accuracy against a tally.
CheckResult metric_identities(std::uint64_t seed, std::size_t cases = 100);

// Invariant suites, one per documented property. `cli` may be empty, in which
// case command-line properties are skipped.
std::vector<CheckResult> autodiff_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> nn_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> data_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> gan_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> bsr_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> vsr_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> eval_properties(std::uint64_t seed, std::size_t cases = 200);
std::vector<CheckResult> cli_properties(const std::filesystem::path& cli,
                                        const std::filesystem::path& scratch);

std::vector<CheckResult> all_properties(std::uint64_t seed, const std::filesystem::path& cli,
                                        const std::filesystem::path& scratch);

}  // namespace checks
