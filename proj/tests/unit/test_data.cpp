#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/errors.hpp"

using namespace bsrgan;
namespace fs = std::filesystem;

namespace {

class FixtureDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bsrgan_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_file(dir_ / "features.csv", "1,2,3\n4,5,6\n7,8,9\n10,11,12\n");
    write_file(dir_ / "attributes.csv", "1,0\n0,1\n");
    write_file(dir_ / "labels.csv", "0\n0\n0\n1\n");
    write_file(dir_ / "splits.json",
               R"({"seen_classes":[0],"unseen_classes":[1],"train_idx":[0,1],)"
               R"("test_seen_idx":[2],"test_unseen_idx":[3]})");
  }
  void TearDown() override { fs::remove_all(dir_); }
  DataPaths paths() const { return DataPaths::in_directory(dir_); }

  template <typename Fn>
  std::string clause_of(Fn fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      return e.clause();
    }
    return "no error";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(FixtureDir, LoadsShapes) {
  const LabeledData d = load_dataset(paths());
  EXPECT_EQ(d.dataset.features.rows(), 4u);
  EXPECT_EQ(d.dataset.features.cols(), 3u);
  EXPECT_EQ(d.dataset.attributes.rows(), 2u);
  EXPECT_EQ(d.dataset.attributes.cols(), 2u);
}

TEST_F(FixtureDir, OverlappingClassesNameDisjointness) {
  write_file(dir_ / "splits.json",
             R"({"seen_classes":[0,1],"unseen_classes":[1],"train_idx":[0,1],)"
             R"("test_seen_idx":[2],"test_unseen_idx":[3]})");
  EXPECT_EQ(clause_of([&] { load_dataset(paths()); }), "disjointness");
}

TEST_F(FixtureDir, LabelOutOfRange) {
  write_file(dir_ / "labels.csv", "0\n0\n0\n2\n");
  EXPECT_EQ(clause_of([&] { load_dataset(paths()); }), "label range");
}

TEST_F(FixtureDir, ParseErrorsCarryLineNumbers) {
  write_file(dir_ / "features.csv", "1,2,3\n4,x,6\n7,8,9\n10,11,12\n");
  try {
    load_dataset(paths());
    FAIL() << "no error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST_F(FixtureDir, MissingFileIsFormatError) {
  fs::remove(dir_ / "labels.csv");
  EXPECT_THROW(load_dataset(paths()), FormatError);
}

TEST_F(FixtureDir, WriteThenLoadRoundTrips) {
  const LabeledData d = load_dataset(paths());
  write_dataset(d, dir_ / "copy");
  const LabeledData again = load_dataset(DataPaths::in_directory(dir_ / "copy"));
  EXPECT_EQ(again.dataset, d.dataset);
  EXPECT_EQ(again.split, d.split);
  EXPECT_EQ(dataset_hash(again), dataset_hash(d));
}

TEST(Synthetic, Counts) {
  SyntheticSpec spec;
  spec.n_classes = 5;
  spec.n_seen = 3;
  spec.samples_per_class = 10;
  const LabeledData d = make_synthetic(spec);
  EXPECT_EQ(d.dataset.n_samples(), 50u);
  EXPECT_EQ(d.split.train_idx.size(), 24u);
  EXPECT_EQ(d.split.test_seen_idx.size(), 6u);
  EXPECT_EQ(d.split.test_unseen_idx.size(), 20u);
  EXPECT_EQ(d.split.seen_classes, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Synthetic, SameSeedBitIdentical) {
  SyntheticSpec spec;
  spec.seed = 12;
  const LabeledData a = make_synthetic(spec);
  const LabeledData b = make_synthetic(spec);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.split, b.split);
  spec.seed = 13;
  EXPECT_NE(dataset_hash(make_synthetic(spec)), dataset_hash(a));
}

TEST(Synthetic, ZeroNoisePutsSamplesOnTheCenter) {
  SyntheticSpec spec;
  spec.cluster_std = 0.0;
  spec.samples_per_class = 5;
  const LabeledData d = make_synthetic(spec);
  for (std::size_t i = 0; i < d.dataset.n_samples(); ++i) {
    const std::size_t first = d.dataset.labels[i] * spec.samples_per_class;
    for (std::size_t c = 0; c < spec.d_visual; ++c) {
      ASSERT_EQ(d.dataset.features(i, c), d.dataset.features(first, c));
    }
  }
}

TEST(Synthetic, AttributesBinaryAndDistinct) {
  const LabeledData d = make_synthetic(SyntheticSpec{});
  std::set<std::vector<double>> rows;
  for (std::size_t k = 0; k < d.dataset.n_classes(); ++k) {
    auto r = d.dataset.attributes.row_span(k);
    for (double v : r) EXPECT_TRUE(v == 0.0 || v == 1.0);
    rows.emplace(r.begin(), r.end());
  }
  EXPECT_EQ(rows.size(), d.dataset.n_classes());
}

TEST(Synthetic, InvalidSpecs) {
  SyntheticSpec spec;
  spec.n_seen = spec.n_classes;
  EXPECT_THROW(validate(spec), ValidationError);
  spec = SyntheticSpec{};
  spec.cluster_std = -1.0;
  EXPECT_THROW(validate(spec), ValidationError);
  spec = SyntheticSpec{};
  spec.d_attr = 2;  // three nonzero binary rows cannot cover ten classes
  EXPECT_THROW(make_synthetic(spec), ValidationError);
}

TEST(Standardizer, TrainRowsGetZeroMeanUnitVariance) {
  const LabeledData d = make_synthetic(SyntheticSpec{});
  const Standardizer s = Standardizer::fit(d.dataset.features, d.split.train_idx);
  const Matrix z = s.apply(d.dataset.features);
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i : d.split.train_idx) mean += z(i, c);
    mean /= static_cast<double>(d.split.train_idx.size());
    for (std::size_t i : d.split.train_idx) sq += (z(i, c) - mean) * (z(i, c) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(d.split.train_idx.size()), 1.0, 1e-9);
  }
}
