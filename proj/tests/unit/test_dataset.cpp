#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "collabrep/dataset.hpp"
#include "collabrep/metrics.hpp"
#include "test_util.hpp"

using namespace collabrep;

namespace {

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("dataset constructor validates labels and entries") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 3);
  CHECK_NOTHROW(LabeledDataset(X, {1, 2, 1}));
  CHECK_THROWS_AS(LabeledDataset(X, {1, 3, 1}), InvalidArgument);  // class 2 empty
  CHECK_THROWS_AS(LabeledDataset(X, {0, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(LabeledDataset(X, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(LabeledDataset(Eigen::MatrixXd(0, 3), {1, 1, 1}), InvalidArgument);
  X(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(LabeledDataset(X, {1, 2, 1}), InvalidArgument);
}

TEST_CASE("class blocks follow column order") {
  Eigen::MatrixXd X(1, 4);
  X << 10, 20, 30, 40;
  const LabeledDataset ds(X, {2, 1, 2, 1});
  CHECK(ds.num_classes() == 2);
  CHECK(ds.class_columns(1) == std::vector<Index>{1, 3});
  CHECK(ds.class_block(2)(0, 1) == 30);
  CHECK(ds.min_class_size() == 2);
  CHECK_THROWS_AS(ds.class_columns(3), InvalidArgument);
}

TEST_CASE("load_csv parses labels in first-appearance order") {
  const auto dir = testutil::scratch_dir("csv_parse");
  const auto path = write_text(dir, "a.csv", "label,f1,f2\na,1,2\nb,3,4\na,5,6\n");
  const LabeledDataset ds = load_csv(path);
  CHECK(ds.size() == 3);
  CHECK(ds.num_classes() == 2);
  CHECK(ds.class_size(1) == 2);
  CHECK(ds.class_size(2) == 1);
  CHECK(ds.class_names() == std::vector<std::string>{"a", "b"});
  CHECK(ds.features()(1, 2) == 6.0);
}

TEST_CASE("load_csv reports the offending cell") {
  const auto dir = testutil::scratch_dir("csv_errors");
  const auto nan_path = write_text(dir, "nan.csv", "label,f1,f2\na,1,2\nb,nan,4\n");
  try {
    load_csv(nan_path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("f1") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(write_text(dir, "text.csv", "label,f1\na,x\n")), DataError);
  CHECK_THROWS_AS(load_csv(write_text(dir, "short.csv", "label,f1,f2\na,1\n")), DataError);
  CHECK_THROWS_AS(load_csv(write_text(dir, "nolabel.csv", "y,f1\na,1\n")), DataError);
  CHECK_THROWS_AS(load_csv(write_text(dir, "nofeat.csv", "label\na\n")), DataError);
  CHECK_THROWS_AS(load_csv(write_text(dir, "empty.csv", "label,f1\n")), DataError);
  CHECK_THROWS_AS(load_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("save_csv and load_csv round-trip exactly") {
  const auto dir = testutil::scratch_dir("csv_roundtrip");
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledDataset ds = testutil::random_dataset(1 + trial % 5, 2 + trial % 3, 1 + trial % 4, rng);
    const auto path = dir / ("ds" + std::to_string(trial) + ".csv");
    save_csv(ds, path);
    const LabeledDataset back = load_csv(path);
    REQUIRE(back.size() == ds.size());
    CHECK((back.features().array() == ds.features().array()).all());
    CHECK(back.labels() == ds.labels());
  }
}

TEST_CASE("save_csv writes one row per sample") {
  const auto dir = testutil::scratch_dir("csv_single");
  const LabeledDataset ds(Eigen::MatrixXd::Constant(2, 1, 0.5), {1});
  save_csv(ds, dir / "one.csv");
  std::ifstream in(dir / "one.csv");
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "label,f1,f2");
  CHECK(row == "1,0.5,0.5");
  CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("split counts, determinism and coverage") {
  std::mt19937_64 rng(3);
  const LabeledDataset ds = testutil::random_dataset(3, 4, 10, rng);
  const auto [train, test] = split(ds, 5, 99);
  for (int c = 1; c <= 4; ++c) {
    CHECK(train.class_size(c) == 5);
    CHECK(test.class_size(c) == 5);
  }
  const auto [train2, test2] = split(ds, 5, 99);
  CHECK(train2.features() == train.features());
  CHECK(test2.features() == test.features());
  CHECK_THROWS_AS(split(ds, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(split(ds, 0, 1), InvalidArgument);
}

TEST_CASE("split partitions every class as a multiset") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledDataset ds = testutil::random_dataset(2, 3, 4 + trial % 3, rng);
    const auto [train, test] = split(ds, 2, static_cast<std::uint64_t>(trial));
    for (int c = 1; c <= 3; ++c) {
      std::multiset<std::pair<double, double>> original, merged;
      for (Index j : ds.class_columns(c)) original.insert({ds.features()(0, j), ds.features()(1, j)});
      for (Index j : train.class_columns(c)) merged.insert({train.features()(0, j), train.features()(1, j)});
      for (Index j : test.class_columns(c)) merged.insert({test.features()(0, j), test.features()(1, j)});
      CHECK(original == merged);
    }
  }
}

TEST_CASE("synth_gaussian is deterministic and honours the separation") {
  const SynthSpec spec{5, 20, 50, 10.0, 4};
  const LabeledDataset a = synth_gaussian(spec);
  const LabeledDataset b = synth_gaussian(spec);
  CHECK((a.features().array() == b.features().array()).all());
  CHECK(a.labels() == b.labels());
  CHECK(a.size() == 250);

  SynthSpec bad = spec;
  bad.num_classes = 1;
  CHECK_THROWS_AS(synth_gaussian(bad), InvalidArgument);
  bad = spec;
  bad.class_separation = -1.0;
  CHECK_THROWS_AS(synth_gaussian(bad), InvalidArgument);
}

TEST_CASE("synth separation drives MPD accuracy") {
  {
    const LabeledDataset ds = synth_gaussian({5, 20, 60, 10.0, 21});
    const auto [train, test] = split(ds, 50, 1);
    CHECK(batch_classify(MpdClassifier(train), test).accuracy >= 0.99);
  }
  {
    // 1000 test points at zero separation: accuracy within 3 sigma of chance.
    const int L = 5;
    const LabeledDataset ds = synth_gaussian({L, 20, 210, 0.0, 22});
    const auto [train, test] = split(ds, 10, 2);
    REQUIRE(test.size() == 1000);
    const double acc = batch_classify(MpdClassifier(train), test).accuracy;
    const double p = 1.0 / L;
    const double sigma = std::sqrt(p * (1 - p) / 1000.0);
    CHECK(std::abs(acc - p) <= 3 * sigma);
  }
}

TEST_CASE("normalize_samples") {
  Eigen::MatrixXd X(2, 2);
  X << 3, 1, 4, 1;
  const LabeledDataset ds(X, {1, 2});
  const LabeledDataset once = normalize_samples(ds);
  CHECK(once.features()(0, 0) == doctest::Approx(0.6));
  CHECK(once.features()(1, 0) == doctest::Approx(0.8));
  const LabeledDataset twice = normalize_samples(once);
  CHECK((twice.features() - once.features()).norm() <= 1e-15);
  X(0, 1) = 0;
  X(1, 1) = 0;
  CHECK_THROWS_AS(normalize_samples(LabeledDataset(X, {1, 2})), InvalidArgument);
}
