#include <doctest.h>

#include <cmath>
#include <fstream>

#include "mtml/dataset.hpp"
#include "mtml/kernels.hpp"

#include "helpers.hpp"

using namespace mtml;

namespace {

// nearest class-mean classification; the oracle for the separation example
double nearest_center_accuracy(const LabeledDataset& ds) {
  const std::size_t C = ds.num_classes(), d = ds.input_dim();
  Matrix centers(C, d);
  std::vector<std::size_t> counts(C, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t j = 0; j < d; ++j) centers(c, j) += ds.features(i, j);
    ++counts[c];
  }
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < d; ++j) centers(c, j) /= static_cast<double>(counts[c]);
  }
  std::size_t correct = 0;
  const auto& k = kernels::ops();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = k.squared_distance(ds.features.row(i), centers.row(0), d);
    for (std::size_t c = 1; c < C; ++c) {
      const double dist = k.squared_distance(ds.features.row(i), centers.row(c), d);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    if (static_cast<int>(best) == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double mean_intra_distance(const LabeledDataset& ds, int cls) {
  const auto& k = kernels::ops();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] != cls) continue;
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      if (ds.labels[j] != cls) continue;
      sum += std::sqrt(k.squared_distance(ds.features.row(i), ds.features.row(j), ds.input_dim()));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("well-separated clusters classify perfectly by nearest center") {
  ClusterSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 8;
  spec.samples_per_class = 50;
  spec.center_radius = 10.0;
  spec.per_class_scales = {1e-6, 1e-6};
  Rng rng(1);
  const LabeledDataset ds = synth_clusters(spec, rng);
  CHECK(nearest_center_accuracy(ds) == 1.0);
}

TEST_CASE("generator is bitwise deterministic in (spec, seed)") {
  ClusterSpec spec;
  Rng a(77), b(77);
  const LabeledDataset d1 = synth_clusters(spec, a);
  const LabeledDataset d2 = synth_clusters(spec, b);
  CHECK(d1.features.data == d2.features.data);
  CHECK(d1.labels == d2.labels);
}

TEST_CASE("per-class intra distances follow the scale ordering") {
  ClusterSpec spec;  // 7 classes, d 32, 200 per class, scales 0.2..1.4
  Rng rng(5);
  const LabeledDataset ds = synth_clusters(spec, rng);
  double prev = 0.0;
  for (int c = 0; c < 7; ++c) {
    const double mean = mean_intra_distance(ds, c);
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("cluster spec invariants are enforced") {
  ClusterSpec spec;
  spec.num_classes = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = ClusterSpec{};
  spec.samples_per_class = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = ClusterSpec{};
  spec.per_class_scales[3] = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = ClusterSpec{};
  spec.per_class_scales.pop_back();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("csv labels map by first appearance") {
  test::TempDir dir("csv");
  const std::string path = dir.file("toy.csv");
  std::ofstream(path) << "f0,f1,label\n1.5,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n";
  const LabeledDataset ds = load_csv(path, "label");
  CHECK(ds.size() == 3);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.class_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.features(2, 1) == 6.0);
}

TEST_CASE("csv error paths name the offender") {
  test::TempDir dir("csv-err");
  CHECK_THROWS_WITH_AS(load_csv(dir.file("missing.csv"), "label"),
                       doctest::Contains("cannot open"), std::runtime_error);

  const std::string header_only = dir.file("header.csv");
  std::ofstream(header_only) << "f0,label\n";
  CHECK_THROWS_WITH_AS(load_csv(header_only, "label"), doctest::Contains("no data rows"),
                       std::runtime_error);

  const std::string bad_cell = dir.file("bad.csv");
  std::ofstream(bad_cell) << "f0,f1,label\n1.0,2.0,a\n1.0,oops,b\n";
  CHECK_THROWS_WITH_AS(load_csv(bad_cell, "label"), doctest::Contains("row 3"),
                       std::runtime_error);

  const std::string no_label = dir.file("nolabel.csv");
  std::ofstream(no_label) << "f0,f1\n1.0,2.0\n";
  CHECK_THROWS_WITH_AS(load_csv(no_label, "label"), doctest::Contains("label column"),
                       std::runtime_error);
}

TEST_CASE("csv round-trips through export and load") {
  ClusterSpec spec;
  spec.num_classes = 3;
  spec.input_dim = 5;
  spec.samples_per_class = 8;
  spec.per_class_scales = {0.3, 0.6, 0.9};
  Rng rng(9);
  const LabeledDataset ds = synth_clusters(spec, rng);

  test::TempDir dir("roundtrip");
  const std::string path = dir.file("data.csv");
  export_csv(ds, path);
  const LabeledDataset back = load_csv(path, "label");
  REQUIRE(back.size() == ds.size());
  CHECK(back.labels == ds.labels);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    CHECK(back.features.data[i] == doctest::Approx(ds.features.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("stratified split: exact proportions when divisible") {
  ClusterSpec spec;
  spec.num_classes = 4;
  spec.input_dim = 3;
  spec.samples_per_class = 100;
  spec.per_class_scales = {1, 1, 1, 1};
  Rng rng(13);
  const LabeledDataset ds = synth_clusters(spec, rng);
  Rng splitter(14);
  const auto [train, val] = split(ds, 0.8, 0.2, splitter);
  CHECK(train.size() == 320);
  CHECK(val.size() == 80);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::count(train.labels.begin(), train.labels.end(), c) == 80);
    CHECK(std::count(val.labels.begin(), val.labels.end(), c) == 20);
  }
  CHECK(train.split_tag == "train");
  CHECK(val.split_tag == "val");
}

TEST_CASE("split with fraction 1.0 keeps everything in train") {
  ClusterSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 2;
  spec.samples_per_class = 10;
  spec.per_class_scales = {1, 1};
  Rng rng(15);
  const LabeledDataset ds = synth_clusters(spec, rng);
  Rng splitter(16);
  const auto [train, val] = split(ds, 1.0, 0.0, splitter);
  CHECK(train.size() == 20);
  CHECK(val.size() == 0);
  auto sorted = train.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::count(sorted.begin(), sorted.end(), 0) == 10);
}

TEST_CASE("split is deterministic under the seed") {
  ClusterSpec spec;
  spec.num_classes = 3;
  spec.input_dim = 4;
  spec.samples_per_class = 30;
  spec.per_class_scales = {1, 1, 1};
  Rng rng(21);
  const LabeledDataset ds = synth_clusters(spec, rng);
  Rng s1(22), s2(22);
  const auto [t1, v1] = split(ds, 0.7, 0.3, s1);
  const auto [t2, v2] = split(ds, 0.7, 0.3, s2);
  CHECK(t1.features.data == t2.features.data);
  CHECK(v1.labels == v2.labels);
}

TEST_CASE("split rejects classes smaller than the number of parts") {
  LabeledDataset ds;
  ds.features = Matrix(3, 2, 1.0);
  ds.labels = {0, 0, 1};  // class 1 has a single sample
  Rng rng(1);
  CHECK_THROWS_WITH_AS(split(ds, 0.5, 0.5, rng), doctest::Contains("class 1"),
                       std::invalid_argument);
}
