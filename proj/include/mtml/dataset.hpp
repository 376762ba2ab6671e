#pragma once

#include <string>
#include <vector>

#include "mtml/matrix.hpp"
#include "mtml/rng.hpp"

namespace mtml {

struct LabeledDataset {
  Matrix features;                       // n x d_in
  std::vector<int> labels;               // dense ids in [0, C)
  std::vector<std::string> class_names;  // size C when known, else empty
  std::string split_tag = "train";

  std::size_t size() const { return features.rows; }
  std::size_t input_dim() const { return features.cols; }
  std::size_t num_classes() const;
};

struct ClusterSpec {
  std::size_t num_classes = 7;
  std::size_t input_dim = 32;
  std::size_t samples_per_class = 200;
  double center_radius = 12.0;
  // one positive scale per class; heterogeneous by default so the margin a
  // class needs genuinely differs across classes
  std::vector<double> per_class_scales = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4};

  void validate() const;  // throws std::invalid_argument
};

// Class centers on a sphere of radius center_radius (seeded directions);
// sample = center + scale_c * isotropic gaussian. Deterministic in (spec, rng).
LabeledDataset synth_clusters(const ClusterSpec& spec, Rng& rng);

// CSV: UTF-8, comma separated, first row header. Label tokens are mapped to
// dense ids in first-appearance order; all other columns must be numeric.
LabeledDataset load_csv(const std::string& path, const std::string& label_column);

// Header f0..f{d-1},<label_column>; features at full round-trip precision.
void export_csv(const LabeledDataset& ds, const std::string& path,
                const std::string& label_column = "label");

// Stratified per class, deterministic under rng. Remainder rows go to train.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                double val_fraction, Rng& rng);

}  // namespace mtml
