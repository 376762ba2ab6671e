#pragma once

#include <string>
#include <vector>

#include "mtml/dataset.hpp"
#include "mtml/matrix.hpp"
#include "mtml/model.hpp"

namespace mtml {

struct MetricsReport {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;              // C entries
  std::vector<std::vector<std::size_t>> confusion_counts;  // C x C, rows = truth
  std::size_t n_samples = 0;
};

MetricsReport confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                        std::size_t num_classes);

inline constexpr std::size_t kDistanceBins = 64;  // over [0, 2], the unit-norm range

struct DistanceDistribution {
  std::size_t slice = 0;
  double tau = 0.0;
  std::vector<std::size_t> intra;  // kDistanceBins counts
  std::vector<std::size_t> inter;
  double intra_mean = 0.0, intra_std = 0.0;
  double inter_mean = 0.0, inter_std = 0.0;
  std::size_t intra_pairs = 0, inter_pairs = 0;
  bool degenerate = false;  // fewer than two samples
};

// Histograms of same-label and cross-label pair distances per slice.
// taus annotate the output; pass one value per slice (or empty).
std::vector<DistanceDistribution> distance_distributions(
    const std::vector<Matrix>& slice_embeddings, const std::vector<int>& labels,
    const std::vector<double>& taus = {});

// Per sample, the modal class across slices; ties break to the lowest id.
std::vector<int> majority_vote(const std::vector<std::vector<int>>& per_slice_predictions);

// Argmax of the single head, or per-slice argmax + majority vote.
std::vector<int> predict(const SlicedModel& model, const Matrix& X);

MetricsReport evaluate(const SlicedModel& model, const LabeledDataset& data);

// CSV: sample,slice,e0..e{d_i-1}; one row per (sample, slice).
void export_slice_features(const SlicedModel& model, const Matrix& X, const std::string& path);

void write_distance_csv(const std::vector<DistanceDistribution>& dists, const std::string& path);
void write_distance_summary_csv(const std::vector<DistanceDistribution>& dists,
                                const std::string& path);

}  // namespace mtml
