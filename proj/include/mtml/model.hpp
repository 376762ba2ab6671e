#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtml/matrix.hpp"
#include "mtml/rng.hpp"

namespace mtml {

struct AffineLayer {
  Matrix W;
  Matrix b;  // 1 x out
};

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> backbone_widths = {256, 512};  // last entry is the feature width h
  std::size_t num_slices = 1;
  std::size_t slice_dim = 256;
  std::size_t num_classes = 2;
  double dropout_rate = 0.5;
  bool per_slice_classifiers = false;
};

// Fully-connected feature extractor with ReLU, N bias-free embedding matrices
// (one per slice, each followed by row L2 normalization), and either one
// classifier on the concatenated embedding or one classifier per slice.
struct SlicedModel {
  std::vector<AffineLayer> backbone;
  std::vector<Matrix> slices;             // h x slice_dim each
  std::vector<AffineLayer> classifiers;   // size 1, or num_slices when per-slice
  bool per_slice_classifiers = false;
  double dropout_rate = 0.0;
  std::size_t input_dim = 0;
  std::size_t feature_dim = 0;
  std::size_t slice_dim = 0;
  std::size_t num_classes = 0;

  std::size_t num_slices() const { return slices.size(); }
  std::size_t embed_dim() const { return slices.size() * slice_dim; }
};

enum class RunMode { train, eval };

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> preacts;        // backbone pre-activations
  std::vector<Matrix> acts;           // post ReLU (and dropout when training)
  std::vector<Matrix> dropout_masks;  // scaled keep masks; empty in eval / rate 0
  std::vector<Matrix> slice_raw;      // batch x d_i, before normalization
  std::vector<Matrix> slice_embeddings;  // row-normalized
  Matrix concat_embedding;            // slices side by side, slice order
  Matrix logits;                      // single-head output
  std::vector<Matrix> slice_logits;   // per-slice heads

  const Matrix& cnn_feature() const { return acts.back(); }
};

// Gradients with the same layout as the model parameters.
struct ModelGrads {
  std::vector<AffineLayer> backbone;
  std::vector<Matrix> slices;
  std::vector<AffineLayer> classifiers;
};

SlicedModel init_model(const ModelConfig& cfg, Rng& rng);

// rng is only consumed in train mode with dropout_rate > 0.
ForwardTrace forward(const SlicedModel& model, const Matrix& X, RunMode mode, Rng* rng = nullptr);

// Exact gradients of the scalar whose per-output gradients are supplied.
// grad_slices are w.r.t. the normalized slice embeddings; grad_logits w.r.t.
// the single-head logits; grad_slice_logits w.r.t. per-slice heads. Empty
// containers mean zero upstream gradient.
ModelGrads backward(const SlicedModel& model, const ForwardTrace& trace,
                    const std::vector<Matrix>& grad_slices, const Matrix& grad_logits,
                    const std::vector<Matrix>& grad_slice_logits = {});

ModelGrads zero_grads(const SlicedModel& model);

// Parameter tensors in a fixed order (backbone W/b, slices, classifier W/b);
// the two overloads enumerate in the same order.
std::vector<Matrix*> parameters(SlicedModel& model);
std::vector<Matrix*> parameters(ModelGrads& grads);
std::vector<std::string> parameter_names(const SlicedModel& model);

struct FusedEmbedding {
  Matrix M;                             // h x (N * slice_dim), slices side by side
  std::vector<std::size_t> boundaries;  // column offsets, length N + 1
};

FusedEmbedding fuse_embedding(const SlicedModel& model);

struct FusedForward {
  Matrix concat_embedding;
  Matrix logits;
};

// Inference through the fused matrix: one matmul, then per-segment
// normalization at the recorded boundaries.
FusedForward forward_fused(const SlicedModel& model, const FusedEmbedding& fused, const Matrix& X);

void save_checkpoint(const SlicedModel& model, const std::string& path);
SlicedModel load_checkpoint(const std::string& path);

}  // namespace mtml
