#pragma once

#include <vector>

#include "mtml/matrix.hpp"
#include "mtml/mining.hpp"

namespace mtml {

struct LossOutput {
  double value = 0.0;
  Matrix grad;                    // same shape as the embeddings / logits consumed
  std::size_t active_count = 0;   // hinge terms (or rows) contributing nonzero loss
  bool empty_input = false;       // set when the triplet set was empty
};

// Standard hinge triplet loss, mean over triplets:
//   (1/K) sum [ d(a,p) - d(a,n) + tau ]+
// Gradient of a pair distance is 0 when the pair is closer than 1e-12;
// the hinge subgradient at the boundary is 0.
LossOutput triplet_loss(const Matrix& F, const TripletSet& triplets, double tau);

// Dual triplet loss: the standard hinge plus its positive-centered mirror,
//   (1/2K) sum { [d(a,p) - d(a,n) + tau]+ + [d(p,a) - d(p,n) + tau]+ }
LossOutput dual_triplet_loss(const Matrix& F, const TripletSet& triplets, double tau);

// Mean softmax cross-entropy over rows; targets must be one-hot.
// grad = (softmax(logits) - targets) / M.
LossOutput softmax_cross_entropy(const Matrix& logits, const Matrix& targets);

// lambda * sum(slice_losses) + softmax_value
double total_loss(const std::vector<double>& slice_losses, double softmax_value, double lambda);

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes);

}  // namespace mtml
