#include "mtml/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mtml/kernels.hpp"

namespace mtml {
namespace {

constexpr double kCoincidentPair = 1e-12;

// Adds c * d(d(x,y))/dx to grad rows x and the mirrored term to y.
// Coincident pairs (d < 1e-12) contribute no gradient.
void add_distance_grad(Matrix& grad, const Matrix& F, std::size_t x, std::size_t y, double dist,
                       double coeff) {
  if (dist < kCoincidentPair) return;
  const double f = coeff / dist;
  const double* fx = F.row(x);
  const double* fy = F.row(y);
  double* gx = grad.row(x);
  double* gy = grad.row(y);
  for (std::size_t k = 0; k < F.cols; ++k) {
    const double diff = fx[k] - fy[k];
    gx[k] += f * diff;
    gy[k] -= f * diff;
  }
}

double row_distance(const Matrix& F, std::size_t i, std::size_t j) {
  return std::sqrt(kernels::ops().squared_distance(F.row(i), F.row(j), F.cols));
}

}  // namespace

LossOutput triplet_loss(const Matrix& F, const TripletSet& triplets, double tau) {
  LossOutput out;
  out.grad = Matrix(F.rows, F.cols);
  if (triplets.empty()) {
    out.empty_input = true;
    return out;
  }
  const double inv_k = 1.0 / static_cast<double>(triplets.triplets.size());
  for (const auto& t : triplets.triplets) {
    const double d_ap = row_distance(F, t.anchor, t.positive);
    const double d_an = row_distance(F, t.anchor, t.negative);
    const double hinge = d_ap - d_an + tau;
    if (hinge > 0.0) {
      out.value += hinge * inv_k;
      ++out.active_count;
      add_distance_grad(out.grad, F, t.anchor, t.positive, d_ap, inv_k);
      add_distance_grad(out.grad, F, t.anchor, t.negative, d_an, -inv_k);
    }
  }
  return out;
}

LossOutput dual_triplet_loss(const Matrix& F, const TripletSet& triplets, double tau) {
  LossOutput out;
  out.grad = Matrix(F.rows, F.cols);
  if (triplets.empty()) {
    out.empty_input = true;
    return out;
  }
  const double inv_2k = 0.5 / static_cast<double>(triplets.triplets.size());
  for (const auto& t : triplets.triplets) {
    const double d_ap = row_distance(F, t.anchor, t.positive);
    const double d_an = row_distance(F, t.anchor, t.negative);
    const double d_pn = row_distance(F, t.positive, t.negative);
    const double hinge_a = d_ap - d_an + tau;
    if (hinge_a > 0.0) {
      out.value += hinge_a * inv_2k;
      ++out.active_count;
      add_distance_grad(out.grad, F, t.anchor, t.positive, d_ap, inv_2k);
      add_distance_grad(out.grad, F, t.anchor, t.negative, d_an, -inv_2k);
    }
    // mirror: the positive takes the anchor role
    const double hinge_p = d_ap - d_pn + tau;
    if (hinge_p > 0.0) {
      out.value += hinge_p * inv_2k;
      ++out.active_count;
      add_distance_grad(out.grad, F, t.positive, t.anchor, d_ap, inv_2k);
      add_distance_grad(out.grad, F, t.positive, t.negative, d_pn, -inv_2k);
    }
  }
  return out;
}

LossOutput softmax_cross_entropy(const Matrix& logits, const Matrix& targets) {
  if (!logits.same_shape(targets)) {
    throw std::invalid_argument("softmax_cross_entropy: shape mismatch");
  }
  const std::size_t M = logits.rows, C = logits.cols;
  if (M == 0 || C == 0) throw std::invalid_argument("softmax_cross_entropy: empty input");
  LossOutput out;
  out.grad = Matrix(M, C);
  const double inv_m = 1.0 / static_cast<double>(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double* t = targets.row(i);
    std::size_t hot = C;
    for (std::size_t c = 0; c < C; ++c) {
      if (t[c] == 1.0 && hot == C) {
        hot = c;
      } else if (t[c] != 0.0) {
        hot = C + 1;
        break;
      }
    }
    if (hot >= C) {
      throw std::invalid_argument("softmax_cross_entropy: target row " + std::to_string(i) +
                                  " is not one-hot");
    }
    const double* y = logits.row(i);
    double mx = y[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, y[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < C; ++c) denom += std::exp(y[c] - mx);
    const double log_denom = std::log(denom);
    out.value += (log_denom - (y[hot] - mx)) * inv_m;
    double* g = out.grad.row(i);
    for (std::size_t c = 0; c < C; ++c) {
      g[c] = (std::exp(y[c] - mx) / denom - t[c]) * inv_m;
    }
    ++out.active_count;
  }
  return out;
}

double total_loss(const std::vector<double>& slice_losses, double softmax_value, double lambda) {
  if (slice_losses.empty()) throw std::invalid_argument("total_loss: need at least one slice loss");
  if (lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  double sum = 0.0;
  for (double v : slice_losses) sum += v;
  return lambda * sum + softmax_value;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  Matrix T(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(l) + " out of range");
    }
    T(i, static_cast<std::size_t>(l)) = 1.0;
  }
  return T;
}

}  // namespace mtml
