#include <doctest.h>

#include <cmath>

#include "mtml/losses.hpp"
#include "mtml/numerics.hpp"

#include "helpers.hpp"

using namespace mtml;

namespace {

Matrix worked_triplet_embeddings() {
  // f(a)=(1,0), f(p)=(0,1), f(n)=(-1,0)
  Matrix F(3, 2);
  F(0, 0) = 1.0;
  F(1, 1) = 1.0;
  F(2, 0) = -1.0;
  return F;
}

TripletSet single_triplet() {
  TripletSet set;
  set.triplets.push_back({0, 1, 2});
  return set;
}

}  // namespace

TEST_CASE("standard triplet loss: hinge boundary scores zero") {
  // anchor == positive, negative exactly tau away
  Matrix F(3, 2);
  F(2, 0) = 0.2;
  const LossOutput out = triplet_loss(F, single_triplet(), 0.2);
  CHECK(out.value == 0.0);
  CHECK(out.active_count == 0);
  for (double g : out.grad.data) CHECK(g == 0.0);
}

TEST_CASE("standard triplet loss: satisfied worked example") {
  const LossOutput out = triplet_loss(worked_triplet_embeddings(), single_triplet(), 0.2);
  CHECK(out.value == 0.0);  // sqrt2 - 2 + 0.2 < 0
}

TEST_CASE("standard triplet loss: violated worked example") {
  // f(a)=(1,0), f(p)=(-1,0), f(n)=(0,1)
  Matrix F(3, 2);
  F(0, 0) = 1.0;
  F(1, 0) = -1.0;
  F(2, 1) = 1.0;
  const LossOutput out = triplet_loss(F, single_triplet(), 0.2);
  CHECK(out.value == doctest::Approx(2.0 - std::sqrt(2.0) + 0.2).epsilon(1e-12));
  CHECK(out.active_count == 1);
}

TEST_CASE("triplet losses flag empty input") {
  Matrix F(3, 2, 0.5);
  TripletSet empty;
  const LossOutput a = triplet_loss(F, empty, 0.3);
  CHECK(a.value == 0.0);
  CHECK(a.empty_input);
  for (double g : a.grad.data) CHECK(g == 0.0);
  const LossOutput b = dual_triplet_loss(F, empty, 0.3);
  CHECK(b.value == 0.0);
  CHECK(b.empty_input);
}

TEST_CASE("dual triplet loss scores the incomplete-judgement case") {
  const LossOutput dual = dual_triplet_loss(worked_triplet_embeddings(), single_triplet(), 0.2);
  CHECK(dual.value == doctest::Approx(0.1).epsilon(1e-12));
  const LossOutput trad = triplet_loss(worked_triplet_embeddings(), single_triplet(), 0.2);
  CHECK(trad.value == 0.0);
}

TEST_CASE("dual triplet loss: degenerate collapse gives tau") {
  Matrix F(3, 2, 0.4);  // all three coincide
  const LossOutput out = dual_triplet_loss(F, single_triplet(), 0.3);
  CHECK(out.value == doctest::Approx(0.3).epsilon(1e-12));
  // coincident pairs contribute no distance gradient
  for (double g : out.grad.data) CHECK(g == 0.0);
}

TEST_CASE("dual triplet loss: symmetric satisfaction scores zero") {
  Matrix F(3, 2);
  F(0, 0) = 1.0;
  F(1, 0) = 1.0;   // positive == anchor position
  F(2, 0) = -1.0;  // negative 2 away from both
  const LossOutput out = dual_triplet_loss(F, single_triplet(), 0.2);
  CHECK(out.value == 0.0);
}

TEST_CASE("dual loss dominates half the standard loss") {
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3 + rng.below(12);
    const auto labels = test::random_labels(rng, n, 3);
    const Matrix F = test::random_matrix(rng, n, 5, -1.5, 1.5);
    const TripletSet set = test::brute_force_batch_hard(labels, pairwise_euclidean(F));
    if (set.empty()) continue;
    const double tau = rng.uniform(0.0, 0.6);
    const double dual = dual_triplet_loss(F, set, tau).value;
    const double trad = triplet_loss(F, set, tau).value;
    CHECK(dual >= 0.5 * trad - 1e-12);
  }
}

TEST_CASE("flagged incomplete judgements have a positive dual second term") {
  Rng rng(9);
  std::size_t flagged_seen = 0;
  for (int rep = 0; rep < 200 && flagged_seen < 10; ++rep) {
    const std::size_t n = 4 + rng.below(10);
    const auto labels = test::random_labels(rng, n, 2);
    const Matrix F = test::random_matrix(rng, n, 3, -1.0, 1.0);
    const Matrix D = pairwise_euclidean(F);
    const TripletSet set = test::brute_force_batch_hard(labels, D);
    const double tau = 0.2;
    const AuditResult audit = audit_incomplete(F, set, tau);
    for (std::size_t idx : audit.flagged) {
      ++flagged_seen;
      const auto& t = set.triplets[idx];
      // standard hinge inactive for this triplet
      CHECK(D(t.anchor, t.positive) - D(t.anchor, t.negative) + tau <= 0.0);
      // mirrored hinge strictly active
      CHECK(D(t.positive, t.anchor) - D(t.positive, t.negative) + tau > 0.0);
    }
  }
  CHECK(flagged_seen > 0);  // the generator reaches the regime at all
}

TEST_CASE("triplet loss gradients match central differences") {
  Rng rng(10);
  double worst = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 4 + rng.below(6);
    const auto labels = test::random_labels(rng, n, 3);
    Matrix F = test::random_matrix(rng, n, 4, -1.0, 1.0);
    const TripletSet set = test::brute_force_batch_hard(labels, pairwise_euclidean(F));
    if (set.empty()) continue;
    const double tau = 0.35;
    const bool use_dual = rep % 2 == 0;

    const auto loss_of = [&](const Matrix& M) {
      return use_dual ? dual_triplet_loss(M, set, tau) : triplet_loss(M, set, tau);
    };
    const LossOutput out = loss_of(F);
    const double step = 1e-6;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const double saved = F.data[i];
      F.data[i] = saved + step;
      const LossOutput hi = loss_of(F);
      F.data[i] = saved - step;
      const LossOutput lo = loss_of(F);
      F.data[i] = saved;
      if (hi.active_count != lo.active_count) continue;  // hinge kink between probes
      const double fd = (hi.value - lo.value) / (2.0 * step);
      const double an = out.grad.data[i];
      if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("softmax cross entropy: uniform logits give ln C") {
  for (const std::size_t C : {2u, 7u}) {
    Matrix logits(1, C, 0.0);
    Matrix targets(1, C, 0.0);
    targets(0, 0) = 1.0;
    const LossOutput out = softmax_cross_entropy(logits, targets);
    CHECK(out.value == doctest::Approx(std::log(static_cast<double>(C))).epsilon(1e-12));
  }
}

TEST_CASE("softmax cross entropy: dominant correct logit") {
  Matrix logits(1, 7, 0.0);
  logits(0, 0) = 10.0;
  Matrix targets(1, 7, 0.0);
  targets(0, 0) = 1.0;
  const LossOutput out = softmax_cross_entropy(logits, targets);
  CHECK(out.value == doctest::Approx(std::log1p(6.0 * std::exp(-10.0))).epsilon(1e-9));
  CHECK(out.value == doctest::Approx(2.724e-4).epsilon(1e-3));
}

TEST_CASE("softmax cross entropy rejects non-one-hot targets") {
  Matrix logits(1, 3, 0.0);
  Matrix targets(1, 3, 0.0);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, targets), std::invalid_argument);
  targets(0, 0) = 1.0;
  targets(0, 2) = 1.0;
  CHECK_THROWS_AS(softmax_cross_entropy(logits, targets), std::invalid_argument);
  targets(0, 2) = 0.0;
  targets(0, 0) = 0.5;
  CHECK_THROWS_AS(softmax_cross_entropy(logits, targets), std::invalid_argument);
}

TEST_CASE("softmax gradient rows sum to zero and match differences") {
  Rng rng(12);
  const std::size_t M = 6, C = 5;
  Matrix logits = test::random_matrix(rng, M, C, -3.0, 3.0);
  std::vector<int> labels = test::random_labels(rng, M, static_cast<int>(C));
  const Matrix targets = one_hot(labels, C);
  const LossOutput out = softmax_cross_entropy(logits, targets);

  for (std::size_t i = 0; i < M; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += out.grad(i, c);
    CHECK(std::abs(s) <= 1e-15);  // simplex property at machine precision
  }

  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double saved = logits.data[i];
    logits.data[i] = saved + step;
    const double hi = softmax_cross_entropy(logits, targets).value;
    logits.data[i] = saved - step;
    const double lo = softmax_cross_entropy(logits, targets).value;
    logits.data[i] = saved;
    const double fd = (hi - lo) / (2.0 * step);
    const double an = out.grad.data[i];
    if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("total loss arithmetic") {
  CHECK(total_loss(std::vector<double>(7, 0.14), 1.0, 0.5 / 7) == doctest::Approx(1.07).epsilon(1e-12));
  CHECK(total_loss({0.0, 0.0}, 0.0, 0.25) == 0.0);
  CHECK(total_loss({0.4}, 0.6, 0.5) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("total loss is linear in each slice loss with coefficient lambda") {
  Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<double> losses(n);
    for (auto& l : losses) l = rng.uniform(0.0, 2.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const double softmax = rng.uniform(0.0, 3.0);
    const double base = total_loss(losses, softmax, lambda);
    const std::size_t pick = rng.below(n);
    const double delta = rng.uniform(0.1, 1.0);
    auto bumped = losses;
    bumped[pick] += delta;
    CHECK(total_loss(bumped, softmax, lambda) - base ==
          doctest::Approx(lambda * delta).epsilon(1e-12));
  }
}
