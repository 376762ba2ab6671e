#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "mtml/mining.hpp"
#include "mtml/numerics.hpp"

#include "helpers.hpp"

using namespace mtml;

TEST_CASE("PK plan: 7 classes x 200 with P=7 K=12 gives batches of 84") {
  std::vector<int> labels;
  for (int c = 0; c < 7; ++c) labels.insert(labels.end(), 200, c);
  Rng rng(1);
  const BatchPlan plan = plan_batches(labels, 7, 12, rng);
  CHECK(plan.index_lists.size() == 16);  // floor(200/12) full groups per class
  for (const auto& batch : plan.index_lists) {
    CHECK(batch.size() == 84);
    std::map<int, int> counts;
    for (std::size_t idx : batch) ++counts[labels[idx]];
    CHECK(counts.size() == 7);
    for (const auto& [cls, cnt] : counts) CHECK(cnt == 12);
  }
}

TEST_CASE("PK plan: minimal case packs everything into one batch") {
  const std::vector<int> labels = {0, 0, 1, 1};
  Rng rng(2);
  const BatchPlan plan = plan_batches(labels, 2, 2, rng);
  REQUIRE(plan.index_lists.size() == 1);
  std::set<std::size_t> seen(plan.index_lists[0].begin(), plan.index_lists[0].end());
  CHECK(seen == std::set<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("PK plan is deterministic and covers samples at most once per epoch") {
  std::vector<int> labels;
  for (int c = 0; c < 5; ++c) labels.insert(labels.end(), 23, c);
  Rng r1(3), r2(3);
  const BatchPlan p1 = plan_batches(labels, 3, 4, r1);
  const BatchPlan p2 = plan_batches(labels, 3, 4, r2);
  CHECK(p1.index_lists == p2.index_lists);

  std::set<std::size_t> seen;
  for (const auto& batch : p1.index_lists) {
    for (std::size_t idx : batch) {
      CHECK(seen.insert(idx).second);  // no index reused within the epoch pass
    }
  }
}

TEST_CASE("PK plan rejects infeasible requests naming the deficiency") {
  const std::vector<int> labels = {0, 0, 0, 1};
  Rng rng(4);
  CHECK_THROWS_WITH_AS(plan_batches(labels, 2, 3, rng), doctest::Contains("class 1"),
                       std::invalid_argument);
  const std::vector<int> two_full = {0, 0, 1, 1};
  CHECK_THROWS_WITH_AS(plan_batches(two_full, 3, 2, rng), doctest::Contains("classes"),
                       std::invalid_argument);
  CHECK_THROWS_AS(plan_batches(labels, 1, 2, rng), std::invalid_argument);
}

TEST_CASE("batch hard: worked 1-D example") {
  const std::vector<int> labels = {0, 0, 1, 1};
  Matrix X(4, 1);
  X(0, 0) = 0.0;
  X(1, 0) = 1.0;
  X(2, 0) = 0.4;
  X(3, 0) = 3.0;
  const TripletSet set = batch_hard(labels, pairwise_euclidean(X));
  REQUIRE(set.triplets.size() == 4);
  const std::size_t expect[4][3] = {{0, 1, 2}, {1, 0, 2}, {2, 3, 0}, {3, 2, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(set.triplets[i].anchor == expect[i][0]);
    CHECK(set.triplets[i].positive == expect[i][1]);
    CHECK(set.triplets[i].negative == expect[i][2]);
  }
  CHECK_FALSE(set.no_negatives);
}

TEST_CASE("batch hard: no anchor has a positive") {
  const std::vector<int> labels = {0, 1};
  Matrix X(2, 1);
  X(1, 0) = 1.0;
  const TripletSet set = batch_hard(labels, pairwise_euclidean(X));
  CHECK(set.empty());
  CHECK_FALSE(set.no_negatives);
}

TEST_CASE("batch hard: single-class batch raises the no-negatives flag") {
  const std::vector<int> labels = {0, 0, 0};
  Matrix X(3, 2);
  X(1, 0) = 1.0;
  X(2, 1) = 2.0;
  const TripletSet set = batch_hard(labels, pairwise_euclidean(X));
  CHECK(set.empty());
  CHECK(set.no_negatives);
}

TEST_CASE("batch hard equals the brute-force oracle on random batches") {
  Rng rng(55);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(63);
    const int classes = 2 + static_cast<int>(rng.below(6));
    const auto labels = test::random_labels(rng, n, classes);
    const Matrix X = test::random_matrix(rng, n, 1 + rng.below(6), -3.0, 3.0);
    const Matrix D = pairwise_euclidean(X);
    const TripletSet got = batch_hard(labels, D);
    const TripletSet want = test::brute_force_batch_hard(labels, D);
    REQUIRE(got.triplets.size() == want.triplets.size());
    for (std::size_t i = 0; i < got.triplets.size(); ++i) {
      CHECK(got.triplets[i].anchor == want.triplets[i].anchor);
      CHECK(got.triplets[i].positive == want.triplets[i].positive);
      CHECK(got.triplets[i].negative == want.triplets[i].negative);
    }
    CHECK(got.no_negatives == want.no_negatives);
  }
}

TEST_CASE("incomplete judgement audit: worked example is flagged") {
  Matrix F(3, 2);
  F(0, 0) = 1.0;   // anchor
  F(1, 1) = 1.0;   // positive
  F(2, 0) = -1.0;  // negative
  TripletSet set;
  set.triplets.push_back({0, 1, 2});
  const AuditResult audit = audit_incomplete(F, set, 0.2);
  CHECK(audit.flagged_count == 1);
  REQUIRE(audit.rows.size() == 1);
  CHECK(audit.rows[0].flagged);
  CHECK(audit.rows[0].d_ap == doctest::Approx(std::sqrt(2.0)));
  CHECK(audit.rows[0].d_an == doctest::Approx(2.0));
  CHECK(audit.rows[0].d_pn == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("incomplete judgement audit: symmetric satisfaction is clean") {
  Matrix F(3, 2);
  // anchor == positive, negative at distance 1
  F(2, 0) = 1.0;
  TripletSet set;
  set.triplets.push_back({0, 1, 2});
  const AuditResult audit = audit_incomplete(F, set, 0.2);
  CHECK(audit.flagged_count == 0);
}

TEST_CASE("incomplete judgement audit: boundary needs a strict violation") {
  // collinear points, exact distances: d_ap = 1, d_an = 2, d_pn = 1.
  // At tau = 0 the mirrored constraint sits exactly on the boundary
  // (d_pn == d_pa) and must not be flagged.
  Matrix F(3, 1);
  F(0, 0) = 0.0;
  F(1, 0) = 1.0;
  F(2, 0) = 2.0;
  TripletSet set;
  set.triplets.push_back({0, 1, 2});
  const AuditResult audit = audit_incomplete(F, set, 0.0);
  CHECK(audit.flagged_count == 0);
}

TEST_CASE("audit count is zero whenever the mirrored constraint holds everywhere") {
  Rng rng(66);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 3 + rng.below(20);
    const auto labels = test::random_labels(rng, n, 3);
    const Matrix F = test::random_matrix(rng, n, 4, -2.0, 2.0);
    const Matrix D = pairwise_euclidean(F);
    const TripletSet set = batch_hard(labels, D);
    const double tau = rng.uniform(0.0, 0.5);
    const AuditResult audit = audit_incomplete(F, set, tau);
    bool mirror_holds = true;
    for (const auto& t : set.triplets) {
      if (D(t.positive, t.negative) < D(t.positive, t.anchor) + tau) mirror_holds = false;
    }
    if (mirror_holds) CHECK(audit.flagged_count == 0);
  }
}
