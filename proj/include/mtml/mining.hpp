#pragma once

#include <cstddef>
#include <vector>

#include "mtml/matrix.hpp"
#include "mtml/rng.hpp"

namespace mtml {

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
};

struct TripletSet {
  std::vector<Triplet> triplets;
  double tau = 0.0;            // margin the triplets were mined for
  bool no_negatives = false;   // set when no anchor had a negative available
  bool empty() const { return triplets.empty(); }
};

struct BatchPlan {
  std::size_t P = 0;
  std::size_t K = 0;
  std::vector<std::vector<std::size_t>> index_lists;  // dataset indices per batch
};

// Composes one epoch pass of PK batches: P distinct classes x K samples each,
// classes and members drawn without replacement within the pass, trailing
// partial batches dropped.
BatchPlan plan_batches(const std::vector<int>& labels, std::size_t P, std::size_t K, Rng& rng);

// Batch-Hard: per anchor, farthest same-label row and nearest other-label row.
// Ties break to the lowest index; anchors without a positive are skipped.
// D must be a symmetric distance matrix with zero diagonal.
TripletSet batch_hard(const std::vector<int>& labels, const Matrix& D, double tau = 0.0);

struct AuditRow {
  std::size_t triplet_index;
  double d_ap;
  double d_an;
  double d_pn;
  bool flagged;
};

struct AuditResult {
  std::size_t flagged_count = 0;
  std::vector<std::size_t> flagged;  // indices into the triplet list
  std::vector<AuditRow> rows;        // one per triplet
};

// Flags triplets whose anchor-centered constraint holds at margin tau while
// the positive-centered one is strictly violated: d(a,n) >= d(a,p)+tau and
// d(p,n) < d(p,a)+tau.
AuditResult audit_incomplete(const Matrix& embeddings, const TripletSet& triplets, double tau);

}  // namespace mtml
