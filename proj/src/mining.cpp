#include "mtml/mining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mtml/kernels.hpp"

namespace mtml {

BatchPlan plan_batches(const std::vector<int>& labels, std::size_t P, std::size_t K, Rng& rng) {
  if (P < 2 || K < 2) {
    throw std::invalid_argument("plan_batches: need P >= 2 and K >= 2 so every anchor has a "
                                "positive and a negative");
  }
  std::map<int, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < labels.size(); ++i) pools[labels[i]].push_back(i);

  std::size_t eligible = 0;
  for (auto& [cls, pool] : pools) {
    if (pool.size() >= K) ++eligible;
  }
  if (eligible < P) {
    for (auto& [cls, pool] : pools) {
      if (pool.size() < K) {
        throw std::invalid_argument("plan_batches: class " + std::to_string(cls) + " has only " +
                                    std::to_string(pool.size()) + " samples, need K=" +
                                    std::to_string(K));
      }
    }
    throw std::invalid_argument("plan_batches: only " + std::to_string(eligible) +
                                " classes available, need P=" + std::to_string(P));
  }

  // per-epoch shuffle of each class pool; batches then consume the pools
  std::vector<int> class_ids;
  for (auto& [cls, pool] : pools) {
    rng.shuffle(pool);
    class_ids.push_back(cls);
  }
  std::vector<std::size_t> cursor(class_ids.size(), 0);

  BatchPlan plan;
  plan.P = P;
  plan.K = K;
  for (;;) {
    std::vector<std::size_t> ready;  // class positions with >= K unconsumed samples
    for (std::size_t c = 0; c < class_ids.size(); ++c) {
      if (pools[class_ids[c]].size() - cursor[c] >= K) ready.push_back(c);
    }
    if (ready.size() < P) break;
    rng.shuffle(ready);
    ready.resize(P);
    std::sort(ready.begin(), ready.end());  // batch layout independent of pick order
    std::vector<std::size_t> batch;
    batch.reserve(P * K);
    for (std::size_t c : ready) {
      const auto& pool = pools[class_ids[c]];
      for (std::size_t k = 0; k < K; ++k) batch.push_back(pool[cursor[c] + k]);
      cursor[c] += K;
    }
    plan.index_lists.push_back(std::move(batch));
  }
  return plan;
}

TripletSet batch_hard(const std::vector<int>& labels, const Matrix& D, double tau) {
  const std::size_t n = labels.size();
  if (D.rows != n || D.cols != n) {
    throw std::invalid_argument("batch_hard: distance matrix does not match label count");
  }
  TripletSet set;
  set.tau = tau;
  bool any_negative = false;
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t best_p = n, best_n = n;
    double worst_pos = -1.0, best_neg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = D(a, j);
      if (labels[j] == labels[a]) {
        if (d > worst_pos) {
          worst_pos = d;
          best_p = j;
        }
      } else {
        if (best_n == n || d < best_neg) {
          best_neg = d;
          best_n = j;
        }
      }
    }
    if (best_n != n) any_negative = true;
    if (best_p != n && best_n != n) set.triplets.push_back({a, best_p, best_n});
  }
  set.no_negatives = !any_negative && n > 0;
  return set;
}

AuditResult audit_incomplete(const Matrix& embeddings, const TripletSet& triplets, double tau) {
  AuditResult result;
  result.rows.reserve(triplets.triplets.size());
  const auto& k = kernels::ops();
  const std::size_t d = embeddings.cols;
  for (std::size_t t = 0; t < triplets.triplets.size(); ++t) {
    const auto& tri = triplets.triplets[t];
    AuditRow row;
    row.triplet_index = t;
    row.d_ap = std::sqrt(k.squared_distance(embeddings.row(tri.anchor),
                                            embeddings.row(tri.positive), d));
    row.d_an = std::sqrt(k.squared_distance(embeddings.row(tri.anchor),
                                            embeddings.row(tri.negative), d));
    row.d_pn = std::sqrt(k.squared_distance(embeddings.row(tri.positive),
                                            embeddings.row(tri.negative), d));
    row.flagged = row.d_an >= row.d_ap + tau && row.d_pn < row.d_ap + tau;
    if (row.flagged) {
      result.flagged.push_back(t);
      ++result.flagged_count;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace mtml
