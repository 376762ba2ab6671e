#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mtml/matrix.hpp"
#include "mtml/mining.hpp"
#include "mtml/rng.hpp"

namespace mtml::test {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, int num_classes) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
  return labels;
}

// Independent Batch-Hard oracle: explicit candidate lists, lowest index wins
// ties. Kept deliberately separate from the production miner.
inline TripletSet brute_force_batch_hard(const std::vector<int>& labels, const Matrix& D) {
  TripletSet set;
  const std::size_t n = labels.size();
  bool saw_negative = false;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::size_t> positives, negatives;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      (labels[j] == labels[a] ? positives : negatives).push_back(j);
    }
    if (!negatives.empty()) saw_negative = true;
    if (positives.empty() || negatives.empty()) continue;
    std::size_t p = positives[0];
    for (std::size_t cand : positives) {
      if (D(a, cand) > D(a, p)) p = cand;
    }
    std::size_t neg = negatives[0];
    for (std::size_t cand : negatives) {
      if (D(a, cand) < D(a, neg)) neg = cand;
    }
    set.triplets.push_back({a, p, neg});
  }
  set.no_negatives = !saw_negative && n > 0;
  return set;
}

// Objective probe for central-difference checks. `pattern` encodes which
// hinges / ReLU units / coincidence guards are active so kink crossings
// between x-h and x+h can be detected and skipped.
struct Probe {
  double value = 0.0;
  std::uint64_t pattern = 0;
};

inline void mix_pattern(std::uint64_t& pattern, bool bit) {
  pattern = pattern * 1099511628211ull + (bit ? 0x9E37ull : 0x79B9ull);
}

struct FdReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst;
};

// Central differences over every coordinate of every tensor. Coordinates are
// skipped when the activation pattern differs between the two probe points or
// when both gradients are tiny in absolute terms.
inline FdReport fd_check(const std::vector<Matrix*>& params,
                         const std::vector<Matrix*>& analytic,
                         const std::vector<std::string>& names,
                         const std::function<Probe()>& objective, double step = 1e-6,
                         double abs_floor = 1e-10) {
  FdReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& P = *params[t];
    const Matrix& G = *analytic[t];
    for (std::size_t i = 0; i < P.size(); ++i) {
      const double saved = P.data[i];
      P.data[i] = saved + step;
      const Probe hi = objective();
      P.data[i] = saved - step;
      const Probe lo = objective();
      P.data[i] = saved;
      if (hi.pattern != lo.pattern) {
        ++report.skipped;
        continue;
      }
      const double fd = (hi.value - lo.value) / (2.0 * step);
      const double an = G.data[i];
      if (std::abs(fd) < abs_floor && std::abs(an) < abs_floor) {
        ++report.checked;
        continue;
      }
      const double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = names[t] + "[" + std::to_string(i) + "] fd=" + std::to_string(fd) +
                       " analytic=" + std::to_string(an);
      }
      ++report.checked;
    }
  }
  return report;
}

// Fresh directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& hint) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mtml-" + hint + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace mtml::test
