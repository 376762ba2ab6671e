#include "mtml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mtml/kernels.hpp"

namespace mtml {

MetricsReport confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                        std::size_t num_classes) {
  if (preds.size() != labels.size()) throw std::invalid_argument("confusion: length mismatch");
  if (preds.empty()) throw std::invalid_argument("confusion: empty input");
  MetricsReport r;
  r.n_samples = preds.size();
  r.confusion_counts.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int t = labels[i], p = preds[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw std::invalid_argument("confusion: class id out of range at row " + std::to_string(i));
    }
    ++r.confusion_counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  std::size_t correct = 0;
  r.per_class_accuracy.resize(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t row_total = 0;
    for (std::size_t p = 0; p < num_classes; ++p) row_total += r.confusion_counts[c][p];
    correct += r.confusion_counts[c][c];
    r.per_class_accuracy[c] =
        row_total == 0 ? 0.0
                       : static_cast<double>(r.confusion_counts[c][c]) /
                             static_cast<double>(row_total);
  }
  r.overall_accuracy = static_cast<double>(correct) / static_cast<double>(r.n_samples);
  return r;
}

std::vector<DistanceDistribution> distance_distributions(
    const std::vector<Matrix>& slice_embeddings, const std::vector<int>& labels,
    const std::vector<double>& taus) {
  std::vector<DistanceDistribution> out;
  const auto& k = kernels::ops();
  for (std::size_t s = 0; s < slice_embeddings.size(); ++s) {
    const Matrix& E = slice_embeddings[s];
    if (E.rows != labels.size()) {
      throw std::invalid_argument("distance_distributions: label count mismatch");
    }
    DistanceDistribution d;
    d.slice = s;
    d.tau = s < taus.size() ? taus[s] : 0.0;
    d.intra.assign(kDistanceBins, 0);
    d.inter.assign(kDistanceBins, 0);
    if (E.rows < 2) {
      d.degenerate = true;
      out.push_back(std::move(d));
      continue;
    }
    double intra_sum = 0, intra_sq = 0, inter_sum = 0, inter_sq = 0;
    for (std::size_t i = 0; i < E.rows; ++i) {
      for (std::size_t j = i + 1; j < E.rows; ++j) {
        const double dist = std::sqrt(k.squared_distance(E.row(i), E.row(j), E.cols));
        auto bin = static_cast<std::size_t>(dist / 2.0 * static_cast<double>(kDistanceBins));
        bin = std::min(bin, kDistanceBins - 1);
        if (labels[i] == labels[j]) {
          ++d.intra[bin];
          ++d.intra_pairs;
          intra_sum += dist;
          intra_sq += dist * dist;
        } else {
          ++d.inter[bin];
          ++d.inter_pairs;
          inter_sum += dist;
          inter_sq += dist * dist;
        }
      }
    }
    const auto finish = [](double sum, double sq, std::size_t n, double& mean, double& sd) {
      if (n == 0) return;
      mean = sum / static_cast<double>(n);
      const double var = sq / static_cast<double>(n) - mean * mean;
      sd = var > 0.0 ? std::sqrt(var) : 0.0;
    };
    finish(intra_sum, intra_sq, d.intra_pairs, d.intra_mean, d.intra_std);
    finish(inter_sum, inter_sq, d.inter_pairs, d.inter_mean, d.inter_std);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<int> majority_vote(const std::vector<std::vector<int>>& per_slice_predictions) {
  if (per_slice_predictions.empty()) throw std::invalid_argument("majority_vote: no predictions");
  const std::size_t n = per_slice_predictions[0].size();
  for (const auto& p : per_slice_predictions) {
    if (p.size() != n) throw std::invalid_argument("majority_vote: length mismatch");
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int max_class = 0;
    for (const auto& p : per_slice_predictions) max_class = std::max(max_class, p[i]);
    std::vector<std::size_t> votes(static_cast<std::size_t>(max_class) + 1, 0);
    for (const auto& p : per_slice_predictions) ++votes[static_cast<std::size_t>(p[i])];
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
      if (votes[c] > votes[best]) best = c;  // strict: ties keep the lowest id
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

std::vector<int> predict(const SlicedModel& model, const Matrix& X) {
  const ForwardTrace trace = forward(model, X, RunMode::eval);
  if (!model.per_slice_classifiers) return argmax_rows(trace.logits);
  std::vector<std::vector<int>> per_slice;
  per_slice.reserve(trace.slice_logits.size());
  for (const auto& logits : trace.slice_logits) per_slice.push_back(argmax_rows(logits));
  return majority_vote(per_slice);
}

MetricsReport evaluate(const SlicedModel& model, const LabeledDataset& data) {
  if (data.input_dim() != model.input_dim) {
    throw std::invalid_argument("evaluate: dataset width does not match model input");
  }
  return confusion(predict(model, data.features), data.labels, model.num_classes);
}

void export_slice_features(const SlicedModel& model, const Matrix& X, const std::string& path) {
  const ForwardTrace trace = forward(model, X, RunMode::eval);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("slice features: cannot write '" + path + "'");
  out << "sample,slice";
  for (std::size_t j = 0; j < model.slice_dim; ++j) out << ",e" << j;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t s = 0; s < model.num_slices(); ++s) {
      out << i << ',' << s;
      const double* row = trace.slice_embeddings[s].row(i);
      for (std::size_t j = 0; j < model.slice_dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", row[j]);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

void write_distance_csv(const std::vector<DistanceDistribution>& dists, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("distances: cannot write '" + path + "'");
  out << "slice,tau,kind,bin_index,bin_lo,bin_hi,count\n";
  const double width = 2.0 / static_cast<double>(kDistanceBins);
  for (const auto& d : dists) {
    for (std::size_t kind = 0; kind < 2; ++kind) {
      const auto& hist = kind == 0 ? d.intra : d.inter;
      for (std::size_t b = 0; b < hist.size(); ++b) {
        out << d.slice << ',' << d.tau << ',' << (kind == 0 ? "intra" : "inter") << ',' << b << ','
            << static_cast<double>(b) * width << ',' << static_cast<double>(b + 1) * width << ','
            << hist[b] << '\n';
      }
    }
  }
}

void write_distance_summary_csv(const std::vector<DistanceDistribution>& dists,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("distances: cannot write '" + path + "'");
  out << "slice,tau,kind,pairs,mean,std\n";
  for (const auto& d : dists) {
    out << d.slice << ',' << d.tau << ",intra," << d.intra_pairs << ',' << d.intra_mean << ','
        << d.intra_std << '\n';
    out << d.slice << ',' << d.tau << ",inter," << d.inter_pairs << ',' << d.inter_mean << ','
        << d.inter_std << '\n';
  }
}

}  // namespace mtml
