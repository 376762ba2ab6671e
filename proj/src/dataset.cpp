#include "mtml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mtml/kernels.hpp"

namespace mtml {

std::size_t LabeledDataset::num_classes() const {
  if (!class_names.empty()) return class_names.size();
  int maxid = -1;
  for (int l : labels) maxid = std::max(maxid, l);
  return static_cast<std::size_t>(maxid + 1);
}

void ClusterSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("cluster spec: need at least 2 classes");
  if (input_dim < 1) throw std::invalid_argument("cluster spec: input_dim must be >= 1");
  if (samples_per_class < 2) {
    throw std::invalid_argument("cluster spec: samples_per_class must be >= 2");
  }
  if (per_class_scales.size() != num_classes) {
    throw std::invalid_argument("cluster spec: need one scale per class (" +
                                std::to_string(num_classes) + " classes, " +
                                std::to_string(per_class_scales.size()) + " scales)");
  }
  for (double s : per_class_scales) {
    if (!(s > 0.0)) throw std::invalid_argument("cluster spec: scales must be positive");
  }
  if (!(center_radius > 0.0)) throw std::invalid_argument("cluster spec: radius must be positive");
}

LabeledDataset synth_clusters(const ClusterSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.num_classes * spec.samples_per_class;
  LabeledDataset ds;
  ds.features = Matrix(n, spec.input_dim);
  ds.labels.resize(n);
  ds.class_names.reserve(spec.num_classes);

  std::vector<double> center(spec.input_dim);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    ds.class_names.push_back("class" + std::to_string(c));
    double norm2 = 0.0;
    for (auto& x : center) {
      x = rng.gaussian();
      norm2 += x * x;
    }
    const double f = spec.center_radius / std::sqrt(norm2);
    for (auto& x : center) x *= f;

    const double scale = spec.per_class_scales[c];
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
      double* out = ds.features.row(row);
      for (std::size_t j = 0; j < spec.input_dim; ++j) {
        out[j] = center[j] + scale * rng.gaussian();
      }
      ds.labels[row] = static_cast<int>(c);
    }
  }
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: file '" + path + "' is empty");
  const auto header = split_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == label_column) {
      label_idx = i;
      break;
    }
  }
  if (label_idx == header.size()) {
    throw std::runtime_error("csv: label column '" + label_column + "' not found in '" + path +
                             "'");
  }

  LabeledDataset ds;
  std::map<std::string, int> label_ids;
  std::vector<double> values;
  std::size_t data_rows = 0;
  const std::size_t d = header.size() - 1;

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(data_rows + 2) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == label_idx) continue;
      const std::string tok = trim(cells[i]);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (tok.empty() || end != tok.c_str() + tok.size()) {
        throw std::runtime_error("csv: non-numeric value '" + tok + "' at row " +
                                 std::to_string(data_rows + 2) + ", column '" + trim(header[i]) +
                                 "'");
      }
      values.push_back(v);
    }
    const std::string tok = trim(cells[label_idx]);
    auto [it, inserted] = label_ids.try_emplace(tok, static_cast<int>(label_ids.size()));
    if (inserted) ds.class_names.push_back(tok);
    ds.labels.push_back(it->second);
    ++data_rows;
  }
  if (data_rows == 0) throw std::runtime_error("csv: file '" + path + "' holds no data rows");

  ds.features = Matrix(data_rows, d);
  ds.features.data = std::move(values);
  return ds;
}

void export_csv(const LabeledDataset& ds, const std::string& path,
                const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write file '" + path + "'");
  for (std::size_t j = 0; j < ds.input_dim(); ++j) out << 'f' << j << ',';
  out << label_column << '\n';
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double* row = ds.features.row(i);
    for (std::size_t j = 0; j < ds.input_dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      out << buf << ',';
    }
    if (!ds.class_names.empty()) {
      out << ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    } else {
      out << ds.labels[i];
    }
    out << '\n';
  }
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                double val_fraction, Rng& rng) {
  if (!(train_fraction > 0.0) || val_fraction < 0.0 ||
      train_fraction + val_fraction > 1.0 + 1e-12) {
    throw std::invalid_argument("split: fractions must satisfy train>0, val>=0, sum<=1");
  }
  const std::size_t C = ds.num_classes();
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  const int parts = 1 + (val_fraction > 0.0 ? 1 : 0);
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t c = 0; c < C; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < static_cast<std::size_t>(parts)) {
      throw std::invalid_argument("split: class " + std::to_string(c) + " has only " +
                                  std::to_string(idx.size()) + " samples for " +
                                  std::to_string(parts) + " split parts");
    }
    rng.shuffle(idx);
    const auto share = [&](double frac) {
      const double t = frac * static_cast<double>(idx.size());
      const double r = std::round(t);
      return static_cast<std::size_t>(std::abs(t - r) < 1e-9 ? r : std::floor(t));
    };
    std::size_t n_val = share(val_fraction);
    std::size_t n_train = idx.size() - n_val;  // remainder goes to train
    if (train_fraction + val_fraction < 1.0 - 1e-12) n_train = share(train_fraction);
    for (std::size_t i = 0; i < n_train; ++i) train_idx.push_back(idx[i]);
    for (std::size_t i = 0; i < n_val; ++i) val_idx.push_back(idx[n_train + i]);
  }

  const auto take = [&](const std::vector<std::size_t>& which, const char* tag) {
    LabeledDataset out;
    out.features = Matrix(which.size(), ds.input_dim());
    out.labels.reserve(which.size());
    out.class_names = ds.class_names;
    out.split_tag = tag;
    for (std::size_t i = 0; i < which.size(); ++i) {
      std::copy(ds.features.row(which[i]), ds.features.row(which[i]) + ds.input_dim(),
                out.features.row(i));
      out.labels.push_back(ds.labels[which[i]]);
    }
    return out;
  };
  return {take(train_idx, "train"), take(val_idx, "val")};
}

}  // namespace mtml
