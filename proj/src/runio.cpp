#include "mtml/runio.hpp"

#include <cstdio>
#include <fstream>

namespace mtml {

nlohmann::json metrics_to_json(const MetricsReport& report) {
  return nlohmann::json{{"overall_accuracy", report.overall_accuracy},
                        {"per_class_accuracy", report.per_class_accuracy},
                        {"confusion", report.confusion_counts},
                        {"n_samples", report.n_samples}};
}

nlohmann::json history_to_json(const RunHistory& history) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& it : history.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"epoch", it.epoch},
                          {"total", it.total},
                          {"softmax", it.softmax},
                          {"slice_losses", it.slice_losses},
                          {"slice_trad_losses", it.slice_trad_losses},
                          {"incomplete", it.incomplete},
                          {"mined_triplets", it.mined_triplets}});
  }
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_accuracy", e.train_accuracy},
                      {"val_accuracy", e.val_accuracy},
                      {"val_total", e.val_total},
                      {"val_softmax", e.val_softmax},
                      {"val_slice_losses", e.val_slice_losses},
                      {"incomplete_total", e.incomplete_total},
                      {"wall_seconds", e.wall_seconds}});
  }
  return nlohmann::json{
      {"iterations", iterations}, {"epochs", epochs}, {"best_epoch", history.best_epoch}};
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

void write_losses_csv(const RunHistory& history, std::size_t num_slices,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "iteration,epoch,total,softmax";
  for (std::size_t i = 0; i < num_slices; ++i) out << ",slice" << i << "_loss";
  for (std::size_t i = 0; i < num_slices; ++i) out << ",slice" << i << "_trad";
  for (std::size_t i = 0; i < num_slices; ++i) out << ",slice" << i << "_incomplete";
  out << '\n';
  char buf[40];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& it : history.iterations) {
    out << it.iteration << ',' << it.epoch << ',' << num(it.total) << ',' << num(it.softmax);
    for (std::size_t i = 0; i < num_slices; ++i) out << ',' << num(it.slice_losses[i]);
    for (std::size_t i = 0; i < num_slices; ++i) out << ',' << num(it.slice_trad_losses[i]);
    for (std::size_t i = 0; i < num_slices; ++i) out << ',' << it.incomplete[i];
    out << '\n';
  }
}

void write_audit_csv(const std::vector<TrainAuditRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "iteration,slice,triplet_index,d_ap,d_an,d_pn,tau,flagged\n";
  char buf[40];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.slice << ',' << r.row.triplet_index << ',' << num(r.row.d_ap)
        << ',' << num(r.row.d_an) << ',' << num(r.row.d_pn) << ',' << num(r.tau) << ','
        << (r.row.flagged ? 1 : 0) << '\n';
  }
}

}  // namespace mtml
