#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtml/dataset.hpp"
#include "mtml/metrics.hpp"
#include "mtml/mining.hpp"
#include "mtml/model.hpp"
#include "mtml/schedule.hpp"

namespace mtml {

enum class Strategy {
  STradTriplet,       // one slice, standard triplet loss, single margin
  SDualTriplet,       // one slice, dual triplet loss, single margin
  SDml,               // N slices, one dual loss on the whole embedding
  MulDmlSame,         // N slices, dual loss per slice, one shared margin
  MulDml,             // N slices, dual loss per slice, scheduled margins
  CnnOnly,            // softmax only
  CnnMultask,         // softmax per slice, majority vote
  MulDmlMultaskSame,  // multitask heads, shared margin
  MulDmlMultask,      // multitask heads, scheduled margins
};

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

enum class LossKind { trad, dual };

struct StrategyConfig {
  Strategy strategy = Strategy::MulDml;
  std::size_t num_slices = 0;
  std::size_t slice_dim = 256;
  std::vector<double> slice_taus;  // one margin per supervised slice; empty = no triplet loss
  bool concat_loss = false;        // mine and penalize the whole embedding (S-DML)
  LossKind loss_kind = LossKind::dual;
  bool per_slice_classifiers = false;
  double lambda = 0.0;  // 0.5 / (number of triplet losses)
};

// Resolves a strategy name plus margin inputs into a concrete configuration.
// Strategies with scheduled margins require `schedule`; single-margin
// strategies require `tau`; N defaults to the schedule length (or 1).
StrategyConfig resolve_strategy(Strategy s, const std::optional<ThresholdSchedule>& schedule,
                                std::optional<double> tau, std::size_t slice_dim,
                                std::size_t num_slices_override = 0);

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 30;
  double dropout = 0.5;
};

struct BatchConfig {
  std::size_t P = 0;  // 0 = all classes
  std::size_t K = 12;
};

struct IterationRecord {
  std::size_t epoch = 0;
  std::size_t iteration = 0;  // global index
  double total = 0.0;
  double softmax = 0.0;
  std::vector<double> slice_losses;       // training loss per slice
  std::vector<double> slice_trad_losses;  // standard-hinge value on the same triplets
  std::vector<std::size_t> incomplete;    // audit counts per slice
  std::size_t mined_triplets = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double val_total = 0.0;
  double val_softmax = 0.0;
  std::vector<double> val_slice_losses;
  std::size_t incomplete_total = 0;  // summed over the epoch's iterations
  double wall_seconds = 0.0;
};

struct RunHistory {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 while empty
};

struct TrainAuditRow {
  std::size_t iteration;
  std::size_t slice;
  AuditRow row;
  double tau;
};

struct TrainSetup {
  StrategyConfig strategy;
  std::vector<std::size_t> backbone_widths = {256, 512};
  OptimConfig optim;
  BatchConfig batch;
  std::uint64_t seed = 1;
  // diagnostics: drop the classifier gradient, or supervise one slice only
  bool zero_classifier_grad = false;
  int only_slice = -1;
};

struct TrainResult {
  SlicedModel model;       // after the last epoch
  SlicedModel best_model;  // highest validation accuracy (earliest on ties)
  RunHistory history;
  std::vector<TrainAuditRow> final_epoch_audit;
};

struct TrainingAbort : std::runtime_error {
  explicit TrainingAbort(const std::string& msg) : std::runtime_error(msg) {}
};

// Full training loop: PK batches, per-slice Batch-Hard mining on each slice's
// own distances, per-slice loss at its margin, total loss, analytic backward,
// Adam. Deterministic under (setup, data).
TrainResult train(const TrainSetup& setup, const LabeledDataset& train_data,
                  const LabeledDataset& val_data);

// Eval-mode metrics; thin wrapper over the metrics module.
MetricsReport evaluate_model(const SlicedModel& model, const LabeledDataset& data);

}  // namespace mtml
