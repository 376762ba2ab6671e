#include "mtml/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "mtml/kernels.hpp"
#include "mtml/losses.hpp"
#include "mtml/numerics.hpp"

namespace mtml {

Strategy strategy_from_name(const std::string& name) {
  static const std::map<std::string, Strategy> table = {
      {"s-trad-triplet", Strategy::STradTriplet},
      {"s-dual-triplet", Strategy::SDualTriplet},
      {"s-dml", Strategy::SDml},
      {"mul-dml-same", Strategy::MulDmlSame},
      {"mul-dml", Strategy::MulDml},
      {"cnn-only", Strategy::CnnOnly},
      {"cnn-multask", Strategy::CnnMultask},
      {"mul-dml-multask-same", Strategy::MulDmlMultaskSame},
      {"mul-dml-multask", Strategy::MulDmlMultask},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown strategy '" + name + "'");
  return it->second;
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::STradTriplet: return "s-trad-triplet";
    case Strategy::SDualTriplet: return "s-dual-triplet";
    case Strategy::SDml: return "s-dml";
    case Strategy::MulDmlSame: return "mul-dml-same";
    case Strategy::MulDml: return "mul-dml";
    case Strategy::CnnOnly: return "cnn-only";
    case Strategy::CnnMultask: return "cnn-multask";
    case Strategy::MulDmlMultaskSame: return "mul-dml-multask-same";
    case Strategy::MulDmlMultask: return "mul-dml-multask";
  }
  return "?";
}

StrategyConfig resolve_strategy(Strategy s, const std::optional<ThresholdSchedule>& schedule,
                                std::optional<double> tau, std::size_t slice_dim,
                                std::size_t num_slices_override) {
  StrategyConfig cfg;
  cfg.strategy = s;
  cfg.slice_dim = slice_dim;

  const auto need_tau = [&]() {
    if (!tau) {
      throw std::invalid_argument("strategy " + strategy_name(s) + " needs a single tau");
    }
    if (*tau < 0.0) throw std::invalid_argument("tau must be >= 0");
    return *tau;
  };
  const auto need_schedule = [&]() -> const ThresholdSchedule& {
    if (!schedule) {
      throw std::invalid_argument("strategy " + strategy_name(s) + " needs a threshold schedule");
    }
    return *schedule;
  };
  // N for the wide-network strategies: explicit override, else schedule length
  const auto wide_n = [&]() {
    if (num_slices_override > 0) return num_slices_override;
    if (schedule) return schedule->count();
    return static_cast<std::size_t>(1);
  };

  switch (s) {
    case Strategy::STradTriplet:
    case Strategy::SDualTriplet:
      cfg.num_slices = 1;
      cfg.slice_taus = {need_tau()};
      cfg.loss_kind = s == Strategy::STradTriplet ? LossKind::trad : LossKind::dual;
      break;
    case Strategy::SDml:
      cfg.num_slices = wide_n();
      cfg.slice_taus = {need_tau()};
      cfg.concat_loss = true;
      break;
    case Strategy::MulDmlSame:
    case Strategy::MulDmlMultaskSame:
      cfg.num_slices = wide_n();
      cfg.slice_taus.assign(cfg.num_slices, need_tau());
      cfg.per_slice_classifiers = s == Strategy::MulDmlMultaskSame;
      break;
    case Strategy::MulDml:
    case Strategy::MulDmlMultask:
      cfg.slice_taus = need_schedule().thresholds;
      cfg.num_slices = cfg.slice_taus.size();
      cfg.per_slice_classifiers = s == Strategy::MulDmlMultask;
      break;
    case Strategy::CnnOnly:
    case Strategy::CnnMultask:
      cfg.num_slices = wide_n();
      cfg.per_slice_classifiers = s == Strategy::CnnMultask;
      break;
  }
  const std::size_t loss_terms = cfg.concat_loss ? 1 : cfg.slice_taus.size();
  cfg.lambda = loss_terms > 0 ? 0.5 / static_cast<double>(loss_terms) : 0.0;
  return cfg;
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), src.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(src.row(idx[i]), src.row(idx[i]) + src.cols, out.row(i));
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

struct SliceLossResult {
  std::vector<double> values;       // per supervised slice (or the one concat loss)
  std::vector<double> trad_values;  // standard hinge on the same triplets
  std::vector<std::size_t> incomplete;
  std::vector<Matrix> grad_slices;  // lambda-scaled, per slice
  std::vector<TripletSet> mined;
  std::size_t mined_total = 0;
  bool all_empty = true;
};

// Mining + triplet losses for one batch. For per-slice supervision each slice
// is mined on its own embedding distances; for concat supervision (S-DML) the
// whole normalized embedding is mined once and the gradient is split back
// into slice segments.
SliceLossResult slice_losses_for_batch(const StrategyConfig& strategy, const ForwardTrace& trace,
                                       const std::vector<int>& labels) {
  SliceLossResult r;
  const std::size_t N = trace.slice_embeddings.size();
  const std::size_t batch = labels.size();
  const std::size_t slice_dim = N > 0 ? trace.slice_embeddings[0].cols : 0;
  r.grad_slices.assign(N, Matrix(batch, slice_dim));

  const auto loss_fn = strategy.loss_kind == LossKind::trad ? triplet_loss : dual_triplet_loss;

  if (strategy.concat_loss) {
    const double tau = strategy.slice_taus.at(0);
    const Matrix D = pairwise_euclidean(trace.concat_embedding);
    TripletSet set = batch_hard(labels, D, tau);
    const LossOutput out = loss_fn(trace.concat_embedding, set, tau);
    const LossOutput trad = triplet_loss(trace.concat_embedding, set, tau);
    const AuditResult audit = audit_incomplete(trace.concat_embedding, set, tau);
    r.values.push_back(out.value);
    r.trad_values.push_back(trad.value);
    r.incomplete.push_back(audit.flagged_count);
    r.mined_total += set.triplets.size();
    r.all_empty = set.empty();
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t row = 0; row < batch; ++row) {
        const double* src = out.grad.row(row) + i * slice_dim;
        double* dst = r.grad_slices[i].row(row);
        for (std::size_t j = 0; j < slice_dim; ++j) dst[j] = strategy.lambda * src[j];
      }
    }
    r.mined.push_back(std::move(set));
    return r;
  }

  for (std::size_t i = 0; i < strategy.slice_taus.size(); ++i) {
    const double tau = strategy.slice_taus[i];
    const Matrix& F = trace.slice_embeddings[i];
    const Matrix D = pairwise_euclidean(F);
    TripletSet set = batch_hard(labels, D, tau);
    const LossOutput out = loss_fn(F, set, tau);
    const LossOutput trad = strategy.loss_kind == LossKind::trad ? out : triplet_loss(F, set, tau);
    const AuditResult audit = audit_incomplete(F, set, tau);
    r.values.push_back(out.value);
    r.trad_values.push_back(trad.value);
    r.incomplete.push_back(audit.flagged_count);
    r.mined_total += set.triplets.size();
    if (!set.empty()) r.all_empty = false;
    r.grad_slices[i] = out.grad;
    kernels::ops().scale(r.grad_slices[i].data.data(), strategy.lambda, r.grad_slices[i].size());
    r.mined.push_back(std::move(set));
  }
  return r;
}

}  // namespace

MetricsReport evaluate_model(const SlicedModel& model, const LabeledDataset& data) {
  return evaluate(model, data);
}

TrainResult train(const TrainSetup& setup, const LabeledDataset& train_data,
                  const LabeledDataset& val_data) {
  const StrategyConfig& strategy = setup.strategy;
  if (train_data.size() == 0) throw std::invalid_argument("train: empty training set");
  const std::size_t C = train_data.num_classes();

  ModelConfig mc;
  mc.input_dim = train_data.input_dim();
  mc.backbone_widths = setup.backbone_widths;
  mc.num_slices = strategy.num_slices;
  mc.slice_dim = strategy.slice_dim;
  mc.num_classes = C;
  mc.dropout_rate = setup.optim.dropout;
  mc.per_slice_classifiers = strategy.per_slice_classifiers;

  Rng master(setup.seed);
  Rng rng_init = master.fork(1);
  Rng rng_dropout = master.fork(2);

  TrainResult result;
  result.model = init_model(mc, rng_init);

  std::vector<AdamState> opt;
  for (Matrix* p : parameters(result.model)) {
    opt.push_back(make_adam_state(p->rows, p->cols, setup.optim.lr, setup.optim.beta1,
                                  setup.optim.beta2, setup.optim.epsilon));
  }

  const std::size_t P = setup.batch.P == 0 ? C : setup.batch.P;
  const std::size_t K = setup.batch.K;
  const std::size_t N = strategy.num_slices;

  double best_val = -1.0;
  std::size_t global_iter = 0;

  for (std::size_t epoch = 1; epoch <= setup.optim.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng_epoch = master.fork(0x1000 + epoch);
    const BatchPlan plan = plan_batches(train_data.labels, P, K, rng_epoch);
    if (plan.index_lists.empty()) {
      throw TrainingAbort("train: epoch " + std::to_string(epoch) +
                          " produced no full PK batches");
    }

    bool any_triplets = strategy.slice_taus.empty();  // softmax-only never starves
    std::size_t epoch_incomplete = 0;
    const bool final_epoch = epoch == setup.optim.epochs;

    for (const auto& batch_idx : plan.index_lists) {
      ++global_iter;
      const Matrix X = gather_rows(train_data.features, batch_idx);
      const std::vector<int> labels = gather_labels(train_data.labels, batch_idx);
      const Matrix targets = one_hot(labels, C);

      const ForwardTrace trace = forward(result.model, X, RunMode::train, &rng_dropout);
      if (!all_finite(trace.cnn_feature())) {
        throw TrainingAbort("train: non-finite activations at iteration " +
                            std::to_string(global_iter));
      }
      SliceLossResult sl = slice_losses_for_batch(strategy, trace, labels);
      if (!strategy.slice_taus.empty() && !sl.all_empty) any_triplets = true;

      // classification loss and upstream gradients
      double softmax_value = 0.0;
      Matrix grad_logits;
      std::vector<Matrix> grad_slice_logits;
      if (strategy.per_slice_classifiers) {
        for (const auto& logits : trace.slice_logits) {
          LossOutput ce = softmax_cross_entropy(logits, targets);
          softmax_value += ce.value;
          grad_slice_logits.push_back(std::move(ce.grad));
        }
      } else {
        LossOutput ce = softmax_cross_entropy(trace.logits, targets);
        softmax_value = ce.value;
        grad_logits = std::move(ce.grad);
      }

      const std::vector<double> losses_for_total =
          sl.values.empty() ? std::vector<double>{0.0} : sl.values;
      const double total = total_loss(losses_for_total, softmax_value, strategy.lambda);
      if (!std::isfinite(total)) {
        throw TrainingAbort("train: non-finite loss at iteration " + std::to_string(global_iter));
      }

      if (setup.only_slice >= 0) {
        for (std::size_t i = 0; i < sl.grad_slices.size(); ++i) {
          if (static_cast<int>(i) != setup.only_slice) sl.grad_slices[i].fill(0.0);
        }
      }
      if (setup.zero_classifier_grad) {
        if (grad_logits.size() != 0) grad_logits.fill(0.0);
        for (auto& g : grad_slice_logits) g.fill(0.0);
      }

      ModelGrads grads =
          backward(result.model, trace, sl.grad_slices, grad_logits, grad_slice_logits);

      auto params = parameters(result.model);
      auto gptrs = parameters(grads);
      for (std::size_t p = 0; p < params.size(); ++p) {
        adam_update(*params[p], *gptrs[p], opt[p]);
      }

      IterationRecord rec;
      rec.epoch = epoch;
      rec.iteration = global_iter;
      rec.total = total;
      rec.softmax = softmax_value;
      rec.slice_losses.assign(N, 0.0);
      rec.slice_trad_losses.assign(N, 0.0);
      rec.incomplete.assign(N, 0);
      if (strategy.concat_loss) {
        rec.slice_losses[0] = sl.values[0];
        rec.slice_trad_losses[0] = sl.trad_values[0];
        rec.incomplete[0] = sl.incomplete[0];
      } else {
        for (std::size_t i = 0; i < sl.values.size(); ++i) {
          rec.slice_losses[i] = sl.values[i];
          rec.slice_trad_losses[i] = sl.trad_values[i];
          rec.incomplete[i] = sl.incomplete[i];
        }
      }
      for (std::size_t c : rec.incomplete) epoch_incomplete += c;
      rec.mined_triplets = sl.mined_total;
      result.history.iterations.push_back(std::move(rec));

      if (final_epoch) {
        for (std::size_t s = 0; s < sl.mined.size(); ++s) {
          const Matrix& F = strategy.concat_loss ? trace.concat_embedding
                                                 : trace.slice_embeddings[s];
          const double tau = strategy.slice_taus.empty() ? 0.0 : strategy.slice_taus[s];
          const AuditResult audit = audit_incomplete(F, sl.mined[s], tau);
          for (const auto& row : audit.rows) {
            result.final_epoch_audit.push_back({global_iter, s, row, tau});
          }
        }
      }
    }

    if (!strategy.slice_taus.empty() && !any_triplets) {
      throw TrainingAbort("train: mining starvation in epoch " + std::to_string(epoch) +
                          " (every batch produced an empty triplet set)");
    }

    EpochRecord er;
    er.epoch = epoch;
    er.incomplete_total = epoch_incomplete;
    er.train_accuracy = evaluate(result.model, train_data).overall_accuracy;
    er.val_slice_losses.assign(N, 0.0);

    if (val_data.size() > 0) {
      er.val_accuracy = evaluate(result.model, val_data).overall_accuracy;
      // validation loss: same loss definitions, eval-mode forward, mining on
      // seeded validation batches
      Rng rng_val = master.fork(0x2000 + epoch);
      try {
        const BatchPlan vplan = plan_batches(val_data.labels, P, K, rng_val);
        std::size_t vbatches = 0;
        for (const auto& vidx : vplan.index_lists) {
          const Matrix VX = gather_rows(val_data.features, vidx);
          const std::vector<int> vlabels = gather_labels(val_data.labels, vidx);
          const ForwardTrace vtrace = forward(result.model, VX, RunMode::eval);
          const SliceLossResult vs = slice_losses_for_batch(strategy, vtrace, vlabels);
          double vsoftmax = 0.0;
          const Matrix vtargets = one_hot(vlabels, C);
          if (strategy.per_slice_classifiers) {
            for (const auto& logits : vtrace.slice_logits) {
              vsoftmax += softmax_cross_entropy(logits, vtargets).value;
            }
          } else {
            vsoftmax += softmax_cross_entropy(vtrace.logits, vtargets).value;
          }
          const std::vector<double> vlosses =
              vs.values.empty() ? std::vector<double>{0.0} : vs.values;
          er.val_total += total_loss(vlosses, vsoftmax, strategy.lambda);
          er.val_softmax += vsoftmax;
          for (std::size_t i = 0; i < vs.values.size(); ++i) {
            er.val_slice_losses[strategy.concat_loss ? 0 : i] += vs.values[i];
          }
          ++vbatches;
        }
        if (vbatches > 0) {
          const double inv = 1.0 / static_cast<double>(vbatches);
          er.val_total *= inv;
          er.val_softmax *= inv;
          for (auto& v : er.val_slice_losses) v *= inv;
        }
      } catch (const std::invalid_argument&) {
        // validation set too small for PK batches; accuracy alone is recorded
      }
      if (er.val_accuracy > best_val) {
        best_val = er.val_accuracy;
        result.best_model = result.model;
        result.history.best_epoch = epoch;
      }
    }

    er.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(std::move(er));
  }

  if (result.history.best_epoch == 0) {
    result.best_model = result.model;
    result.history.best_epoch = setup.optim.epochs;
  }
  return result;
}

}  // namespace mtml
