#include "mtml/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "mtml/numerics.hpp"
#include "mtml/runio.hpp"

namespace fs = std::filesystem;

namespace mtml::cli {
namespace {

LabeledDataset dataset_from_sources(const RunConfig& cfg) {
  if (cfg.data.csv_path) return load_csv(*cfg.data.csv_path, cfg.data.label_column);
  Rng gen = Rng(cfg.seed).fork(0xD);
  return synth_clusters(cfg.data.synth.value_or(ClusterSpec{}), gen);
}

RunConfig load_with_overrides(const std::optional<std::string>& config_path, const Overrides& ov) {
  RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
  ov.apply(cfg);
  return cfg;
}

void write_train_artifacts(const RunConfig& cfg, const TrainResult& result,
                           const LabeledDataset& train_data, const LabeledDataset& val_data) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_json(run_config_to_json(cfg), (out / "effective-config.json").string());
  save_checkpoint(result.model, (out / "checkpoint-final.json").string());
  save_checkpoint(result.best_model, (out / "checkpoint-best.json").string());
  write_json(history_to_json(result.history), (out / "history.json").string());
  write_losses_csv(result.history, result.model.num_slices(), (out / "losses.csv").string());
  write_audit_csv(result.final_epoch_audit, (out / "audit.csv").string());

  nlohmann::json metrics;
  metrics["strategy"] = cfg.strategy;
  metrics["seed"] = cfg.seed;
  metrics["best_epoch"] = result.history.best_epoch;
  metrics["train"] = metrics_to_json(evaluate_model(result.model, train_data));
  if (val_data.size() > 0) {
    metrics["val"] = metrics_to_json(evaluate_model(result.model, val_data));
    metrics["val_best"] = metrics_to_json(evaluate_model(result.best_model, val_data));
  }
  write_json(metrics, (out / "metrics.json").string());
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const TrainingAbort& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

void Overrides::apply(RunConfig& cfg) const {
  if (strategy) cfg.strategy = *strategy;
  if (tau_min) cfg.tau_min = *tau_min;
  if (tau_max) cfg.tau_max = *tau_max;
  if (dtau) cfg.dtau = *dtau;
  if (tau) cfg.tau = *tau;
  if (slice_dim) cfg.slice_dim = *slice_dim;
  if (num_slices) cfg.num_slices = *num_slices;
  if (epochs) cfg.optim.epochs = *epochs;
  if (P) cfg.batch.P = *P;
  if (K) cfg.batch.K = *K;
  if (seed) cfg.seed = *seed;
  if (out) cfg.out_dir = *out;
  if (csv) {
    cfg.data.csv_path = *csv;
    cfg.data.synth.reset();
  }
  if (label_col) cfg.data.label_column = *label_col;
}

int cmd_train(const std::optional<std::string>& config_path, const Overrides& ov) {
  return run_guarded([&]() {
    const RunConfig cfg = load_with_overrides(config_path, ov);
    const TrainSetup setup = make_train_setup(cfg);  // validates strategy + schedule
    auto [train_data, val_data] = build_datasets(cfg);
    const TrainResult result = train(setup, train_data, val_data);
    write_train_artifacts(cfg, result, train_data, val_data);

    const MetricsReport train_report = evaluate_model(result.model, train_data);
    std::printf("strategy %s seed %llu: train accuracy %.4f", cfg.strategy.c_str(),
                static_cast<unsigned long long>(cfg.seed), train_report.overall_accuracy);
    if (val_data.size() > 0) {
      const MetricsReport val_report = evaluate_model(result.model, val_data);
      std::printf(", val accuracy %.4f (best epoch %zu)", val_report.overall_accuracy,
                  result.history.best_epoch);
    }
    std::printf("\nartifacts in %s\n", cfg.out_dir.c_str());
    return 0;
  });
}

int cmd_eval(const std::string& checkpoint_path, const std::optional<std::string>& config_path,
             const Overrides& ov) {
  return run_guarded([&]() {
    const RunConfig cfg = load_with_overrides(config_path, ov);
    const SlicedModel model = load_checkpoint(checkpoint_path);
    const LabeledDataset data = dataset_from_sources(cfg);
    if (data.size() == 0) throw ConfigError("eval: dataset is empty");
    if (data.input_dim() != model.input_dim) {
      throw ConfigError("eval: dataset width " + std::to_string(data.input_dim()) +
                        " does not match checkpoint input width " +
                        std::to_string(model.input_dim));
    }

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const MetricsReport report = evaluate_model(model, data);
    nlohmann::json metrics;
    metrics["checkpoint"] = checkpoint_path;
    metrics["split_tag"] = data.split_tag;
    metrics["report"] = metrics_to_json(report);
    write_json(metrics, (out / "metrics.json").string());

    const ForwardTrace trace = forward(model, data.features, RunMode::eval);
    std::vector<double> taus;
    try {
      const StrategyConfig sc = resolve_run_strategy(cfg);
      taus = sc.slice_taus;
    } catch (const std::exception&) {
      // margins unknown; distributions are still annotated with tau 0
    }
    const auto dists = distance_distributions(trace.slice_embeddings, data.labels, taus);
    write_distance_csv(dists, (out / "distances.csv").string());
    write_distance_summary_csv(dists, (out / "distances-summary.csv").string());
    export_slice_features(model, data.features, (out / "slice-features.csv").string());

    std::printf("accuracy %.4f over %zu samples; artifacts in %s\n", report.overall_accuracy,
                report.n_samples, cfg.out_dir.c_str());
    return 0;
  });
}

int cmd_audit(const std::string& checkpoint_path, const std::optional<std::string>& config_path,
              double tau, const Overrides& ov) {
  return run_guarded([&]() {
    const RunConfig cfg = load_with_overrides(config_path, ov);
    const SlicedModel model = load_checkpoint(checkpoint_path);
    const LabeledDataset data = dataset_from_sources(cfg);
    if (data.size() == 0) throw ConfigError("audit: dataset is empty");
    if (data.input_dim() != model.input_dim) {
      throw ConfigError("audit: dataset width " + std::to_string(data.input_dim()) +
                        " does not match checkpoint input width " +
                        std::to_string(model.input_dim));
    }
    if (tau < 0.0) throw ConfigError("audit: tau must be >= 0");

    const std::size_t P = cfg.batch.P == 0 ? data.num_classes() : cfg.batch.P;
    Rng rng = Rng(cfg.seed).fork(0xA);
    const BatchPlan plan = plan_batches(data.labels, P, cfg.batch.K, rng);

    std::vector<TrainAuditRow> rows;
    std::vector<std::size_t> per_slice(model.num_slices(), 0);
    std::size_t iteration = 0;
    for (const auto& batch_idx : plan.index_lists) {
      ++iteration;
      Matrix X(batch_idx.size(), data.input_dim());
      std::vector<int> labels(batch_idx.size());
      for (std::size_t i = 0; i < batch_idx.size(); ++i) {
        std::copy(data.features.row(batch_idx[i]), data.features.row(batch_idx[i]) + data.input_dim(),
                  X.row(i));
        labels[i] = data.labels[batch_idx[i]];
      }
      const ForwardTrace trace = forward(model, X, RunMode::eval);
      for (std::size_t s = 0; s < model.num_slices(); ++s) {
        const Matrix D = pairwise_euclidean(trace.slice_embeddings[s]);
        const TripletSet set = batch_hard(labels, D, tau);
        const AuditResult audit = audit_incomplete(trace.slice_embeddings[s], set, tau);
        per_slice[s] += audit.flagged_count;
        for (const auto& row : audit.rows) rows.push_back({iteration, s, row, tau});
      }
    }

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_audit_csv(rows, (out / "audit.csv").string());
    std::size_t total = 0;
    nlohmann::json summary;
    summary["tau"] = tau;
    summary["per_slice_flagged"] = per_slice;
    for (std::size_t c : per_slice) total += c;
    summary["total_flagged"] = total;
    summary["batches"] = plan.index_lists.size();
    write_json(summary, (out / "audit-summary.json").string());

    std::printf("audit at tau %.4g over %zu batches: total flagged %zu\n", tau,
                plan.index_lists.size(), total);
    for (std::size_t s = 0; s < per_slice.size(); ++s) {
      std::printf("  slice %zu: %zu incomplete judgements\n", s, per_slice[s]);
    }
    return 0;
  });
}

int cmd_sweep(const std::optional<std::string>& config_path, const std::string& sweep_path,
              const Overrides& ov) {
  return run_guarded([&]() {
    const RunConfig base = load_with_overrides(config_path, ov);

    std::ifstream in(sweep_path);
    if (!in) throw ConfigError("sweep: cannot open '" + sweep_path + "'");
    nlohmann::json sj;
    try {
      in >> sj;
    } catch (const std::exception& e) {
      throw ConfigError("sweep: '" + sweep_path + "' is not valid JSON: " + e.what());
    }
    for (const auto& [key, value] : sj.items()) {
      if (key != "taus" && key != "strategies" && key != "seeds") {
        throw ConfigError("sweep: unknown key '" + key + "'");
      }
    }
    std::vector<double> taus;
    if (sj.contains("taus")) taus = sj.at("taus").get<std::vector<double>>();
    std::vector<std::string> strategies;
    if (sj.contains("strategies")) strategies = sj.at("strategies").get<std::vector<std::string>>();
    const std::size_t seeds = sj.value("seeds", std::size_t{1});
    if ((taus.empty() && strategies.empty()) || seeds == 0) {
      throw ConfigError("sweep: spec must list taus and/or strategies and a positive seed count");
    }
    if (strategies.empty()) strategies = {base.strategy};
    for (const auto& s : strategies) strategy_from_name(s);

    struct Cell {
      std::string strategy;
      std::optional<double> tau;
      std::string name;
    };
    std::vector<Cell> cells;
    for (const auto& strat : strategies) {
      const Strategy s = strategy_from_name(strat);
      const bool scheduled = s == Strategy::MulDml || s == Strategy::MulDmlMultask ||
                             s == Strategy::CnnOnly || s == Strategy::CnnMultask;
      if (scheduled || taus.empty()) {
        cells.push_back({strat, std::nullopt, strat});
      } else {
        for (double t : taus) {
          char name[64];
          std::snprintf(name, sizeof name, "%s-tau%.4g", strat.c_str(), t);
          cells.push_back({strat, t, name});
        }
      }
    }

    const fs::path out(base.out_dir);
    fs::create_directories(out);
    std::ofstream csv(out / "sweep.csv");
    if (!csv) throw ConfigError("sweep: cannot write results CSV");
    csv << "setting,strategy,tau,seed,status,train_accuracy,val_accuracy\n";

    struct CellStats {
      std::vector<double> val, tr;
    };
    std::vector<CellStats> stats(cells.size());

    for (std::size_t c = 0; c < cells.size(); ++c) {
      for (std::size_t s = 0; s < seeds; ++s) {
        RunConfig cfg = base;
        cfg.strategy = cells[c].strategy;
        if (cells[c].tau) cfg.tau = cells[c].tau;
        cfg.seed = base.seed + s;
        cfg.out_dir = (out / cells[c].name / ("seed-" + std::to_string(cfg.seed))).string();
        csv << cells[c].name << ',' << cells[c].strategy << ','
            << (cells[c].tau ? std::to_string(*cells[c].tau) : std::string()) << ',' << cfg.seed
            << ',';
        try {
          const TrainSetup setup = make_train_setup(cfg);
          auto [train_data, val_data] = build_datasets(cfg);
          const TrainResult result = train(setup, train_data, val_data);
          fs::create_directories(cfg.out_dir);
          write_train_artifacts(cfg, result, train_data, val_data);
          const double tr = evaluate_model(result.model, train_data).overall_accuracy;
          const double va = val_data.size() > 0
                                ? evaluate_model(result.model, val_data).overall_accuracy
                                : tr;
          stats[c].tr.push_back(tr);
          stats[c].val.push_back(va);
          char buf[64];
          std::snprintf(buf, sizeof buf, "ok,%.6f,%.6f", tr, va);
          csv << buf << '\n';
        } catch (const std::exception& e) {
          csv << "failed,," << '\n';
          std::cerr << "sweep cell " << cells[c].name << " seed " << cfg.seed
                    << " failed: " << e.what() << '\n';
        }
      }
    }

    // Table-style mean +/- std summary rows
    const auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0, sd = 0.0;
      if (xs.empty()) return std::pair{mean, sd};
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      for (double x : xs) sd += (x - mean) * (x - mean);
      sd = xs.size() > 1 ? std::sqrt(sd / static_cast<double>(xs.size() - 1)) : 0.0;
      return std::pair{mean, sd};
    };
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto [tm, ts] = mean_std(stats[c].tr);
      const auto [vm, vs] = mean_std(stats[c].val);
      char buf[128];
      std::snprintf(buf, sizeof buf, "summary,%.4f±%.4f,%.4f±%.4f", tm, ts, vm, vs);
      csv << cells[c].name << ',' << cells[c].strategy << ','
          << (cells[c].tau ? std::to_string(*cells[c].tau) : std::string()) << ',' << buf << '\n';
      std::printf("%-28s val %.4f±%.4f (train %.4f±%.4f, %zu seeds)\n", cells[c].name.c_str(), vm,
                  vs, tm, ts, stats[c].val.size());
    }
    std::printf("sweep table in %s\n", (out / "sweep.csv").string().c_str());
    return 0;
  });
}

int cmd_gen_data(const std::optional<std::string>& config_path, const std::string& out_csv,
                 const Overrides& ov) {
  return run_guarded([&]() {
    RunConfig cfg = load_with_overrides(config_path, ov);
    if (cfg.data.csv_path) throw ConfigError("gen-data: config must describe a synthetic set");
    const LabeledDataset ds = dataset_from_sources(cfg);
    export_csv(ds, out_csv, cfg.data.label_column);
    std::printf("wrote %zu samples (%zu classes, %zu features) to %s\n", ds.size(),
                ds.num_classes(), ds.input_dim(), out_csv.c_str());
    return 0;
  });
}

}  // namespace mtml::cli
