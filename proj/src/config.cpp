#include "mtml/config.hpp"

#include <fstream>
#include <set>

namespace mtml {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

ClusterSpec parse_synth(const nlohmann::json& j) {
  reject_unknown(j, {"classes", "input_dim", "samples_per_class", "center_radius", "scales"},
                 "data.synth");
  ClusterSpec spec;
  spec.num_classes = j.value("classes", spec.num_classes);
  spec.input_dim = j.value("input_dim", spec.input_dim);
  spec.samples_per_class = j.value("samples_per_class", spec.samples_per_class);
  spec.center_radius = j.value("center_radius", spec.center_radius);
  if (j.contains("scales")) {
    spec.per_class_scales = j.at("scales").get<std::vector<double>>();
  } else if (spec.per_class_scales.size() != spec.num_classes) {
    // default scales cycle when the class count differs from the default 7
    const auto base = spec.per_class_scales;
    spec.per_class_scales.clear();
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      spec.per_class_scales.push_back(base[c % base.size()]);
    }
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  try {
    reject_unknown(j,
                   {"strategy", "schedule", "tau", "num_slices", "slice_dim", "backbone_widths",
                    "optimizer", "batch", "data", "seed", "out"},
                   "top level");
    RunConfig cfg;
    cfg.strategy = j.value("strategy", cfg.strategy);
    strategy_from_name(cfg.strategy);  // validate early
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      reject_unknown(s, {"tau_min", "tau_max", "dtau"}, "schedule");
      cfg.tau_min = s.at("tau_min").get<double>();
      cfg.tau_max = s.at("tau_max").get<double>();
      cfg.dtau = s.at("dtau").get<double>();
    }
    if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
    cfg.num_slices = j.value("num_slices", cfg.num_slices);
    cfg.slice_dim = j.value("slice_dim", cfg.slice_dim);
    if (j.contains("backbone_widths")) {
      cfg.backbone_widths = j.at("backbone_widths").get<std::vector<std::size_t>>();
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      reject_unknown(o, {"lr", "beta1", "beta2", "epsilon", "epochs", "dropout"}, "optimizer");
      cfg.optim.lr = o.value("lr", cfg.optim.lr);
      cfg.optim.beta1 = o.value("beta1", cfg.optim.beta1);
      cfg.optim.beta2 = o.value("beta2", cfg.optim.beta2);
      cfg.optim.epsilon = o.value("epsilon", cfg.optim.epsilon);
      cfg.optim.epochs = o.value("epochs", cfg.optim.epochs);
      cfg.optim.dropout = o.value("dropout", cfg.optim.dropout);
    }
    if (j.contains("batch")) {
      const auto& b = j.at("batch");
      reject_unknown(b, {"p", "k"}, "batch");
      cfg.batch.P = b.value("p", cfg.batch.P);
      cfg.batch.K = b.value("k", cfg.batch.K);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d, {"synth", "csv", "val_fraction"}, "data");
      if (d.contains("synth") && d.contains("csv")) {
        throw ConfigError("config: data.synth and data.csv are mutually exclusive");
      }
      if (d.contains("synth")) {
        cfg.data.synth = parse_synth(d.at("synth"));
      }
      if (d.contains("csv")) {
        const auto& c = d.at("csv");
        reject_unknown(c, {"path", "label_column"}, "data.csv");
        cfg.data.csv_path = c.at("path").get<std::string>();
        cfg.data.label_column = c.value("label_column", cfg.data.label_column);
        cfg.data.synth.reset();
      }
      cfg.data.val_fraction = d.value("val_fraction", cfg.data.val_fraction);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out", cfg.out_dir);
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["strategy"] = cfg.strategy;
  if (cfg.tau_min && cfg.tau_max && cfg.dtau) {
    j["schedule"] = {{"tau_min", *cfg.tau_min}, {"tau_max", *cfg.tau_max}, {"dtau", *cfg.dtau}};
  }
  if (cfg.tau) j["tau"] = *cfg.tau;
  j["num_slices"] = cfg.num_slices;
  j["slice_dim"] = cfg.slice_dim;
  j["backbone_widths"] = cfg.backbone_widths;
  j["optimizer"] = {{"lr", cfg.optim.lr},           {"beta1", cfg.optim.beta1},
                    {"beta2", cfg.optim.beta2},     {"epsilon", cfg.optim.epsilon},
                    {"epochs", cfg.optim.epochs},   {"dropout", cfg.optim.dropout}};
  j["batch"] = {{"p", cfg.batch.P}, {"k", cfg.batch.K}};
  nlohmann::json data;
  if (cfg.data.csv_path) {
    data["csv"] = {{"path", *cfg.data.csv_path}, {"label_column", cfg.data.label_column}};
  } else {
    const ClusterSpec spec = cfg.data.synth.value_or(ClusterSpec{});
    data["synth"] = {{"classes", spec.num_classes},
                     {"input_dim", spec.input_dim},
                     {"samples_per_class", spec.samples_per_class},
                     {"center_radius", spec.center_radius},
                     {"scales", spec.per_class_scales}};
  }
  data["val_fraction"] = cfg.data.val_fraction;
  j["data"] = data;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  return j;
}

std::pair<LabeledDataset, LabeledDataset> build_datasets(const RunConfig& cfg) {
  Rng master(cfg.seed);
  LabeledDataset full;
  if (cfg.data.csv_path) {
    full = load_csv(*cfg.data.csv_path, cfg.data.label_column);
  } else {
    Rng gen = master.fork(0xD);
    full = synth_clusters(cfg.data.synth.value_or(ClusterSpec{}), gen);
  }
  if (cfg.data.val_fraction <= 0.0) {
    LabeledDataset empty_val;
    empty_val.features = Matrix(0, full.input_dim());
    empty_val.class_names = full.class_names;
    empty_val.split_tag = "val";
    return {std::move(full), std::move(empty_val)};
  }
  Rng splitter = master.fork(0xE);
  return split(full, 1.0 - cfg.data.val_fraction, cfg.data.val_fraction, splitter);
}

StrategyConfig resolve_run_strategy(const RunConfig& cfg) {
  std::optional<ThresholdSchedule> schedule;
  if (cfg.tau_min && cfg.tau_max && cfg.dtau) {
    schedule = sample_thresholds(*cfg.tau_min, *cfg.tau_max, *cfg.dtau);
  }
  return resolve_strategy(strategy_from_name(cfg.strategy), schedule, cfg.tau, cfg.slice_dim,
                          cfg.num_slices);
}

TrainSetup make_train_setup(const RunConfig& cfg) {
  TrainSetup setup;
  setup.strategy = resolve_run_strategy(cfg);
  setup.backbone_widths = cfg.backbone_widths;
  setup.optim = cfg.optim;
  setup.batch = cfg.batch;
  setup.seed = cfg.seed;
  return setup;
}

}  // namespace mtml
