#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtml/cli.hpp"
#include "mtml/kernels.hpp"

namespace {

void add_common_flags(CLI::App* cmd, std::optional<std::string>& config, mtml::cli::Overrides& ov,
                      bool with_tau = true) {
  cmd->add_option("--config", config, "JSON run configuration");
  cmd->add_option("--seed", ov.seed, "RNG seed (overrides config)");
  cmd->add_option("--out", ov.out, "output directory (overrides config)");
  cmd->add_option("--strategy", ov.strategy,
                  "training strategy: s-trad-triplet, s-dual-triplet, s-dml, mul-dml-same, "
                  "mul-dml, cnn-only, cnn-multask, mul-dml-multask-same, mul-dml-multask");
  cmd->add_option("--tau-min", ov.tau_min, "threshold schedule start");
  cmd->add_option("--tau-max", ov.tau_max, "threshold schedule end");
  cmd->add_option("--dtau", ov.dtau, "threshold sampling interval");
  if (with_tau) cmd->add_option("--tau", ov.tau, "single margin for single-threshold strategies");
  cmd->add_option("--slice-dim", ov.slice_dim, "embedding slice width");
  cmd->add_option("--num-slices", ov.num_slices, "slice count for wide-network strategies");
  cmd->add_option("--epochs", ov.epochs, "training epochs");
  cmd->add_option("--p", ov.P, "classes per batch (0 = all)");
  cmd->add_option("--k", ov.K, "samples per class per batch");
  cmd->add_option("--csv", ov.csv, "load data from this CSV instead of the synthetic generator");
  cmd->add_option("--label-col", ov.label_col, "label column name for --csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-threshold deep metric learning toolkit"};
  app.require_subcommand(1);

  std::string kernels_choice;
  app.add_option("--kernels", kernels_choice, "force kernel backend: scalar or avx2")
      ->check(CLI::IsMember({"scalar", "avx2"}));

  std::optional<std::string> cfg_train, cfg_eval, cfg_audit, cfg_sweep, cfg_gen;
  mtml::cli::Overrides ov_train, ov_eval, ov_audit, ov_sweep, ov_gen;
  std::string checkpoint_eval, checkpoint_audit, sweep_spec, gen_out = "dataset.csv";
  double audit_tau = 0.4;

  CLI::App* train = app.add_subcommand("train", "train a strategy and write run artifacts");
  add_common_flags(train, cfg_train, ov_train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint and export analyses");
  eval->add_option("--checkpoint", checkpoint_eval, "model checkpoint JSON")->required();
  add_common_flags(eval, cfg_eval, ov_eval);

  CLI::App* audit = app.add_subcommand("audit", "count incomplete judgements for a checkpoint");
  audit->add_option("--checkpoint", checkpoint_audit, "model checkpoint JSON")->required();
  audit->add_option("--tau", audit_tau, "margin to audit at")->required();
  add_common_flags(audit, cfg_audit, ov_audit, /*with_tau=*/false);

  CLI::App* sweep = app.add_subcommand("sweep", "run a threshold/strategy sweep");
  sweep->add_option("--sweep", sweep_spec, "sweep spec JSON (taus, strategies, seeds)")
      ->required();
  add_common_flags(sweep, cfg_sweep, ov_sweep);

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  gen->add_option("--out-csv", gen_out, "destination CSV path");
  add_common_flags(gen, cfg_gen, ov_gen);

  CLI11_PARSE(app, argc, argv);

  if (!kernels_choice.empty()) {
    mtml::kernels::set_backend(kernels_choice == "avx2" ? mtml::kernels::Backend::avx2
                                                        : mtml::kernels::Backend::scalar);
  }

  if (train->parsed()) return mtml::cli::cmd_train(cfg_train, ov_train);
  if (eval->parsed()) return mtml::cli::cmd_eval(checkpoint_eval, cfg_eval, ov_eval);
  if (audit->parsed()) return mtml::cli::cmd_audit(checkpoint_audit, cfg_audit, audit_tau, ov_audit);
  if (sweep->parsed()) return mtml::cli::cmd_sweep(cfg_sweep, sweep_spec, ov_sweep);
  if (gen->parsed()) return mtml::cli::cmd_gen_data(cfg_gen, gen_out, ov_gen);
  return 1;
}
