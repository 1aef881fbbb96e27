// Command-line driver for the QH discounting experiments.
//
//   qhrl solve-exact --config configs/inventory.json --out results/
//   qhrl qlearn      --config configs/inventory.json --out results/
//   qhrl eval-policy --config configs/eval_fully_off_policy.json --out results/
//
// On failure prints `error[<category>]: <message>` to stderr and exits with
// the category's code (config=2, io=3, solver=4, coverage=5, internal=1).

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "qhrl/exact_dp.hpp"
#include "qhrl/experiment.hpp"
#include "qhrl/mdp_io.hpp"
#include "qhrl/policy_eval.hpp"

namespace {

int fail(qhrl::ErrorCategory category, const std::string& message) {
  std::cerr << "error[" << qhrl::category_name(category) << "]: " << message << '\n';
  return static_cast<int>(category);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-hyperbolic discounting: exact solvers, QH Q-learning and off-policy evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--out", out_dir, "Output directory (overrides output.directory)");
    cmd->add_option("--seed-override", seed_override, "Run a single seed instead of the configured list");
  };
  auto* solve = app.add_subcommand("solve-exact", "Exact two-stage solve and reference-table comparison");
  auto* qlearn = app.add_subcommand("qlearn", "QH Q-learning per seed with convergence logs");
  auto* eval = app.add_subcommand("eval-policy", "Off-policy evaluation of a one-step policy per seed");
  for (auto* cmd : {solve, qlearn, eval}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(qhrl::ErrorCategory::config);
  }

  using qhrl::ErrorCategory;
  try {
    qhrl::ExperimentConfig config = qhrl::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed_override) config.seeds = {*seed_override};

    if (solve->parsed()) {
      qhrl::cmd_solve_exact(config, std::cout);
    } else if (qlearn->parsed()) {
      qhrl::cmd_qlearn(config, std::cout);
    } else {
      qhrl::cmd_eval_policy(config, std::cout);
    }
  } catch (const qhrl::CoverageError& e) {
    return fail(ErrorCategory::coverage, e.what());
  } catch (const qhrl::ConvergenceError& e) {
    return fail(ErrorCategory::solver, e.what());
  } catch (const qhrl::SchemaError& e) {
    return fail(ErrorCategory::config, e.what());
  } catch (const qhrl::InvalidMdp& e) {
    return fail(ErrorCategory::config, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(ErrorCategory::config, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(ErrorCategory::io, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ErrorCategory::io, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCategory::internal, e.what());
  }
  return 0;
}
