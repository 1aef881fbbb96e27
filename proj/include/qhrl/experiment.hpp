#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qhrl/environments.hpp"
#include "qhrl/exact_dp.hpp"
#include "qhrl/mdp.hpp"
#include "qhrl/mdp_io.hpp"
#include "qhrl/step_size.hpp"

namespace qhrl {

/// Failure classes reported by the command-line tool, one exit code each.
enum class ErrorCategory { internal = 1, config = 2, io = 3, solver = 4, coverage = 5 };

const char* category_name(ErrorCategory category);

using EnvironmentSource = std::variant<InventoryParams, RandomMdpSpec, std::filesystem::path>;

struct ExperimentConfig {
  EnvironmentSource environment = InventoryParams{};
  DiscountParams discount{0.3, 0.9};
  SolverConfig solver{};
  StepSizeSchedule schedule{};
  std::uint64_t num_sweeps = 200000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// One of kScenarioNames, or empty when explicit policies are given.
  std::string scenario;
  /// Raw {behavior, initial, tail} block; resolved once the MDP size is known.
  std::optional<nlohmann::json> explicit_policies;
  std::filesystem::path output_dir = "results";
  std::string output_prefix;
};

inline constexpr std::array<const char*, 3> kScenarioNames{"fully-off-policy", "off-policy-initial",
                                                           "off-policy-stationary"};

/// Throws SchemaError naming the offending field. Relative mdp_file paths
/// resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct Environment {
  TabularMdp mdp;
  std::shared_ptr<const GenerativeModel> model;
  /// The inventory instance with the published parameters and sigma = 0.3,
  /// gamma = 0.9, for which reference action values are embedded below.
  bool is_reference_instance = false;
};

Environment build_environment(const ExperimentConfig& config);

/// Published action values of the reference inventory instance, printed to
/// two decimals (rows: states 0..2, columns: actions 0..2).
inline constexpr double kReferenceQSigmaGamma[3][3] = {
    {9.31, 11.38, 10.55}, {16.38, 15.55, 10.55}, {20.55, 15.55, 10.55}};
inline constexpr double kReferenceQGamma[3][3] = {
    {31.05, 33.75, 34.50}, {38.75, 39.50, 34.50}, {44.50, 39.50, 34.50}};
inline constexpr std::array<std::size_t, 3> kReferenceMuStar{1, 0, 0};
inline constexpr std::array<std::size_t, 3> kReferencePiStar{2, 1, 0};
/// Cells are compared at the printed resolution.
inline constexpr double kReferenceTolerance = 0.01;

struct ReferenceComparison {
  double max_deviation = 0.0;
  std::size_t flagged_cells = 0;  // cells off by more than kReferenceTolerance
};

/// Deviation of both tables from the embedded reference; a tiny slack on top
/// of kReferenceTolerance absorbs decimal representation error at the boundary.
ReferenceComparison compare_with_reference(const QTable& q_sigma_gamma, const QTable& q_gamma);

struct SolveReport {
  QhOptimalSolution solution;
  std::optional<ReferenceComparison> reference;
};

struct QLearnSeedResult {
  std::uint64_t seed = 0;
  std::vector<std::size_t> mu_hat;
  std::vector<std::size_t> pi_hat;
  bool policies_match = false;
  double final_err_z_sup = 0.0;
  double final_err_q_sup = 0.0;
};

struct QLearnReport {
  QhOptimalSolution exact;
  std::vector<QLearnSeedResult> seeds;
};

struct EvalSeedResult {
  std::uint64_t seed = 0;
  double final_err_w_l2 = 0.0;
  double final_err_v_l2 = 0.0;
};

struct EvalReport {
  std::string scenario;
  ValueVector true_stationary;
  ValueVector true_one_step;
  std::vector<EvalSeedResult> seeds;
};

/// Exact two-stage solve. Writes q_gamma.json, q_sigma_gamma.json,
/// policy.json, values.json and mdp.json into the output directory.
SolveReport cmd_solve_exact(const ExperimentConfig& config, std::ostream& out);

/// QH Q-learning per seed. Writes <prefix>qlearn_seed<k>.csv, the final
/// tables, and <prefix>qlearn_summary.json.
QLearnReport cmd_qlearn(const ExperimentConfig& config, std::ostream& out);

/// Off-policy evaluation per seed for a scenario preset or explicit policies.
/// Writes <prefix>eval_<scenario>_seed<k>.csv and <prefix>eval_summary.json.
/// Throws CoverageError before any sweep if the behavior policy does not
/// cover the targets.
EvalReport cmd_eval_policy(const ExperimentConfig& config, std::ostream& out);

}  // namespace qhrl
