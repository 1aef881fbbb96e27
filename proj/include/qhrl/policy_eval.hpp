#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>

#include "qhrl/convergence_log.hpp"
#include "qhrl/exact_dp.hpp"
#include "qhrl/generative_model.hpp"
#include "qhrl/mdp.hpp"
#include "qhrl/step_size.hpp"

namespace qhrl {

// Model-free, off-policy evaluation of a one-step policy (mu, pi, pi, ...)
// under QH discounting. Two iterates run side by side: W tracks the QH value
// of (pi, pi, ...) and V the QH value of (mu, pi, pi, ...). Data comes from a
// behavior policy nu; importance ratios pi/nu and mu/nu correct the targets.

/// A target action the behavior policy never takes.
class CoverageError : public std::invalid_argument {
 public:
  CoverageError(std::size_t state, std::size_t action);
  std::size_t state() const { return state_; }
  std::size_t action() const { return action_; }

 private:
  std::size_t state_;
  std::size_t action_;
};

struct ImportanceRatios {
  Eigen::MatrixXd ratio;  // target(a|s) / behavior(a|s); 0 where behavior(a|s) = 0
  double max_ratio = 0.0;
};

/// Throws CoverageError naming the first (s, a) with target mass but no
/// behavior mass.
ImportanceRatios importance_ratios(const StationaryPolicy& behavior, const StationaryPolicy& target);

class EvalProblem {
 public:
  /// Validates shapes and coverage of both target components.
  EvalProblem(std::shared_ptr<const GenerativeModel> model, StationaryPolicy behavior, OneStepPolicy target,
              DiscountParams params, StepSizeSchedule schedule = {}, std::uint64_t rng_seed = 0);

  const GenerativeModel& model() const { return *model_; }
  const StationaryPolicy& behavior() const { return behavior_; }
  const OneStepPolicy& target() const { return target_; }
  const DiscountParams& params() const { return params_; }
  const StepSizeSchedule& schedule() const { return schedule_; }
  std::uint64_t rng_seed() const { return rng_seed_; }

  /// pi / nu, bounded by tail_ratios().max_ratio.
  const ImportanceRatios& tail_ratios() const { return tail_ratios_; }
  /// mu / nu.
  const ImportanceRatios& initial_ratios() const { return initial_ratios_; }

  std::size_t num_states() const { return model_->num_states(); }

 private:
  std::shared_ptr<const GenerativeModel> model_;
  StationaryPolicy behavior_;
  OneStepPolicy target_;
  DiscountParams params_;
  StepSizeSchedule schedule_;
  std::uint64_t rng_seed_;
  ImportanceRatios tail_ratios_;
  ImportanceRatios initial_ratios_;
};

struct EvalState {
  ValueVector w;  // estimate of the stationary QH value
  ValueVector v;  // estimate of the one-step QH value
  std::uint64_t n = 0;

  static EvalState zeros(std::size_t num_states);
};

/// One sampled target at state s: a ~ nu, (s', r) from the model, a' ~ pi(s'),
/// r' from the model, then target = r - (1-sigma) gamma r' + gamma w(s').
struct EvalSample {
  std::size_t action;
  double target;
  double tail_weighted;     // (pi(a|s) / nu(a|s)) * target
  double initial_weighted;  // (mu(a|s) / nu(a|s)) * target
};

EvalSample draw_eval_sample(const EvalProblem& problem, std::size_t s, const ValueVector& w, Rng& rng);

/// One synchronous sweep over all states with step size schedule(state.n).
EvalState eval_sweep(const EvalState& state, const EvalProblem& problem, Rng& rng);
/// Same with an explicit step size.
EvalState eval_sweep(const EvalState& state, const EvalProblem& problem, double alpha, Rng& rng);

/// True values to measure against.
struct EvalReference {
  ValueVector stationary;
  ValueVector one_step;
};

EvalReference exact_eval_reference(const TabularMdp& mdp, const DiscountParams& params, const OneStepPolicy& target,
                                   const SolverConfig& cfg = {});

struct EvalRun {
  EvalState state;
  ConvergenceLog log;  // sweep, err_W_l2, err_V_l2
};

/// Runs num_sweeps sweeps from zero with an Rng seeded by problem.rng_seed().
/// With a reference, logs the L2 errors of W and V after every sweep.
EvalRun run_policy_eval(const EvalProblem& problem, std::uint64_t num_sweeps,
                        const std::optional<EvalReference>& reference = std::nullopt);

}  // namespace qhrl
