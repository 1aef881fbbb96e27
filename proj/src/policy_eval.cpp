#include "qhrl/policy_eval.hpp"

#include <array>

namespace qhrl {

CoverageError::CoverageError(std::size_t state, std::size_t action)
    : std::invalid_argument("coverage violated at (s=" + std::to_string(state) + ", a=" + std::to_string(action) +
                            "): target plays the action but the behavior policy never does"),
      state_(state),
      action_(action) {}

ImportanceRatios importance_ratios(const StationaryPolicy& behavior, const StationaryPolicy& target) {
  if (behavior.num_states() != target.num_states() || behavior.num_actions() != target.num_actions()) {
    throw std::invalid_argument("behavior and target policies have different shapes");
  }
  ImportanceRatios out;
  out.ratio = Eigen::MatrixXd::Zero(behavior.probs().rows(), behavior.probs().cols());
  for (std::size_t s = 0; s < behavior.num_states(); ++s) {
    for (std::size_t a = 0; a < behavior.num_actions(); ++a) {
      const double b = behavior.prob(s, a);
      const double t = target.prob(s, a);
      if (b > 0.0) {
        const double r = t / b;
        out.ratio(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = r;
        out.max_ratio = std::max(out.max_ratio, r);
      } else if (t > 0.0) {
        throw CoverageError(s, a);
      }
    }
  }
  return out;
}

EvalProblem::EvalProblem(std::shared_ptr<const GenerativeModel> model, StationaryPolicy behavior,
                         OneStepPolicy target, DiscountParams params, StepSizeSchedule schedule,
                         std::uint64_t rng_seed)
    : model_(std::move(model)),
      behavior_(std::move(behavior)),
      target_(std::move(target)),
      params_(params),
      schedule_(schedule),
      rng_seed_(rng_seed) {
  if (!model_) throw std::invalid_argument("evaluation problem needs a generative model");
  if (behavior_.num_states() != model_->num_states() || behavior_.num_actions() != model_->num_actions()) {
    throw std::invalid_argument("behavior policy shape does not match the model");
  }
  tail_ratios_ = importance_ratios(behavior_, target_.tail);
  initial_ratios_ = importance_ratios(behavior_, target_.initial);
}

EvalState EvalState::zeros(std::size_t num_states) {
  const auto S = static_cast<Eigen::Index>(num_states);
  return {ValueVector::Zero(S), ValueVector::Zero(S), 0};
}

EvalSample draw_eval_sample(const EvalProblem& problem, std::size_t s, const ValueVector& w, Rng& rng) {
  const GenerativeModel& model = problem.model();
  const DiscountParams& params = problem.params();
  const std::size_t a = problem.behavior().sample(s, rng);
  const Transition first = model.sample(s, a, rng);
  const std::size_t next_action = problem.target().tail.sample(first.next_state, rng);
  const Transition second = model.sample(first.next_state, next_action, rng);

  const double gamma = params.gamma();
  const double target = first.reward - (1.0 - params.sigma()) * gamma * second.reward +
                        gamma * w(static_cast<Eigen::Index>(first.next_state));
  const auto si = static_cast<Eigen::Index>(s);
  const auto ai = static_cast<Eigen::Index>(a);
  return {a, target, problem.tail_ratios().ratio(si, ai) * target, problem.initial_ratios().ratio(si, ai) * target};
}

EvalState eval_sweep(const EvalState& state, const EvalProblem& problem, Rng& rng) {
  return eval_sweep(state, problem, problem.schedule()(state.n), rng);
}

EvalState eval_sweep(const EvalState& state, const EvalProblem& problem, double alpha, Rng& rng) {
  const std::size_t S = problem.num_states();
  ValueVector tail_target(static_cast<Eigen::Index>(S));
  ValueVector initial_target(static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) {
    const EvalSample sample = draw_eval_sample(problem, s, state.w, rng);
    tail_target(static_cast<Eigen::Index>(s)) = sample.tail_weighted;
    initial_target(static_cast<Eigen::Index>(s)) = sample.initial_weighted;
  }
  EvalState next;
  next.w = state.w + alpha * (tail_target - state.w);
  next.v = state.v + alpha * (initial_target - state.v);
  next.n = state.n + 1;
  return next;
}

EvalReference exact_eval_reference(const TabularMdp& mdp, const DiscountParams& params, const OneStepPolicy& target,
                                   const SolverConfig& cfg) {
  EvalReference ref;
  ref.stationary = eval_stationary_qh(mdp, params, target.tail, cfg);
  ref.one_step = one_step_lookahead(mdp, params, target, ref.stationary);
  return ref;
}

EvalRun run_policy_eval(const EvalProblem& problem, std::uint64_t num_sweeps,
                        const std::optional<EvalReference>& reference) {
  EvalRun run{EvalState::zeros(problem.num_states()), ConvergenceLog({"err_W_l2", "err_V_l2"})};
  Rng rng(problem.rng_seed());
  for (std::uint64_t k = 0; k < num_sweeps; ++k) {
    run.state = eval_sweep(run.state, problem, rng);
    if (reference) {
      const std::array<double, 2> errors{(run.state.w - reference->stationary).norm(),
                                         (run.state.v - reference->one_step).norm()};
      run.log.append(run.state.n, errors);
    }
  }
  return run;
}

}  // namespace qhrl
