#include "qhrl/qlearning.hpp"

#include <array>

namespace qhrl {

QLearnState QLearnState::zeros(std::size_t num_states, std::size_t num_actions) {
  const auto S = static_cast<Eigen::Index>(num_states);
  const auto A = static_cast<Eigen::Index>(num_actions);
  return {QTable::Zero(S, A), QTable::Zero(S, A), 0};
}

QLearnState qlearn_sweep(const QLearnState& state, const GenerativeModel& model, const DiscountParams& params,
                         const StepSizeSchedule& schedule, Rng& rng) {
  return qlearn_sweep(state, model, params, schedule(state.n), rng);
}

QLearnState qlearn_sweep(const QLearnState& state, const GenerativeModel& model, const DiscountParams& params,
                         double alpha, Rng& rng) {
  const auto S = static_cast<Eigen::Index>(model.num_states());
  const auto A = static_cast<Eigen::Index>(model.num_actions());
  const ValueVector best_next = state.z.rowwise().maxCoeff();

  QTable reward(S, A);
  QTable next_value(S, A);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      const Transition t = model.sample(static_cast<std::size_t>(s), static_cast<std::size_t>(a), rng);
      reward(s, a) = t.reward;
      next_value(s, a) = best_next(static_cast<Eigen::Index>(t.next_state));
    }
  }

  const double gamma = params.gamma();
  const double sigma = params.sigma();
  QLearnState next;
  next.z = state.z + alpha * (reward + gamma * next_value - state.z);
  next.q = state.q + alpha * ((1.0 - sigma) * reward + sigma * state.z - state.q);
  next.n = state.n + 1;
  return next;
}

QLearnRun run_qlearning(const GenerativeModel& model, const DiscountParams& params, const StepSizeSchedule& schedule,
                        std::uint64_t num_sweeps, std::uint64_t seed, const std::optional<QReference>& reference,
                        const QLearnObserver& observer) {
  QLearnRun run{QLearnState::zeros(model.num_states(), model.num_actions()),
                ConvergenceLog({"err_Z_sup", "err_Q_sup"}),
                {},
                {}};
  Rng rng(seed);
  for (std::uint64_t k = 0; k < num_sweeps; ++k) {
    run.state = qlearn_sweep(run.state, model, params, schedule, rng);
    if (reference) {
      const std::array<double, 2> errors{(run.state.z - reference->q_gamma).cwiseAbs().maxCoeff(),
                                         (run.state.q - reference->q_sigma_gamma).cwiseAbs().maxCoeff()};
      run.log.append(run.state.n, errors);
    }
    if (observer) observer(run.state);
  }
  run.mu_hat = greedy_actions(run.state.q);
  run.pi_hat = greedy_actions(run.state.z);
  return run;
}

}  // namespace qhrl
