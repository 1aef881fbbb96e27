#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qhrl/convergence_log.hpp"
#include "qhrl/generative_model.hpp"
#include "qhrl/mdp.hpp"
#include "qhrl/step_size.hpp"

namespace qhrl {

// Synchronous QH Q-learning. Z is ordinary Q-learning on the exponential
// problem; Q chases (1 - sigma) r + sigma Z, whose fixed point is the optimal
// QH action-value table.

struct QLearnState {
  QTable z;  // estimate of the optimal exponential action values
  QTable q;  // estimate of the optimal QH action values
  std::uint64_t n = 0;

  static QLearnState zeros(std::size_t num_states, std::size_t num_actions);
};

/// One sweep over every (s, a): draw (s', r), then
///   Z <- Z + alpha (r + gamma max_b Z(s', b) - Z)
///   Q <- Q + alpha ((1 - sigma) r + sigma Z - Q)
/// with the same r feeding both and the pre-update Z on the right-hand side.
QLearnState qlearn_sweep(const QLearnState& state, const GenerativeModel& model, const DiscountParams& params,
                         double alpha, Rng& rng);
/// Step size schedule(state.n).
QLearnState qlearn_sweep(const QLearnState& state, const GenerativeModel& model, const DiscountParams& params,
                         const StepSizeSchedule& schedule, Rng& rng);

struct QReference {
  QTable q_gamma;        // optimal exponential action values
  QTable q_sigma_gamma;  // optimal QH action values
};

struct QLearnRun {
  QLearnState state;
  ConvergenceLog log;                 // sweep, err_Z_sup, err_Q_sup
  std::vector<std::size_t> mu_hat;    // greedy on the final Q
  std::vector<std::size_t> pi_hat;    // greedy on the final Z
};

/// Called after every sweep with the new state.
using QLearnObserver = std::function<void(const QLearnState&)>;

QLearnRun run_qlearning(const GenerativeModel& model, const DiscountParams& params, const StepSizeSchedule& schedule,
                        std::uint64_t num_sweeps, std::uint64_t seed,
                        const std::optional<QReference>& reference = std::nullopt,
                        const QLearnObserver& observer = {});

}  // namespace qhrl
