#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qhrl/mdp.hpp"

namespace qhrl {

/// Stopping rule for the fixed-point iterations: the returned value is within
/// `tolerance` of the true fixed point in sup-norm.
struct SolverConfig {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;

  /// Throws std::invalid_argument unless tolerance > 0 and max_iterations >= 1.
  void validate() const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, std::size_t iterations);
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Policy-averaged quantities: r_pi(s) = sum_a pi(a|s) r(s,a) and
/// P_pi(s,s') = sum_a pi(a|s) P(s'|s,a).
ValueVector policy_reward(const TabularMdp& mdp, const StationaryPolicy& pi);
Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const StationaryPolicy& pi);

struct ExpSolution {
  ValueVector values;    // optimal exponential value function
  QTable action_values;  // r + gamma * P V
  std::size_t iterations = 0;
};

/// Value iteration with the standard Bellman optimality operator, started
/// from zero. Throws ConvergenceError carrying the last residual.
ExpSolution exp_value_iteration(const TabularMdp& mdp, double gamma, const SolverConfig& cfg = {});

/// (T v)(s) = sum_a pi(a|s) [ r(s,a) + sum_s' P(s'|s,a) ( -(1-sigma) gamma r_pi(s') + gamma v(s') ) ].
/// A gamma-contraction whose fixed point is the QH value of (pi, pi, ...).
ValueVector qh_bellman_operator(const TabularMdp& mdp, const DiscountParams& params,
                                const StationaryPolicy& pi, const ValueVector& v);

enum class EvalBackend { fixed_point, linear_solve };

/// QH value of the stationary policy (pi, pi, ...).
///
/// `fixed_point` iterates qh_bellman_operator from zero until successive
/// iterates differ by at most tolerance * (1 - gamma); `linear_solve` solves
/// (I - gamma P_pi) V = r_pi - (1 - sigma) gamma P_pi r_pi by LU.
ValueVector eval_stationary_qh(const TabularMdp& mdp, const DiscountParams& params,
                               const StationaryPolicy& pi, const SolverConfig& cfg = {},
                               EvalBackend backend = EvalBackend::fixed_point);

/// One-step lookahead from the stationary value w of the tail policy:
/// V(s) = sum_a mu(a|s) [ r(s,a) + sum_s' P(s'|s,a) ( -(1-sigma) gamma r_pi(s') + gamma w(s') ) ].
ValueVector one_step_lookahead(const TabularMdp& mdp, const DiscountParams& params,
                               const OneStepPolicy& policy, const ValueVector& tail_value);

/// QH value of (mu, pi, pi, ...).
ValueVector eval_one_step_qh(const TabularMdp& mdp, const DiscountParams& params,
                             const OneStepPolicy& policy, const SolverConfig& cfg = {});

/// QH action values of the tail policy pi from its stationary QH value w:
/// Q(s,a) = r(s,a) + sum_s' P(s'|s,a) ( -(1-sigma) gamma r_pi(s') + gamma w(s') ).
QTable qh_action_values(const TabularMdp& mdp, const DiscountParams& params,
                        const StationaryPolicy& pi, const ValueVector& tail_value);

/// V(s) = sum_a mu(a|s) [ r(s,a) + sigma gamma sum_s' P(s'|s,a) v_exp_tail(s') ],
/// the QH value of a policy whose play from step 1 on has exponential value
/// v_exp_tail.
ValueVector qh_value_from_exp_tail(const TabularMdp& mdp, const DiscountParams& params,
                                   const StationaryPolicy& mu, const ValueVector& v_exp_tail);

struct QhOptimalSolution {
  std::vector<std::size_t> mu_star;  // greedy on q_sigma_gamma
  std::vector<std::size_t> pi_star;  // greedy on q_gamma
  QTable q_sigma_gamma;              // r + sigma gamma P V_gamma
  QTable q_gamma;                    // optimal exponential action values
  ValueVector v_star;                // row maxima of q_sigma_gamma
  ValueVector v_gamma;               // optimal exponential values
  double form_mismatch = 0.0;        // max |(r + sigma gamma P V) - ((1-sigma) r + sigma Q_gamma)|
  std::size_t iterations = 0;

  OneStepPolicy policy() const;
};

/// Largest tolerated form_mismatch.
inline constexpr double kFormAgreementTolerance = 1e-9;

/// Two-stage solve: exponential value iteration for the tail, then greedy
/// extraction of the first-step policy. Throws std::logic_error if the two
/// constructions of the QH action values disagree by more than
/// kFormAgreementTolerance.
QhOptimalSolution optimal_qh_solution(const TabularMdp& mdp, const DiscountParams& params,
                                      const SolverConfig& cfg = {});

}  // namespace qhrl
