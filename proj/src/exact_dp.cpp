#include "qhrl/exact_dp.hpp"

#include <cmath>
#include <sstream>

namespace qhrl {

namespace {

double sup_norm(const ValueVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Row-wise expectation of a state-action table under a policy.
ValueVector average(const StationaryPolicy& policy, const QTable& table) {
  return policy.probs().cwiseProduct(table).rowwise().sum();
}

// r(s,a) + sum_s' P(s'|s,a) ( -(1-sigma) gamma r_pi(s') + gamma w(s') ).
QTable lookahead_table(const TabularMdp& mdp, const DiscountParams& params, const StationaryPolicy& pi,
                       const ValueVector& w) {
  const double gamma = params.gamma();
  const ValueVector continuation = -(1.0 - params.sigma()) * gamma * policy_reward(mdp, pi) + gamma * w;
  return mdp.expected_reward() + mdp.expected_next(continuation);
}

void check_length(const TabularMdp& mdp, const ValueVector& v) {
  if (static_cast<std::size_t>(v.size()) != mdp.num_states()) {
    throw std::invalid_argument("value vector has length " + std::to_string(v.size()) + ", expected " +
                                std::to_string(mdp.num_states()));
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("solver max_iterations must be at least 1");
}

ConvergenceError::ConvergenceError(double residual, std::size_t iterations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "no convergence after " << iterations << " iterations (last residual " << residual << ")";
        return os.str();
      }()),
      residual_(residual),
      iterations_(iterations) {}

ValueVector policy_reward(const TabularMdp& mdp, const StationaryPolicy& pi) {
  check_compatible(mdp, pi);
  return average(pi, mdp.expected_reward());
}

Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const StationaryPolicy& pi) {
  check_compatible(mdp, pi);
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, S);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      out.row(s) += pi.probs()(s, a) * mdp.transitions().row(s * A + a);
    }
  }
  return out;
}

ExpSolution exp_value_iteration(const TabularMdp& mdp, double gamma, const SolverConfig& cfg) {
  cfg.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");

  const double threshold = cfg.tolerance * (1.0 - gamma);
  ValueVector v = ValueVector::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  double residual = 0.0;
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    QTable q = mdp.expected_reward() + gamma * mdp.expected_next(v);
    ValueVector next = q.rowwise().maxCoeff();
    residual = sup_norm(next - v);
    v = std::move(next);
    if (residual <= threshold) {
      return {v, mdp.expected_reward() + gamma * mdp.expected_next(v), k};
    }
  }
  throw ConvergenceError(residual, cfg.max_iterations);
}

ValueVector qh_bellman_operator(const TabularMdp& mdp, const DiscountParams& params, const StationaryPolicy& pi,
                                const ValueVector& v) {
  check_length(mdp, v);
  return average(pi, lookahead_table(mdp, params, pi, v));
}

ValueVector eval_stationary_qh(const TabularMdp& mdp, const DiscountParams& params, const StationaryPolicy& pi,
                               const SolverConfig& cfg, EvalBackend backend) {
  cfg.validate();
  check_compatible(mdp, pi);
  const double gamma = params.gamma();

  if (backend == EvalBackend::linear_solve) {
    const Eigen::MatrixXd p_pi = policy_transition(mdp, pi);
    const ValueVector r_pi = policy_reward(mdp, pi);
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * p_pi;
    const ValueVector rhs = r_pi - (1.0 - params.sigma()) * gamma * (p_pi * r_pi);
    return system.partialPivLu().solve(rhs);
  }

  // ||T v_k - v_k|| <= tol (1-gamma) bounds the error of T v_k by gamma * tol.
  const double threshold = cfg.tolerance * (1.0 - gamma);
  ValueVector v = ValueVector::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  double residual = 0.0;
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    ValueVector next = qh_bellman_operator(mdp, params, pi, v);
    residual = sup_norm(next - v);
    v = std::move(next);
    if (residual <= threshold) return v;
  }
  throw ConvergenceError(residual, cfg.max_iterations);
}

ValueVector one_step_lookahead(const TabularMdp& mdp, const DiscountParams& params, const OneStepPolicy& policy,
                               const ValueVector& tail_value) {
  check_compatible(mdp, policy.initial);
  check_length(mdp, tail_value);
  return average(policy.initial, lookahead_table(mdp, params, policy.tail, tail_value));
}

ValueVector eval_one_step_qh(const TabularMdp& mdp, const DiscountParams& params, const OneStepPolicy& policy,
                             const SolverConfig& cfg) {
  const ValueVector w = eval_stationary_qh(mdp, params, policy.tail, cfg);
  return one_step_lookahead(mdp, params, policy, w);
}

QTable qh_action_values(const TabularMdp& mdp, const DiscountParams& params, const StationaryPolicy& pi,
                        const ValueVector& tail_value) {
  check_length(mdp, tail_value);
  return lookahead_table(mdp, params, pi, tail_value);
}

ValueVector qh_value_from_exp_tail(const TabularMdp& mdp, const DiscountParams& params, const StationaryPolicy& mu,
                                   const ValueVector& v_exp_tail) {
  check_compatible(mdp, mu);
  check_length(mdp, v_exp_tail);
  const QTable q = mdp.expected_reward() + (params.sigma() * params.gamma()) * mdp.expected_next(v_exp_tail);
  return average(mu, q);
}

OneStepPolicy QhOptimalSolution::policy() const {
  const auto A = static_cast<std::size_t>(q_gamma.cols());
  return {StationaryPolicy::deterministic(mu_star, A), StationaryPolicy::deterministic(pi_star, A)};
}

QhOptimalSolution optimal_qh_solution(const TabularMdp& mdp, const DiscountParams& params, const SolverConfig& cfg) {
  ExpSolution exp = exp_value_iteration(mdp, params.gamma(), cfg);

  QhOptimalSolution out;
  const double sigma = params.sigma();
  // Lookahead form first, then the linear relation to the exponential values.
  out.q_sigma_gamma = mdp.expected_reward() + (sigma * params.gamma()) * mdp.expected_next(exp.values);
  const QTable linear_form = (1.0 - sigma) * mdp.expected_reward() + sigma * exp.action_values;

  out.form_mismatch = (out.q_sigma_gamma - linear_form).cwiseAbs().maxCoeff();
  if (out.form_mismatch > kFormAgreementTolerance) {
    std::ostringstream os;
    os << "QH action-value constructions disagree by " << out.form_mismatch;
    throw std::logic_error(os.str());
  }

  out.q_gamma = std::move(exp.action_values);
  out.v_gamma = std::move(exp.values);
  out.iterations = exp.iterations;
  out.pi_star = greedy_actions(out.q_gamma);
  out.mu_star = greedy_actions(out.q_sigma_gamma);
  out.v_star = out.q_sigma_gamma.rowwise().maxCoeff();
  return out;
}

}  // namespace qhrl
