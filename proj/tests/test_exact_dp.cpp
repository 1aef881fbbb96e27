#include <cmath>

#include "doctest.h"
#include "qhrl/environments.hpp"
#include "qhrl/exact_dp.hpp"

using namespace qhrl;

namespace {

TabularMdp single_state(double reward) {
  MdpData d;
  d.num_states = 1;
  d.num_actions = 1;
  d.transition = {1.0};
  d.expected_reward = {reward};
  d.reward_bound = std::abs(reward);
  return TabularMdp(d);
}

TabularMdp random5(std::uint64_t seed) {
  RandomMdpSpec spec;
  spec.num_states = 5;
  spec.num_actions = 3;
  spec.reward_low = -2.0;
  spec.reward_high = 3.0;
  spec.seed = seed;
  return random_mdp(spec);
}

double sup(const ValueVector& v) { return v.cwiseAbs().maxCoeff(); }

// Exponential policy evaluation by explicit loops and a dense solve; shares no
// code with the library's fixed-point path.
ValueVector exp_policy_values(const TabularMdp& mdp, double gamma, const StationaryPolicy& pi) {
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
  ValueVector r = ValueVector::Zero(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const double w = pi.prob(static_cast<std::size_t>(s), a);
      r(s) += w * mdp.reward(static_cast<std::size_t>(s), a);
      for (Eigen::Index n = 0; n < S; ++n) {
        m(s, n) -= gamma * w * mdp.prob(static_cast<std::size_t>(s), a, static_cast<std::size_t>(n));
      }
    }
  }
  return m.fullPivLu().solve(r);
}

// r_mu + gamma P_mu v by explicit loops.
ValueVector exp_one_step(const TabularMdp& mdp, double gamma, const StationaryPolicy& mu, const ValueVector& v) {
  ValueVector out = ValueVector::Zero(static_cast<Eigen::Index>(mdp.num_states()));
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double next = 0.0;
      for (std::size_t n = 0; n < mdp.num_states(); ++n) next += mdp.prob(s, a, n) * v(static_cast<Eigen::Index>(n));
      out(static_cast<Eigen::Index>(s)) += mu.prob(s, a) * (mdp.reward(s, a) + gamma * next);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("SolverConfig validation") {
  CHECK_THROWS_AS((SolverConfig{0.0, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SolverConfig{1e-6, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW(SolverConfig{}.validate());
}

TEST_CASE("exp_value_iteration") {
  SUBCASE("inventory instance matches the published exponential table") {
    const auto sol = exp_value_iteration(inventory_mdp(InventoryParams{}), 0.9);
    CHECK(std::abs(sol.action_values(2, 0) - 44.50) <= 0.01);
    CHECK(std::abs(sol.action_values(0, 1) - 33.75) <= 0.01);
    CHECK(greedy_actions(sol.action_values) == std::vector<std::size_t>{2, 1, 0});
  }
  SUBCASE("gamma = 0 gives the reward table") {
    const TabularMdp mdp = random5(3);
    const auto sol = exp_value_iteration(mdp, 0.0);
    CHECK((sol.action_values - mdp.expected_reward()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("geometric series") {
    const auto sol = exp_value_iteration(single_state(1.0), 0.9);
    CHECK(std::abs(sol.values(0) - 10.0) <= 1e-10);
  }
  SUBCASE("error bound holds") {
    const TabularMdp mdp = random5(4);
    SolverConfig loose{1e-3, 100000};
    const auto coarse = exp_value_iteration(mdp, 0.95, loose);
    const auto fine = exp_value_iteration(mdp, 0.95, SolverConfig{1e-12, 100000});
    CHECK(sup(coarse.values - fine.values) <= 1e-3);
  }
  SUBCASE("non-convergence reports the residual") {
    try {
      exp_value_iteration(random5(5), 0.99, SolverConfig{1e-12, 5});
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.iterations() == 5);
      CHECK(e.residual() > 0.0);
    }
  }
}

TEST_CASE("qh_bellman_operator") {
  const TabularMdp mdp = random5(10);
  Rng rng(99);
  const StationaryPolicy pi = random_policy(5, 3, rng);
  const ValueVector v = ValueVector::Random(5) * 10.0;

  SUBCASE("fixed point of the stationary value") {
    const DiscountParams params(0.4, 0.85);
    const ValueVector w = eval_stationary_qh(mdp, params, pi, SolverConfig{1e-12, 100000});
    CHECK(sup(qh_bellman_operator(mdp, params, pi, w) - w) <= 1e-11);
  }
  SUBCASE("gamma = 0 collapses to the policy reward") {
    const ValueVector out = qh_bellman_operator(mdp, DiscountParams(0.4, 0.0), pi, v);
    ValueVector r_pi = ValueVector::Zero(5);
    for (std::size_t s = 0; s < 5; ++s) {
      for (std::size_t a = 0; a < 3; ++a) r_pi(static_cast<Eigen::Index>(s)) += pi.prob(s, a) * mdp.reward(s, a);
    }
    CHECK(sup(out - r_pi) <= 1e-14);
  }
  SUBCASE("sigma = 1 is the exponential policy operator") {
    const ValueVector out = qh_bellman_operator(mdp, DiscountParams(1.0, 0.9), pi, v);
    CHECK(sup(out - exp_one_step(mdp, 0.9, pi, v)) <= 1e-12);
  }
  SUBCASE("gamma-contraction in sup-norm") {
    for (int trial = 0; trial < 200; ++trial) {
      const TabularMdp m = random5(1000 + static_cast<std::uint64_t>(trial));
      const DiscountParams params(uniform01(rng), 0.99 * uniform01(rng));
      const StationaryPolicy p = random_policy(5, 3, rng);
      const ValueVector v1 = ValueVector::Random(5) * 50.0;
      const ValueVector v2 = ValueVector::Random(5) * 50.0;
      const double lhs = sup(qh_bellman_operator(m, params, p, v1) - qh_bellman_operator(m, params, p, v2));
      CHECK(lhs <= params.gamma() * sup(v1 - v2) + 1e-12);
    }
  }
}

TEST_CASE("eval_stationary_qh") {
  SUBCASE("single state") {
    const TabularMdp mdp = single_state(1.0);
    const auto pi = StationaryPolicy::uniform(1, 1);
    const ValueVector w = eval_stationary_qh(mdp, DiscountParams(0.3, 0.9), pi);
    CHECK(std::abs(w(0) - 3.7) <= 1e-10);
  }
  SUBCASE("sigma = 1 matches exponential evaluation") {
    const TabularMdp mdp = random5(21);
    Rng rng(5);
    const StationaryPolicy pi = random_policy(5, 3, rng);
    const ValueVector w = eval_stationary_qh(mdp, DiscountParams(1.0, 0.9), pi);
    CHECK(sup(w - exp_policy_values(mdp, 0.9, pi)) <= 1e-9);
  }
  SUBCASE("fixed-point and linear-solve backends agree") {
    Rng rng(6);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const TabularMdp mdp = random5(seed);
      const StationaryPolicy pi = random_policy(5, 3, rng);
      const DiscountParams params(uniform01(rng), 0.95 * uniform01(rng));
      const ValueVector a = eval_stationary_qh(mdp, params, pi, {}, EvalBackend::fixed_point);
      const ValueVector b = eval_stationary_qh(mdp, params, pi, {}, EvalBackend::linear_solve);
      CHECK(sup(a - b) <= 1e-8);
    }
  }
  SUBCASE("residual contract") {
    const TabularMdp mdp = random5(8);
    const auto pi = StationaryPolicy::uniform(5, 3);
    const DiscountParams params(0.5, 0.9);
    const SolverConfig cfg{1e-6, 100000};
    const ValueVector w = eval_stationary_qh(mdp, params, pi, cfg);
    CHECK(sup(qh_bellman_operator(mdp, params, pi, w) - w) <= cfg.tolerance * (1 - params.gamma()));
  }
}

TEST_CASE("eval_one_step_qh") {
  const TabularMdp mdp = random5(31);
  Rng rng(12);
  const StationaryPolicy mu = random_policy(5, 3, rng);
  const StationaryPolicy pi = random_policy(5, 3, rng);

  SUBCASE("mu = pi reduces to the stationary value") {
    const DiscountParams params(0.3, 0.9);
    const ValueVector v = eval_one_step_qh(mdp, params, OneStepPolicy(pi, pi));
    CHECK(sup(v - eval_stationary_qh(mdp, params, pi)) <= 1e-9);
  }
  SUBCASE("sigma = 1 is exponential one-step evaluation") {
    const ValueVector v = eval_one_step_qh(mdp, DiscountParams(1.0, 0.9), OneStepPolicy(mu, pi));
    const ValueVector oracle = exp_one_step(mdp, 0.9, mu, exp_policy_values(mdp, 0.9, pi));
    CHECK(sup(v - oracle) <= 1e-9);
  }
  SUBCASE("equals the exponential-tail construction") {
    // V(mu, pi) = r_mu + sigma gamma P_mu V^gamma_pi.
    const DiscountParams params(0.45, 0.8);
    const ValueVector v = eval_one_step_qh(mdp, params, OneStepPolicy(mu, pi));
    const ValueVector tail = exp_policy_values(mdp, 0.8, pi);
    CHECK(sup(v - qh_value_from_exp_tail(mdp, params, mu, tail)) <= 1e-9);
  }
}

TEST_CASE("qh_value_from_exp_tail") {
  SUBCASE("sigma = 0 leaves the first reward") {
    const TabularMdp mdp = random5(41);
    Rng rng(3);
    const StationaryPolicy mu = random_policy(5, 3, rng);
    const ValueVector v = qh_value_from_exp_tail(mdp, DiscountParams(0.0, 0.9), mu, ValueVector::Constant(5, 123.0));
    CHECK(sup(v - exp_one_step(mdp, 0.0, mu, ValueVector::Zero(5))) <= 1e-14);
  }
  SUBCASE("single state") {
    const ValueVector v = qh_value_from_exp_tail(single_state(1.0), DiscountParams(0.3, 0.9),
                                                 StationaryPolicy::uniform(1, 1), ValueVector::Constant(1, 10.0));
    CHECK(v(0) == doctest::Approx(3.7).epsilon(1e-15));
  }
  SUBCASE("optimal tail and greedy first step give V* (enumeration oracle)") {
    const TabularMdp mdp = inventory_mdp(InventoryParams{});
    const DiscountParams params(0.3, 0.9);
    const auto sol = optimal_qh_solution(mdp, params);
    const ValueVector v = qh_value_from_exp_tail(mdp, params, greedy_policy(sol.q_sigma_gamma), sol.v_gamma);

    // Brute force over all 27 x 27 deterministic one-step policies.
    ValueVector best = ValueVector::Constant(3, -1e300);
    std::vector<std::size_t> mu(3), pi(3);
    for (int m = 0; m < 27; ++m) {
      for (int p = 0; p < 27; ++p) {
        for (int s = 0; s < 3; ++s) {
          mu[static_cast<std::size_t>(s)] = static_cast<std::size_t>((m / static_cast<int>(std::pow(3, s))) % 3);
          pi[static_cast<std::size_t>(s)] = static_cast<std::size_t>((p / static_cast<int>(std::pow(3, s))) % 3);
        }
        const OneStepPolicy policy(StationaryPolicy::deterministic(mu, 3), StationaryPolicy::deterministic(pi, 3));
        best = best.cwiseMax(eval_one_step_qh(mdp, params, policy));
      }
    }
    CHECK(sup(v - best) <= 1e-8);
    CHECK(sup(sol.v_star - best) <= 1e-8);
  }
}

TEST_CASE("optimal_qh_solution") {
  const TabularMdp mdp = inventory_mdp(InventoryParams{});

  SUBCASE("inventory policy pair and action values") {
    const auto sol = optimal_qh_solution(mdp, DiscountParams(0.3, 0.9));
    CHECK(sol.mu_star == std::vector<std::size_t>{1, 0, 0});
    CHECK(sol.pi_star == std::vector<std::size_t>{2, 1, 0});
    CHECK(std::abs(sol.q_sigma_gamma(0, 1) - 11.38) <= 0.01);
    // Exact value is 20.56; the published table truncates to 20.55.
    CHECK(std::abs(sol.q_sigma_gamma(2, 0) - 20.56) <= 1e-8);
    CHECK(std::abs(sol.q_sigma_gamma(2, 0) - 20.55) <= 0.01 + 1e-9);
    CHECK(sol.form_mismatch <= kFormAgreementTolerance);
  }
  SUBCASE("sigma = 1 collapses to the exponential solution") {
    const auto sol = optimal_qh_solution(mdp, DiscountParams(1.0, 0.9));
    CHECK(sol.q_sigma_gamma == sol.q_gamma);
    CHECK(sol.mu_star == sol.pi_star);
  }
  SUBCASE("dominance over random deterministic pairs") {
    const DiscountParams params(0.3, 0.9);
    const auto sol = optimal_qh_solution(mdp, params);
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const OneStepPolicy policy(random_deterministic_policy(3, 3, rng), random_deterministic_policy(3, 3, rng));
      const ValueVector v = eval_one_step_qh(mdp, params, policy);
      CHECK((v.array() <= sol.v_star.array() + 1e-8).all());
    }
  }
}

TEST_CASE("linear relation between QH and exponential action values") {
  Rng rng(23);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TabularMdp mdp = random5(500 + seed);
    const StationaryPolicy pi = random_policy(5, 3, rng);
    const DiscountParams params(uniform01(rng), 0.95 * uniform01(rng));
    const SolverConfig tight{1e-12, 100000};

    const ValueVector w = eval_stationary_qh(mdp, params, pi, tight);
    const QTable lookahead = qh_action_values(mdp, params, pi, w);

    const ValueVector v_exp = exp_policy_values(mdp, params.gamma(), pi);
    const QTable q_exp = mdp.expected_reward() + params.gamma() * mdp.expected_next(v_exp);
    const QTable linear = (1.0 - params.sigma()) * mdp.expected_reward() + params.sigma() * q_exp;
    CHECK((lookahead - linear).cwiseAbs().maxCoeff() <= 1e-9);
  }
}
