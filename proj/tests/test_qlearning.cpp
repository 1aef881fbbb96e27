#include <cmath>

#include "doctest.h"
#include "qhrl/environments.hpp"
#include "qhrl/exact_dp.hpp"
#include "qhrl/qlearning.hpp"

using namespace qhrl;

namespace {

TabularModel single_state_model(double reward) {
  MdpData d;
  d.num_states = 1;
  d.num_actions = 1;
  d.transition = {1.0};
  d.expected_reward = {reward};
  d.reward_bound = std::abs(reward);
  return TabularModel{TabularMdp(d)};
}

}  // namespace

TEST_CASE("qlearn_sweep hand updates") {
  SUBCASE("zero step is a no-op") {
    const InventoryModel model(InventoryParams{});
    QLearnState state{QTable::Constant(3, 3, 2.0), QTable::Constant(3, 3, -1.0), 4};
    Rng rng(1);
    const auto next = qlearn_sweep(state, model, DiscountParams(0.3, 0.9), 0.0, rng);
    CHECK(next.z == state.z);
    CHECK(next.q == state.q);
    CHECK(next.n == 5);
  }
  SUBCASE("single state, unit step") {
    const auto model = single_state_model(1.0);
    Rng rng(1);
    const auto next = qlearn_sweep(QLearnState::zeros(1, 1), model, DiscountParams(0.3, 0.9), 1.0, rng);
    CHECK(next.z(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(next.q(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("Q update uses the pre-update Z") {
    const auto model = single_state_model(2.0);
    QLearnState state{QTable::Constant(1, 1, 10.0), QTable::Constant(1, 1, 0.0), 0};
    Rng rng(1);
    const auto next = qlearn_sweep(state, model, DiscountParams(0.5, 0.9), 0.5, rng);
    CHECK(next.z(0, 0) == doctest::Approx(10.0 + 0.5 * (2.0 + 9.0 - 10.0)));
    CHECK(next.q(0, 0) == doctest::Approx(0.5 * (0.5 * 2.0 + 0.5 * 10.0)));
  }
  SUBCASE("sigma = 1 makes Z the Q target") {
    const InventoryModel model(InventoryParams{});
    QLearnState state{QTable::Random(3, 3) * 5.0, QTable::Random(3, 3) * 5.0, 0};
    Rng rng(6);
    const auto next = qlearn_sweep(state, model, DiscountParams(1.0, 0.9), 0.3, rng);
    const QTable expected = state.q + 0.3 * (state.z - state.q);
    CHECK((next.q - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fixed point of the expected update is the exact solution") {
  // With deterministic transitions and rewards every draw is the expectation,
  // so a unit step lands exactly on the Bellman images.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t s_count = 4, a_count = 3;
    MdpData d;
    d.num_states = s_count;
    d.num_actions = a_count;
    d.transition.assign(s_count * a_count * s_count, 0.0);
    d.expected_reward.resize(s_count * a_count);
    for (std::size_t i = 0; i < s_count * a_count; ++i) {
      d.transition[i * s_count + static_cast<std::size_t>(uniform01(rng) * s_count) % s_count] = 1.0;
      d.expected_reward[i] = 2.0 * uniform01(rng) - 1.0;
    }
    d.reward_bound = 1.0;
    const TabularMdp mdp(d);
    const TabularModel model(mdp);
    const DiscountParams params(0.35, 0.8);
    const auto sol = optimal_qh_solution(mdp, params, SolverConfig{1e-13, 100000});

    QLearnState state{sol.q_gamma, sol.q_sigma_gamma, 0};
    const auto next = qlearn_sweep(state, model, params, 1.0, rng);
    CHECK((next.z - sol.q_gamma).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((next.q - sol.q_sigma_gamma).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("Q is an affine trace of Z") {
  // With a deterministic-reward model, Q_n can be recomputed from the recorded
  // Z sequence and the expected reward alone.
  RandomMdpSpec spec;
  spec.num_states = 4;
  spec.num_actions = 2;
  spec.seed = 3;
  const TabularMdp mdp = random_mdp(spec);
  const TabularModel model(mdp);
  const DiscountParams params(0.4, 0.9);
  const StepSizeSchedule schedule;

  std::vector<QTable> zs;
  const auto run = run_qlearning(model, params, schedule, 500, 17, std::nullopt,
                                 [&](const QLearnState& s) { zs.push_back(s.z); });
  REQUIRE(zs.size() == 500);
  QTable q = QTable::Zero(4, 2);
  QTable z_prev = QTable::Zero(4, 2);
  for (std::uint64_t n = 0; n < 500; ++n) {
    const double alpha = schedule(n);
    q += alpha * ((1.0 - params.sigma()) * mdp.expected_reward() + params.sigma() * z_prev - q);
    z_prev = zs[n];
  }
  CHECK((q - run.state.q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("run_qlearning") {
  const InventoryParams inv;
  const InventoryModel model(inv);
  const TabularMdp mdp = inventory_mdp(inv);
  const DiscountParams params(0.3, 0.9);
  const auto sol = optimal_qh_solution(mdp, params);
  const QReference ref{sol.q_gamma, sol.q_sigma_gamma};

  SUBCASE("zero sweeps") {
    const auto run = run_qlearning(model, params, {}, 0, 1, ref);
    CHECK(run.state.z.isZero());
    CHECK(run.state.q.isZero());
    CHECK(run.log.empty());
  }
  SUBCASE("iterates stay bounded") {
    const double bound = mdp.reward_bound() / (1.0 - params.gamma());
    bool ok = true;
    run_qlearning(model, params, {}, 20000, 2, std::nullopt, [&](const QLearnState& s) {
      ok = ok && s.z.cwiseAbs().maxCoeff() <= bound + 1e-9 && s.q.cwiseAbs().maxCoeff() <= bound + 1e-9;
    });
    CHECK(ok);
  }
  SUBCASE("seed determinism") {
    const auto a = run_qlearning(model, params, {}, 2000, 9, ref);
    const auto b = run_qlearning(model, params, {}, 2000, 9, ref);
    CHECK(a.state.z == b.state.z);
    CHECK(a.state.q == b.state.q);
    CHECK(run_qlearning(model, params, {}, 2000, 10, ref).state.z != a.state.z);
  }
  SUBCASE("greedy policies settle on the optimal pair") {
    const auto& mu_star = sol.mu_star;
    const auto& pi_star = sol.pi_star;
    std::uint64_t streak = 0;
    run_qlearning(model, params, {}, 50000, 4, ref, [&](const QLearnState& s) {
      if (greedy_actions(s.q) == mu_star && greedy_actions(s.z) == pi_star)
        ++streak;
      else
        streak = 0;
    });
    CHECK(streak >= 1000);
  }
  SUBCASE("log columns") {
    const auto run = run_qlearning(model, params, {}, 50, 1, ref);
    CHECK(run.log.metric_names() == std::vector<std::string>{"err_Z_sup", "err_Q_sup"});
    CHECK(run.log.size() == 50);
    CHECK(run.log.last()[0] == doctest::Approx((run.state.z - sol.q_gamma).cwiseAbs().maxCoeff()));
    CHECK(run.mu_hat == greedy_actions(run.state.q));
    CHECK(run.pi_hat == greedy_actions(run.state.z));
  }
}
