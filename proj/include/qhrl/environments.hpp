#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qhrl/generative_model.hpp"
#include "qhrl/mdp.hpp"

namespace qhrl {

// ---------------------------------------------------------------------------
// Inventory control
//
// State: items in stock, 0..M. Action: items bought, 0..M. With stock after
// procurement ŝ = min(s + a, M) and demand d, the next state is
// max(ŝ - d, 0) and the reward is -c a - h max(ŝ - d, 0) + p min(ŝ, d).
// The full purchase cost c a is charged even when capacity truncates ŝ.
// ---------------------------------------------------------------------------

struct InventoryParams {
  std::size_t capacity = 2;
  double unit_cost = 5.0;
  double holding_cost = 2.0;
  double price = 9.0;
  std::vector<double> demand_pmf{0.2, 0.3, 0.5};  // P(d = 0), P(d = 1), ...

  /// Throws std::invalid_argument on negative costs or a malformed pmf.
  void validate() const;

  bool operator==(const InventoryParams&) const = default;
};

/// Deterministic outcome of (s, a) under demand d.
Transition inventory_outcome(const InventoryParams& params, std::size_t s, std::size_t a, std::size_t demand);

/// Largest |reward| over every (s, a, d), so sampled rewards obey the bound.
double inventory_reward_bound(const InventoryParams& params);

TabularMdp inventory_mdp(const InventoryParams& params);

Transition inventory_sample(const InventoryParams& params, std::size_t s, std::size_t a, Rng& rng);

/// Generative model drawing a fresh demand per call.
class InventoryModel final : public GenerativeModel {
 public:
  explicit InventoryModel(InventoryParams params);

  std::size_t num_states() const override { return params_.capacity + 1; }
  std::size_t num_actions() const override { return params_.capacity + 1; }
  double reward_bound() const override { return reward_bound_; }
  Transition sample(std::size_t s, std::size_t a, Rng& rng) const override;

  const InventoryParams& params() const { return params_; }

 private:
  InventoryParams params_;
  std::vector<double> demand_cdf_;
  double reward_bound_;
};

// ---------------------------------------------------------------------------
// Random MDPs for property tests
// ---------------------------------------------------------------------------

struct RandomMdpSpec {
  std::size_t num_states = 5;
  std::size_t num_actions = 3;
  double reward_low = -1.0;
  double reward_high = 1.0;
  /// Fraction of next states zeroed out per (s, a) row; 0 keeps rows dense.
  double sparsity = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reproducible in the seed; rewards uniform in [reward_low, reward_high].
TabularMdp random_mdp(const RandomMdpSpec& spec);

/// Random stochastic policy with every entry strictly positive.
StationaryPolicy random_policy(std::size_t num_states, std::size_t num_actions, Rng& rng);

/// Random deterministic policy.
StationaryPolicy random_deterministic_policy(std::size_t num_states, std::size_t num_actions, Rng& rng);

// ---------------------------------------------------------------------------
// Monte-Carlo QH return oracle
// ---------------------------------------------------------------------------

struct McOptions {
  std::size_t horizon = 300;
  std::size_t episodes = 100000;
  /// When positive, the horizon must keep the truncation bias below it.
  double precision = 0.0;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  /// sigma gamma^H r_max / (1 - gamma): largest possible effect of truncation.
  double truncation_bias = 0.0;
  std::size_t episodes = 0;
};

class HorizonTooShort : public std::invalid_argument {
 public:
  explicit HorizonTooShort(double bias_bound);
  double bias_bound() const { return bias_bound_; }

 private:
  double bias_bound_;
};

/// Simulates episodes from `start` that play prefix[0], prefix[1], ... on the
/// first steps and `tail` afterwards, summing d(t) r_t for t < horizon.
McEstimate mc_qh_return(const GenerativeModel& model, const DiscountParams& params,
                        std::span<const StationaryPolicy> prefix, const StationaryPolicy& tail,
                        std::size_t start, const McOptions& options, Rng& rng);

/// Same for a one-step policy (mu, pi, pi, ...).
McEstimate mc_qh_return(const GenerativeModel& model, const DiscountParams& params, const OneStepPolicy& policy,
                        std::size_t start, const McOptions& options, Rng& rng);

}  // namespace qhrl
