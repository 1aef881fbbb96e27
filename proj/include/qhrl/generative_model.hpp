#pragma once

#include <cstddef>

#include "qhrl/mdp.hpp"
#include "qhrl/random.hpp"

namespace qhrl {

struct Transition {
  std::size_t next_state;
  double reward;
};

/// Sampling access to an MDP: draw (s', r) for any (s, a). Implementations
/// are immutable, so one instance can be shared by concurrent replications
/// that each own their Rng.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  /// Bound on |sampled reward|.
  virtual double reward_bound() const = 0;
  virtual Transition sample(std::size_t s, std::size_t a, Rng& rng) const = 0;
};

/// Samples next states from a TabularMdp and returns its expected reward as a
/// deterministic reward.
class TabularModel final : public GenerativeModel {
 public:
  explicit TabularModel(TabularMdp mdp) : mdp_(std::move(mdp)) {}

  std::size_t num_states() const override { return mdp_.num_states(); }
  std::size_t num_actions() const override { return mdp_.num_actions(); }
  double reward_bound() const override { return mdp_.reward_bound(); }

  Transition sample(std::size_t s, std::size_t a, Rng& rng) const override {
    return {sample_from_cdf(mdp_.transition_cdf(s, a), uniform01(rng)), mdp_.reward(s, a)};
  }

  const TabularMdp& mdp() const { return mdp_; }

 private:
  TabularMdp mdp_;
};

}  // namespace qhrl
