#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhrl/random.hpp"

namespace qhrl {

/// Per-state values, indexed by state.
using ValueVector = Eigen::VectorXd;
/// Action values; row = state, column = action.
using QTable = Eigen::MatrixXd;

/// Tolerance on probability row sums.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Quasi-hyperbolic discounting: weight 1 on the immediate reward and
/// sigma * gamma^t on the reward t >= 1 steps ahead. sigma = 1 is ordinary
/// exponential discounting.
class DiscountParams {
 public:
  /// Throws std::invalid_argument unless 0 <= sigma <= 1 and 0 <= gamma < 1.
  DiscountParams(double sigma, double gamma);

  double sigma() const { return sigma_; }
  double gamma() const { return gamma_; }

  /// Same gamma, sigma = 1.
  DiscountParams exponential() const { return {1.0, gamma_}; }

  bool operator==(const DiscountParams&) const = default;

 private:
  double sigma_;
  double gamma_;
};

/// d(0) = 1, d(t) = sigma * gamma^t for t >= 1.
double qh_weight(const DiscountParams& params, std::uint64_t t);

/// Raw, unvalidated MDP description. Transition is flattened row-major over
/// (s, a, s'); expected_reward row-major over (s, a).
struct MdpData {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transition;
  std::vector<double> expected_reward;
  double reward_bound = 0.0;
};

struct Violation {
  enum class Kind { dimension, non_finite, negative_probability, row_sum, reward_bound };
  Kind kind;
  std::size_t state = 0;
  std::size_t action = 0;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Lists every broken structural invariant; empty means valid.
ValidationReport validate_mdp(const MdpData& data);

class InvalidMdp : public std::invalid_argument {
 public:
  explicit InvalidMdp(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Finite MDP with expected rewards. Immutable once constructed.
class TabularMdp {
 public:
  /// Throws InvalidMdp when validate_mdp(data) is non-empty.
  explicit TabularMdp(const MdpData& data);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double reward_bound() const { return reward_bound_; }

  double prob(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions_(row_index(s, a), static_cast<Eigen::Index>(next));
  }
  double reward(std::size_t s, std::size_t a) const {
    return rewards_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }

  /// (S*A) x S matrix; row s*A + a is P(.|s,a).
  const Eigen::MatrixXd& transitions() const { return transitions_; }
  /// S x A table of r(s,a).
  const QTable& expected_reward() const { return rewards_; }

  /// Sum over s' of P(s'|s,a) v(s'), as an S x A table.
  QTable expected_next(const ValueVector& v) const;

  /// Cumulative distribution of P(.|s,a), for sampling.
  std::span<const double> transition_cdf(std::size_t s, std::size_t a) const;

  MdpData data() const;

 private:
  Eigen::Index row_index(std::size_t s, std::size_t a) const {
    return static_cast<Eigen::Index>(s * num_actions_ + a);
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  Eigen::MatrixXd transitions_;
  QTable rewards_;
  double reward_bound_;
  std::vector<double> cdf_;
};

ValidationReport validate_mdp(const TabularMdp& mdp);

/// Stochastic stationary policy pi(a|s), rows indexed by state.
class StationaryPolicy {
 public:
  /// Throws std::invalid_argument if any row is not a distribution.
  explicit StationaryPolicy(Eigen::MatrixXd probs);

  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);
  static StationaryPolicy deterministic(std::span<const std::size_t> actions,
                                        std::size_t num_actions);

  std::size_t num_states() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(probs_.cols()); }

  double prob(std::size_t s, std::size_t a) const {
    return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  const Eigen::MatrixXd& probs() const { return probs_; }

  std::size_t sample(std::size_t s, Rng& rng) const;

  /// The chosen action per state when every row is a point mass.
  std::optional<std::vector<std::size_t>> deterministic_actions() const;

 private:
  Eigen::MatrixXd probs_;
  std::vector<double> cdf_;
};

/// (mu, pi, pi, ...): play `initial` once, then `tail` forever.
struct OneStepPolicy {
  OneStepPolicy(StationaryPolicy initial, StationaryPolicy tail);

  StationaryPolicy initial;
  StationaryPolicy tail;
};

/// Throws std::invalid_argument when the policy shape does not match the MDP.
void check_compatible(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Index of the row maximum per state; ties go to the lowest action.
std::vector<std::size_t> greedy_actions(const QTable& q);

/// Deterministic policy that plays greedy_actions(q).
StationaryPolicy greedy_policy(const QTable& q);

}  // namespace qhrl
