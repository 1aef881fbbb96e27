#include "qhrl/mdp.hpp"

#include <cmath>
#include <sstream>

namespace qhrl {

namespace {

std::string describe(const ValidationReport& report) {
  std::ostringstream os;
  os << "invalid MDP (" << report.size() << " violation" << (report.size() == 1 ? "" : "s") << ")";
  for (const auto& v : report) os << "; " << v.message;
  return os.str();
}

// Cumulative sums of each row of a row-stochastic matrix, flattened row-major.
std::vector<double> row_cdf(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      acc += m(r, c);
      out[k++] = acc;
    }
  }
  return out;
}

}  // namespace

DiscountParams::DiscountParams(double sigma, double gamma) : sigma_(sigma), gamma_(gamma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw std::invalid_argument("sigma must lie in [0, 1], got " + std::to_string(sigma));
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
}

double qh_weight(const DiscountParams& params, std::uint64_t t) {
  if (t == 0) return 1.0;
  return params.sigma() * std::pow(params.gamma(), static_cast<double>(t));
}

ValidationReport validate_mdp(const MdpData& data) {
  ValidationReport report;
  const std::size_t S = data.num_states;
  const std::size_t A = data.num_actions;
  if (S == 0 || A == 0) {
    report.push_back({Violation::Kind::dimension, 0, 0, "num_states and num_actions must be positive"});
    return report;
  }
  if (data.transition.size() != S * A * S) {
    report.push_back({Violation::Kind::dimension, 0, 0,
                      "transition has " + std::to_string(data.transition.size()) +
                          " entries, expected " + std::to_string(S * A * S)});
  }
  if (data.expected_reward.size() != S * A) {
    report.push_back({Violation::Kind::dimension, 0, 0,
                      "expected_reward has " + std::to_string(data.expected_reward.size()) +
                          " entries, expected " + std::to_string(S * A)});
  }
  if (!std::isfinite(data.reward_bound) || data.reward_bound < 0.0) {
    report.push_back({Violation::Kind::reward_bound, 0, 0, "reward_bound must be finite and >= 0"});
  }
  if (!report.empty()) return report;

  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto where = "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
      double sum = 0.0;
      bool finite = true;
      bool negative = false;
      for (std::size_t n = 0; n < S; ++n) {
        const double p = data.transition[(s * A + a) * S + n];
        if (!std::isfinite(p)) finite = false;
        if (p < 0.0) negative = true;
        sum += p;
      }
      if (!finite) {
        report.push_back({Violation::Kind::non_finite, s, a, "non-finite transition probability at " + where});
      } else {
        if (negative) {
          report.push_back({Violation::Kind::negative_probability, s, a, "negative transition probability at " + where});
        }
        if (std::abs(sum - 1.0) > kProbabilityTolerance) {
          std::ostringstream os;
          os.precision(17);
          os << "transition row " << where << " sums to " << sum;
          report.push_back({Violation::Kind::row_sum, s, a, os.str()});
        }
      }
      const double r = data.expected_reward[s * A + a];
      if (!std::isfinite(r)) {
        report.push_back({Violation::Kind::non_finite, s, a, "non-finite reward at " + where});
      } else if (std::abs(r) > data.reward_bound) {
        std::ostringstream os;
        os << "|reward| = " << std::abs(r) << " exceeds bound " << data.reward_bound << " at " << where;
        report.push_back({Violation::Kind::reward_bound, s, a, os.str()});
      }
    }
  }
  return report;
}

InvalidMdp::InvalidMdp(ValidationReport report)
    : std::invalid_argument(describe(report)), report_(std::move(report)) {}

TabularMdp::TabularMdp(const MdpData& data)
    : num_states_(data.num_states), num_actions_(data.num_actions), reward_bound_(data.reward_bound) {
  auto report = validate_mdp(data);
  if (!report.empty()) throw InvalidMdp(std::move(report));

  const auto S = static_cast<Eigen::Index>(num_states_);
  const auto A = static_cast<Eigen::Index>(num_actions_);
  transitions_.resize(S * A, S);
  for (Eigen::Index r = 0; r < S * A; ++r) {
    for (Eigen::Index n = 0; n < S; ++n) {
      transitions_(r, n) = data.transition[static_cast<std::size_t>(r * S + n)];
    }
  }
  rewards_.resize(S, A);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      rewards_(s, a) = data.expected_reward[static_cast<std::size_t>(s * A + a)];
    }
  }
  cdf_ = row_cdf(transitions_);
}

QTable TabularMdp::expected_next(const ValueVector& v) const {
  const Eigen::VectorXd flat = transitions_ * v;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(flat.data(), static_cast<Eigen::Index>(num_states_),
                                    static_cast<Eigen::Index>(num_actions_));
}

std::span<const double> TabularMdp::transition_cdf(std::size_t s, std::size_t a) const {
  return std::span<const double>(cdf_).subspan((s * num_actions_ + a) * num_states_, num_states_);
}

MdpData TabularMdp::data() const {
  MdpData out;
  out.num_states = num_states_;
  out.num_actions = num_actions_;
  out.reward_bound = reward_bound_;
  out.transition.reserve(num_states_ * num_actions_ * num_states_);
  for (Eigen::Index r = 0; r < transitions_.rows(); ++r) {
    for (Eigen::Index n = 0; n < transitions_.cols(); ++n) out.transition.push_back(transitions_(r, n));
  }
  for (Eigen::Index s = 0; s < rewards_.rows(); ++s) {
    for (Eigen::Index a = 0; a < rewards_.cols(); ++a) out.expected_reward.push_back(rewards_(s, a));
  }
  return out;
}

ValidationReport validate_mdp(const TabularMdp& mdp) { return validate_mdp(mdp.data()); }

StationaryPolicy::StationaryPolicy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) {
    throw std::invalid_argument("policy must have at least one state and one action");
  }
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    double sum = 0.0;
    for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
      const double p = probs_(s, a);
      if (!std::isfinite(p) || p < 0.0) {
        throw std::invalid_argument("policy entry (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                    ") is not a probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
    }
  }
  cdf_ = row_cdf(probs_);
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  const auto A = static_cast<Eigen::Index>(num_actions);
  return StationaryPolicy(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(num_states), A,
                                                    1.0 / static_cast<double>(num_actions)));
}

StationaryPolicy StationaryPolicy::deterministic(std::span<const std::size_t> actions,
                                                 std::size_t num_actions) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()),
                                                static_cast<Eigen::Index>(num_actions));
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= num_actions) {
      throw std::invalid_argument("action " + std::to_string(actions[s]) + " out of range in state " +
                                  std::to_string(s));
    }
    probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
  }
  return StationaryPolicy(std::move(probs));
}

std::size_t StationaryPolicy::sample(std::size_t s, Rng& rng) const {
  const std::size_t A = num_actions();
  return sample_from_cdf(std::span<const double>(cdf_).subspan(s * A, A), uniform01(rng));
}

std::optional<std::vector<std::size_t>> StationaryPolicy::deterministic_actions() const {
  std::vector<std::size_t> out;
  out.reserve(num_states());
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    Eigen::Index best = 0;
    if (probs_.row(s).maxCoeff(&best) != 1.0) return std::nullopt;
    out.push_back(static_cast<std::size_t>(best));
  }
  return out;
}

OneStepPolicy::OneStepPolicy(StationaryPolicy initial_policy, StationaryPolicy tail_policy)
    : initial(std::move(initial_policy)), tail(std::move(tail_policy)) {
  if (initial.num_states() != tail.num_states() || initial.num_actions() != tail.num_actions()) {
    throw std::invalid_argument("initial and tail policies have different shapes");
  }
}

void check_compatible(const TabularMdp& mdp, const StationaryPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("policy is " + std::to_string(policy.num_states()) + "x" +
                                std::to_string(policy.num_actions()) + " but the MDP is " +
                                std::to_string(mdp.num_states()) + "x" + std::to_string(mdp.num_actions()));
  }
}

std::vector<std::size_t> greedy_actions(const QTable& q) {
  std::vector<std::size_t> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    out[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
  }
  return out;
}

StationaryPolicy greedy_policy(const QTable& q) {
  const auto actions = greedy_actions(q);
  return StationaryPolicy::deterministic(actions, static_cast<std::size_t>(q.cols()));
}

}  // namespace qhrl
