#include "qhrl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qhrl {

void InventoryParams::validate() const {
  if (!(unit_cost >= 0.0) || !(holding_cost >= 0.0) || !(price >= 0.0)) {
    throw std::invalid_argument("inventory costs and price must be non-negative");
  }
  if (demand_pmf.empty()) throw std::invalid_argument("demand_pmf must not be empty");
  double sum = 0.0;
  for (double p : demand_pmf) {
    if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("demand_pmf entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) throw std::invalid_argument("demand_pmf must sum to 1");
}

Transition inventory_outcome(const InventoryParams& params, std::size_t s, std::size_t a, std::size_t demand) {
  const std::size_t stocked = std::min(s + a, params.capacity);
  const std::size_t left = stocked > demand ? stocked - demand : 0;
  const std::size_t sold = std::min(stocked, demand);
  const double reward = -params.unit_cost * static_cast<double>(a) -
                        params.holding_cost * static_cast<double>(left) +
                        params.price * static_cast<double>(sold);
  return {left, reward};
}

double inventory_reward_bound(const InventoryParams& params) {
  double bound = 0.0;
  for (std::size_t s = 0; s <= params.capacity; ++s) {
    for (std::size_t a = 0; a <= params.capacity; ++a) {
      for (std::size_t d = 0; d < params.demand_pmf.size(); ++d) {
        bound = std::max(bound, std::abs(inventory_outcome(params, s, a, d).reward));
      }
    }
  }
  return bound;
}

TabularMdp inventory_mdp(const InventoryParams& params) {
  params.validate();
  const std::size_t n = params.capacity + 1;
  MdpData data;
  data.num_states = n;
  data.num_actions = n;
  data.transition.assign(n * n * n, 0.0);
  data.expected_reward.assign(n * n, 0.0);
  data.reward_bound = inventory_reward_bound(params);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t d = 0; d < params.demand_pmf.size(); ++d) {
        const double p = params.demand_pmf[d];
        const Transition t = inventory_outcome(params, s, a, d);
        data.transition[(s * n + a) * n + t.next_state] += p;
        data.expected_reward[s * n + a] += p * t.reward;
      }
    }
  }
  return TabularMdp(data);
}

namespace {

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  return cdf;
}

}  // namespace

Transition inventory_sample(const InventoryParams& params, std::size_t s, std::size_t a, Rng& rng) {
  const auto cdf = cumulative(params.demand_pmf);
  return inventory_outcome(params, s, a, sample_from_cdf(cdf, uniform01(rng)));
}

InventoryModel::InventoryModel(InventoryParams params)
    : params_(std::move(params)), demand_cdf_(cumulative(params_.demand_pmf)) {
  params_.validate();
  reward_bound_ = inventory_reward_bound(params_);
}

Transition InventoryModel::sample(std::size_t s, std::size_t a, Rng& rng) const {
  return inventory_outcome(params_, s, a, sample_from_cdf(demand_cdf_, uniform01(rng)));
}

void RandomMdpSpec::validate() const {
  if (num_states < 1 || num_actions < 1) throw std::invalid_argument("random MDP dimensions must be positive");
  if (!(reward_low <= reward_high)) throw std::invalid_argument("reward_low must not exceed reward_high");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw std::invalid_argument("sparsity must lie in [0, 1)");
}

TabularMdp random_mdp(const RandomMdpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t S = spec.num_states;
  const std::size_t A = spec.num_actions;
  const auto zeroed = static_cast<std::size_t>(std::floor(spec.sparsity * static_cast<double>(S)));
  const std::size_t dropped = std::min(zeroed, S - 1);

  MdpData data;
  data.num_states = S;
  data.num_actions = A;
  data.transition.resize(S * A * S);
  data.expected_reward.resize(S * A);
  data.reward_bound = std::max(std::abs(spec.reward_low), std::abs(spec.reward_high));

  std::vector<std::size_t> order(S);
  for (std::size_t row = 0; row < S * A; ++row) {
    std::vector<double> weights(S);
    for (double& w : weights) w = 1e-3 + uniform01(rng);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < dropped; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(S - k));
      std::swap(order[k], order[pick]);
      weights[order[k]] = 0.0;
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t n = 0; n < S; ++n) data.transition[row * S + n] = weights[n] / total;
  }
  for (double& r : data.expected_reward) {
    r = spec.reward_low + (spec.reward_high - spec.reward_low) * uniform01(rng);
  }
  return TabularMdp(data);
}

StationaryPolicy random_policy(std::size_t num_states, std::size_t num_actions, Rng& rng) {
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(num_states), static_cast<Eigen::Index>(num_actions));
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    for (Eigen::Index a = 0; a < probs.cols(); ++a) probs(s, a) = 0.05 + uniform01(rng);
    probs.row(s) /= probs.row(s).sum();
  }
  return StationaryPolicy(std::move(probs));
}

StationaryPolicy random_deterministic_policy(std::size_t num_states, std::size_t num_actions, Rng& rng) {
  std::vector<std::size_t> actions(num_states);
  for (auto& a : actions) {
    a = std::min(num_actions - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(num_actions)));
  }
  return StationaryPolicy::deterministic(actions, num_actions);
}

HorizonTooShort::HorizonTooShort(double bias_bound)
    : std::invalid_argument([&] {
        std::ostringstream os;
        os << "horizon too short: truncation bias bound " << bias_bound << " exceeds the requested precision";
        return os.str();
      }()),
      bias_bound_(bias_bound) {}

McEstimate mc_qh_return(const GenerativeModel& model, const DiscountParams& params,
                        std::span<const StationaryPolicy> prefix, const StationaryPolicy& tail, std::size_t start,
                        const McOptions& options, Rng& rng) {
  if (options.episodes < 2) throw std::invalid_argument("need at least two episodes for a standard error");
  if (start >= model.num_states()) throw std::invalid_argument("start state out of range");

  const double gamma = params.gamma();
  McEstimate out;
  out.episodes = options.episodes;
  out.truncation_bias = params.sigma() * std::pow(gamma, static_cast<double>(options.horizon)) *
                        model.reward_bound() / (1.0 - gamma);
  if (options.precision > 0.0 && out.truncation_bias > options.precision) {
    throw HorizonTooShort(out.truncation_bias);
  }

  // Welford running mean and variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t e = 0; e < options.episodes; ++e) {
    std::size_t s = start;
    double total = 0.0;
    double weight = 1.0;
    for (std::size_t t = 0; t < options.horizon; ++t) {
      const StationaryPolicy& policy = t < prefix.size() ? prefix[t] : tail;
      const Transition step = model.sample(s, policy.sample(s, rng), rng);
      total += weight * step.reward;
      weight = (t == 0) ? params.sigma() * gamma : weight * gamma;
      s = step.next_state;
    }
    const double delta = total - mean;
    mean += delta / static_cast<double>(e + 1);
    m2 += delta * (total - mean);
  }
  out.mean = mean;
  const double n = static_cast<double>(options.episodes);
  out.std_error = std::sqrt(std::max(0.0, m2 / (n - 1.0)) / n);
  return out;
}

McEstimate mc_qh_return(const GenerativeModel& model, const DiscountParams& params, const OneStepPolicy& policy,
                        std::size_t start, const McOptions& options, Rng& rng) {
  return mc_qh_return(model, params, std::span<const StationaryPolicy>(&policy.initial, 1), policy.tail, start,
                      options, rng);
}

}  // namespace qhrl
