#include "qhrl/convergence_log.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qhrl {

ConvergenceLog::ConvergenceLog(std::vector<std::string> metric_names) : names_(std::move(metric_names)) {}

void ConvergenceLog::append(std::uint64_t sweep, std::span<const double> metrics) {
  if (metrics.size() != names_.size()) throw std::invalid_argument("wrong number of metrics");
  if (!sweeps_.empty() && sweep <= sweeps_.back()) throw std::invalid_argument("sweep indices must increase");
  for (double m : metrics) {
    if (!std::isfinite(m)) throw std::invalid_argument("non-finite metric at sweep " + std::to_string(sweep));
  }
  sweeps_.push_back(sweep);
  values_.insert(values_.end(), metrics.begin(), metrics.end());
}

std::span<const double> ConvergenceLog::last() const {
  if (empty()) return {};
  return std::span<const double>(values_).subspan(values_.size() - names_.size());
}

void ConvergenceLog::write_csv(std::ostream& out) const {
  out << "sweep";
  for (const auto& n : names_) out << ',' << n;
  out << '\n';
  char buf[64];
  for (std::size_t row = 0; row < sweeps_.size(); ++row) {
    out << sweeps_[row];
    for (std::size_t c = 0; c < names_.size(); ++c) {
      // Shortest representation that round-trips.
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, metric(row, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

}  // namespace qhrl
