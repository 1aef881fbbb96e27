#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace qhrl {

/// Per-sweep error metrics, written as CSV with header `sweep,<metric>,...`.
class ConvergenceLog {
 public:
  explicit ConvergenceLog(std::vector<std::string> metric_names);

  /// Throws std::invalid_argument if the sweep index does not increase, the
  /// metric count is wrong, or a metric is not finite.
  void append(std::uint64_t sweep, std::span<const double> metrics);

  std::size_t size() const { return sweeps_.size(); }
  bool empty() const { return sweeps_.empty(); }
  const std::vector<std::string>& metric_names() const { return names_; }

  std::uint64_t sweep(std::size_t row) const { return sweeps_[row]; }
  double metric(std::size_t row, std::size_t column) const { return values_[row * names_.size() + column]; }
  /// Metrics of the last row.
  std::span<const double> last() const;

  void write_csv(std::ostream& out) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> sweeps_;
  std::vector<double> values_;
};

}  // namespace qhrl
