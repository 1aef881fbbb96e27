#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qhrl {

/// Robbins-Monro step sizes alpha_n = scale / (n + offset)^exponent.
///
/// With exponent in (0.5, 1] the sum of alpha_n diverges while the sum of
/// squares converges; scale <= offset^exponent keeps alpha_0 <= 1.
class StepSizeSchedule {
 public:
  StepSizeSchedule() = default;

  StepSizeSchedule(double scale, double offset, double exponent)
      : scale_(scale), offset_(offset), exponent_(exponent) {
    if (!(exponent > 0.5 && exponent <= 1.0)) throw std::invalid_argument("step-size exponent must lie in (0.5, 1]");
    if (!(offset >= 1.0)) throw std::invalid_argument("step-size offset must be at least 1");
    if (!(scale > 0.0)) throw std::invalid_argument("step-size scale must be positive");
    if (scale > std::pow(offset, exponent)) throw std::invalid_argument("step-size schedule has alpha_0 > 1");
  }

  double operator()(std::uint64_t n) const {
    return scale_ / std::pow(static_cast<double>(n) + offset_, exponent_);
  }

  double scale() const { return scale_; }
  double offset() const { return offset_; }
  double exponent() const { return exponent_; }

 private:
  double scale_ = 1.0;
  double offset_ = 1.0;
  double exponent_ = 0.7;
};

}  // namespace qhrl
