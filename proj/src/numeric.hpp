#pragma once

#include <cmath>

namespace bigjump::detail {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr double kE = 2.718281828459045235360287471352662498;
inline constexpr double kEulerGamma = 0.577215664901532860606512090082402431;

}  // namespace bigjump::detail
