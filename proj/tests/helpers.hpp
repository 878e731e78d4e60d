#pragma once

#include <bigjump/model.hpp>
#include <bigjump/pmf.hpp>
#include <cmath>
#include <cstdint>
#include <vector>

namespace test {

// b = 0.5, eps = 1
inline const bigjump::LawB& law() {
  static const bigjump::LawB B(bigjump::calibrate(0.5, 1.0));
  return B;
}

inline double max_abs_diff(const bigjump::Pmf& a, const bigjump::Pmf& b) {
  return (a.mass() - b.mass()).abs().maxCoeff();
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

inline Moments moments(const std::vector<std::int64_t>& v) {
  double m = 0.0;
  for (auto x : v) m += static_cast<double>(x);
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (auto x : v) s += (static_cast<double>(x) - m) * (static_cast<double>(x) - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

}  // namespace test
