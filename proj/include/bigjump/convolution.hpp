#pragma once

#include <Eigen/Core>
#include <complex>
#include <memory>
#include <vector>

namespace bigjump {

// c[k] = sum_{i+j=k} a[i] b[j] for k = 0..n. Direct summation for small n
// (exact sums of nonnegative terms), FFT otherwise.
Eigen::ArrayXd truncated_product(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b, Eigen::Index n);

// Repeated truncated products against a fixed right factor; caches its spectrum.
class FixedFactorProduct {
 public:
  FixedFactorProduct(const Eigen::ArrayXd& b, Eigen::Index n);
  ~FixedFactorProduct();
  FixedFactorProduct(FixedFactorProduct&&) noexcept;
  FixedFactorProduct& operator=(FixedFactorProduct&&) noexcept;

  Eigen::ArrayXd operator()(const Eigen::ArrayXd& a) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr Eigen::Index kDirectProductLimit = 1024;

}  // namespace bigjump
