#include "bigjump/convolution.hpp"

#include <unsupported/Eigen/FFT>

namespace bigjump {

using Eigen::ArrayXd;
using Eigen::Index;

namespace {

ArrayXd direct_product(const ArrayXd& a, const ArrayXd& b, Index n) {
  ArrayXd c = ArrayXd::Zero(n + 1);
  const Index na = std::min<Index>(a.size(), n + 1);
  for (Index i = 0; i < na; ++i) {
    if (a[i] == 0.0) continue;
    const Index m = std::min<Index>(n + 1 - i, b.size());
    if (m > 0) c.segment(i, m) += a[i] * b.head(m);
  }
  return c;
}

Index fft_size(Index n) {
  Index L = 1;
  while (L < 2 * n - 1) L <<= 1;
  return L;
}

double at(const ArrayXd& v, Index i) { return i < v.size() ? v[i] : 0.0; }

}  // namespace

// The FFT path convolves entries 0..n-1 of each factor, which covers every
// pair contributing to indices below n without wrap-around at L >= 2n-1;
// index n additionally needs the two pairs involving a[n] or b[n].
struct FixedFactorProduct::Impl {
  Index n = 0;
  Index L = 0;
  bool direct = true;
  ArrayXd b;
  std::vector<std::complex<double>> spectrum;
  mutable Eigen::FFT<double> fft;
  mutable std::vector<double> buf;
  mutable std::vector<std::complex<double>> work;

  void forward(const ArrayXd& v, std::vector<std::complex<double>>& out) const {
    buf.assign(L, 0.0);
    const Index m = std::min<Index>(v.size(), n);
    for (Index i = 0; i < m; ++i) buf[i] = v[i];
    fft.fwd(out, buf);
  }

  ArrayXd multiply(const ArrayXd& a) const {
    if (direct) return direct_product(a, b, n);
    forward(a, work);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] *= spectrum[i];
    fft.inv(buf, work, L);
    ArrayXd c(n + 1);
    for (Index i = 0; i <= n; ++i) c[i] = buf[i];
    c[n] += at(a, 0) * at(b, n) + at(a, n) * at(b, 0);
    return c;
  }
};

FixedFactorProduct::FixedFactorProduct(const ArrayXd& b, Index n) : impl_(std::make_unique<Impl>()) {
  impl_->n = n;
  impl_->b = b.head(std::min<Index>(b.size(), n + 1));
  impl_->direct = n <= kDirectProductLimit;
  if (!impl_->direct) {
    impl_->L = fft_size(n);
    impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    impl_->forward(impl_->b, impl_->spectrum);
  }
}

FixedFactorProduct::~FixedFactorProduct() = default;
FixedFactorProduct::FixedFactorProduct(FixedFactorProduct&&) noexcept = default;
FixedFactorProduct& FixedFactorProduct::operator=(FixedFactorProduct&&) noexcept = default;

ArrayXd FixedFactorProduct::operator()(const ArrayXd& a) const { return impl_->multiply(a); }

ArrayXd truncated_product(const ArrayXd& a, const ArrayXd& b, Index n) {
  if (n <= kDirectProductLimit) return direct_product(a, b, n);
  return FixedFactorProduct(b, n)(a);
}

}  // namespace bigjump
