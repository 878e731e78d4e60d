#include "bigjump/model.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "numeric.hpp"

namespace bigjump {

using detail::CompensatedSum;
using detail::kE;

namespace {

constexpr std::int64_t kInt62 = std::int64_t{1} << 62;

// -phi'(t) / phi(t)
double phi_log_slope(double t, double eps) {
  return 1.0 / (1.0 + t) + (1.0 + eps) / ((kE + t) * std::log(kE + t));
}

// Composite 20-point Gauss-Legendre on panels of width <= h. The integrands
// below are analytic in the log variable, so this converges to rounding.
template <class F>
double integrate(F f, double a, double b, double h = 0.5) {
  using boost::math::quadrature::gauss;
  int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
  double w = (b - a) / panels;
  CompensatedSum s;
  for (int i = 0; i < panels; ++i) s.add(gauss<double, 20>::integrate(f, a + i * w, a + (i + 1) * w));
  return s.value();
}

constexpr int kHarmonicTable = 1 << 14;

const std::array<double, kHarmonicTable + 1>& harmonic_table() {
  static const auto table = [] {
    std::array<double, kHarmonicTable + 1> h{};
    CompensatedSum s;
    for (int i = 1; i <= kHarmonicTable; ++i) {
      s.add(1.0 / i);
      h[i] = s.value();
    }
    return h;
  }();
  return table;
}

}  // namespace

double phi(double t, double epsilon) {
  return 1.0 / ((1.0 + t) * std::pow(std::log(kE + t), 1.0 + epsilon));
}

double phi_derivative(double t, double epsilon) {
  return -phi(t, epsilon) * phi_log_slope(t, epsilon);
}

double phi_tail_integral(double t, double epsilon, double lambda) {
  // Substitute u = ln(e + s): ds = e^u du, 1 + s = e^u - (e - 1).
  const double u0 = std::log(kE + t);
  const double em1 = kE - 1.0;
  if (lambda == 0.0) {
    auto corr = [&](double u) {
      if (u > 700.0) return 0.0;
      return em1 / (std::exp(u) - em1) * std::pow(u, -1.0 - epsilon);
    };
    double head = std::pow(u0, -epsilon) / epsilon;
    return head + integrate(corr, u0, u0 + 40.0, 4.0);
  }
  auto g = [&](double u) {
    if (u > 700.0) return 0.0;
    double s = std::exp(u) - kE;
    double damp = std::exp(-lambda * s);
    if (damp == 0.0) return 0.0;
    return damp * std::pow(u, -1.0 - epsilon) / (1.0 - em1 * std::exp(-u));
  };
  const double u_end = std::max(u0 + 1.0, std::log(745.0 / lambda + kE));
  return integrate(g, u0, u_end);
}

double phi_tail_sum(double t, double epsilon, double lambda, double* error) {
  if (t < 1024.0) throw std::invalid_argument("phi_tail_sum needs t >= 1024");
  const double f = phi(t, epsilon) * std::exp(-lambda * t);
  const double h = phi_log_slope(t, epsilon) + lambda;
  // sum_{k>t} f(k) = int_t^inf f - f(t)/2 - f'(t)/12 + f'''(t)/720 - ...
  double value = phi_tail_integral(t, epsilon, lambda) - 0.5 * f + f * h / 12.0;
  if (error) *error = 4.0 * f * h * h * h / 720.0;
  return value;
}

double phi_tail_bound(double K, double epsilon) {
  return (kE + K) / (1.0 + K) * std::pow(std::log(kE + K), -epsilon) / epsilon;
}

ModelParams calibrate(double b, double epsilon, double tolerance, std::int64_t tail_table_cutoff) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("b out of range (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (tail_table_cutoff < 1024) throw std::invalid_argument("tail_table_cutoff must be >= 1024");

  // The partial sum is at least 1 and is accumulated with compensation, so
  // a few ulps of S is the floor on attainable accuracy.
  const double rounding = 8.0 * std::numeric_limits<double>::epsilon();
  CompensatedSum partial;
  std::int64_t k = 0;
  for (std::int64_t K = 1024; K <= (std::int64_t{1} << 26); K *= 2) {
    for (; k <= K; ++k) partial.add(phi(static_cast<double>(k), epsilon));
    double em_error = 0.0;
    double tail = phi_tail_sum(static_cast<double>(K), epsilon, 0.0, &em_error);
    double S = partial.value() + tail;
    double error = em_error + rounding * S;
    if (error <= tolerance) {
      ModelParams p;
      p.b = b;
      p.epsilon = epsilon;
      p.series_const = S;
      p.series_error = error;
      p.theta = b / S;
      p.tail_table_cutoff = tail_table_cutoff;
      return p;
    }
    if (rounding * S > tolerance) break;
  }
  throw std::runtime_error("calibration tolerance " + std::to_string(tolerance) +
                           " unreachable in double precision");
}

double harmonic(double n) {
  if (n < 1.0) return 0.0;
  n = std::floor(n);
  if (n <= kHarmonicTable) return harmonic_table()[static_cast<int>(n)];
  double inv = 1.0 / n;
  double inv2 = inv * inv;
  return std::log(n) + detail::kEulerGamma + 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

double LawA::survival_real(double x) {
  if (x < 0.0) return 1.0;
  return 1.0 / (1.0 + std::floor(x));
}

double LawA::pmf(std::int64_t k) {
  if (k < 1) return 0.0;
  double kd = static_cast<double>(k);
  return 1.0 / (kd * (kd + 1.0));
}

double LawA::truncated_mean(double t) {
  if (t < 1.0) return 0.0;
  return harmonic(std::floor(t) + 1.0) - 1.0;
}

double LawA::pgf_complement(double m) {
  if (m <= 0.0) return 1.0;
  if (m >= 1.0) return 0.0;
  double w = 1.0 - m;
  if (w < 0.01) {
    double s = 0.0, wk = 1.0;
    for (int k = 1; k < 40; ++k) {
      wk *= w;
      s += wk / (static_cast<double>(k) * (k + 1.0));
    }
    return s;
  }
  return 1.0 + m * std::log(m) / w;
}

std::int64_t LawA::from_uniform(double u, bool* saturated) {
  double v = std::floor(1.0 / u);
  if (v >= static_cast<double>(kInt62)) {
    if (saturated) *saturated = true;
    return kInt62;
  }
  if (saturated) *saturated = false;
  return static_cast<std::int64_t>(v);
}

LawB::LawB(const ModelParams& params) : params_(params) {
  if (params.theta <= 0.0 || params.series_const < 1.0)
    throw std::invalid_argument("LawB needs calibrated parameters");
  const std::int64_t K = params.tail_table_cutoff;
  const double eps = params.epsilon;
  survival_table_.resize(static_cast<std::size_t>(K) + 1);
  phi_tail_table_.resize(static_cast<std::size_t>(K) + 1);
  for (std::int64_t k = 0; k <= K; ++k)
    survival_table_[k] = params.theta * phi(static_cast<double>(k), eps);
  CompensatedSum tail;
  tail.add(phi_tail_sum(static_cast<double>(K), eps));
  phi_tail_table_[K] = tail.value();
  for (std::int64_t k = K; k > 0; --k) {
    tail.add(phi(static_cast<double>(k), eps));
    phi_tail_table_[k - 1] = tail.value();
  }
  for (double x = static_cast<double>(K); x < static_cast<double>(kInt62); x *= std::exp2(0.125)) {
    auto k = static_cast<std::int64_t>(x);
    if (!far_k_.empty() && k == far_k_.back()) continue;
    far_k_.push_back(k);
    far_tail_.push_back(phi_tail(k));
  }
  far_k_.push_back(kInt62);
  far_tail_.push_back(phi_tail(kInt62));
}

double LawB::survival(std::int64_t k) const {
  if (k < 0) return 1.0;
  if (k < static_cast<std::int64_t>(survival_table_.size())) return survival_table_[k];
  return params_.theta * phi(static_cast<double>(k), params_.epsilon);
}

double LawB::survival_real(double x) const {
  if (x < 0.0) return 1.0;
  double f = std::floor(x);
  if (f < static_cast<double>(survival_table_.size()))
    return survival_table_[static_cast<std::size_t>(f)];
  return params_.theta * phi(f, params_.epsilon);
}

double LawB::pmf(std::int64_t k) const {
  if (k < 0) return 0.0;
  if (k == 0) return 1.0 - params_.theta;
  // theta * (phi(k-1) - phi(k)) without cancellation, via D(k) = 1/phi(k).
  const double eps = params_.epsilon;
  const double kd = static_cast<double>(k);
  const double l0 = std::log(kE + kd - 1.0);
  const double delta = std::log1p(1.0 / (kE + kd - 1.0));
  const double p0 = std::pow(l0, 1.0 + eps);
  const double dpow = p0 * std::expm1((1.0 + eps) * std::log1p(delta / l0));
  const double d_prev = kd * p0;
  const double d_cur = (1.0 + kd) * (p0 + dpow);
  const double diff = p0 + dpow + kd * dpow;
  return params_.theta * diff / (d_prev * d_cur);
}

double LawB::slowly_varying(double x) const {
  return params_.theta * std::pow(std::log(kE + x), -1.0 - params_.epsilon);
}

double LawB::power_series_log(double lambda) const {
  if (lambda <= 0.0) return params_.series_const;
  const double theta = params_.theta;
  const std::int64_t K = params_.tail_table_cutoff;
  CompensatedSum s;
  if (lambda >= 1e-3) {
    const double ratio_bound = 1.0 / (-std::expm1(-lambda));
    for (std::int64_t k = 0;; ++k) {
      double term = survival(k) / theta * std::exp(-lambda * static_cast<double>(k));
      s.add(term);
      if (term * ratio_bound < 1e-18 * s.value()) break;
    }
    return s.value();
  }
  for (std::int64_t k = 0; k <= K; ++k)
    s.add(survival_table_[k] / theta * std::exp(-lambda * static_cast<double>(k)));
  s.add(phi_tail_sum(static_cast<double>(K), params_.epsilon, lambda));
  return s.value();
}

double LawB::power_series(double w) const {
  if (w >= 1.0) return params_.series_const;
  if (w <= 0.0) return 1.0;
  return power_series_log(-std::log(w));
}

double LawB::pgf(double z) const {
  if (z >= 1.0) return 1.0;
  return 1.0 - (1.0 - z) * params_.theta * power_series(z);
}

std::int64_t LawB::quantile(double u) const {
  if (u >= params_.theta) return 0;
  const auto& t = survival_table_;
  if (t.back() <= u) {
    auto it = std::lower_bound(t.begin(), t.end(), u, [](double a, double v) { return a > v; });
    return it - t.begin();
  }
  // theta * phi(lo) > u >= theta * phi(hi)
  std::int64_t lo = static_cast<std::int64_t>(t.size()) - 1;
  std::int64_t hi = lo;
  while (survival(hi) > u) {
    if (hi >= kInt62 / 2) return kInt62;
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    std::int64_t m = lo + (hi - lo) / 2;
    if (survival(m) > u) lo = m; else hi = m;
  }
  return hi;
}

std::int64_t LawB::positive_quantile(double u) const {
  return std::max<std::int64_t>(1, quantile(u * params_.theta));
}

double LawB::phi_tail(std::int64_t k) const {
  if (k < 0) return params_.series_const;
  if (k < static_cast<std::int64_t>(phi_tail_table_.size())) return phi_tail_table_[k];
  return phi_tail_sum(static_cast<double>(k), params_.epsilon);
}

std::pair<std::int64_t, std::int64_t> LawB::equilibrium_bracket(double u) const {
  const double target = u * params_.series_const;
  const auto& t = phi_tail_table_;
  if (t.back() <= target) {
    auto it = std::lower_bound(t.begin(), t.end(), target, [](double a, double v) { return a > v; });
    std::int64_t k = it - t.begin();
    return {k - 1, k};
  }
  // phi_tail(far_k_[j]) > target >= phi_tail(far_k_[j + 1])
  auto it = std::lower_bound(far_tail_.begin(), far_tail_.end(), target, [](double a, double v) { return a > v; });
  if (it == far_tail_.end()) return {kInt62, -1};
  std::size_t j = static_cast<std::size_t>(it - far_tail_.begin());
  return {far_k_[j - 1], far_k_[j]};
}

std::int64_t LawB::equilibrium_quantile(double u) const {
  auto [lo, hi] = equilibrium_bracket(u);
  if (hi < 0) return -1;
  if (hi - lo <= 1) return hi;
  // Illinois steps on f(k) = phi_tail(k) - target, with bisection whenever
  // the bracket fails to halve.
  const double target = u * params_.series_const;
  double flo = phi_tail(lo) - target, fhi = phi_tail(hi) - target;
  int side = 0;
  while (hi - lo > 1) {
    const std::int64_t width = hi - lo;
    double frac = flo / (flo - fhi);
    std::int64_t m = lo + static_cast<std::int64_t>(frac * static_cast<double>(width));
    m = std::clamp(m, lo + 1, hi - 1);
    double fm = phi_tail(m) - target;
    if (fm > 0.0) {
      lo = m;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = m;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo > width / 2 && hi - lo > 1) {
      std::int64_t mid = lo + (hi - lo) / 2;
      double fmid = phi_tail(mid) - target;
      if (fmid > 0.0) { lo = mid; flo = fmid; } else { hi = mid; fhi = fmid; }
      side = 0;
    }
  }
  return hi;
}

double GeometricLaw::survival(std::int64_t k) const {
  if (k < 0) return 1.0;
  return std::pow(ratio, static_cast<double>(k) + 1.0);
}

double GeometricLaw::pmf(std::int64_t k) const {
  if (k < 0) return 0.0;
  return (1.0 - ratio) * std::pow(ratio, static_cast<double>(k));
}

ExtinctionTable extinction_table(const LawB& law, int n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  ExtinctionTable t;
  t.p.assign(n_max + 1, 1.0);
  t.q.assign(n_max + 1, 0.0);
  const double theta = law.theta();
  const double b = law.mean();
  double p = theta;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      // 1 - g_B(1 - p) = p * theta * F(1 - p), with F evaluated at log(1-p).
      p = p * theta * law.power_series_log(-std::log1p(-p));
    }
    t.p[n] = p;
    t.q[n] = 1.0 - p;
    if (!(p <= std::pow(b, n)))
      throw std::logic_error("extinction table violates p[n] <= b^n at n = " + std::to_string(n));
  }
  return t;
}

double cluster_remainder_bound(double b, int depth) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("b out of range (0,1)");
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  CompensatedSum s;
  for (int n = depth + 1; n < depth + 4000; ++n) {
    double p = std::min(1.0, std::pow(b, n));
    if (p == 0.0) break;
    double inv = std::floor(1.0 / p);
    double term = p * (1.0 + LawA::truncated_mean(1.0 / p)) + LawA::survival_real(inv);
    s.add(term);
    if (term < 1e-18 * s.value()) break;
  }
  return s.value();
}

Bracket mean_identity_bracket(const LawB& law, std::int64_t K) {
  const double eps = law.params().epsilon;
  CompensatedSum s;
  for (std::int64_t k = 0; k <= K; ++k) s.add(phi(static_cast<double>(k), eps));
  const double theta = law.theta();
  const double Kd = static_cast<double>(K);
  return {theta * (s.value() + phi_tail_integral(Kd + 1.0, eps)),
          theta * (s.value() + phi_tail_integral(Kd, eps))};
}

}  // namespace bigjump
