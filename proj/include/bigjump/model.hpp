#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bigjump/bracket.hpp"

namespace bigjump {

// phi(t) = 1 / ((1 + t) * ln(e + t)^(1 + eps)), the shape of the offspring tail.
double phi(double t, double epsilon);
double phi_derivative(double t, double epsilon);

// Integral of phi(s) * exp(-lambda * s) over s in [t, inf).
double phi_tail_integral(double t, double epsilon, double lambda = 0.0);

// Sum of phi(k) * exp(-lambda * k) over integers k > t, for t >= 1024,
// by Euler-Maclaurin with the integral above. `error` receives a bound on
// the neglected Euler-Maclaurin remainder.
double phi_tail_sum(double t, double epsilon, double lambda = 0.0, double* error = nullptr);

// Crude tail bound: sum_{k>K} phi(k) <= (e+K)/(1+K) * eps^-1 * ln(e+K)^-eps.
double phi_tail_bound(double K, double epsilon);

struct ModelParams {
  double b = 0.5;
  double epsilon = 1.0;
  double theta = 0.0;
  double series_const = 0.0;  // S(eps) = sum_{k>=0} phi(k)
  double series_error = 0.0;  // bound on |S computed - S|
  std::int64_t tail_table_cutoff = 1 << 16;
};

// Throws std::invalid_argument for b outside (0,1), eps <= 0, tolerance <= 0,
// and std::runtime_error if tolerance cannot be met.
ModelParams calibrate(double b, double epsilon, double tolerance = 1e-13,
                      std::int64_t tail_table_cutoff = 1 << 16);

// Immigration law: P(A > k) = 1/(1+k), A >= 1.
struct LawA {
  static double survival(std::int64_t k) { return 1.0 / (1.0 + static_cast<double>(k)); }
  static double survival_real(double x);  // P(A > x) for real x >= 0
  static double pmf(std::int64_t k);
  // E[A 1{A <= t}] = H_{floor(t)+1} - 1.
  static double truncated_mean(double t);
  // E[w^A] as a function of m = 1 - w, accurate for small m.
  static double pgf_complement(double m);
  static std::int64_t from_uniform(double u, bool* saturated = nullptr);
};

// Harmonic number H_n, exact summation below 2^14 and asymptotic above.
double harmonic(double n);

// Offspring law: P(B > k) = theta * phi(k).
class LawB {
 public:
  explicit LawB(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  double theta() const { return params_.theta; }
  double mean() const { return params_.b; }

  double survival(std::int64_t k) const;
  double survival_real(double x) const;  // P(B > x) = theta * phi(floor(x))
  double pmf(std::int64_t k) const;
  // L(x) = theta * ln(e + x)^(-1-eps), so that survival(x) = L(x)/(1+x).
  double slowly_varying(double x) const;

  // F(w) = sum_k phi(k) w^k, and the same with w = exp(-lambda).
  double power_series(double w) const;
  double power_series_log(double lambda) const;
  double pgf(double z) const;

  // Smallest k with survival(k) <= u. Inverse transform for u uniform.
  std::int64_t quantile(double u) const;
  // Smallest k >= 1 with phi(k) <= u: the law of B given B >= 1.
  std::int64_t positive_quantile(double u) const;

  // sum_{i>k} phi(i).
  double phi_tail(std::int64_t k) const;
  // Law with P(E > k) = phi_tail(k) / S, i.e. P(E = k) = P(B > k) / b.
  // Returns -1 if the quantile exceeds 2^62.
  std::int64_t equilibrium_quantile(double u) const;
  // Cheap bracket lo < quantile <= hi from tables; hi = -1 beyond 2^62.
  std::pair<std::int64_t, std::int64_t> equilibrium_bracket(double u) const;

 private:
  ModelParams params_;
  std::vector<double> survival_table_;  // theta * phi(k), k <= K
  std::vector<double> phi_tail_table_;  // sum_{i>k} phi(i), k <= K
  std::vector<std::int64_t> far_k_;     // K * 2^(j/8) up to 2^62
  std::vector<double> far_tail_;        // phi_tail at far_k_
};

// Light-tailed control: P(G = k) = (1 - r) r^k.
struct GeometricLaw {
  double ratio = 0.5;
  double survival(std::int64_t k) const;
  double pmf(std::int64_t k) const;
};

// p[n] = P(D_n >= 1), q[n] = 1 - p[n] for n = 1..n_max; index 0 unused.
struct ExtinctionTable {
  std::vector<double> p;
  std::vector<double> q;
  int n_max() const { return static_cast<int>(p.size()) - 1; }
};

// Throws std::logic_error if p[n] <= b^n fails at any n.
ExtinctionTable extinction_table(const LawB& law, int n_max);

// Bound on P(sum_{n>m} Y_n >= 1) for the cluster terms Y_n beyond depth m:
// sum_{n>m} [p (1 + E[A 1{A <= 1/p}]) + P(A > floor(1/p))], p = min(1, b^n).
double cluster_remainder_bound(double b, int depth);

// theta * [sum_{k<=K} phi(k) + integral bounds of the rest]; contains b.
Bracket mean_identity_bracket(const LawB& law, std::int64_t K);

}  // namespace bigjump
