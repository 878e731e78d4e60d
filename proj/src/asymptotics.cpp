#include "bigjump/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include "numeric.hpp"

namespace bigjump {

namespace {

void check_b(double b) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("b out of range (0,1)");
}

double survival_B(const LawB& law, double x) { return law.survival_real(x); }

}  // namespace

double leading_tail(double b, double x) {
  check_b(b);
  if (x < 0.0) throw std::invalid_argument("x must be >= 0");
  return 1.0 / ((1.0 - b) * (1.0 + x));
}

SeriesIdentities series_partial_sums(double b, int terms) {
  check_b(b);
  SeriesIdentities s;
  s.s1 = 1.0 / ((1.0 - b) * (1.0 - b));
  s.s2 = (1.0 + b) / ((1.0 - b) * (1.0 - b) * (1.0 - b));
  detail::CompensatedSum a, c;
  double pw = 1.0;
  for (int n = 1; n <= terms; ++n) {
    a.add(n * pw);
    c.add(static_cast<double>(n) * n * pw);
    pw *= b;
  }
  s.s1_numeric = a.value();
  s.s2_numeric = c.value();
  s.terms = terms;
  return s;
}

SeriesIdentities series_identities(double b) {
  check_b(b);
  // n^2 b^(n-1) below 1e-18 of the sum
  int terms = 1;
  double pw = 1.0;
  for (int n = 1; n < 100000; ++n) {
    pw *= b;
    if (static_cast<double>(n + 1) * (n + 1) * pw < 1e-18) {
      terms = n + 1;
      break;
    }
  }
  return series_partial_sums(b, terms);
}

double second_scale(const LawB& law, double x) {
  if (!(x > 1.0)) throw std::invalid_argument("second_scale needs x > 1");
  const double b = law.mean();
  SeriesIdentities s = series_partial_sums(b, 0);
  double coef = std::log(x) * s.s1 + std::log(1.0 / b) * s.s2;
  return coef * law.slowly_varying(x) / (1.0 + x);
}

double second_scale_series(const LawB& law, double x) {
  if (!(x > 1.0)) throw std::invalid_argument("second_scale needs x > 1");
  const double b = law.mean();
  const double lx = std::log(x), lb = std::log(1.0 / b);
  detail::CompensatedSum s;
  double pw = 1.0;
  for (int n = 1; n < 100000; ++n) {
    double term = n * pw * (lx + n * lb);
    s.add(term);
    if (std::fabs(term) < 1e-17 * std::fabs(s.value())) break;
    pw *= b;
  }
  return s.value() * law.slowly_varying(x) / (1.0 + x);
}

double generation_tail_pred(const LawB& law, int n, double x) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return n * std::pow(law.mean(), n - 1) * survival_B(law, x);
}

double per_generation_pred(const LawB& law, int n, double x) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (x < 0.0) throw std::invalid_argument("x must be >= 0");
  const double t = x * std::pow(law.mean(), -n);
  return LawA::truncated_mean(t) * generation_tail_pred(law, n, x) + LawA::survival_real(t);
}

int geometric_n_max(double b) {
  check_b(b);
  for (int n = 1; n < 100000; ++n) {
    double bn = std::pow(b, n);
    if (bn * (2.0 + std::log1p(1.0 / bn)) < 1e-16) return n;
  }
  throw std::runtime_error("geometric cutoff not reached");
}

ATailSums a_tail_sums(double b, double x, int n_max) {
  check_b(b);
  if (!(x > 0.0)) throw std::invalid_argument("x must be > 0");
  ATailSums r;
  r.asymptote = b / ((1.0 - b) * x);
  detail::CompensatedSum s;
  int n = 1;
  for (;; ++n) {
    if (n_max > 0 && n > n_max) break;
    s.add(LawA::survival_real(x * std::pow(b, -n)));
    double rest = std::pow(b, n + 1) / ((1.0 - b) * x);
    if (n_max <= 0 && rest < 1e-16 * s.value()) break;
  }
  r.exact = s.value();
  r.terms = n_max > 0 ? n_max : n;
  return r;
}

double correction_sum(const LawB& law, double x) {
  if (!(x > 1.0)) throw std::invalid_argument("correction_sum needs x > 1");
  const double b = law.mean();
  const double sb = survival_B(law, x);
  detail::CompensatedSum s;
  double pw = 1.0;
  for (int n = 1; n < 100000; ++n) {
    double term = LawA::truncated_mean(x / (pw * b)) * n * pw * sb;
    s.add(term);
    if (term < 1e-17 * s.value()) break;
    pw *= b;
  }
  return s.value();
}

CorrectionSweep correction_sweep(const LawB& law, const std::vector<double>& xs) {
  CorrectionSweep c;
  c.xs = xs;
  for (double x : xs) c.scaled.push_back(correction_sum(law, x) * x);
  if (xs.empty()) return c;
  std::size_t start = xs.size() - 1;
  while (start > 0 && c.scaled[start - 1] > c.scaled[start]) --start;
  c.x0 = xs[start];
  c.decreasing = start == 0;
  return c;
}

double decomposition_pred(const LawB& law, double x, int n_max) {
  if (x < 0.0) throw std::invalid_argument("x must be >= 0");
  if (n_max <= 0) n_max = geometric_n_max(law.mean());
  detail::CompensatedSum s;
  s.add(LawA::survival_real(x));
  for (int n = 1; n <= n_max; ++n) s.add(per_generation_pred(law, n, x));
  return s.value();
}

std::vector<PredictionRow> prediction_table(const LawB& law, const std::vector<double>& xs, int n_max) {
  if (n_max <= 0) n_max = geometric_n_max(law.mean());
  const double b = law.mean();
  std::vector<PredictionRow> rows;
  for (double x : xs) {
    PredictionRow r;
    r.x = x;
    r.leading = leading_tail(b, x);
    r.second_scale = x > 1.0 ? second_scale(law, x) : 0.0;
    r.two_scale_total = r.leading + r.second_scale;
    r.decomposition = decomposition_pred(law, x, n_max);
    if (x > 0.0) {
      ATailSums a = a_tail_sums(b, x);
      r.a_tail_exact = a.exact;
      r.a_tail_asym = a.asymptote;
    }
    for (int n = 1; n <= n_max; ++n) r.per_gen.push_back(per_generation_pred(law, n, x));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bigjump
