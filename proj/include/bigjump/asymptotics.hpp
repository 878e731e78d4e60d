#pragma once

#include <vector>

#include "bigjump/model.hpp"

namespace bigjump {

// 1 / ((1 - b)(1 + x)).
double leading_tail(double b, double x);

struct SeriesIdentities {
  double s1 = 0.0;  // sum n b^(n-1) = 1/(1-b)^2
  double s2 = 0.0;  // sum n^2 b^(n-1) = (1+b)/(1-b)^3
  double s1_numeric = 0.0;
  double s2_numeric = 0.0;
  int terms = 0;
};

// Closed forms plus partial sums run until the terms stop changing the sum.
// Throws std::invalid_argument unless 0 < b < 1.
SeriesIdentities series_identities(double b);
SeriesIdentities series_partial_sums(double b, int terms);

// [ln x s1 + ln(1/b) s2] L(x) / (1 + x), using ln(x b^-n) = ln x + n ln(1/b).
// Throws for x <= 1.
double second_scale(const LawB& law, double x);
// sum_n n b^(n-1) ln(x b^-n) L(x) / (1 + x), summed directly.
double second_scale_series(const LawB& law, double x);

// n b^(n-1) P(B > x).
double generation_tail_pred(const LawB& law, int n, double x);
// E[A 1{A <= x b^-n}] n b^(n-1) P(B > x) + P(A > floor(x b^-n)).
double per_generation_pred(const LawB& law, int n, double x);

// Smallest n with b^n (2 + ln(1 + b^-n)) < 1e-16.
int geometric_n_max(double b);

struct ATailSums {
  double exact = 0.0;      // sum_n 1/(1 + floor(x b^-n))
  double asymptote = 0.0;  // b / ((1 - b) x)
  int terms = 0;
};

// n_max <= 0 picks the cutoff from the geometric remainder b^(m+1)/((1-b)x).
ATailSums a_tail_sums(double b, double x, int n_max = 0);

// sum_n E[A 1{A <= x b^-n}] n b^(n-1) P(B > x).
double correction_sum(const LawB& law, double x);

struct CorrectionSweep {
  std::vector<double> xs;
  std::vector<double> scaled;  // correction_sum(x) * x
  double x0 = 0.0;             // scaled is strictly decreasing from x0 on
  bool decreasing = false;     // x0 is the first grid point
};

CorrectionSweep correction_sweep(const LawB& law, const std::vector<double>& xs);

// P(A > x) + sum_{n <= n_max} per_generation_pred(n, x).
double decomposition_pred(const LawB& law, double x, int n_max = 0);

struct PredictionRow {
  double x = 0.0;
  double leading = 0.0;
  double second_scale = 0.0;  // 0 for x <= 1
  double two_scale_total = 0.0;
  double decomposition = 0.0;
  double a_tail_exact = 0.0;
  double a_tail_asym = 0.0;
  std::vector<double> per_gen;  // n = 1..n_max
};

std::vector<PredictionRow> prediction_table(const LawB& law, const std::vector<double>& xs, int n_max);

}  // namespace bigjump
