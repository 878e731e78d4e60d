#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bigjump/bracket.hpp"
#include "bigjump/sampler.hpp"

namespace bigjump {

// Exact two-sided binomial interval for k successes in n trials.
Bracket clopper_pearson(std::int64_t k, std::int64_t n, double level);

struct TailCurve {
  std::vector<double> xs;
  std::vector<std::int64_t> count_exceed;  // #{samples > x}
  std::int64_t n_total = 0;
  double level = 0.0;
  std::vector<double> est;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;

  Bracket ci(std::size_t i) const { return {ci_lo[i], ci_hi[i]}; }
};

// Throws std::invalid_argument on empty samples, unsorted xs or level outside (0,1).
TailCurve empirical_survival(std::vector<std::int64_t> samples, const std::vector<double>& xs, double level);

// Combines per-stream curves over the same grid by adding counts.
TailCurve merge_curves(const std::vector<TailCurve>& parts);

struct RatioRow {
  double x = 0.0;
  double est = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double predictor = 0.0;
  double ratio = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
};

// est / predictor with the CI endpoints divided the same way. Throws if a
// predictor value is not positive.
std::vector<RatioRow> ratio_diagnostic(const TailCurve& curve, const std::vector<double>& predictor);

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;
  bool reject = false;
};

// Critical value c(alpha) sqrt((m+n)/(mn)) with c(alpha) = sqrt(-ln(alpha/2)/2).
KsResult ks_two_sample(std::vector<std::int64_t> a, std::vector<std::int64_t> b, double alpha);

struct AttributionSummary {
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  std::int64_t dominant = 0;

  double share(const std::string& label) const;
  double dominant_share() const { return total ? static_cast<double>(dominant) / total : 0.0; }
};

AttributionSummary attribution_summary(const std::vector<Attribution>& attributions);

}  // namespace bigjump
