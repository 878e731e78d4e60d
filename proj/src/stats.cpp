#include "bigjump/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <stdexcept>

namespace bigjump {

Bracket clopper_pearson(std::int64_t k, std::int64_t n, double level) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("need 0 <= k <= n, n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0,1)");
  const double alpha = 1.0 - level;
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  Bracket b;
  b.lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
  b.hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
  return b;
}

namespace {

void fill_intervals(TailCurve& c) {
  c.est.assign(c.xs.size(), 0.0);
  c.ci_lo.assign(c.xs.size(), 0.0);
  c.ci_hi.assign(c.xs.size(), 0.0);
  for (std::size_t i = 0; i < c.xs.size(); ++i) {
    if (i > 0 && c.count_exceed[i] > c.count_exceed[i - 1])
      throw std::logic_error("exceedance counts must be non-increasing");
    c.est[i] = static_cast<double>(c.count_exceed[i]) / static_cast<double>(c.n_total);
    Bracket b = clopper_pearson(c.count_exceed[i], c.n_total, c.level);
    c.ci_lo[i] = b.lo;
    c.ci_hi[i] = b.hi;
  }
}

}  // namespace

TailCurve empirical_survival(std::vector<std::int64_t> samples, const std::vector<double>& xs, double level) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  if (!std::is_sorted(xs.begin(), xs.end())) throw std::invalid_argument("threshold grid must be sorted");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0,1)");
  std::sort(samples.begin(), samples.end());
  TailCurve c;
  c.xs = xs;
  c.n_total = static_cast<std::int64_t>(samples.size());
  c.level = level;
  auto it = samples.begin();
  for (double x : xs) {
    it = std::upper_bound(it, samples.end(), x,
                          [](double v, std::int64_t s) { return v < static_cast<double>(s); });
    c.count_exceed.push_back(samples.end() - it);
  }
  fill_intervals(c);
  return c;
}

TailCurve merge_curves(const std::vector<TailCurve>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to merge");
  TailCurve c;
  c.xs = parts[0].xs;
  c.level = parts[0].level;
  c.count_exceed.assign(c.xs.size(), 0);
  for (const TailCurve& p : parts) {
    if (p.xs != c.xs || p.level != c.level) throw std::invalid_argument("curves differ in grid or level");
    c.n_total += p.n_total;
    for (std::size_t i = 0; i < c.xs.size(); ++i) c.count_exceed[i] += p.count_exceed[i];
  }
  fill_intervals(c);
  return c;
}

std::vector<RatioRow> ratio_diagnostic(const TailCurve& curve, const std::vector<double>& predictor) {
  if (predictor.size() != curve.xs.size()) throw std::invalid_argument("predictor length differs from grid");
  std::vector<RatioRow> rows;
  for (std::size_t i = 0; i < curve.xs.size(); ++i) {
    const double p = predictor[i];
    if (!(p > 0.0)) throw std::invalid_argument("predictor must be positive");
    rows.push_back({curve.xs[i], curve.est[i], curve.ci_lo[i], curve.ci_hi[i], p, curve.est[i] / p,
                    curve.ci_lo[i] / p, curve.ci_hi[i] / p});
  }
  return rows;
}

KsResult ks_two_sample(std::vector<std::int64_t> a, std::vector<std::int64_t> b, double alpha) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double m = static_cast<double>(a.size()), n = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const std::int64_t v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  KsResult r;
  r.statistic = d;
  r.critical = std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((m + n) / (m * n));
  r.reject = r.statistic > r.critical;
  return r;
}

double AttributionSummary::share(const std::string& label) const {
  auto it = counts.find(label);
  return it == counts.end() || total == 0 ? 0.0 : static_cast<double>(it->second) / total;
}

AttributionSummary attribution_summary(const std::vector<Attribution>& attributions) {
  if (attributions.empty()) throw std::invalid_argument("no exceedances to summarize");
  AttributionSummary s;
  for (const Attribution& a : attributions) {
    ++s.counts[a.label()];
    if (a.dominant) ++s.dominant;
  }
  s.total = static_cast<std::int64_t>(attributions.size());
  return s;
}

}  // namespace bigjump
