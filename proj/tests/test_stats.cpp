#include <doctest.h>

#include <bigjump/rng.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <bigjump/stats.hpp>
#include <cmath>
#include <stdexcept>

using namespace bigjump;

TEST_CASE("clopper-pearson edge cases") {
  const double alpha = 0.05;
  Bracket all = clopper_pearson(3, 3, 0.95);
  CHECK(all.lo == doctest::Approx(std::pow(alpha / 2, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(all.hi == 1.0);
  Bracket none = clopper_pearson(0, 3, 0.95);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(1.0 - std::pow(alpha / 2, 1.0 / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(clopper_pearson(4, 3, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(clopper_pearson(1, 3, 1.0), std::invalid_argument);
}

TEST_CASE("empirical survival") {
  TailCurve c = empirical_survival({5, 5, 5}, {4}, 0.95);
  CHECK(c.est[0] == 1.0);
  CHECK(c.ci_lo[0] == doctest::Approx(std::pow(0.025, 1.0 / 3.0)));
  CHECK(c.ci_hi[0] == 1.0);
  TailCurve d = empirical_survival({1, 2, 3}, {10}, 0.95);
  CHECK(d.est[0] == 0.0);
  CHECK(d.ci_lo[0] == 0.0);
  CHECK(d.ci_hi[0] == doctest::Approx(1.0 - std::pow(0.025, 1.0 / 3.0)));
  CHECK_THROWS_AS(empirical_survival({}, {1}, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(empirical_survival({1}, {2, 1}, 0.95), std::invalid_argument);

  RngStream rng(30, 0);
  std::vector<std::int64_t> v;
  for (int i = 0; i < 1'000'000; ++i) v.push_back(static_cast<std::int64_t>(rng.next_u64() % 10));
  TailCurve u = empirical_survival(v, {-1, 0, 4, 9}, 0.99);
  CHECK(u.count_exceed[0] == 1'000'000);
  CHECK(u.count_exceed[3] == 0);
  CHECK(u.ci(2).contains(0.5));
  for (std::size_t i = 0; i < u.xs.size(); ++i) {
    CHECK(u.ci_lo[i] <= u.est[i]);
    CHECK(u.est[i] <= u.ci_hi[i]);
    if (i) CHECK(u.count_exceed[i] <= u.count_exceed[i - 1]);
  }

  // merging per-stream curves equals one pass over the pooled data
  std::vector<std::int64_t> a(v.begin(), v.begin() + 300000), b(v.begin() + 300000, v.end());
  TailCurve m = merge_curves({empirical_survival(a, u.xs, 0.99), empirical_survival(b, u.xs, 0.99)});
  CHECK(m.count_exceed == u.count_exceed);
  CHECK(m.ci_lo == u.ci_lo);
}

TEST_CASE("clopper-pearson coverage") {
  // exact coverage at p = 0.3, n = 200 by summing binomial masses
  const int n = 200;
  boost::math::binomial_distribution<double> bin(n, 0.3);
  double exact = 0.0;
  for (int k = 0; k <= n; ++k)
    if (clopper_pearson(k, n, 0.95).contains(0.3)) exact += boost::math::pdf(bin, k);
  CHECK(exact >= 0.95);

  // Monte Carlo coverage over 10^3 replications agrees with it
  RngStream rng(31, 0);
  int covered = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::int64_t k = 0;
    for (int i = 0; i < n; ++i) k += rng.uniform() < 0.3;
    covered += clopper_pearson(k, n, 0.95).contains(0.3);
  }
  const double se = std::sqrt(exact * (1 - exact) / 1000);
  CHECK(std::fabs(covered / 1000.0 - exact) <= 4 * se);
}

TEST_CASE("ratio diagnostic") {
  TailCurve c = empirical_survival({1, 2, 3, 4, 5, 6, 7, 8}, {2, 4, 6}, 0.9);
  auto same = ratio_diagnostic(c, c.est);
  for (const auto& r : same) {
    CHECK(r.ratio == 1.0);
    CHECK(r.ratio_lo <= 1.0);
    CHECK(r.ratio_hi >= 1.0);
  }
  auto half = ratio_diagnostic(c, {0.5, 0.5, 0.5});
  CHECK(half[0].ratio == doctest::Approx(0.75 / 0.5));
  CHECK(half[0].ratio_hi == doctest::Approx(c.ci_hi[0] / 0.5));
  CHECK_THROWS_AS(ratio_diagnostic(c, {0.5, 0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ratio_diagnostic(c, {0.5}), std::invalid_argument);
}

TEST_CASE("two-sample KS") {
  std::vector<std::int64_t> a{1, 2, 3, 4, 5};
  KsResult same = ks_two_sample(a, a, 0.01);
  CHECK(same.statistic == 0.0);
  CHECK_FALSE(same.reject);
  KsResult apart = ks_two_sample(std::vector<std::int64_t>(50, 0), std::vector<std::int64_t>(50, 1), 0.01);
  CHECK(apart.statistic == 1.0);
  CHECK(apart.reject);
  // c(0.05) = 1.3581
  KsResult c = ks_two_sample({0}, {0}, 0.05);
  CHECK(c.critical == doctest::Approx(1.3581 * std::sqrt(2.0)).epsilon(1e-4));
  // ties across samples are handled as one step
  KsResult t = ks_two_sample({0, 0, 1, 1}, {0, 1}, 0.05);
  CHECK(t.statistic == 0.0);
  CHECK_THROWS_AS(ks_two_sample({}, a, 0.01), std::invalid_argument);
}

TEST_CASE("attribution summary") {
  std::vector<Attribution> all_imm(5, Attribution{0, true});
  AttributionSummary s = attribution_summary(all_imm);
  CHECK(s.share("immigration") == 1.0);
  CHECK(s.dominant_share() == 1.0);
  std::vector<Attribution> mix{{0, true}, {1, true}, {1, false}, {3, true}};
  AttributionSummary m = attribution_summary(mix);
  CHECK(m.counts.at("gen 1") == 2);
  CHECK(m.share("gen 3") == 0.25);
  CHECK(m.share("gen 2") == 0.0);
  CHECK(m.dominant_share() == 0.75);
  CHECK_THROWS_AS(attribution_summary({}), std::invalid_argument);
}
