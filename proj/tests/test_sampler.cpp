#include <doctest.h>

#include <bigjump/oracle.hpp>
#include <bigjump/sampler.hpp>
#include <bigjump/stats.hpp>
#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace bigjump;

namespace {

constexpr std::int64_t kTruncation = 1 << 12;

// |mean of min(v, K) - sum_{k<K} surv(k)| in units of its standard error.
template <class Surv>
double truncated_mean_gap(const std::vector<std::int64_t>& v, Surv surv) {
  std::vector<std::int64_t> t;
  t.reserve(v.size());
  for (auto x : v) t.push_back(std::min(x, kTruncation));
  test::Moments m = test::moments(t);
  double exact = 0.0;
  for (std::int64_t k = 0; k < kTruncation; ++k) exact += surv(k);
  return std::fabs(m.mean - exact) / (m.sd / std::sqrt(static_cast<double>(t.size())));
}

}  // namespace

TEST_CASE("sample_A survival") {
  Sampler s(test::law());
  RngStream rng(11, 0);
  std::vector<std::int64_t> v;
  for (int i = 0; i < 1'000'000; ++i) v.push_back(s.sample_A(rng));
  TailCurve c = empirical_survival(v, {1, 10, 100}, 0.99);
  for (std::size_t i = 0; i < c.xs.size(); ++i) CHECK(c.ci(i).contains(1.0 / (1.0 + c.xs[i])));
  CHECK(s.events().a_overflows == 0);
}

TEST_CASE("sample_B") {
  const LawB& B = test::law();
  Sampler s(B);
  CHECK(B.quantile(B.theta() + 1e-9) == 0);
  CHECK(B.quantile(0.999) == 0);
  RngStream rng(12, 0);
  std::vector<std::int64_t> v;
  for (int i = 0; i < 1'000'000; ++i) v.push_back(s.sample_B(rng));
  // B has infinite variance, so the mean is checked through min(B, K),
  // E min(B, K) = sum_{k<K} P(B > k).
  CHECK(truncated_mean_gap(v, [&](std::int64_t k) { return B.survival(k); }) <= 4.0);
  TailCurve c = empirical_survival(v, {0, 10}, 0.99);
  CHECK(c.ci(0).contains(B.theta()));
  CHECK(c.ci(1).contains(B.survival(10)));
  // B given B >= 1
  std::vector<std::int64_t> pos;
  for (int i = 0; i < 200000; ++i) pos.push_back(s.sample_B_positive(rng));
  TailCurve cp = empirical_survival(pos, {0, 1, 5}, 0.99);
  CHECK(cp.est[0] == 1.0);
  CHECK(cp.ci(1).contains(B.survival(1) / B.theta()));
  CHECK(cp.ci(2).contains(B.survival(5) / B.theta()));
}

TEST_CASE("sample_Dn") {
  const LawB& B = test::law();
  Sampler s(B);
  const ExtinctionTable& t = s.extinction();
  RngStream rng(13, 0);
  std::vector<std::int64_t> d2;
  for (int i = 0; i < 1'000'000; ++i) d2.push_back(s.sample_Dn(2, rng));
  std::int64_t zeros = std::count(d2.begin(), d2.end(), 0);
  CHECK(clopper_pearson(zeros, 1'000'000, 0.99).contains(t.q[2]));
  ClusterOracle o(B, kTruncation);
  for (int n = 1; n <= 5; ++n) {
    std::vector<std::int64_t> d;
    for (int i = 0; i < 1'000'000; ++i) d.push_back(s.sample_Dn(n, rng));
    const Pmf& g = o.generation(n);
    CHECK(truncated_mean_gap(d, [&](std::int64_t k) { return g.survival(k).mid(); }) <= 4.0);
    // the oracle's own mean bracket closes on b^n
    CHECK(g.mean_lower() <= std::pow(0.5, n));
  }
  CHECK(s.events().saturations == 0);
  CHECK_THROWS_AS(s.sample_Dn(0, rng), std::invalid_argument);
}

TEST_CASE("conditional generation draws") {
  // n = 3 uses rejection, n = 8 the spine construction. Both are compared
  // with P(D_n > k) / p[n] from the truncated-pmf oracle.
  const LawB& B = test::law();
  Sampler s(B);
  const ExtinctionTable& t = s.extinction();
  ClusterOracle o(B, 1 << 10);
  RngStream rng(14, 0);
  for (int n : {3, 8}) {
    std::vector<std::int64_t> v;
    for (int i = 0; i < 200000; ++i) v.push_back(s.sample_Dn_positive(n, rng));
    CHECK(*std::min_element(v.begin(), v.end()) >= 1);
    TailCurve c = empirical_survival(v, {1, 3, 10, 100}, 0.999);
    for (std::size_t i = 0; i < c.xs.size(); ++i) {
      Bracket ex = o.generation(n).survival(static_cast<std::int64_t>(c.xs[i]));
      Bracket cond{ex.lo / t.p[n], ex.hi / t.p[n]};
      CHECK(c.ci(i).overlaps(cond));
    }
  }
  CHECK(s.events().total() == 0);
}

TEST_CASE("chain step") {
  Sampler s(test::law());
  RngStream r1(15, 0), r2(15, 0);
  for (int i = 0; i < 100; ++i) CHECK(s.chain_step(0, r1) == s.sample_A(r2));
  CHECK_THROWS_AS(s.chain_step(-1, r1), std::invalid_argument);

  // thinned vs naive, x = 100
  RngStream ra(16, 0), rb(16, 1);
  std::vector<std::int64_t> thin, naive;
  for (int i = 0; i < 100000; ++i) {
    thin.push_back(s.chain_step(100, ra));
    naive.push_back(s.chain_step_naive(100, rb));
  }
  CHECK_FALSE(ks_two_sample(thin, naive, 0.01).reject);
}

TEST_CASE("run_chain") {
  Sampler s(test::law());
  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.n_samples = 1;
  RngStream r1(18, 0), r2(18, 0);
  auto v = run_chain(s, cfg, r1);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == s.sample_A(r2));

  ChainConfig bad;
  bad.thinning_lag = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.burn_in = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.max_population = 1000;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // reproducible, and two streams agree with each other statistically
  cfg.burn_in = 1000;
  cfg.n_samples = 100000;
  RngStream a(19, 0), a2(19, 0), b(19, 1);
  auto x = run_chain(s, cfg, a);
  CHECK(x == run_chain(s, cfg, a2));
  auto y = run_chain(s, cfg, b);
  TailCurve cx = empirical_survival(x, {10, 100}, 0.99), cy = empirical_survival(y, {10, 100}, 0.99);
  CHECK(cx.ci(0).overlaps(cy.ci(0)));
  CHECK(cx.ci(1).overlaps(cy.ci(1)));
}

TEST_CASE("sample_cluster") {
  Sampler s(test::law());
  RngStream rng(20, 0);
  CHECK_THROWS_AS(s.sample_cluster(0, rng), std::invalid_argument);
  CHECK_THROWS_AS(s.sample_cluster(65, rng), std::out_of_range);
  int all_zero = 0;
  for (int i = 0; i < 20000; ++i) {
    ClusterSample c = s.sample_cluster(40, rng);
    std::int64_t sum = c.immigration;
    bool zero = true;
    for (auto g : c.gen_contrib) {
      sum += g;
      zero = zero && g == 0;
    }
    CHECK(sum == c.value);
    if (zero) {
      ++all_zero;
      CHECK(c.value == c.immigration);
    }
    CHECK(c.remainder_bound == doctest::Approx(2.79118441980421152e-11).epsilon(1e-10));
    CHECK(static_cast<int>(c.gen_immigrants.size()) == 40);
  }
  CHECK(all_zero > 0);
  CHECK(s.events().saturations == 0);
}

TEST_CASE("saturation is counted") {
  SamplerCaps caps;
  caps.max_population = std::int64_t{1} << 20;
  Sampler s(test::law(), 64, caps);
  RngStream rng(21, 0);
  std::int64_t v = s.chain_step(std::int64_t{1} << 30, rng);
  CHECK(v == caps.max_population);
  CHECK(s.events().saturations >= 1);
}

TEST_CASE("attribute") {
  ClusterSample c;
  c.depth = 2;
  c.gen_contrib = {0, 0};
  c.gen_immigrants = {1, 1};
  c.immigration = 2000;
  c.value = 2000;
  Attribution a = attribute(c, 1000);
  CHECK(a.label() == "immigration");
  CHECK(a.component == 0);
  CHECK(a.dominant);

  c.immigration = 250;
  c.gen_contrib = {1000, 0};
  c.value = 1250;
  a = attribute(c, 1000);
  CHECK(a.label() == "gen 1");
  CHECK(a.dominant);

  // ties go to the lowest index
  c.immigration = 600;
  c.gen_contrib = {600, 600};
  c.value = 1800;
  CHECK(attribute(c, 1000).component == 0);
  c.immigration = 0;
  c.value = 1200;
  CHECK(attribute(c, 1000).component == 1);

  // spread out: no single dominant part
  c.immigration = 300;
  c.gen_contrib = {300, 300};
  c.value = 900;
  CHECK_THROWS_AS(attribute(c, 1000), std::invalid_argument);
  a = attribute(c, 800);
  CHECK_FALSE(a.dominant);

  c.gen_contrib = {0, 5000};
  c.gen_immigrants = {1, 4000};
  c.value = 5300;
  a = attribute(c, 1000);
  CHECK(a.component == 2);
  CHECK(a_driven(c, a, 1000, 0.5));
  c.gen_immigrants = {1, 100};
  CHECK_FALSE(a_driven(c, a, 1000, 0.5));
}
