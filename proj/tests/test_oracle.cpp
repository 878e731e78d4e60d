#include <doctest.h>

#include <bigjump/oracle.hpp>
#include <cmath>

#include "helpers.hpp"

using namespace bigjump;

namespace {

// Brute-force law of sum_{i<=C} Y_i by enumerating every count and every
// ordered tuple of summand values.
std::vector<double> enumerate_compound(const std::vector<double>& count, const std::vector<double>& summand,
                                       std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t c = 0; c < count.size(); ++c) {
    std::vector<double> dist{1.0};
    for (std::size_t i = 0; i < c; ++i) {
      std::vector<double> next(dist.size() + summand.size() - 1, 0.0);
      for (std::size_t a = 0; a < dist.size(); ++a)
        for (std::size_t b = 0; b < summand.size(); ++b) next[a + b] += dist[a] * summand[b];
      dist = next;
    }
    for (std::size_t k = 0; k < dist.size() && k < len; ++k) out[k] += count[c] * dist[k];
  }
  return out;
}

}  // namespace

TEST_CASE("pmf_of") {
  Pmf a = pmf_of(LawA{}, 3);
  CHECK(a.mass()[0] == 0.0);
  CHECK(a.mass()[1] == doctest::Approx(0.5));
  CHECK(a.mass()[2] == doctest::Approx(1.0 / 6.0));
  CHECK(a.mass()[3] == doctest::Approx(1.0 / 12.0));
  CHECK(a.overflow() == doctest::Approx(0.25));
  a.validate();

  const LawB& B = test::law();
  Pmf b = pmf_of(B, 0);
  CHECK(b.mass()[0] == doctest::Approx(1.0 - B.theta()));
  CHECK(b.overflow() == doctest::Approx(B.theta()));
  b.validate();

  Pmf big = pmf_of(B, 1000);
  big.validate();
  for (std::int64_t x : {0, 10, 999, 1000}) {
    Bracket s = big.survival(x);
    CHECK(s.lo <= s.hi);
    // masses come from differences of the survival function; allow rounding
    CHECK(s.lo - 1e-15 <= B.survival(x));
    CHECK(B.survival(x) <= s.hi + 1e-15);
  }
}

TEST_CASE("convolve") {
  Pmf p = pmf_of(test::law(), 64);
  Pmf d0 = Pmf::dirac(0, 64);
  CHECK(test::max_abs_diff(convolve(d0, p), p) < 1e-16);

  Pmf bern = Pmf::from_masses({0.5, 0.5}, 4);
  Pmf sq = convolve(bern, bern);
  CHECK(sq.mass()[0] == doctest::Approx(0.25));
  CHECK(sq.mass()[1] == doctest::Approx(0.5));
  CHECK(sq.mass()[2] == doctest::Approx(0.25));
  CHECK(sq.overflow() < 1e-16);

  Pmf q = pmf_of(LawA{}, 64);
  Pmf pq = convolve(p, q), qp = convolve(q, p);
  CHECK(test::max_abs_diff(pq, qp) <= 1e-15);
  CHECK(std::fabs(pq.overflow() - qp.overflow()) <= 1e-15);
  pq.validate();
  // associativity
  Pmf r = pmf_of(GeometricLaw{0.3}, 64);
  CHECK(test::max_abs_diff(convolve(convolve(p, q), r), convolve(p, convolve(q, r))) <= 1e-12);
  CHECK_THROWS_AS(convolve(p, Pmf::dirac(0, 10)), std::invalid_argument);

  // large cutoff goes through the transform path; compare against direct sums
  Pmf bigb = pmf_of(test::law(), 5000), biga = pmf_of(LawA{}, 5000);
  Pmf c = convolve(biga, bigb);
  for (std::int64_t k : {0, 1, 17, 2500, 5000}) {
    double direct = 0.0;
    for (std::int64_t j = 0; j <= k; ++j) direct += biga.mass()[j] * bigb.mass()[k - j];
    CHECK(std::fabs(c.mass()[k] - direct) < 1e-16);
  }
}

TEST_CASE("compound small cases") {
  Pmf count = Pmf::from_masses({0.5, 0.0, 0.5}, 8);
  Pmf summand = Pmf::from_masses({0.5, 0.5}, 8);
  Pmf c = compound(count, summand);
  CHECK(c.mass()[0] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(c.mass()[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(c.mass()[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(c.overflow() < 1e-15);

  // brute force on a less regular pair
  std::vector<double> cnt{0.1, 0.2, 0.3, 0.15, 0.25}, sm{0.3, 0.2, 0.1, 0.4};
  std::vector<double> bf = enumerate_compound(cnt, sm, 64);
  Pmf cc = compound(Pmf::from_masses(cnt, 63), Pmf::from_masses(sm, 63));
  for (int k = 0; k < 64; ++k) CHECK(std::fabs(cc.mass()[k] - bf[k]) < 1e-15);

  const LawB& B = test::law();
  Pmf b = pmf_of(B, 200);
  CHECK(test::max_abs_diff(compound(Pmf::dirac(1, 200), b), b) < 1e-15);
  Pmf a = pmf_of(LawA{}, 200);
  CHECK(test::max_abs_diff(compound(a, Pmf::dirac(1, 200)), a) < 1e-15);
  CHECK(test::max_abs_diff(compound(LawA{}, Pmf::dirac(1, 200)), a) < 1e-15);

  Pmf power = Pmf::dirac(0, 200);
  for (int k = 1; k <= 8; ++k) {
    power = convolve(power, b);
    Pmf viac = compound(Pmf::dirac(k, 200), b);
    CHECK(test::max_abs_diff(viac, power) < 1e-15);
    CHECK(viac.survival(150).hi == doctest::Approx(power.survival(150).hi).epsilon(1e-9));
  }
  CHECK_THROWS_AS(compound(Pmf::dirac(1, 100), b), std::invalid_argument);
}

TEST_CASE("compound with law A count matches brute force") {
  std::vector<double> sm{0.6, 0.25, 0.15};
  const int N = 40;
  std::vector<double> cnt(N + 1, 0.0);
  for (int k = 1; k <= N; ++k) cnt[k] = LawA::pmf(k);
  std::vector<double> bf = enumerate_compound(cnt, sm, N + 1);
  Pmf viaA = compound(LawA{}, Pmf::from_masses(sm, N));
  // counts above N contribute below N too; only P(C <= N) part is enumerated
  for (int k = 0; k <= N; ++k) CHECK(viaA.mass()[k] >= bf[k] - 1e-15);
  viaA.validate();
}

TEST_CASE("generation laws") {
  const LawB& B = test::law();
  ClusterOracle o(B, 1 << 12);
  CHECK(test::max_abs_diff(o.generation(1), pmf_of(B, 1 << 12)) == 0.0);
  const Pmf& d2 = o.generation(2);
  d2.validate();
  const ExtinctionTable t = extinction_table(B, 4);
  CHECK(std::fabs(d2.mass()[0] - t.q[2]) < 1e-9);
  CHECK(d2.mean_lower() <= 0.25);
  CHECK(d2.mean_lower() >= 0.2);
  const Pmf& d3 = o.generation(3);
  d3.validate();
  CHECK(std::fabs(d3.mass()[0] - t.q[3]) < 1e-9);
  CHECK(d3.mean_lower() <= 0.125);
  // D_2 = sum of B copies of D_1, directly. The oracle also keeps counts
  // above N and pins P(D_2 = 0), so it dominates the direct compound.
  Pmf direct = compound(pmf_of(B, 1 << 12), pmf_of(B, 1 << 12));
  CHECK((d2.mass() - direct.mass()).minCoeff() > -1e-15);
  CHECK((d2.mass() - direct.mass()).abs().maxCoeff() < 1e-9);
  // both are exact at small x up to transform rounding
  for (std::int64_t x : {0, 10, 1000, 4000}) {
    Bracket e = direct.survival(x);
    CHECK(d2.survival(x).overlaps(Bracket{e.lo - 1e-12, e.hi + 1e-12}));
  }
}

TEST_CASE("fixed point map and cluster terms") {
  const LawB& B = test::law();
  const std::int64_t N = 256;
  Pmf a = pmf_of(LawA{}, N), b = pmf_of(B, N);
  Pmf first = fixed_point_map(Pmf::dirac(0, N), a, b);
  CHECK(test::max_abs_diff(first, a) < 1e-16);
  CHECK(first.overflow() == doctest::Approx(a.overflow()));
  ClusterOracle o(B, N);
  CHECK(test::max_abs_diff(o.cluster_term(0), a) == 0.0);
  // Two map iterations equal Y_0 * Y_1 in law. The cluster term also keeps
  // counts above N, so on {0..N} it dominates the map iterate mass by mass
  // and the two agree where no such count can land.
  Pmf second = fixed_point_map(first, a, b);
  Pmf cl = convolve(o.cluster_term(0), o.cluster_term(1));
  CHECK((second.mass().head(11) - cl.mass().head(11)).abs().maxCoeff() < 1e-12);
  CHECK((cl.mass() - second.mass()).minCoeff() > -1e-15);
  CHECK(cl.overflow() <= second.overflow());
  for (std::int64_t x : {10, 100, 255}) CHECK(cl.survival(x).overlaps(second.survival(x)));
}

TEST_CASE("stationary law at a small cutoff") {
  const LawB& B = test::law();
  StationaryResult st = stationary_pmf(B, 1 << 10, 1e-10, 200);
  st.law.validate();
  CHECK(st.last_gap < 1e-10);
  for (std::size_t i = 1; i < st.gaps.size(); ++i) CHECK(st.gaps[i] >= 0.0);
  for (std::int64_t x : {0, 10, 100, 1000}) {
    Bracket s = st.law.survival(x);
    CHECK(s.lo <= s.hi);
  }
  CHECK(st.law.survival(0).lo == doctest::Approx(1.0));
  CHECK_THROWS_AS(stationary_pmf(B, 1 << 10, 1e-10, 2), std::runtime_error);
  CHECK_THROWS_AS(stationary_pmf(B, 1 << 10, 0.0, 10), std::invalid_argument);
}

TEST_CASE("conv_tail_ratio") {
  CHECK_THROWS_WITH(conv_tail_ratio(Pmf::dirac(0, 100), 10), "tail below truncation resolution");
  Bracket g = conv_tail_ratio(pmf_of(GeometricLaw{0.5}, 256), 60);
  CHECK(g.lo > 2.5);
  // sum of two geometric(1/2) on {0,1,..}: P(> x) = (x + 3) / 2^(x+2), P(G > x) = 2^-(x+1)
  CHECK(g.mid() == doctest::Approx(31.5).epsilon(1e-9));
}

TEST_CASE("random_sum_check") {
  const LawB& B = test::law();
  Pmf b = pmf_of(B, 1 << 14);
  RandomSumCheck r3 = random_sum_check(Pmf::dirac(3, 1 << 14), b, 1 << 13);
  CHECK(r3.prediction == doctest::Approx(3.0 * b.survival(1 << 13).mid()).epsilon(1e-12));
  CHECK(r3.ratio.inside(0.85, 1.15));
  RandomSumCheck r0 = random_sum_check(Pmf::dirac(0, 1 << 14), b, 1 << 13);
  CHECK(r0.exact.hi == 0.0);
  CHECK(r0.prediction == 0.0);
}

TEST_CASE("tail_additivity_check") {
  const LawB& B = test::law();
  Pmf b = pmf_of(B, 1 << 15);
  AdditivityCheck one = tail_additivity_check({b}, 1 << 14);
  CHECK(one.ratio.lo == doctest::Approx(1.0));
  CHECK(one.ratio.hi == doctest::Approx(1.0));
  AdditivityCheck two = tail_additivity_check({b, b}, 1 << 14);
  CHECK(two.ratio.inside(0.9, 1.1));
  CHECK_THROWS(tail_additivity_check({}, 10));
}
