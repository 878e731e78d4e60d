#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bigjump/bracket.hpp"
#include "bigjump/model.hpp"
#include "bigjump/pmf.hpp"

namespace bigjump {

// Exact pmf on {0..N}; the mass above N becomes an atom with floor N.
template <class Law>
Pmf pmf_of(const Law& law, std::int64_t N, std::string meta = "law") {
  if (N < 0) throw std::invalid_argument("cutoff must be >= 0");
  Eigen::ArrayXd m(N + 1);
  for (std::int64_t k = 0; k <= N; ++k) m[k] = law.pmf(k);
  return Pmf(std::move(m), {{N, law.survival(N)}}, std::move(meta));
}

// Law of the sum of independent p and q. Throws on mismatched cutoffs.
Pmf convolve(const Pmf& p, const Pmf& q);

// Precomputed powers of a summand law for repeated compounding.
class CompoundPlan {
 public:
  explicit CompoundPlan(const Pmf& summand);
  ~CompoundPlan();
  CompoundPlan(CompoundPlan&&) noexcept;
  CompoundPlan& operator=(CompoundPlan&&) noexcept;

  // Law of sum_{i=1}^{C} Y_i, C ~ count (cutoff >= the summand's).
  Pmf apply(const Pmf& count) const;
  // Same with C ~ LawA, thinned in closed form.
  Pmf apply_immigration() const;

  // Largest L in [-1, N] with P(Y_1 + ... + Y_copies <= L) <= beta by a
  // Chernoff bound on the summand's Laplace transform.
  std::int64_t certified_floor(double copies, double beta) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Pmf compound(const Pmf& count, const Pmf& summand);
Pmf compound(const LawA& count, const Pmf& summand);

// Literal fixed-point map pi -> A + sum_{i=1}^{pi} B_i.
Pmf fixed_point_map(const Pmf& pi, const Pmf& immigration, const Pmf& offspring);

struct StationaryResult {
  Pmf law;
  int iterations = 0;
  double last_gap = 0.0;
  double remainder = 0.0;
  std::vector<double> gaps;
};

// Generation aggregates D_n and cluster terms Y_n = sum_{i=1}^{A} D_{n,i}
// (Y_0 = A) on {0..N}, cached. P(D_n = 0) is pinned to the extinction table. The stationary law is the limit of
// Y_0 * Y_1 * ... * Y_k, which coincides in law with the k-th iterate of the
// fixed-point map started at the point mass at 0.
class ClusterOracle {
 public:
  ClusterOracle(const LawB& offspring, std::int64_t N);
  ~ClusterOracle();

  std::int64_t cutoff() const { return N_; }
  const LawB& law() const { return law_; }
  const Pmf& offspring();
  const Pmf& generation(int n);
  const Pmf& cluster_term(int n);

  // Stops when the sup-norm change of the lower survival curve is below tol;
  // the neglected terms enter as slack via cluster_remainder_bound.
  StationaryResult stationary(double tol, int max_iter);

  std::function<void(const std::string&)> log;

 private:
  LawB law_;
  std::int64_t N_;
  ExtinctionTable extinction_;
  std::deque<Pmf> generations_;  // references handed out stay valid
  std::deque<Pmf> cluster_terms_;
  std::unique_ptr<CompoundPlan> offspring_plan_;
};

Pmf dn_pmf(const LawB& law, int n, std::int64_t N);
StationaryResult stationary_pmf(const LawB& law, std::int64_t N, double tol, int max_iter);

// Bracket of P(p*p > x) / P(p > x). Throws if P(p > x) is not resolved.
Bracket conv_tail_ratio(const Pmf& p, std::int64_t x);

struct RandomSumCheck {
  Bracket exact;
  double prediction = 0.0;
  Bracket ratio;
};

// Exact tail of sum_{i<=C} Y_i at x against
// E[C 1{C <= x/m}] P(Y > x) + P(C > x/m). The summand mean m defaults to the
// lower bound from the summand's bracket.
RandomSumCheck random_sum_check(const LawA& count, const Pmf& summand, std::int64_t x,
                                std::optional<double> mean = std::nullopt);
RandomSumCheck random_sum_check(const Pmf& count, const Pmf& summand, std::int64_t x,
                                std::optional<double> mean = std::nullopt);

struct AdditivityCheck {
  Bracket lhs;
  Bracket rhs;
  Bracket ratio;
};

AdditivityCheck tail_additivity_check(const std::vector<Pmf>& terms, std::int64_t x);

}  // namespace bigjump
