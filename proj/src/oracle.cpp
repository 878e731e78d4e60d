#include "bigjump/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "bigjump/convolution.hpp"
#include "numeric.hpp"

namespace bigjump {

using Eigen::ArrayXd;
using Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

// Count weight kept by the thinned count when trailing tails are cut.
constexpr double kTrimMass = 1e-18;
// Quantile levels at which count atoms are split into certified floors.
constexpr double kCountAtomLevels[] = {1e-12, 1e-6, 1e-3, 0.03, 0.3};
constexpr Index kGemmRows = 16;

void require_same_cutoff(const Pmf& p, const Pmf& q) {
  if (p.cutoff() != q.cutoff()) throw std::invalid_argument("mismatched cutoffs");
}

// Adds w * P(Bin(k, p) = j) to out[j] for j < out.size(); returns the weight
// landing beyond. The row is built from its mode by ratio recursion and
// normalized, so no absolute pmf values are needed.
double add_binomial_row(std::int64_t k, double p, double w, ArrayXd& out, std::vector<double>& row) {
  const Index n = out.size() - 1;
  if (p >= 1.0) {
    if (k <= n) { out[k] += w; return 0.0; }
    return w;
  }
  if (p <= 0.0 || k == 0) { out[0] += w; return 0.0; }
  const double odds = p / (1.0 - p);
  std::int64_t mode = std::min<std::int64_t>(k, static_cast<std::int64_t>(std::floor((k + 1) * p)));
  constexpr double kCut = 1e-30;
  // values below the mode, stored in reverse
  row.clear();
  std::vector<double> up{1.0};
  double v = 1.0;
  for (std::int64_t j = mode; j < k; ++j) {
    v *= static_cast<double>(k - j) / static_cast<double>(j + 1) * odds;
    if (v < kCut) break;
    up.push_back(v);
  }
  v = 1.0;
  for (std::int64_t j = mode; j > 0; --j) {
    v *= static_cast<double>(j) / static_cast<double>(k - j + 1) / odds;
    if (v < kCut) break;
    row.push_back(v);
  }
  double total = 0.0;
  for (auto it = row.rbegin(); it != row.rend(); ++it) total += *it;
  for (double u : up) total += u;
  const double scale = w / total;
  double beyond = 0.0;
  std::int64_t j = mode - static_cast<std::int64_t>(row.size());
  for (auto it = row.rbegin(); it != row.rend(); ++it, ++j) {
    if (j <= n) out[j] += scale * *it; else beyond += scale * *it;
  }
  for (double u : up) {
    if (j <= n) out[j] += scale * u; else beyond += scale * u;
    ++j;
  }
  return beyond;
}

double log_sum_exp(const std::vector<std::pair<double, double>>& terms, double t) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [x, lm] : terms) mx = std::max(mx, lm - t * x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (const auto& [x, lm] : terms) s += std::exp(lm - t * x - mx);
  return mx + std::log(s);
}

// ((1+x) log1p(x) - x) / x^2.
double k1_shape(double x) {
  if (std::fabs(x) < 0.5) {
    double s = 0.0, term = 1.0;
    for (int m = 0; m < 200; ++m) {
      double c = term / ((m + 1.0) * (m + 2.0));
      s += c;
      if (std::fabs(c) < 1e-18 * std::fabs(s)) break;
      term *= -x;
    }
    return s;
  }
  return ((1.0 + x) * std::log1p(x) - x) / (x * x);
}

}  // namespace

struct CompoundPlan::Impl {
  std::int64_t N = 0;
  std::string meta;
  double zero = 0.0;
  double positive = 0.0;
  double atom_mass = 0.0;
  std::vector<TailAtom> atoms;  // decreasing floors
  std::vector<double> cumulative;
  ArrayXd s_prime;  // law of the summand given it is positive and resolved
  std::vector<std::pair<double, double>> laplace;

  mutable Index r = 0;
  mutable RowMatrix babies;
  mutable std::unique_ptr<FixedFactorProduct> step;
  mutable std::unique_ptr<FixedFactorProduct> giant;
  mutable std::map<std::pair<double, double>, std::int64_t> floors;

  void build(Index rows) const {
    if (rows == r) return;
    if (!step) step = std::make_unique<FixedFactorProduct>(s_prime, N);
    babies.setZero(rows, N + 1);
    babies(0, 0) = 1.0;
    ArrayXd cur = ArrayXd::Zero(N + 1);
    cur[0] = 1.0;
    for (Index i = 1; i <= rows; ++i) {
      cur = (*step)(cur).max(0.0);
      if (i < rows) babies.row(i) = cur.matrix().transpose();
    }
    giant = std::make_unique<FixedFactorProduct>(cur, N);
    r = rows;
  }

  // sum_j kappa[j] s'^{*j} on {0..N} by baby-step giant-step: babies
  // P_i = s'^{*i}, i < r, rows Q_g = sum_i kappa[g r + i] P_i by GEMM, then
  // Horner in the giant step G = s'^{*r}.
  ArrayXd compose(const ArrayXd& kappa) const {
    const Index J = kappa.size() - 1;
    ArrayXd R = ArrayXd::Zero(N + 1);
    if (J == 0 || positive <= 0.0) {
      R[0] = kappa.sum();
      return R;
    }
    const Index rows = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(J + 1))));
    build(r >= rows ? r : rows);
    const Index s = (J + r) / r;
    bool first = true;
    for (Index hi = s - 1; hi >= 0; hi -= kGemmRows) {
      const Index lo = std::max<Index>(0, hi - kGemmRows + 1);
      RowMatrix C = RowMatrix::Zero(hi - lo + 1, r);
      for (Index g = lo; g <= hi; ++g)
        for (Index i = 0; i < r && g * r + i <= J; ++i) C(g - lo, i) = kappa[g * r + i];
      RowMatrix Q = C * babies;
      for (Index g = hi; g >= lo; --g) {
        ArrayXd q = Q.row(g - lo).transpose().array();
        if (first) {
          R = q;
          first = false;
        } else {
          R = (*giant)(R) + q;
        }
      }
    }
    return R.max(0.0);
  }

  // Resolved part of the result plus the summand-atom increments.
  Pmf assemble(ArrayXd kappa, double beyond, const std::vector<double>& atom_hits,
               std::vector<TailAtom> extra, double slack, const std::string& label) const {
    // Trailing count weight below kTrimMass is released to an unlocated atom.
    Index J = kappa.size() - 1;
    double trimmed = 0.0;
    while (J > 0 && trimmed + kappa[J] < kTrimMass) trimmed += kappa[J--];
    kappa.conservativeResize(J + 1);
    ArrayXd R = compose(kappa);
    double lost = std::max(0.0, kappa.sum() - R.sum());
    std::vector<TailAtom> out = std::move(extra);
    out.push_back({N, lost + beyond});
    out.push_back({-1, trimmed});
    double prev = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      out.push_back({atoms[i].floor, std::max(0.0, atom_hits[i] - prev)});
      prev = std::max(prev, atom_hits[i]);
    }
    return Pmf(std::move(R), std::move(out), label, slack);
  }
};

CompoundPlan::CompoundPlan(const Pmf& summand) : impl_(std::make_unique<Impl>()) {
  if (summand.slack() > 0.0) throw std::invalid_argument("summand with slack is not supported");
  auto& m = *impl_;
  m.N = summand.cutoff();
  m.meta = summand.meta();
  const ArrayXd& s = summand.mass();
  m.zero = s[0];
  m.positive = s.tail(m.N).sum();
  m.atoms = summand.atoms();
  double c = 0.0;
  for (const auto& a : m.atoms) {
    c += a.mass;
    m.cumulative.push_back(c);
  }
  m.atom_mass = c;
  m.s_prime = ArrayXd::Zero(m.N + 1);
  if (m.positive > 0.0) m.s_prime.tail(m.N) = s.tail(m.N) / m.positive;
  for (Index k = 0; k <= m.N; ++k)
    if (s[k] > 0.0) m.laplace.emplace_back(static_cast<double>(k), std::log(s[k]));
  for (const auto& a : m.atoms) m.laplace.emplace_back(static_cast<double>(a.floor + 1), std::log(a.mass));
  if (summand.deficit() > 0.0) m.laplace.emplace_back(0.0, std::log(summand.deficit()));
}

CompoundPlan::~CompoundPlan() = default;
CompoundPlan::CompoundPlan(CompoundPlan&&) noexcept = default;
CompoundPlan& CompoundPlan::operator=(CompoundPlan&&) noexcept = default;

std::int64_t CompoundPlan::certified_floor(double copies, double beta) const {
  auto& m = *impl_;
  if (copies <= 0.0) return -1;
  if (auto it = m.floors.find({copies, beta}); it != m.floors.end()) return it->second;
  const double lb = std::log(beta);
  auto g = [&](double log_t) {
    double t = std::exp(log_t);
    return (lb - copies * log_sum_exp(m.laplace, t)) / t;
  };
  // g is quasi-concave in log t; any t gives a valid floor.
  double a = -30.0, b = 6.0;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + ratio * (b - a); f2 = g(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - ratio * (b - a); f1 = g(x1);
    }
  }
  double best = std::max(f1, f2);
  std::int64_t L = -1;
  if (std::isfinite(best) && best >= 0.0)
    L = best >= static_cast<double>(m.N) ? m.N : static_cast<std::int64_t>(std::floor(best));
  m.floors[{copies, beta}] = L;
  return L;
}

Pmf CompoundPlan::apply(const Pmf& count) const {
  auto& m = *impl_;
  if (count.cutoff() < m.N) throw std::invalid_argument("mismatched cutoffs");
  const ArrayXd& c = count.mass();
  const double w = m.zero + m.positive;
  const double p = w > 0.0 ? m.positive / w : 0.0;
  const double log_w = std::log(w);
  const double Nd = static_cast<double>(m.N);
  ArrayXd kappa = ArrayXd::Zero(m.N + 1);
  std::vector<double> hits(m.atoms.size(), 0.0);
  std::vector<double> row;
  double beyond = 0.0;
  for (Index k = 0; k < c.size(); ++k) {
    if (!(c[k] > 0.0)) continue;
    const double kd = static_cast<double>(k);
    for (std::size_t i = 0; i < m.atoms.size(); ++i)
      hits[i] += c[k] * -std::expm1(kd * std::log1p(-m.cumulative[i]));
    const double wk = c[k] * std::exp(kd * log_w);
    if (wk == 0.0) continue;
    const double mu = kd * p;
    if (mu > Nd && std::exp(-(mu - Nd) * (mu - Nd) / (2.0 * mu)) < 1e-40) {
      beyond += wk;
      continue;
    }
    beyond += add_binomial_row(k, p, wk, kappa, row);
  }
  std::vector<TailAtom> extra;
  // Given C > f the sum dominates f+1 summands; mass is released level by
  // level: P(S_{f+1} <= L_j) <= beta_j leaves m (beta_{j+1} - beta_j) above L_j.
  for (const auto& a : count.atoms()) {
    double prev = 0.0;
    std::int64_t floor = -1;
    for (double beta : kCountAtomLevels) {
      extra.push_back({floor, a.mass * (beta - prev)});
      floor = certified_floor(static_cast<double>(a.floor + 1), beta);
      prev = beta;
    }
    extra.push_back({floor, a.mass * (1.0 - prev)});
  }
  return m.assemble(std::move(kappa), beyond, hits, std::move(extra), count.slack(),
                    "compound(" + count.meta() + "," + m.meta + ")");
}

// For C ~ A, the thinned count has P(0) = E[q^A] and, for j >= 1,
// P(j) = p v^j K_j with v = p / (1 - q), where K_j = int_0^1 (1-y) y^(j-1) / (a + B y) dy,
// a = p, B = q v, satisfies a K_j + B K_{j+1} = 1/(j(j+1)).
Pmf CompoundPlan::apply_immigration() const {
  auto& m = *impl_;
  const std::int64_t N = m.N;
  const double pp = m.positive;
  const double q = m.zero;
  const double one_minus_q = m.positive + m.atom_mass;
  ArrayXd kappa = ArrayXd::Zero(N + 1);
  kappa[0] = LawA::pgf_complement(one_minus_q);
  if (pp > 0.0) {
    const double v = pp / one_minus_q;
    const double a = pp, B = q * v;
    if (B <= 0.0) {
      for (std::int64_t j = 1; j <= N; ++j) kappa[j] = LawA::pmf(j) * std::pow(pp, static_cast<double>(j));
    } else {
      std::vector<double> K(N + 2, 0.0);
      const double gain = std::log(a / B);
      if (a <= B || gain * static_cast<double>(N) <= 2.0) {
        K[1] = k1_shape(B / a) / a;
        for (std::int64_t j = 1; j <= N; ++j)
          K[j + 1] = (1.0 / (static_cast<double>(j) * (j + 1.0)) - a * K[j]) / B;
      } else {
        const std::int64_t top = N + 16 + static_cast<std::int64_t>(std::ceil(40.0 / gain));
        double next = 1.0 / ((a + B) * static_cast<double>(top) * (top + 1.0));
        for (std::int64_t j = top - 1; j >= 1; --j) {
          double cur = (1.0 / (static_cast<double>(j) * (j + 1.0)) - B * next) / a;
          if (j <= N + 1) K[j] = cur;
          next = cur;
        }
      }
      const double log_v = std::log(v);
      for (std::int64_t j = 1; j <= N; ++j)
        kappa[j] = std::max(0.0, pp * std::exp(static_cast<double>(j) * log_v) * K[j]);
    }
  }
  const double beyond = std::max(0.0, LawA::pgf_complement(m.atom_mass) - kappa.sum());
  std::vector<double> hits;
  for (double M : m.cumulative) hits.push_back(1.0 - LawA::pgf_complement(M));
  return m.assemble(std::move(kappa), beyond, hits, {}, 0.0, "compound(A," + m.meta + ")");
}

Pmf compound(const Pmf& count, const Pmf& summand) { return CompoundPlan(summand).apply(count); }

Pmf compound(const LawA&, const Pmf& summand) { return CompoundPlan(summand).apply_immigration(); }

Pmf convolve(const Pmf& p, const Pmf& q) {
  require_same_cutoff(p, q);
  const std::int64_t N = p.cutoff();
  ArrayXd r = truncated_product(p.mass(), q.mass(), N).max(0.0);
  const double P = p.resolved_mass(), Q = q.resolved_mass();
  std::vector<TailAtom> atoms;
  atoms.push_back({N, std::max(0.0, P * Q - r.sum())});
  const double q_total = Q + q.overflow();
  for (const auto& a : p.atoms()) atoms.push_back({a.floor, a.mass * q_total});
  for (const auto& a : q.atoms()) atoms.push_back({a.floor, a.mass * P});
  return Pmf(std::move(r), std::move(atoms), "(" + p.meta() + "*" + q.meta() + ")", p.slack() + q.slack());
}

namespace {

// The resolved P(D = 0) is a lower bound on the exact q, and everything
// missing from it sits in the unlocated atom. Given q, that atom is capped by
// the positive mass not already certified, and is known to be >= 1.
Pmf pin_zero_mass(const Pmf& d, double q, double p) {
  ArrayXd mass = d.mass();
  mass[0] = q;
  double certified = mass.tail(mass.size() - 1).sum();
  std::vector<TailAtom> atoms;
  double unlocated = 0.0;
  for (const auto& a : d.atoms()) {
    if (a.floor >= 0) {
      atoms.push_back(a);
      certified += a.mass;
    } else {
      unlocated += a.mass;
    }
  }
  atoms.push_back({0, std::clamp(p - certified, 0.0, unlocated)});
  return Pmf(std::move(mass), std::move(atoms), d.meta(), d.slack());
}

}  // namespace

Pmf fixed_point_map(const Pmf& pi, const Pmf& immigration, const Pmf& offspring) {
  return convolve(immigration, compound(pi, offspring));
}

ClusterOracle::ClusterOracle(const LawB& offspring, std::int64_t N) : law_(offspring), N_(N) {
  if (N < 1) throw std::invalid_argument("cutoff must be >= 1");
}

ClusterOracle::~ClusterOracle() = default;

const Pmf& ClusterOracle::offspring() { return generation(1); }

const Pmf& ClusterOracle::generation(int n) {
  if (n < 1) throw std::invalid_argument("generation index must be >= 1");
  if (generations_.empty()) generations_.push_back(pmf_of(law_, N_, "B"));
  while (static_cast<int>(generations_.size()) < n) {
    const int k = static_cast<int>(generations_.size()) + 1;
    if (!offspring_plan_) offspring_plan_ = std::make_unique<CompoundPlan>(generations_.front());
    Pmf next;
    if (k == 2) {
      // Count at a wide cutoff so that its overflow lies far beyond N.
      next = offspring_plan_->apply(pmf_of(law_, 64 * N_, "B"));
    } else {
      next = offspring_plan_->apply(generations_.back());
    }
    if (extinction_.n_max() < k) extinction_ = extinction_table(law_, std::max(2 * k, 64));
    next = pin_zero_mass(next, extinction_.q[k], extinction_.p[k]);
    generations_.push_back(next.with_meta("D" + std::to_string(k)));
    if (log) log("generation " + std::to_string(k) + " ready");
  }
  return generations_[n - 1];
}

const Pmf& ClusterOracle::cluster_term(int n) {
  if (n < 0) throw std::invalid_argument("cluster index must be >= 0");
  if (cluster_terms_.empty()) cluster_terms_.push_back(pmf_of(LawA{}, N_, "A"));
  while (static_cast<int>(cluster_terms_.size()) <= n) {
    const int k = static_cast<int>(cluster_terms_.size());
    Pmf y = CompoundPlan(generation(k)).apply_immigration();
    cluster_terms_.push_back(y.with_meta("Y" + std::to_string(k)));
  }
  return cluster_terms_[n];
}

StationaryResult ClusterOracle::stationary(double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  StationaryResult res;
  Pmf pi = Pmf::dirac(0, N_);
  ArrayXd prev = pi.survival_lower();
  ArrayXd prev_hi = pi.survival_upper();
  for (int k = 0; k < max_iter; ++k) {
    Pmf next = k == 0 ? cluster_term(0) : convolve(pi, cluster_term(k));
    ArrayXd cur = next.survival_lower();
    ArrayXd cur_hi = next.survival_upper();
    // The exact iterates increase, so the new upper curve cannot fall below
    // the old lower one.
    const double drop = (prev - cur_hi).maxCoeff();
    if (drop > 1e-12) {
      std::ostringstream os;
      os << "stationary iterate decreased by " << drop << " at iteration " << k + 1;
      throw std::logic_error(os.str());
    }
    const double gap = std::max((cur - prev).abs().maxCoeff(), (cur_hi - prev_hi).abs().maxCoeff());
    res.gaps.push_back(gap);
    pi = std::move(next);
    prev = std::move(cur);
    prev_hi = std::move(cur_hi);
    if (log) {
      std::ostringstream os;
      os << "iteration " << k + 1 << " gap " << gap;
      log(os.str());
    }
    if (gap < tol) {
      res.iterations = k + 1;
      res.last_gap = gap;
      res.remainder = cluster_remainder_bound(law_.mean(), k);
      res.law = pi.with_slack(res.remainder).with_meta("X");
      return res;
    }
  }
  std::ostringstream os;
  os << "stationary iteration did not converge in " << max_iter << " iterations (last gap "
     << res.gaps.back() << ")";
  throw std::runtime_error(os.str());
}

Pmf dn_pmf(const LawB& law, int n, std::int64_t N) {
  ClusterOracle oracle(law, N);
  return oracle.generation(n);
}

StationaryResult stationary_pmf(const LawB& law, std::int64_t N, double tol, int max_iter) {
  ClusterOracle oracle(law, N);
  return oracle.stationary(tol, max_iter);
}

Bracket conv_tail_ratio(const Pmf& p, std::int64_t x) {
  Bracket s1 = p.survival(x);
  if (!(s1.lo > 0.0)) throw std::runtime_error("tail below truncation resolution");
  Bracket s2 = convolve(p, p).survival(x);
  return {s2.lo / s1.hi, s2.hi / s1.lo};
}

namespace {

RandomSumCheck finish_check(const Pmf& sum, const Pmf& summand, std::int64_t x, double trunc_mean,
                            double count_tail) {
  RandomSumCheck out;
  out.exact = sum.survival(x);
  const Bracket ys = summand.survival(x);
  out.prediction = trunc_mean * ys.mid() + count_tail;
  if (out.prediction > 0.0) {
    out.ratio = {out.exact.lo / out.prediction, out.exact.hi / out.prediction};
  } else if (out.exact.hi == 0.0) {
    out.ratio = {1.0, 1.0};
  } else {
    throw std::runtime_error("tail below truncation resolution");
  }
  return out;
}

double summand_mean(const Pmf& summand, std::optional<double> mean) {
  double m = mean ? *mean : summand.mean_lower();
  if (!(m > 0.0)) throw std::runtime_error("summand mean must be positive");
  return m;
}

}  // namespace

RandomSumCheck random_sum_check(const LawA& count, const Pmf& summand, std::int64_t x,
                                std::optional<double> mean) {
  const double t = static_cast<double>(x) / summand_mean(summand, mean);
  return finish_check(compound(count, summand), summand, x, LawA::truncated_mean(t), LawA::survival_real(t));
}

RandomSumCheck random_sum_check(const Pmf& count, const Pmf& summand, std::int64_t x,
                                std::optional<double> mean) {
  const double t = static_cast<double>(x) / summand_mean(summand, mean);
  detail::CompensatedSum tm;
  const ArrayXd& c = count.mass();
  for (Index k = 1; k < c.size() && static_cast<double>(k) <= t; ++k) tm.add(static_cast<double>(k) * c[k]);
  const double tail = count.survival(static_cast<std::int64_t>(std::floor(t))).mid();
  return finish_check(compound(count, summand), summand, x, tm.value(), tail);
}

AdditivityCheck tail_additivity_check(const std::vector<Pmf>& terms, std::int64_t x) {
  if (terms.empty()) throw std::invalid_argument("no terms");
  AdditivityCheck out;
  Pmf total = terms.front();
  out.rhs = terms.front().survival(x);
  for (std::size_t i = 1; i < terms.size(); ++i) {
    total = convolve(total, terms[i]);
    Bracket s = terms[i].survival(x);
    out.rhs.lo += s.lo;
    out.rhs.hi += s.hi;
  }
  out.lhs = total.survival(x);
  if (!(out.rhs.lo > 0.0)) throw std::runtime_error("tail below truncation resolution");
  out.ratio = {out.lhs.lo / out.rhs.hi, out.lhs.hi / out.rhs.lo};
  return out;
}

}  // namespace bigjump
