#include "bigjump/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "numeric.hpp"

namespace bigjump {

namespace {

constexpr std::size_t kMaxAtoms = 160;

// Atom floors are rounded down to {0} and floor(2^(j/8)), so repeated
// arithmetic cannot grow the number of distinct floors.
std::int64_t snap_floor(std::int64_t f) {
  static const std::vector<std::int64_t> grid = [] {
    std::vector<std::int64_t> g{0};
    for (int j = 0; j < 8 * 62; ++j) {
      auto v = static_cast<std::int64_t>(std::floor(std::exp2(j / 8.0)));
      if (v != g.back()) g.push_back(v);
    }
    return g;
  }();
  auto it = std::upper_bound(grid.begin(), grid.end(), f);
  return *(it - 1);
}

}  // namespace

Pmf::Pmf(Eigen::ArrayXd mass, std::vector<TailAtom> atoms, std::string meta, double slack)
    : mass_(std::move(mass)), atoms_(std::move(atoms)), meta_(std::move(meta)), slack_(slack) {
  if (mass_.size() == 0) throw std::invalid_argument("Pmf needs at least one mass point");
  normalize_atoms();
}

Pmf Pmf::dirac(std::int64_t k, std::int64_t N) {
  Eigen::ArrayXd m = Eigen::ArrayXd::Zero(N + 1);
  if (k <= N) {
    m[k] = 1.0;
    return Pmf(m, {}, "dirac");
  }
  return Pmf(m, {{N, 1.0}}, "dirac");
}

Pmf Pmf::from_masses(const std::vector<double>& mass, std::int64_t N) {
  Eigen::ArrayXd m = Eigen::ArrayXd::Zero(N + 1);
  double above = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    if (static_cast<std::int64_t>(k) <= N) m[k] = mass[k]; else above += mass[k];
  }
  std::vector<TailAtom> atoms;
  if (above > 0.0) atoms.push_back({N, above});
  return Pmf(m, atoms, "explicit");
}

void Pmf::normalize_atoms() {
  const std::int64_t N = cutoff();
  for (auto& a : atoms_) {
    a.floor = std::clamp<std::int64_t>(a.floor, -1, N);
    if (a.floor >= 0 && a.floor < N) a.floor = snap_floor(a.floor);
  }
  std::erase_if(atoms_, [](const TailAtom& a) { return !(a.mass > 0.0); });
  std::sort(atoms_.begin(), atoms_.end(),
            [](const TailAtom& a, const TailAtom& b) { return a.floor > b.floor; });
  std::vector<TailAtom> merged;
  for (const auto& a : atoms_) {
    if (!merged.empty() && merged.back().floor == a.floor) merged.back().mass += a.mass;
    else merged.push_back(a);
  }
  // Merge the adjacent pair whose upper atom loses the least: mass times the
  // log-ratio of the floors. Moving mass to the lower floor stays sound.
  while (merged.size() > kMaxAtoms) {
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
      double cost = merged[i].mass * std::log((merged[i].floor + 2.0) / (merged[i + 1].floor + 2.0));
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    merged[best + 1].mass += merged[best].mass;
    merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(best));
  }
  atoms_ = std::move(merged);
}

double Pmf::overflow() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass;
  return s;
}

Bracket Pmf::survival(std::int64_t x) const {
  if (x < 0) return {1.0, 1.0};
  const std::int64_t N = cutoff();
  double known = 0.0;
  if (x < N) known = mass_.tail(N - x).reverse().sum();
  double lo = known, hi = known + slack_;
  for (const auto& a : atoms_) {
    hi += a.mass;
    if (a.floor >= x) lo += a.mass;
  }
  hi = std::min(1.0, hi);
  return {std::clamp(lo, 0.0, hi), hi};
}

Eigen::ArrayXd Pmf::survival_lower() const {
  const std::int64_t N = cutoff();
  Eigen::ArrayXd s(N + 1);
  detail::CompensatedSum tail;
  std::size_t ai = 0;
  double atom_part = 0.0;
  for (std::int64_t x = N; x >= 0; --x) {
    while (ai < atoms_.size() && atoms_[ai].floor >= x) atom_part += atoms_[ai++].mass;
    s[x] = std::clamp(tail.value() + atom_part, 0.0, 1.0);
    tail.add(mass_[x]);
  }
  return s;
}

Eigen::ArrayXd Pmf::survival_upper() const {
  const std::int64_t N = cutoff();
  Eigen::ArrayXd s(N + 1);
  detail::CompensatedSum tail;
  const double extra = overflow() + slack_;
  for (std::int64_t x = N; x >= 0; --x) {
    s[x] = std::min(1.0, tail.value() + extra);
    tail.add(mass_[x]);
  }
  return s;
}

double Pmf::mean_lower() const {
  detail::CompensatedSum s;
  for (Eigen::Index k = 1; k < mass_.size(); ++k) s.add(static_cast<double>(k) * mass_[k]);
  for (const auto& a : atoms_) s.add(static_cast<double>(a.floor + 1) * a.mass);
  return s.value();
}

Pmf Pmf::with_slack(double extra) const {
  Pmf p = *this;
  p.slack_ += extra;
  return p;
}

Pmf Pmf::with_meta(std::string meta) const {
  Pmf p = *this;
  p.meta_ = std::move(meta);
  return p;
}

void Pmf::validate(double tol) const {
  if ((mass_ < 0.0).any()) throw std::logic_error("Pmf has negative mass (" + meta_ + ")");
  double d = deficit();
  if (std::abs(d) > tol)
    throw std::logic_error("Pmf deficit " + std::to_string(d) + " exceeds tolerance (" + meta_ + ")");
}

}  // namespace bigjump
