#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "bigjump/bracket.hpp"

namespace bigjump {

// Probability mass known only to lie strictly above `floor` (floor = -1
// means nothing is known about its location).
struct TailAtom {
  std::int64_t floor = -1;
  double mass = 0.0;
};

// Truncated law on {0..N}. mass[k] is exact up to rounding; the atoms carry
// the remaining probability with a certified lower position. `slack` is an
// additive allowance on the upper survival bound for mass the represented
// law may have missed entirely (e.g. a truncated series).
class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(Eigen::ArrayXd mass, std::vector<TailAtom> atoms = {}, std::string meta = {},
               double slack = 0.0);

  static Pmf dirac(std::int64_t k, std::int64_t N);
  static Pmf from_masses(const std::vector<double>& mass, std::int64_t N);

  std::int64_t cutoff() const { return static_cast<std::int64_t>(mass_.size()) - 1; }
  const Eigen::ArrayXd& mass() const { return mass_; }
  const std::vector<TailAtom>& atoms() const { return atoms_; }
  const std::string& meta() const { return meta_; }
  double slack() const { return slack_; }

  double resolved_mass() const { return mass_.sum(); }
  double overflow() const;
  double deficit() const { return 1.0 - resolved_mass() - overflow(); }

  // lo = known tail + atoms whose floor is >= x; hi = known tail + all atoms + slack.
  Bracket survival(std::int64_t x) const;
  Eigen::ArrayXd survival_lower() const;  // indexed by x = 0..N
  Eigen::ArrayXd survival_upper() const;

  // Lower bound on the mean: resolved part plus (floor + 1) per atom.
  double mean_lower() const;

  Pmf with_slack(double extra) const;
  Pmf with_meta(std::string meta) const;

  // Throws std::logic_error on negative mass or |deficit| > tol.
  void validate(double tol = 1e-9) const;

 private:
  void normalize_atoms();

  Eigen::ArrayXd mass_;
  std::vector<TailAtom> atoms_;  // sorted by decreasing floor, distinct floors
  std::string meta_;
  double slack_ = 0.0;
};

}  // namespace bigjump
