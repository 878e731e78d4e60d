#pragma once

namespace bigjump {

// Closed interval [lo, hi] known to contain a quantity.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool inside(double a, double b) const { return a <= lo && hi <= b; }
  bool overlaps(const Bracket& o) const { return lo <= o.hi && o.lo <= hi; }
};

}  // namespace bigjump
