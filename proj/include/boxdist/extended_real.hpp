#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace boxdist {

// Real value with an explicit +/- infinity marker.  Divergences use the
// infinite flag for support violations and unbounded optimization values,
// keeping "genuinely infinite" distinct from "merely huge".
struct ExtendedReal {
  double value = 0.0;
  bool infinite = false;  // when true, the sign of `value` gives the sign

  ExtendedReal() = default;
  ExtendedReal(double v) : value(v), infinite(false) {}  // NOLINT(google-explicit-constructor)

  static ExtendedReal finite(double v) { return ExtendedReal(v); }
  static ExtendedReal pos_inf() {
    ExtendedReal r;
    r.value = 1.0;
    r.infinite = true;
    return r;
  }
  static ExtendedReal neg_inf() {
    ExtendedReal r;
    r.value = -1.0;
    r.infinite = true;
    return r;
  }

  bool is_finite() const { return !infinite; }
  bool is_pos_inf() const { return infinite && value > 0; }
  bool is_neg_inf() const { return infinite && value < 0; }

  // Finite payload, or +/-HUGE_VAL so comparisons still behave sensibly.
  double as_double() const {
    if (!infinite) return value;
    return value > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
  }

  std::string str() const {
    if (is_pos_inf()) return "+inf";
    if (is_neg_inf()) return "-inf";
    return std::to_string(value);
  }
};

inline bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.infinite != b.infinite) return false;
  if (a.infinite) return (a.value > 0) == (b.value > 0);
  return a.value == b.value;
}

// IEEE semantics via as_double: +inf compares greater than every finite value.
inline bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
  return a.as_double() < b.as_double();
}
inline bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
inline bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }
inline bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return !(a < b); }

inline std::ostream& operator<<(std::ostream& os, const ExtendedReal& v) {
  return os << v.str();
}

}  // namespace boxdist
