#pragma once

// Integer-order cylinder functions of real argument and their zeros.
// Evaluation is delegated to Boost.Math; this header fixes the contracts the
// solvers rely on (argument checks, Hankel packing, derivative formulas).

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "artbg/domain.hpp"
#include "artbg/errors.hpp"

namespace artbg {

struct CylFunValue {
  double j = 0.0;
  double y = 0.0;
  Complex h1() const { return {j, y}; }
};

inline double bessel_j(int m, double x) {
  if (m < 0) throw InvalidArgument("bessel_j: order must be >= 0");
  if (!std::isfinite(x)) throw InvalidArgument("bessel_j: argument must be finite");
  return boost::math::cyl_bessel_j(m, x);
}

inline double bessel_y(int m, double x) {
  if (m < 0) throw InvalidArgument("bessel_y: order must be >= 0");
  if (!(x > 0.0)) throw DomainError("bessel_y: argument must be > 0");
  return boost::math::cyl_neumann(m, x);
}

inline Complex hankel1(int m, double x) {
  if (!(x > 0.0)) throw DomainError("hankel1: argument must be > 0");
  return {bessel_j(m, x), bessel_y(m, x)};
}

inline CylFunValue cyl_values(int m, double x) { return {bessel_j(m, x), bessel_y(m, x)}; }

/// J_m'(x) = (J_{m-1} - J_{m+1}) / 2, with J_0' = -J_1.
inline double bessel_j_prime(int m, double x) {
  if (m == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
}

inline Complex hankel1_prime(int m, double x) {
  if (m == 0) return -hankel1(1, x);
  return 0.5 * (hankel1(m - 1, x) - hankel1(m + 1, x));
}

/// s-th positive zero of J_m (s >= 1).
inline double bessel_j_zero(int m, int s) {
  if (m < 0) throw InvalidArgument("bessel_j_zero: order must be >= 0");
  if (s < 1) throw InvalidArgument("bessel_j_zero: zero index starts at 1");
  return boost::math::cyl_bessel_j_zero(static_cast<double>(m), s);
}

/// Root of f inside a sign-changing bracket [a, b].
inline double bracketed_root(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw InvalidArgument("bracketed_root: no sign change");
  std::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// First `count` roots of f in (lo, hi) located by scanning with a fixed step
/// and refining each sign change. Tangential double roots are not detected.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi, double step,
                                      int count) {
  std::vector<double> roots;
  double a = lo;
  double fa = f(a);
  while (a < hi && static_cast<int>(roots.size()) < count) {
    const double b = std::min(a + step, hi);
    const double fb = f(b);
    if (fa == 0.0) {
      if (a > lo) roots.push_back(a);
    } else if ((fa > 0.0) != (fb > 0.0) && fb != 0.0) {
      roots.push_back(bracketed_root(f, a, b));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace artbg
