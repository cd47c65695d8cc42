#include <catch_amalgamated.hpp>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "artbg/special_functions.hpp"

using namespace artbg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Plain bisection on bessel_j; the library itself goes through a different
// root finder.
double bisect_zero(int m, double a, double b) {
  double fa = bessel_j(m, a);
  for (int i = 0; i < 200 && b - a > 1e-14; ++i) {
    const double c = 0.5 * (a + b);
    const double fc = bessel_j(m, c);
    if ((fc > 0.0) == (fa > 0.0)) {
      a = c;
      fa = fc;
    } else {
      b = c;
    }
  }
  return 0.5 * (a + b);
}

// Y_0(x) = (4/pi^2) int_0^{pi/2} cos(x cos t) (euler + log(2 x sin^2 t)) dt,
// evaluated by double-exponential quadrature (handles the log endpoint).
double y0_by_quadrature(double x) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double euler = boost::math::constants::euler<double>();
  auto f = [&](double t) {
    // The abscissa can round onto t = 0, where the log is -inf but the
    // quadrature weight is already zero.
    const double s = std::sin(std::max(t, std::numeric_limits<double>::min()));
    return std::cos(x * std::cos(t)) * (euler + std::log(2.0 * x) + 2.0 * std::log(s));
  };
  return 4.0 / (kPi * kPi) * integrator.integrate(f, 0.0, kPi / 2);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return xs;
}

}  // namespace

TEST_CASE("Bessel J at the origin", "[special]") {
  CHECK(bessel_j(0, 0.0) == 1.0);
  CHECK(bessel_j(1, 0.0) == 0.0);
  CHECK(std::abs(bessel_j(0, 2.404826)) < 1e-6);
}

TEST_CASE("Bessel J zeros agree with bisection", "[special]") {
  const double j01 = bisect_zero(0, 2.0, 3.0);
  const double j11 = bisect_zero(1, 3.5, 4.0);
  CHECK_THAT(j01, WithinAbs(2.404826, 1e-6));
  CHECK_THAT(j11, WithinAbs(3.831706, 1e-6));
  CHECK_THAT(bessel_j_zero(0, 1), WithinAbs(j01, 1e-9));
  CHECK_THAT(bessel_j_zero(1, 1), WithinAbs(j11, 1e-9));
  CHECK(bessel_j_zero(0, 1) < bessel_j_zero(0, 2));
  CHECK_THROWS_AS(bessel_j_zero(0, 0), InvalidArgument);

  for (int m = 0; m <= 6; ++m)
    for (int s = 1; s <= 5; ++s) CHECK(std::abs(bessel_j(m, bessel_j_zero(m, s))) <= 1e-8);
}

TEST_CASE("Y0 has the logarithmic singularity at the origin", "[special]") {
  CHECK(bessel_y(0, 1e-6) < -8.0);
  CHECK(hankel1(0, 1e-6).imag() < -8.0);
  for (double x : {1e-6, 1e-3, 0.5, 3.0, 12.0}) {
    INFO("x = " << x);
    CHECK_THAT(bessel_y(0, x), WithinAbs(y0_by_quadrature(x), 1e-10 * std::max(1.0, std::abs(bessel_y(0, x)))));
  }
}

TEST_CASE("Hankel function domain", "[special]") {
  CHECK_THROWS_AS(hankel1(0, 0.0), DomainError);
  CHECK_THROWS_AS(hankel1(2, -1.0), DomainError);
  const Complex h = hankel1(3, 2.5);
  CHECK(h.real() == bessel_j(3, 2.5));
  CHECK(h.imag() == bessel_y(3, 2.5));
  CHECK(cyl_values(3, 2.5).h1() == h);
}

TEST_CASE("Wronskian and three-term recurrence", "[special]") {
  for (int m = 0; m <= 5; ++m) {
    const double x = 1.7;
    const double w = bessel_j(m + 1, x) * bessel_y(m, x) - bessel_j(m, x) * bessel_y(m + 1, x);
    CHECK_THAT(w, WithinAbs(2.0 / (kPi * x), 1e-10));
  }
  for (double x : log_grid(0.1, 40.0, 60)) {
    for (int m = 1; m <= 10; ++m) {
      INFO("x = " << x << ", m = " << m);
      const double lhs = bessel_j(m - 1, x) + bessel_j(m + 1, x);
      CHECK_THAT(lhs, WithinAbs(2.0 * m / x * bessel_j(m, x), 1e-9));
      const double w = bessel_j(m + 1, x) * bessel_y(m, x) - bessel_j(m, x) * bessel_y(m + 1, x);
      CHECK_THAT(w, WithinRel(2.0 / (kPi * x), 1e-9));
    }
  }
}

TEST_CASE("derivatives match central differences", "[special]") {
  for (int m = 0; m <= 4; ++m) {
    for (double x : {0.7, 2.3, 9.1}) {
      const double d = 1e-5;
      const double fd = (bessel_j(m, x + d) - bessel_j(m, x - d)) / (2 * d);
      CHECK_THAT(bessel_j_prime(m, x), WithinAbs(fd, 1e-9));
      const Complex hd = (hankel1(m, x + d) - hankel1(m, x - d)) / (2 * d);
      CHECK(std::abs(hankel1_prime(m, x) - hd) < 1e-8 * std::max(1.0, std::abs(hd)));
    }
  }
}

TEST_CASE("scan_roots finds ordered sign changes", "[special]") {
  const auto roots = scan_roots([](double x) { return bessel_j(0, x); }, 0.1, 20.0, 0.05, 4);
  REQUIRE(roots.size() == 4);
  for (int s = 0; s < 4; ++s) CHECK_THAT(roots[static_cast<std::size_t>(s)], WithinAbs(bessel_j_zero(0, s + 1), 1e-12));
  CHECK_THROWS_AS(bracketed_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), InvalidArgument);
}
