#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <cmath>
#include <random>

#include "artbg/artificial_background.hpp"

using namespace artbg;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

Complex h1(int m, double x) { return {boost::math::cyl_bessel_j(m, x), boost::math::cyl_neumann(m, x)}; }
Complex h1p(int m, double x) {
  return {boost::math::cyl_bessel_j_prime(m, x), boost::math::cyl_neumann_prime(m, x)};
}

// Farfield of a centred disk from per-mode coefficients, written out from
// u_s = sum_m i^m b_m H_m(kr) e^{im(phi - theta_i)} and the large-argument
// form of H_m.
ComplexMatrix series_farfield(const std::function<Complex(int)>& b, double k, const DirectionGrid& dirs) {
  ComplexMatrix v(dirs.size(), dirs.size());
  const Complex g = FarfieldConvention::gamma(k);
  for (int s = 0; s < dirs.size(); ++s) {
    for (int i = 0; i < dirs.size(); ++i) {
      Complex sum = 0.0;
      for (int m = -40; m <= 40; ++m)
        sum += b(std::abs(m)) * std::exp(kI * (m * (dirs.angle(s) - dirs.angle(i))));
      v(s, i) = -4.0 * kI * g * sum;
    }
  }
  return v;
}

ComplexMatrix random_complex(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ComplexMatrix a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = {nd(rng), nd(rng)};
  return a;
}

}  // namespace

TEST_CASE("rho = 1 is no background at all", "[background]") {
  const auto dirs = make_direction_grid(16);
  const GeneralRhoBackground rho{{{Disk{{0.0, 0.0}, 1.0}, 1.0}}};
  const auto f = general_rho_farfield(rho, 2.0, dirs, dirs, VolumeOptions{0.05, 1});
  CHECK(max_abs(f.matrix.values) == 0.0);
}

TEST_CASE("ZIM disk background agrees with its mode series", "[background]") {
  const double k = 2.0;
  const double r = 1.0;
  const auto dirs = make_direction_grid(32);
  // Interior r^m, continuity of value and flux at r = R.
  auto b = [&](int m) {
    const double x = k * r;
    const double jm = boost::math::cyl_bessel_j(m, x);
    const double jp = boost::math::cyl_bessel_j_prime(m, x);
    return -Complex(x * jp - m * jm) / (x * h1p(m, x) - static_cast<double>(m) * h1(m, x));
  };
  const ComplexMatrix exact = series_farfield(b, k, dirs);
  const auto zim = zim_farfield(Disk{{0.0, 0.0}, r}, k, dirs, dirs, VolumeOptions{0.05, 1});
  const double err = max_abs(zim.matrix.values - exact) / max_abs(exact);
  INFO("relative sup error " << err);
  CHECK(err <= 1e-2);
  CHECK(zim.matrix.source == "zim on disk 0 0 1");
}

TEST_CASE("obstacle coefficients satisfy the boundary condition", "[background]") {
  const double k = 2.7;
  const double r = 1.0;
  for (int m = 0; m <= 30; ++m) {
    const Complex bd = obstacle_coefficient(m, Dirichlet{}, k, r);
    const Complex trace = boost::math::cyl_bessel_j(m, k * r) + bd * h1(m, k * r);
    CHECK(std::abs(trace) <= 1e-8 * std::max(1.0, std::abs(bd * h1(m, k * r))));

    const double gamma = 0.7;
    const Complex br = obstacle_coefficient(m, Robin{gamma}, k, r);
    const Complex flux = k * (boost::math::cyl_bessel_j_prime(m, k * r) + br * h1p(m, k * r)) +
                         gamma * (boost::math::cyl_bessel_j(m, k * r) + br * h1(m, k * r));
    CHECK(std::abs(flux) <= 1e-8 * std::max(1.0, std::abs(k * br * h1p(m, k * r))));
  }
}

TEST_CASE("Robin with zero impedance is the Neumann obstacle", "[background]") {
  const double k = 2.5;
  const auto dirs = make_direction_grid(32);
  auto neumann = [&](int m) {
    return -Complex(boost::math::cyl_bessel_j_prime(m, k)) / h1p(m, k);
  };
  const auto f = obstacle_farfield(Disk{{0.0, 0.0}, 1.0}, Robin{0.0}, k, dirs, dirs);
  CHECK(max_abs(f.matrix.values - series_farfield(neumann, k, dirs)) <= 1e-10);
  CHECK_THROWS_AS(obstacle_farfield(Kite{{0.0, 0.0}, 1.0}, Dirichlet{}, k, dirs, dirs), UnsupportedShape);
}

TEST_CASE("obstacle scattering operators are unitary", "[background]") {
  const double k = 1.7;
  const auto dirs = make_direction_grid(48);
  for (const BoundaryCondition bc : {BoundaryCondition(Dirichlet{}), BoundaryCondition(Robin{0.0}),
                                     BoundaryCondition(Robin{2.0})}) {
    const auto f = obstacle_farfield(Disk{{0.2, -0.1}, 1.0}, bc, k, dirs, dirs);
    const ComplexMatrix s = ComplexMatrix::Identity(48, 48) +
                            2.0 * kI * k * std::conj(FarfieldConvention::gamma(k)) * f.matrix.as_operator();
    INFO(bc.describe());
    CHECK(max_abs(s * s.adjoint() - ComplexMatrix::Identity(48, 48)) <= 1e-9);
  }
}

TEST_CASE("artificial farfield algebra", "[background]") {
  const auto dirs = make_direction_grid(8);
  const FarfieldMatrix f(2.0, dirs, dirs, random_complex(8, 1));
  const FarfieldMatrix g(2.0, dirs, dirs, random_complex(8, 2), "zim on disk 0 0 1");
  CHECK(max_abs(artificial_farfield(f, f).values) == 0.0);

  const FarfieldMatrix none(2.0, dirs, dirs, ComplexMatrix::Zero(8, 8));
  CHECK(artificial_farfield(none, g).values == -g.values);
  CHECK(artificial_farfield(f, g).values == -artificial_farfield(g, f).values);

  const FarfieldMatrix other_k(2.5, dirs, dirs, random_complex(8, 3));
  CHECK_THROWS_AS(artificial_farfield(f, other_k), IncompatibleOperands);
  const auto dirs16 = make_direction_grid(16);
  const FarfieldMatrix other_grid(2.0, dirs16, dirs16, ComplexMatrix::Zero(16, 16));
  CHECK_THROWS_AS(artificial_farfield(f, other_grid), IncompatibleOperands);
  CHECK_THROWS_AS(FarfieldMatrix(2.0, dirs, dirs16, ComplexMatrix::Zero(8, 8)), InvalidArgument);
}

TEST_CASE("sharp operator", "[background]") {
  const auto dirs = make_direction_grid(10);
  const FarfieldMatrix zero(1.0, dirs, dirs, ComplexMatrix::Zero(10, 10));
  CHECK(max_abs(sharp_operator(zero).matrix) == 0.0);

  // A Hermitian positive operator is its own real part: T = 2F.
  const ComplexMatrix a = random_complex(10, 4);
  const ComplexMatrix psd = a * a.adjoint();
  const FarfieldMatrix pos(1.0, dirs, dirs, psd / dirs.weight());
  CHECK(max_abs(sharp_operator(pos).matrix - 2.0 * psd) <= 1e-10 * max_abs(psd));

  const FarfieldMatrix gen(1.0, dirs, dirs, random_complex(10, 5));
  const ComplexMatrix t = sharp_operator(gen).matrix;
  CHECK(max_abs(t - t.adjoint()) == 0.0);
  CHECK(hermitian_eig(t).values.minCoeff() >= -1e-10 * max_abs(t));

  // (T g, g) >= 2 |(F g, g)| for every g.
  const ComplexMatrix op = gen.as_operator();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    ComplexVector g(10);
    for (int i = 0; i < 10; ++i) g(i) = {nd(rng), nd(rng)};
    const double lhs = g.dot(t * g).real();
    const double rhs = 2.0 * std::abs(g.dot(op * g));
    CHECK(lhs >= rhs * (1.0 - 1e-12));
  }
}
