#pragma once

// Scattering by a penetrable medium: Lippmann-Schwinger volume integral
// equation on a uniform cell lattice, and separation-of-variables series for
// disks used as independent references.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/farfield.hpp"
#include "artbg/linalg.hpp"
#include "artbg/special_functions.hpp"

namespace artbg {

/// Cells of side h centred at ((i+1/2)h, (j+1/2)h) covering a box, with the
/// contrast m = n - 1 (or rho - 1) sampled per cell. The lattice is anchored
/// at the origin so that different media on the same h share cell centres.
struct VolumeGrid {
  double h = 0.0;
  std::vector<Point> centers;
  std::vector<long> ix;
  std::vector<long> iy;
  std::vector<double> contrast;

  std::size_t size() const { return centers.size(); }

  /// Cells with non-zero contrast. The LS system restricted to them is closed.
  VolumeGrid support() const {
    VolumeGrid s;
    s.h = h;
    for (std::size_t j = 0; j < size(); ++j) {
      if (contrast[j] == 0.0) continue;
      s.centers.push_back(centers[j]);
      s.ix.push_back(ix[j]);
      s.iy.push_back(iy[j]);
      s.contrast.push_back(contrast[j]);
    }
    return s;
  }

  double max_index() const {
    double m = 1.0;
    for (double c : contrast) m = std::max(m, 1.0 + c);
    return m;
  }
};

/// Contrast per cell is the mean of `subsamples`^2 midpoint samples
/// (subsamples = 1 is plain midpoint sampling).
inline VolumeGrid make_volume_grid(const Box& box, double h, const std::function<double(Point)>& contrast,
                                   int subsamples = 1) {
  if (!(h > 0.0)) throw InvalidArgument("volume grid spacing must be > 0");
  if (subsamples < 1) throw InvalidArgument("subsamples must be >= 1");
  VolumeGrid g;
  g.h = h;
  const long i0 = static_cast<long>(std::floor(box.lo.x / h));
  const long i1 = static_cast<long>(std::ceil(box.hi.x / h)) - 1;
  const long j0 = static_cast<long>(std::floor(box.lo.y / h));
  const long j1 = static_cast<long>(std::ceil(box.hi.y / h)) - 1;
  const double sub = h / subsamples;
  for (long j = j0; j <= j1; ++j) {
    for (long i = i0; i <= i1; ++i) {
      const Point c{(static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h};
      double m = 0.0;
      if (subsamples == 1) {
        m = contrast(c);
      } else {
        for (int b = 0; b < subsamples; ++b)
          for (int a = 0; a < subsamples; ++a)
            m += contrast({static_cast<double>(i) * h + (a + 0.5) * sub, static_cast<double>(j) * h + (b + 0.5) * sub});
        m /= static_cast<double>(subsamples * subsamples);
      }
      g.centers.push_back(c);
      g.ix.push_back(i);
      g.iy.push_back(j);
      g.contrast.push_back(m);
    }
  }
  return g;
}

inline VolumeGrid medium_volume_grid(const MediumSpec& medium, double h, int subsamples = 1) {
  if (medium.pieces().empty()) return VolumeGrid{h, {}, {}, {}, {}};
  Box box = medium.pieces().front().shape.bounding_box();
  for (const auto& p : medium.pieces()) box = box.merged(p.shape.bounding_box());
  return make_volume_grid(box, h, [&](Point p) { return medium.index_at(p) - 1.0; }, subsamples);
}

/// Integral of (i/4) H0(k|x|) over a disk of radius R centred at the origin:
/// (i pi / 2) [ (R/k) H1(kR) + 2i / (pi k^2) ].
inline Complex self_cell_integral(double k, double radius) {
  return kI * (kPi / 2.0) * ((radius / k) * hankel1(1, k * radius) + 2.0 * kI / (kPi * k * k));
}

struct LsAssembly {
  ComplexMatrix matrix;
  std::optional<std::string> resolution_warning;
};

/// Cells per wavelength inside the medium required by the resolution rule.
inline constexpr double kCellsPerWavelength = 10.0;

/// Matrix of I - k^2 V diag(m). V integrates (i/4) H0(k|y_j - y|) over cell l:
/// midpoint rule off the diagonal, equal-area disk closed form on it.
inline LsAssembly assemble_ls_matrix(const VolumeGrid& grid, double k) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be > 0");
  LsAssembly out;
  const double wavelength = 2.0 * kPi / (k * std::sqrt(grid.max_index()));
  if (grid.h > wavelength / kCellsPerWavelength) {
    std::ostringstream os;
    os << "under-resolved volume grid: h=" << grid.h << " exceeds wavelength/" << kCellsPerWavelength << "="
       << wavelength / kCellsPerWavelength << " at k=" << k;
    out.resolution_warning = os.str();
  }
  const std::size_t m = grid.size();
  out.matrix = ComplexMatrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  if (m == 0) return out;

  const auto [xmin, xmax] = std::minmax_element(grid.ix.begin(), grid.ix.end());
  const auto [ymin, ymax] = std::minmax_element(grid.iy.begin(), grid.iy.end());
  const long dx_span = *xmax - *xmin + 1;
  const long dy_span = *ymax - *ymin + 1;

  // The kernel depends on the lattice offset only.
  const double h = grid.h;
  const double cell = h * h;
  std::vector<Complex> table(static_cast<std::size_t>(dx_span * dy_span));
  for (long dy = 0; dy < dy_span; ++dy) {
    for (long dx = 0; dx < dx_span; ++dx) {
      Complex v;
      if (dx == 0 && dy == 0) {
        v = self_cell_integral(k, h / std::sqrt(kPi));
      } else {
        const double r = h * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
        v = 0.25 * kI * hankel1(0, k * r) * cell;
      }
      table[static_cast<std::size_t>(dy * dx_span + dx)] = v;
    }
  }
  const double k2 = k * k;
  for (std::size_t l = 0; l < m; ++l) {
    const double ml = grid.contrast[l];
    if (ml == 0.0) continue;
    const Complex scale = -k2 * ml;
    for (std::size_t j = 0; j < m; ++j) {
      const long dx = std::labs(grid.ix[j] - grid.ix[l]);
      const long dy = std::labs(grid.iy[j] - grid.iy[l]);
      out.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) +=
          scale * table[static_cast<std::size_t>(dy * dx_span + dx)];
    }
  }
  return out;
}

/// Plane waves e^{ik theta_i . y_j}, one column per incident direction.
inline ComplexMatrix plane_waves(const VolumeGrid& grid, double k, const DirectionGrid& dirs) {
  ComplexMatrix u(static_cast<Eigen::Index>(grid.size()), dirs.size());
  for (int i = 0; i < dirs.size(); ++i) {
    const Point d = dirs.direction(i);
    for (std::size_t j = 0; j < grid.size(); ++j)
      u(static_cast<Eigen::Index>(j), i) = std::exp(kI * (k * dot(d, grid.centers[j])));
  }
  return u;
}

struct FieldSolution {
  double k = 0.0;
  std::shared_ptr<const VolumeGrid> grid;
  ComplexVector u;  // total field at cell centres
};

/// Solves A u = u_i for one incident plane wave.
inline FieldSolution solve_total_field(const ComplexMatrix& a, double k, std::shared_ptr<const VolumeGrid> grid,
                                       double incident_angle) {
  if (a.rows() != static_cast<Eigen::Index>(grid->size())) throw InvalidArgument("LS matrix does not match grid");
  const Point d{std::cos(incident_angle), std::sin(incident_angle)};
  ComplexVector ui(static_cast<Eigen::Index>(grid->size()));
  for (std::size_t j = 0; j < grid->size(); ++j)
    ui(static_cast<Eigen::Index>(j)) = std::exp(kI * (k * dot(d, grid->centers[j])));
  FieldSolution sol{k, grid, ComplexVector()};
  if (grid->size() == 0) return sol;
  const ComplexMatrix x = lu_solve<Complex>(a, ComplexMatrix(ui));
  sol.u = x.col(0);
  const double res = (a * sol.u - ui).norm() / ui.norm();
  if (!(res <= 1e-9)) throw SolverFailure("total field residual " + std::to_string(res) + " exceeds 1e-9");
  return sol;
}

/// e^{-ik theta_s . y_j} m_j h^2, rows = observation directions.
inline ComplexMatrix farfield_weights(const VolumeGrid& grid, double k, const DirectionGrid& obs) {
  const double cell = grid.h * grid.h;
  ComplexMatrix e(obs.size(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (int s = 0; s < obs.size(); ++s)
      e(s, static_cast<Eigen::Index>(j)) =
          std::exp(-kI * (k * dot(obs.direction(s), grid.centers[j]))) * (grid.contrast[j] * cell);
  }
  return e;
}

/// u_inf(theta_s) = gamma k^2 sum_j e^{-ik theta_s . y_j} m_j u_j h^2.
inline ComplexVector farfield_from_field(const FieldSolution& sol, const DirectionGrid& obs) {
  if (sol.grid->size() == 0) return ComplexVector::Zero(obs.size());
  return FarfieldConvention::gamma(sol.k) * sol.k * sol.k * (farfield_weights(*sol.grid, sol.k, obs) * sol.u);
}

/// Farfield matrix of the medium described by a contrast grid: one assembly
/// and one LU factorization shared by all incident directions.
inline FarfieldMatrix grid_farfield_matrix(const VolumeGrid& full_grid, double k, const DirectionGrid& inc,
                                           const DirectionGrid& obs, std::string source = "data",
                                           std::vector<std::string>* warnings = nullptr) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be > 0");
  const VolumeGrid grid = full_grid.support();
  FarfieldMatrix out(k, inc, obs, ComplexMatrix::Zero(obs.size(), inc.size()), std::move(source));
  if (grid.size() == 0) return out;
  auto assembly = assemble_ls_matrix(grid, k);
  if (assembly.resolution_warning && warnings) warnings->push_back(*assembly.resolution_warning);
  const ComplexLu lu(assembly.matrix);
  assembly.matrix.resize(0, 0);
  const ComplexMatrix u = lu.solve(plane_waves(grid, k, inc));
  out.values = FarfieldConvention::gamma(k) * k * k * (farfield_weights(grid, k, obs) * u);
  return out;
}

struct VolumeOptions {
  double h = 0.05;
  int subsamples = 1;
};

inline FarfieldMatrix farfield_matrix(const MediumSpec& medium, double k, const DirectionGrid& inc,
                                      const DirectionGrid& obs, const VolumeOptions& opt,
                                      std::vector<std::string>* warnings = nullptr) {
  return grid_farfield_matrix(medium_volume_grid(medium, opt.h, opt.subsamples), k, inc, obs, "data", warnings);
}

/// Farfield of a disk scatterer from per-mode scattering coefficients b_m
/// (b_{-m} = b_m): u_inf = -4i gamma sum_m b_m e^{im(theta_s - theta_i)},
/// translated to the disk centre.
inline FarfieldMatrix disk_series_farfield(const std::function<Complex(int)>& coeff, double k, double radius,
                                           Point center, const DirectionGrid& inc, const DirectionGrid& obs,
                                           std::string source) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be > 0");
  std::vector<Complex> b;
  const int m_min = static_cast<int>(std::ceil(k * radius)) + 20;
  for (int m = 0;; ++m) {
    b.push_back(coeff(m));
    if (m >= m_min && std::abs(b.back()) < 1e-12) break;
    if (m > m_min + 400) throw SolverFailure("disk series did not reach its tail tolerance");
  }
  const Complex pref = -4.0 * kI * FarfieldConvention::gamma(k);
  ComplexMatrix v(obs.size(), inc.size());
  for (int i = 0; i < inc.size(); ++i) {
    const Point di = inc.direction(i);
    for (int s = 0; s < obs.size(); ++s) {
      const double dphi = obs.angle(s) - inc.angle(i);
      Complex sum = b[0];
      for (std::size_t m = b.size() - 1; m >= 1; --m) sum += 2.0 * b[m] * std::cos(static_cast<double>(m) * dphi);
      const Point ds = obs.direction(s);
      v(s, i) = pref * sum * std::exp(kI * (k * dot(di - ds, center)));
    }
  }
  return FarfieldMatrix(k, inc, obs, std::move(v), std::move(source));
}

/// Scattering coefficient of mode m for a homogeneous disk of index n.
inline Complex mie_coefficient(int m, double n, double k, double radius) {
  const double s = std::sqrt(n);
  const double x = k * radius;
  const double xi = s * x;
  const double jn = bessel_j(m, xi);
  const double jnp = bessel_j_prime(m, xi);
  const double num = s * jnp * bessel_j(m, x) - jn * bessel_j_prime(m, x);
  const Complex den = s * jnp * hankel1(m, x) - jn * hankel1_prime(m, x);
  return -num / den;
}

inline FarfieldMatrix mie_disk_farfield(double n, const Disk& disk, double k, const DirectionGrid& inc,
                                        const DirectionGrid& obs) {
  if (!(n > 0.0)) throw InvalidArgument("refractive index must be > 0");
  if (!(disk.radius > 0.0)) throw InvalidArgument("disk radius must be > 0");
  if (n == 1.0) return FarfieldMatrix(k, inc, obs, ComplexMatrix::Zero(obs.size(), inc.size()));
  return disk_series_farfield([&](int m) { return mie_coefficient(m, n, k, disk.radius); }, k, disk.radius,
                              disk.center, inc, obs, "data");
}

/// Total field of the disk problem at given points (inside or outside).
inline ComplexVector mie_disk_total_field(double n, const Disk& disk, double k, double incident_angle,
                                          const std::vector<Point>& points) {
  const double s = std::sqrt(n);
  const double x = k * disk.radius;
  const int mmax = static_cast<int>(std::ceil(k * disk.radius * std::max(1.0, s))) + 25;
  std::vector<Complex> b(static_cast<std::size_t>(mmax + 1));
  std::vector<Complex> c(static_cast<std::size_t>(mmax + 1));
  for (int m = 0; m <= mmax; ++m) {
    b[static_cast<std::size_t>(m)] = mie_coefficient(m, n, k, disk.radius);
    // Interior amplitude from continuity of the value (or of the flux if
    // J_m(sqrt(n) k R) vanishes).
    const double jn = bessel_j(m, s * x);
    const double jnp = bessel_j_prime(m, s * x);
    const Complex outer = bessel_j(m, x) + b[static_cast<std::size_t>(m)] * hankel1(m, x);
    const Complex outer_d = bessel_j_prime(m, x) + b[static_cast<std::size_t>(m)] * hankel1_prime(m, x);
    c[static_cast<std::size_t>(m)] = std::abs(jn) > std::abs(jnp) ? outer / jn : outer_d / (s * jnp);
  }
  const Point d{std::cos(incident_angle), std::sin(incident_angle)};
  const Complex phase = std::exp(kI * (k * dot(d, disk.center)));
  ComplexVector u(static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Point rel = points[p] - disk.center;
    const double r = norm(rel);
    const double ang = std::atan2(rel.y, rel.x) - incident_angle;
    Complex sum = 0.0;
    for (int m = mmax; m >= 0; --m) {
      const Complex im = std::pow(kI, m);
      Complex radial;
      if (r < disk.radius) {
        radial = c[static_cast<std::size_t>(m)] * bessel_j(m, s * k * r);
      } else {
        radial = bessel_j(m, k * r) + b[static_cast<std::size_t>(m)] * hankel1(m, k * r);
      }
      sum += (m == 0 ? 1.0 : 2.0) * im * radial * std::cos(m * ang);
    }
    u(static_cast<Eigen::Index>(p)) = phase * sum;
  }
  return u;
}

/// Herglotz wave u_i(g)(x) = sum_i g_i e^{ik theta_i . x} (2 pi / N).
inline ComplexVector herglotz_field(const ComplexVector& g, double k, const DirectionGrid& dirs,
                                    const std::vector<Point>& points) {
  if (g.size() != dirs.size()) throw InvalidArgument("density length does not match direction grid");
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    Complex acc = 0.0;
    for (int i = 0; i < dirs.size(); ++i) acc += g(i) * std::exp(kI * (k * dot(dirs.direction(i), points[p])));
    out(static_cast<Eigen::Index>(p)) = acc * dirs.weight();
  }
  return out;
}

}  // namespace artbg
