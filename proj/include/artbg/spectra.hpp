#pragma once

// Reference spectra of the modified-background transmission eigenproblems:
//   buckling  div(n^-1 grad) form  Delta(n^-1 Delta w) = -k^2 Delta w, w in H^2_0
//   cavity    Delta w + k^2 n w = 0 with B(w) = 0
// on lattices (fictitious-domain zero extension) and in closed form on disks,
// and recovery of a constant index from detected indicator peaks.

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/glsm_indicator.hpp"
#include "artbg/linalg.hpp"
#include "artbg/special_functions.hpp"

namespace artbg {

/// Nodes (i h, j h) strictly inside a domain.
struct Lattice {
  double h = 0.0;
  long i0 = 0;
  long j0 = 0;
  long nx = 0;
  long ny = 0;
  std::vector<int> slot;  // nx*ny, interior id or -1
  std::vector<Point> nodes;
  std::vector<long> ix;
  std::vector<long> iy;

  int id(long i, long j) const {
    if (i < i0 || j < j0 || i >= i0 + nx || j >= j0 + ny) return -1;
    return slot[static_cast<std::size_t>((j - j0) * nx + (i - i0))];
  }
  std::size_t size() const { return nodes.size(); }
};

inline constexpr double kMinCellsAcross = 20.0;

inline std::shared_ptr<const Lattice> make_lattice(const Shape& domain, double h) {
  if (!(h > 0.0)) throw InvalidArgument("lattice spacing must be > 0");
  const Box b = domain.bounding_box();
  const double across = std::min(b.hi.x - b.lo.x, b.hi.y - b.lo.y);
  if (across / h < kMinCellsAcross)
    throw InvalidArgument("lattice too coarse: fewer than 20 cells across the domain");
  auto lat = std::make_shared<Lattice>();
  lat->h = h;
  lat->i0 = static_cast<long>(std::floor(b.lo.x / h)) - 2;
  lat->j0 = static_cast<long>(std::floor(b.lo.y / h)) - 2;
  lat->nx = static_cast<long>(std::ceil(b.hi.x / h)) + 3 - lat->i0;
  lat->ny = static_cast<long>(std::ceil(b.hi.y / h)) + 3 - lat->j0;
  lat->slot.assign(static_cast<std::size_t>(lat->nx * lat->ny), -1);
  for (long j = lat->j0; j < lat->j0 + lat->ny; ++j) {
    for (long i = lat->i0; i < lat->i0 + lat->nx; ++i) {
      const Point p{static_cast<double>(i) * h, static_cast<double>(j) * h};
      if (!domain.contains(p)) continue;
      lat->slot[static_cast<std::size_t>((j - lat->j0) * lat->nx + (i - lat->i0))] = static_cast<int>(lat->nodes.size());
      lat->nodes.push_back(p);
      lat->ix.push_back(i);
      lat->iy.push_back(j);
    }
  }
  if (lat->nodes.empty()) throw InvalidArgument("lattice has no interior node");
  return lat;
}

/// Values on the interior nodes of a lattice; zero everywhere else.
struct LatticeFunction {
  std::shared_ptr<const Lattice> lattice;
  RealVector values;
};

namespace detail {

// Crossings closer than this to a node are clamped so the diagonal stays bounded.
inline constexpr double kMinBoundaryFraction = 1e-3;

inline constexpr long kDx[4] = {1, -1, 0, 0};
inline constexpr long kDy[4] = {0, 0, 1, -1};

/// -Delta_h on interior nodes with zero extension (unscaled by h^2).
inline SparseMatrix negative_laplacian(const Lattice& lat) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t p = 0; p < lat.size(); ++p) {
    t.emplace_back(static_cast<int>(p), static_cast<int>(p), 4.0);
    for (int d = 0; d < 4; ++d) {
      const int q = lat.id(lat.ix[p] + kDx[d], lat.iy[p] + kDy[d]);
      if (q >= 0) t.emplace_back(static_cast<int>(p), q, -1.0);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(lat.size()), static_cast<Eigen::Index>(lat.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Delta_h of a zero-extended lattice function, evaluated on interior nodes
/// and on the exterior ring of nodes adjacent to them. Returns the operator
/// and, per row, the index value used to weight that row.
inline std::pair<SparseMatrix, std::vector<double>> extended_laplacian(const Lattice& lat, const MediumSpec& n) {
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> weight;
  int row = 0;
  for (std::size_t p = 0; p < lat.size(); ++p) {
    t.emplace_back(row, static_cast<int>(p), -4.0);
    for (int d = 0; d < 4; ++d) {
      const int q = lat.id(lat.ix[p] + kDx[d], lat.iy[p] + kDy[d]);
      if (q >= 0) t.emplace_back(row, q, 1.0);
    }
    weight.push_back(n.index_at(lat.nodes[p]));
    ++row;
  }
  // Ring rows: exterior nodes touching the interior; index taken as the mean
  // over their interior neighbours so scaling and ordering of n carry over.
  std::vector<char> seen(lat.slot.size(), 0);
  for (std::size_t p = 0; p < lat.size(); ++p) {
    for (int d = 0; d < 4; ++d) {
      const long i = lat.ix[p] + kDx[d];
      const long j = lat.iy[p] + kDy[d];
      if (lat.id(i, j) >= 0) continue;
      const auto s = static_cast<std::size_t>((j - lat.j0) * lat.nx + (i - lat.i0));
      if (seen[s]) continue;
      seen[s] = 1;
      double sum = 0.0;
      int cnt = 0;
      for (int e = 0; e < 4; ++e) {
        const int q = lat.id(i + kDx[e], j + kDy[e]);
        if (q < 0) continue;
        t.emplace_back(row, q, 1.0);
        sum += weight[static_cast<std::size_t>(q)];
        ++cnt;
      }
      weight.push_back(sum / cnt);
      ++row;
    }
  }
  SparseMatrix m(row, static_cast<Eigen::Index>(lat.size()));
  m.setFromTriplets(t.begin(), t.end());
  return {std::move(m), std::move(weight)};
}

struct Pencil {
  SparseMatrix a;
  SparseMatrix b;
};

inline Pencil buckling_pencil(const Lattice& lat, const MediumSpec& n) {
  auto [lext, nrow] = extended_laplacian(lat, n);
  RealVector inv(static_cast<Eigen::Index>(nrow.size()));
  for (std::size_t r = 0; r < nrow.size(); ++r) inv(static_cast<Eigen::Index>(r)) = 1.0 / nrow[r];
  SparseMatrix a = SparseMatrix(lext.transpose()) * inv.asDiagonal() * lext;
  return {std::move(a), negative_laplacian(lat)};
}

/// Fraction theta in (0, 1] of the lattice step from an interior node to the
/// boundary crossing towards an exterior neighbour, by bisection on membership.
inline double boundary_fraction(const Shape& domain, Point inside, Point outside) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Point p{inside.x + mid * (outside.x - inside.x), inside.y + mid * (outside.y - inside.y)};
    (domain.contains(p) ? lo : hi) = mid;
  }
  return std::max(0.5 * (lo + hi), kMinBoundaryFraction);
}

/// -Delta_h with w = 0 imposed at the actual boundary crossing: the exterior
/// neighbour takes the linearly extrapolated ghost value -(1 - theta)/theta w_p,
/// which only changes the diagonal and keeps the matrix symmetric.
inline SparseMatrix dirichlet_laplacian(const Lattice& lat, const Shape& domain) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t p = 0; p < lat.size(); ++p) {
    double diag = 0.0;
    for (int d = 0; d < 4; ++d) {
      const int q = lat.id(lat.ix[p] + kDx[d], lat.iy[p] + kDy[d]);
      if (q >= 0) {
        t.emplace_back(static_cast<int>(p), q, -1.0);
        diag += 1.0;
      } else {
        const Point out{lat.nodes[p].x + static_cast<double>(kDx[d]) * lat.h,
                        lat.nodes[p].y + static_cast<double>(kDy[d]) * lat.h};
        diag += 1.0 / boundary_fraction(domain, lat.nodes[p], out);
      }
    }
    t.emplace_back(static_cast<int>(p), static_cast<int>(p), diag);
  }
  SparseMatrix m(static_cast<Eigen::Index>(lat.size()), static_cast<Eigen::Index>(lat.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline Pencil cavity_pencil(const Lattice& lat, const Shape& domain, const MediumSpec& n) {
  SparseMatrix b(static_cast<Eigen::Index>(lat.size()), static_cast<Eigen::Index>(lat.size()));
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t p = 0; p < lat.size(); ++p)
    t.emplace_back(static_cast<int>(p), static_cast<int>(p), n.index_at(lat.nodes[p]));
  b.setFromTriplets(t.begin(), t.end());
  // Cavity values k^2 carry the 1/h^2 of the Laplacian.
  const double s = 1.0 / (lat.h * lat.h);
  return {s * dirichlet_laplacian(lat, domain), std::move(b)};
}

}  // namespace detail

enum class SpectrumKind { kBuckling, kCavity };

struct Spectrum {
  SpectrumKind kind = SpectrumKind::kBuckling;
  std::string boundary = "clamped";  // clamped | dirichlet | robin <gamma>
  std::string domain;
  std::string index;
  std::vector<double> eigenvalues;   // ascending, repeated by multiplicity; k^2 values
  double h = 0.0;                    // 0 for closed-form references
  std::string method;
  std::shared_ptr<const Lattice> lattice;
  RealMatrix eigenvectors;           // lattice solvers only

  LatticeFunction eigenfunction(int p) const {
    if (!lattice) throw InvalidArgument("spectrum has no lattice eigenfunctions");
    return {lattice, eigenvectors.col(p)};
  }
  std::string kind_name() const { return kind == SpectrumKind::kBuckling ? "buckling" : "cavity"; }
};

/// Clamped buckling spectrum on a lattice: A w = lambda B w with
/// A = L^T diag(1/n) L (L the 5-point Laplacian of the zero extension, rows on
/// interior and ring nodes) and B = -L on interior nodes.
inline Spectrum buckling_spectrum(const Shape& domain, const MediumSpec& n, double h, int count = 8) {
  const auto lat = make_lattice(domain, h);
  const auto pencil = detail::buckling_pencil(*lat, n);
  auto eig = sparse_gen_symdef_eig(pencil.a, pencil.b, count);
  Spectrum s;
  s.kind = SpectrumKind::kBuckling;
  s.domain = domain.describe();
  s.index = n.describe();
  s.h = h;
  s.method = "lattice";
  s.lattice = lat;
  s.eigenvalues.assign(eig.values.data(), eig.values.data() + eig.values.size());
  // Eigenvalues carry 1/h^2 relative to the unscaled stencils.
  for (auto& v : s.eigenvalues) v /= h * h;
  s.eigenvectors = std::move(eig.vectors);
  return s;
}

/// Discrete quotient (n^-1 Delta w, Delta w) / ||grad w||^2 with the stencils
/// of buckling_spectrum.
inline double rayleigh_quotient(const LatticeFunction& w, const MediumSpec& n) {
  if (!w.lattice) throw InvalidArgument("lattice function has no lattice");
  const auto pencil = detail::buckling_pencil(*w.lattice, n);
  const double den = w.values.dot(pencil.b * w.values);
  if (!(den > 0.0)) throw InvalidArgument("rayleigh_quotient: zero gradient");
  const double hh = w.lattice->h * w.lattice->h;
  return w.values.dot(pencil.a * w.values) / den / hh;
}

/// Positive roots x of f, mode by mode, merged into the `count` smallest
/// values x^2 * scale, each mode m >= 1 counted twice.
inline std::vector<double> disk_mode_roots(const std::function<double(int, double)>& f, double scale, int count) {
  if (count < 1) throw InvalidArgument("count must be >= 1");
  double xmax = 12.0;
  for (;;) {
    std::vector<double> vals;
    for (int m = 0; m < static_cast<int>(xmax) + 60; ++m) {
      const auto roots = scan_roots([&](double x) { return f(m, x); }, 1e-3, xmax, 0.01, count);
      for (double r : roots) {
        vals.push_back(r * r * scale);
        if (m > 0) vals.push_back(r * r * scale);
      }
    }
    std::sort(vals.begin(), vals.end());
    if (static_cast<int>(vals.size()) >= count && vals[static_cast<std::size_t>(count - 1)] <= xmax * xmax * scale) {
      vals.resize(static_cast<std::size_t>(count));
      return vals;
    }
    xmax *= 2.0;
  }
}

/// Clamped buckling eigenvalues of a disk of radius R with constant index n.
/// Mode m: w = J_m(x r/R) - J_m(x) (r/R)^m, clamped iff x J_m'(x) - m J_m(x) = 0,
/// lambda = x^2 / (n R^2).
inline Spectrum disk_buckling_reference(int count = 8, double radius = 1.0, double n = 1.0) {
  if (!(radius > 0.0) || !(n > 0.0)) throw InvalidArgument("radius and index must be > 0");
  Spectrum s;
  s.kind = SpectrumKind::kBuckling;
  s.domain = Shape(Disk{{0.0, 0.0}, radius}).describe();
  std::ostringstream os;
  os.precision(17);
  os << "constant " << n;
  s.index = os.str();
  s.method = "disk series";
  s.eigenvalues = disk_mode_roots(
      [](int m, double x) { return x * bessel_j_prime(m, x) - m * bessel_j(m, x); }, 1.0 / (n * radius * radius),
      count);
  return s;
}

/// Cavity eigenvalues k^2 of a disk with constant index n:
/// Dirichlet J_m(x) = 0, Robin x J_m'(x) + gamma R J_m(x) = 0, x = sqrt(n) k R.
inline Spectrum disk_cavity_reference(const BoundaryCondition& bc, int count = 8, double radius = 1.0,
                                      double n = 1.0) {
  if (!(radius > 0.0) || !(n > 0.0)) throw InvalidArgument("radius and index must be > 0");
  Spectrum s;
  s.kind = SpectrumKind::kCavity;
  s.boundary = bc.describe();
  s.domain = Shape(Disk{{0.0, 0.0}, radius}).describe();
  std::ostringstream os;
  os.precision(17);
  os << "constant " << n;
  s.index = os.str();
  s.method = "disk series";
  const double gr = bc.gamma() * radius;
  if (bc.is_dirichlet()) {
    s.eigenvalues = disk_mode_roots([](int m, double x) { return bessel_j(m, x); }, 1.0 / (n * radius * radius), count);
  } else {
    s.eigenvalues = disk_mode_roots(
        [gr](int m, double x) { return x * bessel_j_prime(m, x) + gr * bessel_j(m, x); }, 1.0 / (n * radius * radius),
        count);
  }
  return s;
}

/// Cavity spectrum: Dirichlet on any shape by lattice masking, with the
/// boundary crossing corrected on the diagonal; Robin only for a disk carrying
/// a constant index, via the closed-form radial reduction.
inline Spectrum cavity_spectrum(const Shape& domain, const MediumSpec& n, const BoundaryCondition& bc, double h,
                                int count = 8) {
  if (!bc.is_dirichlet()) {
    const Disk* disk = domain.as_disk();
    if (!disk) throw UnsupportedShape("Robin cavity spectra are only supported on disks");
    const auto lat = make_lattice(domain, h);
    const double n0 = n.index_at(lat->nodes.front());
    for (const auto& p : lat->nodes)
      if (n.index_at(p) != n0) throw InvalidArgument("Robin cavity spectra need a constant index on the disk");
    Spectrum s = disk_cavity_reference(bc, count, disk->radius, n0);
    s.domain = domain.describe();
    s.index = n.describe();
    return s;
  }
  const auto lat = make_lattice(domain, h);
  const auto pencil = detail::cavity_pencil(*lat, domain, n);
  auto eig = sparse_gen_symdef_eig(pencil.a, pencil.b, count);
  Spectrum s;
  s.kind = SpectrumKind::kCavity;
  s.boundary = bc.describe();
  s.domain = domain.describe();
  s.index = n.describe();
  s.h = h;
  s.method = "lattice";
  s.lattice = lat;
  s.eigenvalues.assign(eig.values.data(), eig.values.data() + eig.values.size());
  s.eigenvectors = std::move(eig.vectors);
  return s;
}

/// Value at h = 0 of the least-squares polynomial of the given degree in h.
inline double extrapolate_to_zero(const std::vector<double>& hs, const std::vector<double>& values, int degree = 1) {
  if (hs.size() != values.size() || hs.size() < static_cast<std::size_t>(degree + 1))
    throw InvalidArgument("extrapolation needs more samples than the polynomial degree");
  RealMatrix v(static_cast<Eigen::Index>(hs.size()), degree + 1);
  RealVector y(static_cast<Eigen::Index>(hs.size()));
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (int d = 0; d <= degree; ++d) v(static_cast<Eigen::Index>(i), d) = std::pow(hs[i], d);
    y(static_cast<Eigen::Index>(i)) = values[i];
  }
  const RealVector c = v.colPivHouseholderQr().solve(y);
  return c(0);
}

struct MatchedPair {
  double peak_k = 0.0;
  int level = 0;            // index into the distinct reference levels
  double reference = 0.0;   // lambda_p(1)
  double ratio = 0.0;       // lambda_p(1) / peak_k^2
};

struct RecoveryReport {
  std::vector<MatchedPair> pairs;
  double index = 0.0;            // median ratio
  double ess_inf_upper = 0.0;    // ess inf n <= this
  double ess_sup_lower = 0.0;    // ess sup n >= this
  double spread = 0.0;           // max ratio - min ratio
  int unmatched = 0;
};

/// Distinct levels of a spectrum (repeated eigenvalues merged).
inline std::vector<double> distinct_levels(const std::vector<double>& eigenvalues, double rel_tol = 1e-6) {
  std::vector<double> out;
  for (double v : eigenvalues)
    if (out.empty() || v > out.back() * (1.0 + rel_tol)) out.push_back(v);
  return out;
}

/// Matches peaks k_j to the n = 1 reference levels assuming a constant index:
/// the first peak fixes a candidate n from level `first_level`, later peaks go
/// to the nearest unused higher level under the running median estimate.
inline RecoveryReport recover_index(const PeakList& peaks, const Spectrum& reference, int first_level = 0) {
  if (peaks.peaks.empty()) throw NoPeaks("no indicator peaks to match");
  const auto levels = distinct_levels(reference.eigenvalues);
  if (first_level < 0 || first_level >= static_cast<int>(levels.size()))
    throw InvalidArgument("first reference level is out of range");
  std::vector<Peak> sorted = peaks.peaks;
  std::sort(sorted.begin(), sorted.end(), [](const Peak& a, const Peak& b) { return a.k < b.k; });

  RecoveryReport rep;
  std::vector<double> ratios;
  int last = -1;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const double k2 = sorted[j].k * sorted[j].k;
    int level = first_level;
    if (j > 0) {
      const double estimate = detail::median(ratios);
      const double target = estimate * k2;
      level = -1;
      double best = 0.0;
      for (int p = last + 1; p < static_cast<int>(levels.size()); ++p) {
        const double d = std::abs(levels[static_cast<std::size_t>(p)] - target);
        if (level < 0 || d < best) {
          level = p;
          best = d;
        }
      }
      if (level < 0) {
        ++rep.unmatched;
        continue;
      }
    }
    const double ref = levels[static_cast<std::size_t>(level)];
    rep.pairs.push_back({sorted[j].k, level, ref, ref / k2});
    ratios.push_back(ref / k2);
    last = level;
  }
  rep.index = detail::median(ratios);
  rep.ess_inf_upper = *std::min_element(ratios.begin(), ratios.end());
  rep.ess_sup_lower = *std::max_element(ratios.begin(), ratios.end());
  rep.spread = rep.ess_sup_lower - rep.ess_inf_upper;
  return rep;
}

}  // namespace artbg
