#pragma once

// Geometry, media, backgrounds, direction grids and the 2D farfield
// normalization shared by every solver in the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "artbg/errors.hpp"

namespace artbg {

using Complex = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct Box {
  Point lo;
  Point hi;
  bool contains(Point p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  Box merged(const Box& o) const {
    return {{std::min(lo.x, o.lo.x), std::min(lo.y, o.lo.y)},
            {std::max(hi.x, o.hi.x), std::max(hi.y, o.hi.y)}};
  }
};

struct Disk {
  Point center;
  double radius = 1.0;
};

/// Kite benchmark curve t -> center + scale * (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).
struct Kite {
  Point center;
  double scale = 1.0;

  static constexpr double kBend = 0.65;
  static constexpr double kStretch = 1.5;

  Point boundary(double t) const {
    return {center.x + scale * (std::cos(t) + kBend * std::cos(2.0 * t) - kBend),
            center.y + scale * kStretch * std::sin(t)};
  }
  /// Leftmost abscissa of the unit kite, attained where cos t = -1/(4 kBend).
  static double unit_xmin() {
    const double c = -1.0 / (4.0 * kBend);
    return c + kBend * (2.0 * c * c - 1.0) - kBend;
  }
};

class Shape;

struct ShapeUnion {
  std::vector<Shape> parts;
};

/// Disk, kite, or a union of shapes. Membership is the open interior.
class Shape {
 public:
  using Variant = std::variant<Disk, Kite, ShapeUnion>;

  Shape() : v_(Disk{}) {}
  Shape(Disk d) : v_(d) {  // NOLINT(google-explicit-constructor)
    if (!(d.radius > 0.0) || !std::isfinite(d.radius)) throw InvalidArgument("disk radius must be > 0");
  }
  Shape(Kite k) : v_(k) {  // NOLINT(google-explicit-constructor)
    if (!(k.scale > 0.0) || !std::isfinite(k.scale)) throw InvalidArgument("kite scale must be > 0");
  }
  Shape(ShapeUnion u) : v_(std::move(u)) {  // NOLINT(google-explicit-constructor)
    if (std::get<ShapeUnion>(v_).parts.empty()) throw InvalidArgument("shape union must not be empty");
  }

  const Variant& variant() const { return v_; }
  const Disk* as_disk() const { return std::get_if<Disk>(&v_); }

  bool contains(Point p) const;
  Box bounding_box() const;
  std::string describe() const;

 private:
  Variant v_;
};

inline bool Shape::contains(Point p) const {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          const double dx = p.x - s.center.x;
          const double dy = p.y - s.center.y;
          return dx * dx + dy * dy < s.radius * s.radius;
        } else if constexpr (std::is_same_v<T, Kite>) {
          // Each horizontal line crosses the kite boundary exactly twice, at
          // t = asin(y/1.5) and pi - asin(y/1.5), since y(t) is monotone on
          // both half-turns.
          const double yn = (p.y - s.center.y) / (s.scale * Kite::kStretch);
          if (!(std::abs(yn) < 1.0)) return false;
          const double t1 = std::asin(yn);
          const double t2 = kPi - t1;
          const double xa = s.boundary(t1).x;
          const double xb = s.boundary(t2).x;
          return p.x > std::min(xa, xb) && p.x < std::max(xa, xb);
        } else {
          return std::any_of(s.parts.begin(), s.parts.end(), [&](const Shape& q) { return q.contains(p); });
        }
      },
      v_);
}

inline Box Shape::bounding_box() const {
  return std::visit(
      [&](const auto& s) -> Box {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return {{s.center.x - s.radius, s.center.y - s.radius}, {s.center.x + s.radius, s.center.y + s.radius}};
        } else if constexpr (std::is_same_v<T, Kite>) {
          return {{s.center.x + s.scale * Kite::unit_xmin(), s.center.y - s.scale * Kite::kStretch},
                  {s.center.x + s.scale, s.center.y + s.scale * Kite::kStretch}};
        } else {
          Box b = s.parts.front().bounding_box();
          for (const auto& q : s.parts) b = b.merged(q.bounding_box());
          return b;
        }
      },
      v_);
}

inline std::string Shape::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          os << "disk " << s.center.x << ' ' << s.center.y << ' ' << s.radius;
        } else if constexpr (std::is_same_v<T, Kite>) {
          os << "kite " << s.center.x << ' ' << s.center.y << ' ' << s.scale;
        } else {
          for (std::size_t i = 0; i < s.parts.size(); ++i) os << (i ? " + " : "") << s.parts[i].describe();
        }
      },
      v_);
  return os.str();
}

/// Refractive index n: piecewise constant over shapes, 1 elsewhere. Where
/// pieces overlap the first listed piece wins.
class MediumSpec {
 public:
  struct Piece {
    Shape shape;
    double value;
  };

  MediumSpec() = default;
  explicit MediumSpec(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    for (const auto& p : pieces_)
      if (!(p.value > 0.0) || !std::isfinite(p.value)) throw InvalidArgument("refractive index must be > 0");
  }
  static MediumSpec homogeneous(Shape s, double n) { return MediumSpec({{std::move(s), n}}); }

  const std::vector<Piece>& pieces() const { return pieces_; }

  double index_at(Point p) const {
    for (const auto& pc : pieces_)
      if (pc.shape.contains(p)) return pc.value;
    return 1.0;
  }
  double max_index() const {
    double m = 1.0;
    for (const auto& p : pieces_) m = std::max(m, p.value);
    return m;
  }
  /// Same pieces with every value multiplied by c.
  MediumSpec scaled(double c) const {
    auto ps = pieces_;
    for (auto& p : ps) p.value *= c;
    return MediumSpec(std::move(ps));
  }
  /// Constant value if every piece shares it, 0 otherwise.
  double constant_value() const {
    if (pieces_.empty()) return 1.0;
    for (const auto& p : pieces_)
      if (p.value != pieces_.front().value) return 0.0;
    return pieces_.front().value;
  }
  std::string describe() const {
    if (pieces_.empty()) return "homogeneous";
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      os << (i ? "; " : "") << "n=" << pieces_[i].value << " on " << pieces_[i].shape.describe();
    return os.str();
  }

 private:
  std::vector<Piece> pieces_;
};

struct Dirichlet {};
struct Robin {
  double gamma = 0.0;
};

/// B(u) = u, or B(u) = du/dnu + gamma u with nu the outward normal.
class BoundaryCondition {
 public:
  BoundaryCondition() : v_(Dirichlet{}) {}
  BoundaryCondition(Dirichlet d) : v_(d) {}  // NOLINT(google-explicit-constructor)
  BoundaryCondition(Robin r) : v_(r) {       // NOLINT(google-explicit-constructor)
    if (!std::isfinite(r.gamma)) throw InvalidArgument("Robin impedance must be finite");
  }
  bool is_dirichlet() const { return std::holds_alternative<Dirichlet>(v_); }
  double gamma() const { return is_dirichlet() ? 0.0 : std::get<Robin>(v_).gamma; }
  std::string describe() const {
    if (is_dirichlet()) return "dirichlet";
    std::ostringstream os;
    os.precision(17);
    os << "robin " << gamma();
    return os.str();
  }

 private:
  std::variant<Dirichlet, Robin> v_;
};

struct ZimBackground {
  Shape domain;
};
struct ObstacleBackground {
  Shape domain;
  BoundaryCondition bc;
};
struct GeneralRhoBackground {
  std::vector<MediumSpec::Piece> pieces;  // rho values may be any real
};

/// Artificial reference medium used to build F_art = F - F~.
class BackgroundSpec {
 public:
  using Variant = std::variant<ZimBackground, ObstacleBackground, GeneralRhoBackground>;

  BackgroundSpec(ZimBackground z) : v_(std::move(z)) {}  // NOLINT(google-explicit-constructor)
  BackgroundSpec(ObstacleBackground o) : v_(std::move(o)) {  // NOLINT(google-explicit-constructor)
    if (!std::get<ObstacleBackground>(v_).domain.as_disk())
      throw UnsupportedShape("obstacle backgrounds are only supported on disks");
  }
  BackgroundSpec(GeneralRhoBackground g) : v_(std::move(g)) {  // NOLINT(google-explicit-constructor)
    for (const auto& p : std::get<GeneralRhoBackground>(v_).pieces)
      if (!std::isfinite(p.value)) throw InvalidArgument("rho must be finite");
  }

  const Variant& variant() const { return v_; }

  /// rho(x): 0 on a ZIM domain, piece value for general rho, 1 elsewhere.
  double rho_at(Point p) const {
    if (const auto* z = std::get_if<ZimBackground>(&v_)) return z->domain.contains(p) ? 0.0 : 1.0;
    if (const auto* g = std::get_if<GeneralRhoBackground>(&v_)) {
      for (const auto& pc : g->pieces)
        if (pc.shape.contains(p)) return pc.value;
    }
    return 1.0;
  }

  /// Omega_b: the region the artificial background modifies.
  Shape domain() const {
    if (const auto* z = std::get_if<ZimBackground>(&v_)) return z->domain;
    if (const auto* o = std::get_if<ObstacleBackground>(&v_)) return o->domain;
    const auto& g = std::get<GeneralRhoBackground>(v_);
    if (g.pieces.empty()) throw InvalidArgument("general rho background has no pieces");
    ShapeUnion u;
    for (const auto& p : g.pieces) u.parts.push_back(p.shape);
    return u.parts.size() == 1 ? u.parts.front() : Shape(std::move(u));
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* z = std::get_if<ZimBackground>(&v_)) {
      os << "zim on " << z->domain.describe();
    } else if (const auto* o = std::get_if<ObstacleBackground>(&v_)) {
      os << "obstacle " << o->bc.describe() << " on " << o->domain.describe();
    } else {
      os << "general_rho";
      for (const auto& p : std::get<GeneralRhoBackground>(v_).pieces)
        os << "; rho=" << p.value << " on " << p.shape.describe();
    }
    return os.str();
  }

 private:
  Variant v_;
};

/// N uniformly spaced directions theta_j = 2 pi j / N on the unit circle.
class DirectionGrid {
 public:
  DirectionGrid() = default;
  explicit DirectionGrid(int count) : count_(count) {
    if (count < 2) throw InvalidArgument("direction grid needs at least 2 directions");
  }
  int size() const { return count_; }
  double angle(int j) const { return 2.0 * kPi * j / count_; }
  Point direction(int j) const { return {std::cos(angle(j)), std::sin(angle(j))}; }
  /// Quadrature weight per node on the unit circle.
  double weight() const { return 2.0 * kPi / count_; }
  friend bool operator==(const DirectionGrid&, const DirectionGrid&) = default;

 private:
  int count_ = 2;
};

inline DirectionGrid make_direction_grid(int n) { return DirectionGrid(n); }

inline bool shape_contains(const Shape& s, Point p) { return s.contains(p); }

/// 2D farfield normalization: u_s(x) = e^{ikr} r^{-1/2} (u_inf + O(1/r)).
/// The farfield of the point source (i/4) H0(k|x - z|) is gamma(k) e^{-ik theta.z}.
struct FarfieldConvention {
  static constexpr int kDimension = 2;
  static constexpr const char* kTag = "d2:exp(i*pi/4)/sqrt(8*pi*k)";

  static Complex gamma(double k) { return std::exp(kI * (kPi / 4.0)) / std::sqrt(8.0 * kPi * k); }
};

/// Cell-centred lattice ((i+1/2)h, (j+1/2)h) clipped to a domain.
struct SamplingGrid {
  std::vector<Point> points;
  double spacing = 0.0;
  double cell_area() const { return spacing * spacing; }
};

inline SamplingGrid make_sampling_grid(const Shape& domain, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("sampling spacing must be > 0");
  const Box b = domain.bounding_box();
  SamplingGrid g;
  g.spacing = h;
  const long i0 = static_cast<long>(std::floor(b.lo.x / h - 0.5));
  const long i1 = static_cast<long>(std::ceil(b.hi.x / h - 0.5));
  const long j0 = static_cast<long>(std::floor(b.lo.y / h - 0.5));
  const long j1 = static_cast<long>(std::ceil(b.hi.y / h - 0.5));
  for (long j = j0; j <= j1; ++j) {
    for (long i = i0; i <= i1; ++i) {
      const Point p{(static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h};
      if (domain.contains(p)) g.points.push_back(p);
    }
  }
  if (g.points.empty()) throw InvalidArgument("sampling grid has no point inside the domain");
  return g;
}

}  // namespace artbg
