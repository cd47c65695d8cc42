#pragma once

// Farfield F~ of the artificial background, F_art = F - F~, and the positive
// operator F~# = |F~ + F~*| + |F~ - F~*| used in the GLSM penalty.

#include <string>
#include <utility>
#include <vector>

#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/farfield.hpp"
#include "artbg/forward_scattering.hpp"
#include "artbg/linalg.hpp"
#include "artbg/special_functions.hpp"

namespace artbg {

struct BackgroundFarfield {
  FarfieldMatrix matrix;
  BackgroundSpec spec;
};

/// T = |F~ + F~*| + |F~ - F~*| on the discretized operator (weights included).
struct SharpOperator {
  ComplexMatrix matrix;
  std::string source;
};

inline VolumeGrid background_volume_grid(const BackgroundSpec& spec, double h, int subsamples = 1) {
  const Shape domain = spec.domain();
  return make_volume_grid(domain.bounding_box(), h, [&](Point p) { return spec.rho_at(p) - 1.0; }, subsamples);
}

/// rho = 0 on Omega_b: the volume solver with contrast -1 on Omega_b.
inline BackgroundFarfield zim_farfield(const Shape& domain, double k, const DirectionGrid& inc,
                                       const DirectionGrid& obs, const VolumeOptions& opt,
                                       std::vector<std::string>* warnings = nullptr) {
  BackgroundSpec spec(ZimBackground{domain});
  auto f = grid_farfield_matrix(background_volume_grid(spec, opt.h, opt.subsamples), k, inc, obs, spec.describe(),
                                warnings);
  return {std::move(f), std::move(spec)};
}

inline BackgroundFarfield general_rho_farfield(const GeneralRhoBackground& rho, double k, const DirectionGrid& inc,
                                               const DirectionGrid& obs, const VolumeOptions& opt,
                                               std::vector<std::string>* warnings = nullptr) {
  BackgroundSpec spec(rho);
  auto f = grid_farfield_matrix(background_volume_grid(spec, opt.h, opt.subsamples), k, inc, obs, spec.describe(),
                                warnings);
  return {std::move(f), std::move(spec)};
}

/// Exterior scattering coefficient for a disk with B(u) = 0 on its boundary.
inline Complex obstacle_coefficient(int m, const BoundaryCondition& bc, double k, double radius) {
  const double x = k * radius;
  if (bc.is_dirichlet()) return -bessel_j(m, x) / hankel1(m, x);
  const double g = bc.gamma();
  return -(k * bessel_j_prime(m, x) + g * bessel_j(m, x)) / (k * hankel1_prime(m, x) + g * hankel1(m, x));
}

inline BackgroundFarfield obstacle_farfield(const Shape& domain, const BoundaryCondition& bc, double k,
                                            const DirectionGrid& inc, const DirectionGrid& obs) {
  const Disk* disk = domain.as_disk();
  if (!disk) throw UnsupportedShape("obstacle backgrounds are only supported on disks");
  BackgroundSpec spec(ObstacleBackground{domain, bc});
  auto f = disk_series_farfield([&](int m) { return obstacle_coefficient(m, bc, k, disk->radius); }, k, disk->radius,
                                disk->center, inc, obs, spec.describe());
  return {std::move(f), std::move(spec)};
}

inline BackgroundFarfield background_farfield(const BackgroundSpec& spec, double k, const DirectionGrid& inc,
                                              const DirectionGrid& obs, const VolumeOptions& opt,
                                              std::vector<std::string>* warnings = nullptr) {
  if (const auto* z = std::get_if<ZimBackground>(&spec.variant())) return zim_farfield(z->domain, k, inc, obs, opt, warnings);
  if (const auto* o = std::get_if<ObstacleBackground>(&spec.variant()))
    return obstacle_farfield(o->domain, o->bc, k, inc, obs);
  return general_rho_farfield(std::get<GeneralRhoBackground>(spec.variant()), k, inc, obs, opt, warnings);
}

/// Entrywise F - F~.
inline FarfieldMatrix artificial_farfield(const FarfieldMatrix& data, const FarfieldMatrix& background) {
  require_compatible(data, background);
  FarfieldMatrix out = data;
  out.values = data.values - background.values;
  out.source = "artificial";
  return out;
}

inline FarfieldMatrix artificial_farfield(const FarfieldMatrix& data, const BackgroundFarfield& background) {
  return artificial_farfield(data, background.matrix);
}

inline SharpOperator sharp_operator(const FarfieldMatrix& background) {
  if (background.incident.size() != background.observation.size())
    throw InvalidArgument("sharp operator needs a square farfield matrix");
  const ComplexMatrix f = background.as_operator();
  const ComplexMatrix re = f + f.adjoint();
  const ComplexMatrix im = kI * (f.adjoint() - f);
  ComplexMatrix t = operator_abs(re) + operator_abs(im);
  t = 0.5 * (t + t.adjoint()).eval();
  return {std::move(t), background.source};
}

inline SharpOperator sharp_operator(const BackgroundFarfield& background) { return sharp_operator(background.matrix); }

}  // namespace artbg
