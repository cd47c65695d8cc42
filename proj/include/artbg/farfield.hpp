#pragma once

#include <string>
#include <utility>

#include "artbg/domain.hpp"
#include "artbg/errors.hpp"
#include "artbg/linalg.hpp"

namespace artbg {

/// Samples U[s][i] of the farfield pattern u_inf(theta_s, theta_i) at one
/// wavenumber. Rows follow the observation grid, columns the incident grid.
struct FarfieldMatrix {
  double k = 0.0;
  DirectionGrid incident;
  DirectionGrid observation;
  ComplexMatrix values;
  std::string convention = FarfieldConvention::kTag;
  std::string source = "data";  // "data" or a background descriptor

  FarfieldMatrix() = default;
  FarfieldMatrix(double k_, DirectionGrid inc, DirectionGrid obs, ComplexMatrix v, std::string src = "data")
      : k(k_), incident(inc), observation(obs), values(std::move(v)), source(std::move(src)) {
    if (values.rows() != observation.size() || values.cols() != incident.size())
      throw InvalidArgument("farfield matrix dimensions do not match its direction grids");
  }

  /// Discretized farfield operator (F g)(theta_s) = sum_i w U[s][i] g_i.
  ComplexMatrix as_operator() const { return values * incident.weight(); }

  bool compatible_with(const FarfieldMatrix& o) const {
    return k == o.k && incident == o.incident && observation == o.observation && convention == o.convention;
  }
};

inline void require_compatible(const FarfieldMatrix& a, const FarfieldMatrix& b) {
  if (a.k != b.k) throw IncompatibleOperands("farfield matrices have different wavenumbers");
  if (!(a.incident == b.incident) || !(a.observation == b.observation))
    throw IncompatibleOperands("farfield matrices have different direction grids");
  if (a.convention != b.convention) throw IncompatibleOperands("farfield matrices use different conventions");
}

}  // namespace artbg
