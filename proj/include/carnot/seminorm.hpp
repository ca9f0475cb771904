#ifndef CARNOT_SEMINORM_HPP
#define CARNOT_SEMINORM_HPP

#include <functional>
#include <vector>

#include "carnot/bundle.hpp"

namespace carnot {

/// Estimated metric differential: values of a homogeneous seminorm on a
/// direction mesh of the unit sphere. Directions come in inverse pairs
/// (v at even index 2j, v^{-1} at 2j+1); extension off the mesh is by
/// homogeneity s(delta_r v) = r s(v).
struct SeminormSample {
  std::vector<std::vector<double>> directions;
  std::vector<double> values;
  std::vector<bool> ok;  // per-direction convergence
  double tolerance = 1e-6;

  double symmetry_defect = 0.0;  // max |s(v) - s(v^{-1})| over pairs
  double triangle_defect = 0.0;  // max violation found by the sampled check

  /// Optional exact evaluator at arbitrary arguments (same estimation
  /// parameters as the mesh values); nearest-direction extension otherwise.
  std::function<double(std::span<const double>)> refiner;

  double min_value() const;
  double max_value() const;
  bool degenerate(double rel_tol = 1e-6) const {
    return min_value() < rel_tol * std::max(max_value(), 1e-300);
  }

  /// Homogeneous extension: refiner when present, nearest mesh direction
  /// otherwise. Requires a norm to split z = delta_r v.
  double evaluate(const StructureConstants& sc, const HomogeneousNorm& hn,
                  std::span<const double> z) const;
};

/// Directions with s(v) < tol; an empty list certifies homogeneous-norm
/// status at sample resolution.
std::vector<int> detect_null_directions(const SeminormSample& s, double tol);

}  // namespace carnot

#endif
