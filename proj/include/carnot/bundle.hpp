#ifndef CARNOT_BUNDLE_HPP
#define CARNOT_BUNDLE_HPP

#include <string>
#include <vector>

#include "carnot/norm.hpp"
#include "carnot/structure_constants.hpp"

namespace carnot {

/// A ready-to-use group: validated structure constants plus a calibrated
/// homogeneous norm. Immutable value; safe to share across threads.
struct GroupBundle {
  std::string name;
  StructureConstants sc;
  HomogeneousNorm norm;

  /// Covering-shape equivalence class of the unit ball (metrics with equal
  /// tokens share covering efficiency exactly; see measure module).
  std::string shape_token;

  /// Derived per-layer bracket-boundedness constants |[x,y]|_i <= C_i |x||y|
  /// in the layered Banach norm; filled by the product constructions.
  std::vector<double> bracket_bound_layers;
  double bracket_bound_total = 0.0;

  int dim() const { return sc.gradation().total_dim(); }
  int step() const { return sc.gradation().step(); }
  int homogeneous_dim() const { return sc.gradation().homogeneous_dim(); }
  const Gradation& gradation() const { return sc.gradation(); }

  std::vector<double> mul(const std::vector<double>& x, const std::vector<double>& y) const {
    return multiply<double>(sc, x, y);
  }
  std::vector<Rat> mul(const std::vector<Rat>& x, const std::vector<Rat>& y) const {
    return multiply<Rat>(sc, x, y);
  }
  double dist(const std::vector<double>& x, const std::vector<double>& y) const {
    return distance(sc, norm, x, y);
  }
};

}  // namespace carnot

#endif
