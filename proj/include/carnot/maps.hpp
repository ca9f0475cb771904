#ifndef CARNOT_MAPS_HPP
#define CARNOT_MAPS_HPP

#include <functional>
#include <memory>
#include <optional>

#include "carnot/hhom.hpp"

namespace carnot {

/// A pure map between group bundles: same input, same output. Estimators rely
/// on purity for determinism and for parallel evaluation.
struct MapHandle {
  std::string name;
  GroupBundle source;
  GroupBundle target;
  std::function<std::vector<double>(std::span<const double>)> eval;

  std::optional<double> declared_lipschitz;
  std::optional<int> multiplicity;  // analytic N for constructed maps
  std::shared_ptr<const HHomomorphism> exact_differential;  // when known

  std::vector<double> operator()(std::span<const double> x) const { return eval(x); }
  std::vector<double> operator()(const std::vector<double>& x) const {
    return eval(std::span<const double>(x));
  }
};

MapHandle map_identity(const GroupBundle& g);
MapHandle map_constant(const GroupBundle& source, const GroupBundle& target);
MapHandle map_dilation(const GroupBundle& g, double lambda);
MapHandle map_from_hhom(const HHomomorphism& h, const std::string& name = "hhom");

/// y -> c * f(y); same Lipschitz bound as f (left invariance).
MapHandle map_left_translate(const std::vector<double>& c, const MapHandle& f);

/// y -> y * c; generally not Lipschitz for a homogeneous target distance,
/// used to exercise divergence handling in the estimators.
MapHandle map_right_translate(const GroupBundle& g, const std::vector<double>& c);

/// Projection of the source onto its first layer, target abelian R^(n1).
MapHandle map_layer1_projection(const GroupBundle& source);

/// Abelian fold (x1, x2, ...) -> (|x1|, x2, ...); 2-to-1 on x1-symmetric
/// domains, N = 2.
MapHandle map_fold_abs(const GroupBundle& abelian);

/// f(z) = L(z) * w(z) with w(z) a target layer-1 vector quadratic in the
/// source layer-1 coordinates: rho(f(0)^{-1A} f(z), L(z)) <= C ||z||^2 at the
/// base point 0, so remainder profiles decay linearly in scale.
MapHandle map_quadratic_perturbation(const HHomomorphism& h, double amplitude);

/// L1 on the half-space {<x_layer1, normal> >= 0}, L2 elsewhere.
MapHandle map_piecewise(const HHomomorphism& l1, const HHomomorphism& l2,
                        const std::vector<double>& layer1_normal);

/// One factor of the section 2.3 product map: a bracket-compatible
/// h-homomorphism into the Heisenberg group (Lipschitz constant computable),
/// optionally preceded by a left translation of the source basepoint.
struct ProductFactor {
  HHomomorphism map;                 // source -> Heisenberg
  std::optional<std::vector<double>> offset;  // target offset c: y -> c * map(y)
};

struct ProductMapSpec {
  std::vector<ProductFactor> factors;  // K factors
  std::vector<double> weights;         // r_k > 0
  std::vector<double> basepoint;       // x0 in the common source; default 0
};

class ProductMapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The truncated product map G(x) = (delta_{r_k} f^k(x))_k into h-product:K,
/// with the declared bound C0 = (sum r_k^2 L_k)^(1/2). Factors must vanish at
/// the basepoint (refused otherwise, citing the normalization), and each
/// factor Lipschitz constant must be <= 1 so that C0 is a true bound; factors
/// with L_k > 1 are rescaled via f' = delta_{1/L} f, r' = r L, which leaves
/// every g_k = delta_{r_k} f^k unchanged.
MapHandle make_product_lipschitz_map(const ProductMapSpec& spec);

}  // namespace carnot

#endif
