#ifndef CARNOT_DIFFERENTIATION_HPP
#define CARNOT_DIFFERENTIATION_HPP

#include <optional>

#include "carnot/maps.hpp"
#include "carnot/seminorm.hpp"

namespace carnot {

/// Dyadic scale schedule t_k = t0 * 2^(-k), k = 0..depth-1. Depth is capped
/// at 20 to balance truncation against 64-bit rounding.
struct DyadicSchedule {
  double t0 = 0.5;
  int depth = 12;
  double t(int k) const { return std::ldexp(t0, -k); }
};

/// Convergence thresholds for difference-quotient estimates: final ratio
/// below 1e-3 with at least 3 consecutive decreases.
inline constexpr double kConvergeThreshold = 1e-3;
inline constexpr int kConsecutiveDecreases = 3;

/// delta_{1/t} ( f(x)^{-1} f(x delta_t v) ); t may be negative (signed
/// dilation), which the two-sided limit in the difference quotient needs.
std::vector<double> difference_quotient(const MapHandle& f, std::span<const double> x,
                                        std::span<const double> v, double t);

struct PartialEstimate {
  std::vector<double> value;    // limit estimate (last Richardson iterate)
  std::vector<double> profile;  // rho(q_k, q_{k+1}) per consecutive scales
  bool converged = false;
  bool diverged = false;  // non-monotone divergence; value not meaningful
};

/// Directional derivative along v by the dyadic schedule with first-order
/// Richardson extrapolation on coordinates; the profile lets the caller
/// judge convergence.
PartialEstimate estimate_partial(const MapHandle& f, std::span<const double> x,
                                 std::span<const double> v, const DyadicSchedule& sched);

struct PansuDefects {
  double layer_leakage = 0.0;      // mass of partials outside target layer 1
  double linearity_defect = 0.0;   // rho(partial(sum), L1(sum)) on layer-1 combos
  double hom_defect = 0.0;         // rho(L(uw), L(u)L(w)) on sampled frame products
  double product_formula_defect = 0.0;  // candidate vs product-of-partials
  bool frame_spans = true;
  int divergent_partials = 0;
};

struct PansuCandidate {
  std::optional<HHomomorphism> candidate;
  PansuDefects defects;
};

/// Differential candidate assembled from the difference-quotient partials
/// along a layer-1 frame: L1 from the partials, higher blocks forced by
/// bracket compatibility (the source must be stratified: every higher basis
/// vector must be a combination of left-nested words in layer-1 vectors).
/// The defect report compares the candidate with the product formula
/// prod_i partial_{delta_{t_i} v_i} f(x) on sampled coordinates.
PansuCandidate assemble_pansu_differential(const MapHandle& f, std::span<const double> x,
                                           const std::vector<std::vector<double>>& frame,
                                           const DyadicSchedule& sched, std::uint64_t seed = 2025);

/// Default frame: the standard basis of layer 1 (T = 1).
std::vector<std::vector<double>> default_frame(const GroupBundle& g);

struct RemainderProfile {
  std::vector<double> scales;
  std::vector<double> ratios;  // max_z rho(f(x)^{-1} f(xz), L(z)) / r per scale
  bool pass = false;
};

/// Measures rho(f(x)^{-1} f(xz), L(z)) = o(d(z,0)) on dyadic spheres;
/// PASS when the ratio sequence decreases below the threshold.
RemainderProfile validate_differential(const MapHandle& f, std::span<const double> x,
                                       const HHomomorphism& L, const DyadicSchedule& sched,
                                       int samples_per_scale = 24, std::uint64_t seed = 77);

/// Metric differential estimate: s(v) = lim rho(f(x), f(x delta_t v)) / t per
/// mesh direction, with symmetry and sampled triangle checks recorded, plus a
/// refiner for off-mesh directions using the same estimation parameters.
SeminormSample estimate_metric_differential(const MapHandle& f, std::span<const double> x,
                                            const std::vector<std::vector<double>>& mesh,
                                            const DyadicSchedule& sched);

}  // namespace carnot

#endif
