#ifndef CARNOT_NORM_HPP
#define CARNOT_NORM_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carnot/bch.hpp"
#include "carnot/gradation.hpp"
#include "carnot/rational.hpp"

namespace carnot {

/// Absolute tolerance for float comparisons of norm-scale quantities at unit
/// magnitude; every comparison site normalizes to ~1 first.
inline constexpr double kNormTol = 1e-9;

/// i-th root with the power-of-two exponent factored out, so that
/// kth_root(2^(i*k) * t, i) == 2^k * kth_root(t, i) holds bit-exactly.
double kth_root(double t, int i);

/// l^p norm of a slice with the power-of-two scale of the largest entry
/// factored out; scaling the slice by 2^k scales the result by exactly 2^k.
double scaled_pnorm(std::span<const double> v, double p);
double scaled_sup_norm(std::span<const double> v);
double scaled_euclidean_norm(std::span<const double> v);

enum class LayerNormKind { Euclidean, Sup, Pnorm };

struct LayerNorm {
  LayerNormKind kind = LayerNormKind::Euclidean;
  Rat p = Rat(2);  // used only for Pnorm; p >= 1

  double value(std::span<const double> slice) const;
  bool operator==(const LayerNorm&) const = default;
};

std::string to_string(LayerNormKind k);

/// Record of the empirical sigma search; failures are reproducible from it.
struct CalibrationCertificate {
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  int ascent_restarts = 0;
  double max_defect = 0.0;  // worst observed ||xy|| - ||x|| - ||y||, unit scale
  bool passed = false;
  std::string note;
  std::vector<double> worst_x, worst_y;
};

/// Homogeneous norm max_i sigma_i |x_i|^(1/i) with sigma_1 = 1 (Banach
/// homogeneous norm of the gradation). Inverse symmetry is structural;
/// homogeneity is bit-exact for power-of-two factors by construction of the
/// scaled layer norms.
class HomogeneousNorm {
 public:
  HomogeneousNorm() = default;
  HomogeneousNorm(Gradation grad, std::vector<LayerNorm> layer_norms, std::vector<double> sigmas);

  const Gradation& gradation() const { return grad_; }
  const std::vector<LayerNorm>& layer_norms() const { return layers_; }
  const std::vector<double>& sigmas() const { return sigmas_; }

  double value(std::span<const double> x) const;
  double value(const std::vector<double>& x) const { return value(std::span<const double>(x)); }

  /// Layer norm |x_i| of layer i (before the root and sigma weight).
  double layer_value(int layer, std::span<const double> x) const;

  /// Banach-space norm sum_i |x_i| underlying the group (paper-style product
  /// norm); used for bracket-boundedness reports.
  double banach_value(std::span<const double> x) const;

  CalibrationCertificate certificate;

 private:
  Gradation grad_;
  std::vector<LayerNorm> layers_;
  std::vector<double> sigmas_;
};

/// Left-invariant homogeneous distance rho(x, y) = ||x^{-1} y||.
double distance(const StructureConstants& sc, const HomogeneousNorm& hn,
                std::span<const double> x, std::span<const double> y);
inline double distance(const StructureConstants& sc, const HomogeneousNorm& hn,
                       const std::vector<double>& x, const std::vector<double>& y) {
  return distance(sc, hn, std::span<const double>(x), std::span<const double>(y));
}

/// Exact group part, float norm: the rational backend keeps left invariance
/// bit-exact (x^{-1} z^{-1} z y reduces to x^{-1} y exactly).
double distance(const StructureConstants& sc, const HomogeneousNorm& hn,
                std::span<const Rat> x, std::span<const Rat> y);

std::vector<double> to_doubles(std::span<const Rat> x);
inline std::vector<double> to_doubles(const std::vector<Rat>& x) {
  return to_doubles(std::span<const Rat>(x));
}

class CalibrationFailure : public std::runtime_error {
 public:
  CalibrationFailure(std::string msg, CalibrationCertificate cert)
      : std::runtime_error(std::move(msg)), certificate(std::move(cert)) {}
  CalibrationCertificate certificate;
};

struct CalibrationOptions {
  std::uint64_t budget = 100000;
  std::uint64_t seed = 0xC0FFEEull;
  int ascent_restarts = 64;
  int ascent_steps = 120;
  /// Optional closed-form initialization for sigma_2 (two-step bound).
  std::optional<double> sigma2_init;
};

/// Empirical sigma calibration: random defect sampling plus local ascent from
/// the worst seeds; shrinks sigmas until no violation above kNormTol remains.
/// Throws CalibrationFailure with the worst witness pair if the budget is
/// exhausted without a defect-free vector.
HomogeneousNorm calibrate_sigmas(const StructureConstants& sc,
                                 std::vector<LayerNorm> layer_norms,
                                 const CalibrationOptions& opts);

/// Largest observed triangle defect ||xy|| - ||x|| - ||y|| over `budget`
/// sampled pairs normalized to unit scale, plus local ascent refinement.
/// Used by calibration and by the acceptance suite.
double triangle_defect_search(const StructureConstants& sc, const HomogeneousNorm& hn,
                              std::uint64_t budget, int ascent_restarts, std::uint64_t seed,
                              std::vector<double>* worst_x = nullptr,
                              std::vector<double>* worst_y = nullptr);

/// Per-coordinate bounding box of the ball {||x|| <= radius}: layer i
/// coordinates lie in [-(radius/sigma_i)^i, (radius/sigma_i)^i].
std::vector<double> ball_box_halfwidths(const HomogeneousNorm& hn, double radius);

/// Lebesgue-uniform points in the closed ball around `center` (Haar uniform:
/// BCH translations are unipotent). Rejection sampling from the bounding box;
/// deterministic per (seed, index) so splitting the index range is safe.
std::vector<std::vector<double>> sample_ball(const StructureConstants& sc,
                                             const HomogeneousNorm& hn,
                                             std::span<const double> center, double radius,
                                             std::size_t count, std::uint64_t seed);

/// Direction mesh on the unit sphere {||v|| = 1} containing inverse pairs
/// (v at even, v^{-1} at odd indices) and the +-basis directions.
std::vector<std::vector<double>> sphere_mesh(const StructureConstants& sc,
                                             const HomogeneousNorm& hn, std::size_t count,
                                             std::uint64_t seed);

}  // namespace carnot

#endif
