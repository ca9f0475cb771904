#ifndef CARNOT_MEASURE_HPP
#define CARNOT_MEASURE_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>

#include "carnot/hhom.hpp"
#include "carnot/seminorm.hpp"

namespace carnot {

/// Volume of the Euclidean unit ball in dimension q (the beta_Q convention:
/// abelian estimates land on the classical values, ratios are free of it).
double omega_q(int q);

struct MeasureEstimate {
  double value = 0.0;
  std::optional<double> lower, upper;
  std::string method;
  double eps = 0.0;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  double grid_pitch = 0.0;
  bool flagged = false;
  std::string flag_reason;
};

class SamplerDensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A homogeneous metric packaged for the covering estimators: the distance,
/// the shape class of its balls (equal tokens share covering efficiency
/// exactly), its own homogeneous dimension, a coordinate box bound for
/// neighbor pruning, and a sampler of its unit ball for the shape
/// calibration.
struct MetricContext {
  std::string token;
  int q = 0;
  std::function<double(std::span<const double>, std::span<const double>)> distance;
  std::function<std::vector<double>(double)> box_halfwidths;  // ball at the origin
  /// Per-coordinate bound of the r-ball around any center in the given
  /// coordinate box (BCH terms shift the box in noncommutative groups).
  std::function<std::vector<double>(std::span<const double>, double)> cover_halfwidths;
  std::function<std::vector<std::vector<double>>(std::size_t, std::uint64_t)> unit_ball_cloud;
};

MetricContext metric_from_bundle(const GroupBundle& g);

/// lambda * d with the same ball shape class.
MetricContext metric_scaled(const MetricContext& base, double lambda);

/// Pullback s_L(x^{-1}y) through an injective h-homomorphism; shares the
/// shape class of the target metric (covering s_L-balls is isometric to
/// covering target balls through L).
MetricContext metric_from_pullback(const HHomomorphism& L);

/// Metric from an estimated metric differential on `source`: distance
/// s(x^{-1}y) via the sample's homogeneous extension. Token is unique unless
/// supplied, so the shape calibration runs on a rejection-sampled s-ball.
MetricContext metric_from_sample(const GroupBundle& source, const SeminormSample& s,
                                 std::optional<std::string> token = std::nullopt);

/// Covering estimators with shape self-calibration. Covering counts of
/// r-separated center sets carry a ball-shape efficiency factor (measured
/// +8% for cubes vs disks in 2D, +19% in 3D); dividing by the covering count
/// of the metric's own unit ball at the same scale cancels it, and the
/// abelian normalization is then exact by the isodiametric theorem plus
/// Vitali covering. Shape factors are cached per (token, eps).
class CoveringEngine {
 public:
  struct Options {
    std::uint64_t seed = 0xC0FFEE;
    std::size_t calibration_cloud = 120000;
    bool density_check = true;
  };
  CoveringEngine() : opts_(Options{}) {}
  explicit CoveringEngine(Options opts) : opts_(opts) {}

  /// Greedy covering count at radius eps/2: deterministic maximal
  /// (eps/2)-separated subset in seeded order; every cloud point lies within
  /// eps/2 of a center.
  int cover_count(const std::vector<std::vector<double>>& cloud, const MetricContext& m,
                  double eps) const;

  /// Shape efficiency theta(token, eps): covering count of the metric's own
  /// unit ball times (eps/2)^q. Cached.
  double shape_theta(const MetricContext& m, double eps);

  /// H^Q estimate of the set represented by `cloud` at scale eps:
  ///   omega_Q (eps/2)^(Q - q_m) * count * (eps/2)^(q_m) / theta_m(eps).
  /// `probes` (same sampler, fresh points) guard the density precondition.
  MeasureEstimate hausdorff_estimate(const std::vector<std::vector<double>>& cloud,
                                     const MetricContext& m, int Q, double eps,
                                     const std::vector<std::vector<double>>& probes = {});

  const Options& options() const { return opts_; }

 private:
  Options opts_;
  std::map<std::pair<std::string, double>, double> theta_cache_;
};

/// Lebesgue volume of {||x|| <= radius} by grid count or Monte Carlo over the
/// bounding box. Haar = Lebesgue in graded coordinates.
MeasureEstimate lebesgue_ball_volume(const GroupBundle& g, double radius,
                                     const std::string& method, std::uint64_t budget,
                                     std::uint64_t seed = 0xB411);

/// Kirchheim's integral Jacobian on R^n (n <= 3): n omega_n divided by the
/// sphere integral of s^(-n); 0 when s vanishes somewhere on the sphere.
double kirchheim_jacobian(const std::function<double(std::span<const double>)>& s, int n);

struct JacobianOptions {
  std::uint64_t budget = 200000;   // cloud size for the reference ball
  std::uint64_t seed = 0xFACADE;
  std::vector<double> eps_levels;  // two scales; defaults chosen per group
  double instability_threshold = 0.10;
};

/// Jacobian machinery with shared covering caches; the calibration constant
/// of the determinant method is cached per image-subspace signature.
class JacobianEngine {
 public:
  JacobianEngine() = default;
  explicit JacobianEngine(CoveringEngine::Options copts) : cov_(copts) {}

  /// J(s) = H_s^Q(B_1) / H_d^Q(B_1) for a homogeneous norm s given as a
  /// metric context; identical covering strategy and eps on both sides.
  MeasureEstimate metric_jacobian(const GroupBundle& d, const MetricContext& s,
                                  const JacobianOptions& opts);

  /// As above for an estimated metric differential: the seminorm branch
  /// (null direction detected) returns exactly 0.
  MeasureEstimate metric_jacobian(const GroupBundle& d, const SeminormSample& s,
                                  const JacobianOptions& opts,
                                  std::optional<MetricContext> ctx = std::nullopt);

  /// Pushforward method: H^Q_rho(L(B_1)) via a covering of the image cloud,
  /// resampled to match the reference cloud's metric density so the
  /// discreteness bias divides out. Determinant method: C sqrt(det(L0^T L0))
  /// with C calibrated once per image subspace by the pushforward method.
  MeasureEstimate hhom_jacobian(const HHomomorphism& L, const std::string& method,
                                const JacobianOptions& opts);

  CoveringEngine& covering() { return cov_; }

 private:
  CoveringEngine cov_;
  std::map<std::string, double> subspace_constant_;
};

/// Canonical column-space signature of the coordinate matrix (exact rational
/// reduced row echelon form of the transpose).
std::string subspace_signature(const Eigen::MatrixXd& L0);

}  // namespace carnot

#endif
