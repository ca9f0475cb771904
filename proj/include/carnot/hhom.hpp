#ifndef CARNOT_HHOM_HPP
#define CARNOT_HHOM_HPP

#include <Eigen/Dense>
#include <optional>

#include "carnot/bundle.hpp"

namespace carnot {

using RatMatrix = std::vector<std::vector<Rat>>;

struct HHomValidation {
  double bracket_defect = 0.0;  // max over basis pairs of |L[a,b] - [La,Lb]|
  bool exact = false;           // rational blocks checked exactly
  std::optional<std::pair<int, int>> witness;  // worst basis pair
  double multiply_defect = 0.0;  // max rho(L(xy), L(x)L(y)) over random pairs
  bool passed(double tol = 1e-9) const {
    return exact ? bracket_defect == 0.0 : bracket_defect <= tol;
  }
};

/// Layer-block linear map between graded groups. Commutes with dilations by
/// construction; it is a group homomorphism iff the bracket-compatibility
/// defect vanishes (checked, not assumed).
class HHomomorphism {
 public:
  HHomomorphism(GroupBundle source, GroupBundle target, std::vector<Eigen::MatrixXd> blocks);
  HHomomorphism(GroupBundle source, GroupBundle target, std::vector<RatMatrix> rational_blocks);

  const GroupBundle& source() const { return source_; }
  const GroupBundle& target() const { return target_; }

  /// Block for source layer i (1-based); zero-sized when the target lacks it.
  const Eigen::MatrixXd& block(int i) const { return blocks_.at(i - 1); }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  bool has_rational_blocks() const { return !rblocks_.empty(); }
  const std::vector<RatMatrix>& rational_blocks() const { return rblocks_; }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply(const std::vector<double>& x) const {
    return apply(std::span<const double>(x));
  }
  std::vector<Rat> apply(std::span<const Rat> x) const;
  std::vector<Rat> apply(const std::vector<Rat>& x) const {
    return apply(std::span<const Rat>(x));
  }

  /// Full coordinate matrix (target_dim x source_dim, block diagonal).
  Eigen::MatrixXd coordinate_matrix() const;

  /// Pullback seminorm s_L(x) = rho(L(x), 0).
  double pullback_norm(std::span<const double> x) const { return target_.norm.value(apply(x)); }

  /// Exact sup of ||L(v)|| over the unit ball: max_i sigma_i^tgt op_i^(1/i) / sigma_i^src,
  /// with op_i the layer operator norm. Used as the declared Lipschitz bound.
  double lipschitz_bound() const;

  /// Exact bracket compatibility on all source basis pairs (rational blocks
  /// checked in exact arithmetic), plus L(xy) = L(x)L(y) on `random_pairs`
  /// sampled pairs as a float cross-check.
  HHomValidation validate(int random_pairs = 200, std::uint64_t seed = 1234) const;

 private:
  void check_shapes() const;
  GroupBundle source_;
  GroupBundle target_;
  std::vector<Eigen::MatrixXd> blocks_;   // always present
  std::vector<RatMatrix> rblocks_;        // optional exact mirror
};

HHomomorphism hhom_identity(const GroupBundle& g);
HHomomorphism hhom_dilation(const GroupBundle& g, double lambda);

/// Heisenberg L_1 = diag(a, 1/a), L_2 = 1 (bracket-compatible for any a != 0).
HHomomorphism hhom_heisenberg_diag(double a);

/// Heisenberg L_1 = rotation by theta, L_2 = det = 1.
HHomomorphism hhom_heisenberg_rotation(double theta);

/// Projection onto the first layer, target the abelian R^(n_1).
HHomomorphism hhom_layer1_projection(const GroupBundle& source);

}  // namespace carnot

#endif
