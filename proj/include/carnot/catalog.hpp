#ifndef CARNOT_CATALOG_HPP
#define CARNOT_CATALOG_HPP

#include <optional>
#include <string>
#include <vector>

#include "carnot/bundle.hpp"

namespace carnot {

/// Two-step model: X + T with bracket [(x,t),(x',t')] = (0, beta(x,x')).
/// The group law then adds beta(x,x')/2 on T (BCH P_2).
struct TwoStepSpec {
  int dim_x = 0;
  int dim_t = 0;
  /// dim_t matrices of size dim_x * dim_x, each skew-symmetric; beta_r(x,y) = x^T B_r y.
  std::vector<std::vector<std::vector<Rat>>> betas;
  LayerNormKind x_norm = LayerNormKind::Euclidean;
  LayerNormKind t_norm = LayerNormKind::Euclidean;
};

class PijViolation : public std::invalid_argument {
 public:
  PijViolation(int i_, int j_)
      : std::invalid_argument("graded product refused: p_" + std::to_string(i_ + j_) +
                              " < max(p_" + std::to_string(i_) + ", p_" + std::to_string(j_) +
                              ")/2"),
        i(i_),
        j(j_) {}
  int i, j;
};

/// First Heisenberg group: gradation (2,1), [e1,e2] = 2 e3, norm
/// max{|(x1,x2)|, sqrt(|x3|)}. The closed-form product is the test oracle.
const GroupBundle& make_heisenberg();

/// Engel group: gradation (2,1,1), [e11,e12] = e3, [e11,e3] = e4; sigma_2 from
/// the two-step bound, sigma_3 calibrated empirically.
const GroupBundle& make_engel();

/// Abelian R^n with the given layer norm.
GroupBundle make_abelian(int n, LayerNormKind kind = LayerNormKind::Euclidean, const Rat& p = Rat(2));

/// General two-step group from a skew bilinear form; sigma_2 = sqrt(2/c) with
/// c the computed operator bound of beta for the chosen layer norms.
GroupBundle make_two_step(const TwoStepSpec& spec, std::uint64_t seed = 0xC0FFEEull);

/// Truncation of the infinite Heisenberg product: K copies, X = R^(2K) with
/// l2, T = R^K with l1, sigma = (1, 1).
GroupBundle make_h_product(int K);

/// K-fold componentwise product of `base` with l^(p_i) layer norms; refuses
/// exponent lists violating p_(i+j) >= max(p_i, p_j)/2.
GroupBundle make_graded_product(const GroupBundle& base, int K, const std::vector<Rat>& p,
                                std::uint64_t seed = 0xC0FFEEull);

/// Catalog lookup: "heisenberg", "engel", "abelian:<n>[:euclid|sup|p<value>]",
/// "h-product:<K>", "graded-product:<base>:<K>:<p1,p2,...>",
/// "two-step:<file.json>" (file resolution is the caller's concern: returns
/// nullopt for names that need a file).
std::optional<GroupBundle> make_from_name(const std::string& name);

/// Closed-form section 2.3 product, the Heisenberg oracle.
template <class S>
std::vector<S> heisenberg_closed_product(const std::vector<S>& a, const std::vector<S>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1] - a[1] * b[0]};
}

/// Measured sup of |[x,y]| / (|x| |y|) in the layered Banach norm over
/// `samples` random pairs; compare against bundle.bracket_bound_total.
double measure_bracket_ratio(const GroupBundle& g, std::size_t samples, std::uint64_t seed);

/// Numeric operator bound of the bracket restricted to layer-1 arguments,
/// max |[x,y]| / (|x|_1 |y|_1), via alternating ascent with restarts. For a
/// single Euclidean target form this equals the top singular value.
double layer1_bracket_bound(const StructureConstants& sc, const std::vector<LayerNorm>& layer_norms,
                            std::uint64_t seed, int restarts = 48);

}  // namespace carnot

#endif
