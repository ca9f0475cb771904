#ifndef CARNOT_BCH_HPP
#define CARNOT_BCH_HPP

#include <span>
#include <vector>

#include "carnot/structure_constants.hpp"

namespace carnot {

/// Maximum supported step; the composition count grows like 3.4^m.
inline constexpr int kMaxStep = 8;

/// One term of Dynkin's expansion of P_m: the 2k-tuple
/// (p_1,q_1,...,p_k,q_k) with p_i+q_i >= 1 and sum = m, weighted by
/// (-1)^(k-1) / (k * m * p_1! q_1! ... p_k! q_k!).
/// The associated left-nested word is x^p1 y^q1 ... x^pk y^qk.
struct DynkinComposition {
  int m = 0;
  std::vector<std::pair<int, int>> parts;  // (p_i, q_i)
  Rat coefficient;
};

/// All admissible tuples for degree m, each exactly once. With prune=true,
/// tuples whose word starts xx... (p_1 >= 2) or yy... (p_1 == 0, q_1 >= 2)
/// are dropped; their innermost bracket vanishes for any skew product.
std::vector<DynkinComposition> enumerate_compositions(int m, bool prune = true);

/// Word letters for a composition: true = x, false = y, in evaluation order.
std::vector<bool> composition_word(const DynkinComposition& c);

/// P_m(x, y) of the truncated BCH series, m >= 2 (P_1 = x + y lives in
/// multiply). Exact in the rational backend.
template <class S>
std::vector<S> dynkin_polynomial(const StructureConstants& sc, int m, std::span<const S> x,
                                 std::span<const S> y, bool prune = true) {
  const int n = sc.gradation().total_dim();
  if (m < 2 || m > sc.gradation().step())
    throw StructuralError("dynkin_polynomial: degree out of range");
  std::vector<S> acc(n, S(0));
  for (const auto& comp : enumerate_compositions(m, prune)) {
    const auto word = composition_word(comp);
    // Left-nested evaluation without materializing the word vectors.
    std::vector<S> cur(word[0] ? x.begin() : y.begin(), word[0] ? x.end() : y.end());
    bool dead = false;
    for (std::size_t i = 1; i < word.size(); ++i) {
      cur = bracket<S>(sc, std::span<const S>(cur), word[i] ? x : y);
      dead = true;
      for (const auto& v : cur)
        if (v != S(0)) {
          dead = false;
          break;
        }
      if (dead) break;
    }
    if (dead) continue;
    const S coeff = detail::scalar_from_rat<S>(comp.coefficient);
    for (int t = 0; t < n; ++t) acc[t] += coeff * cur[t];
  }
  return acc;
}

template <class S>
std::vector<S> dynkin_polynomial(const StructureConstants& sc, int m, const std::vector<S>& x,
                                 const std::vector<S>& y, bool prune = true) {
  return dynkin_polynomial<S>(sc, m, std::span<const S>(x), std::span<const S>(y), prune);
}

/// Group product in exponential coordinates: x y = x + y + sum_{m>=2} P_m(x,y).
template <class S>
std::vector<S> multiply(const StructureConstants& sc, std::span<const S> x,
                        std::span<const S> y) {
  const int n = sc.gradation().total_dim();
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
    throw StructuralError("multiply: coordinate length mismatch");
  std::vector<S> out(n);
  for (int t = 0; t < n; ++t) out[t] = x[t] + y[t];
  for (int m = 2; m <= sc.gradation().step(); ++m) {
    const auto pm = dynkin_polynomial<S>(sc, m, x, y);
    for (int t = 0; t < n; ++t) out[t] += pm[t];
  }
  return out;
}

template <class S>
std::vector<S> multiply(const StructureConstants& sc, const std::vector<S>& x,
                        const std::vector<S>& y) {
  return multiply<S>(sc, std::span<const S>(x), std::span<const S>(y));
}

/// In exponential coordinates the inverse is coordinate negation;
/// multiply(x, inverse(x)) == 0 is enforced by test.
template <class S>
std::vector<S> inverse(std::span<const S> x) {
  std::vector<S> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = -x[t];
  return out;
}

template <class S>
std::vector<S> inverse(const std::vector<S>& x) {
  return inverse<S>(std::span<const S>(x));
}

/// delta_r with r > 0: scales layer i by r^i. A group and algebra automorphism.
template <class S>
std::vector<S> dilate(const Gradation& g, const S& r, std::span<const S> x) {
  if (!(r > S(0))) throw std::invalid_argument("dilate: r must be positive");
  std::vector<S> out(x.size());
  S scale = S(1);
  for (int layer = 1; layer <= g.step(); ++layer) {
    scale = scale * r;
    const int off = g.layer_offset(layer);
    for (int u = 0; u < g.layer_dim(layer); ++u) out[off + u] = scale * x[off + u];
  }
  return out;
}

template <class S>
std::vector<S> dilate(const Gradation& g, const S& r, const std::vector<S>& x) {
  return dilate<S>(g, r, std::span<const S>(x));
}

/// Signed dilation for difference quotients: defined for any r != 0 (still an
/// algebra automorphism); the public dilate keeps the r > 0 contract.
template <class S>
std::vector<S> dilate_signed(const Gradation& g, const S& r, std::span<const S> x) {
  if (r == S(0)) throw std::invalid_argument("dilate_signed: r must be nonzero");
  std::vector<S> out(x.size());
  S scale = S(1);
  for (int layer = 1; layer <= g.step(); ++layer) {
    scale = scale * r;
    const int off = g.layer_offset(layer);
    for (int u = 0; u < g.layer_dim(layer); ++u) out[off + u] = scale * x[off + u];
  }
  return out;
}

template <class S>
std::vector<S> dilate_signed(const Gradation& g, const S& r, const std::vector<S>& x) {
  return dilate_signed<S>(g, r, std::span<const S>(x));
}

/// Per-coordinate bound of |(c z)_t - c_t| over all |c| <= domain_hw and
/// |z| <= z_hw (componentwise): z_hw plus interval bounds of the BCH terms.
/// Words without a z letter are exactly zero and are skipped. Used by the
/// covering engine to size bucket neighborhoods correctly in noncommutative
/// groups, where the ball around c is not c + box(r).
std::vector<double> group_shift_halfwidths(const StructureConstants& sc,
                                           std::span<const double> domain_hw,
                                           std::span<const double> z_hw);

/// Left-invariant group difference x^{-1} y.
template <class S>
std::vector<S> group_diff(const StructureConstants& sc, std::span<const S> x,
                          std::span<const S> y) {
  const auto xi = inverse<S>(x);
  return multiply<S>(sc, std::span<const S>(xi), y);
}

template <class S>
std::vector<S> group_diff(const StructureConstants& sc, const std::vector<S>& x,
                          const std::vector<S>& y) {
  return group_diff<S>(sc, std::span<const S>(x), std::span<const S>(y));
}

}  // namespace carnot

#endif
