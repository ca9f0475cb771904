#ifndef CARNOT_STRUCTURE_CONSTANTS_HPP
#define CARNOT_STRUCTURE_CONSTANTS_HPP

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carnot/gradation.hpp"
#include "carnot/rational.hpp"

namespace carnot {

/// Malformed indices and shape mismatches; distinct from identity violations,
/// which are collected in a ValidationReport instead of thrown.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One stored bracket entry: [e_a, e_b] = sum_r coeffs[r] e_r over the basis
/// of layer(a)+layer(b). Indices are flat and 0-based.
struct RawBracket {
  int a = 0;
  int b = 0;
  std::vector<std::pair<int, Rat>> coeffs;  // (flat target index, value)
};

struct Violation {
  enum class Kind { Skew, Jacobi, Gradation };
  Kind kind;
  std::vector<int> witness;  // basis indices involved
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  int triples_checked = 0;
  bool passed() const { return violations.empty(); }
};

/// Sparse structure constants of a graded nilpotent Lie algebra in its graded
/// basis. Immutable after construction; bracket evaluation is bilinear
/// expansion over the stored entries.
class StructureConstants {
 public:
  StructureConstants() = default;  // empty shell; builders fill real values
  StructureConstants(Gradation grad, const std::vector<RawBracket>& entries);

  /// Convenience: completes each given entry with its skew partner
  /// [e_b, e_a] = -[e_a, e_b]. Entries must have a < b.
  static StructureConstants with_skew_completion(Gradation grad,
                                                 const std::vector<RawBracket>& upper);

  const Gradation& gradation() const { return grad_; }

  /// Exhaustive exact check of skew-symmetry, the Jacobi identity and
  /// gradation compatibility over all basis pairs/triples.
  ValidationReport validate() const;

  /// Bracket of two basis vectors as a sparse coefficient list (empty if 0).
  const std::vector<std::pair<int, Rat>>& basis_bracket(int a, int b) const;

  struct CompiledTerm {
    int a, b, target;
    Rat coeff;
    double coeff_d;
  };
  const std::vector<CompiledTerm>& compiled() const { return compiled_; }

  bool operator==(const StructureConstants& o) const {
    return grad_ == o.grad_ && entries_ == o.entries_;
  }

 private:
  Gradation grad_;
  std::map<std::pair<int, int>, std::vector<std::pair<int, Rat>>> entries_;
  std::vector<CompiledTerm> compiled_;
};

namespace detail {
template <class S>
S scalar_from_rat(const Rat& r) {
  if constexpr (std::is_same_v<S, Rat>) return r;
  else return to_double(r);
}
}  // namespace detail

/// [x, y] by bilinear expansion. Output respects the gradation by
/// construction of the stored entries.
template <class S>
std::vector<S> bracket(const StructureConstants& sc, std::span<const S> x,
                       std::span<const S> y) {
  const int n = sc.gradation().total_dim();
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
    throw StructuralError("bracket: coordinate length mismatch");
  std::vector<S> out(n, S(0));
  for (const auto& t : sc.compiled()) {
    const S prod = x[t.a] * y[t.b];
    if (prod == S(0)) continue;
    if constexpr (std::is_same_v<S, Rat>) {
      out[t.target] += t.coeff * prod;
    } else {
      out[t.target] += t.coeff_d * prod;
    }
  }
  return out;
}

template <class S>
std::vector<S> bracket(const StructureConstants& sc, const std::vector<S>& x,
                       const std::vector<S>& y) {
  return bracket<S>(sc, std::span<const S>(x), std::span<const S>(y));
}

/// Left-nested bracket word [..[[w_1,w_2],w_3]..,w_k]; a single-element word
/// is the element itself.
template <class S>
std::vector<S> nested_bracket(const StructureConstants& sc,
                              const std::vector<std::vector<S>>& word) {
  if (word.empty()) throw StructuralError("nested_bracket: empty word");
  std::vector<S> acc = word.front();
  for (std::size_t k = 1; k < word.size(); ++k) acc = bracket<S>(sc, acc, word[k]);
  return acc;
}

/// Canonical projection onto layer j (zeroes every other layer).
template <class S>
std::vector<S> project_layer(const Gradation& g, std::span<const S> x, int j) {
  if (static_cast<int>(x.size()) != g.total_dim())
    throw StructuralError("project_layer: coordinate length mismatch");
  if (j < 1 || j > g.step()) throw std::out_of_range("project_layer: layer out of range");
  std::vector<S> out(x.size(), S(0));
  const int off = g.layer_offset(j);
  for (int u = 0; u < g.layer_dim(j); ++u) out[off + u] = x[off + u];
  return out;
}

template <class S>
std::vector<S> project_layer(const Gradation& g, const std::vector<S>& x, int j) {
  return project_layer<S>(g, std::span<const S>(x), j);
}

/// validate_algebra per the module contract; alias of the member for callers
/// that hold only the constants.
inline ValidationReport validate_algebra(const StructureConstants& sc) { return sc.validate(); }

}  // namespace carnot

#endif
