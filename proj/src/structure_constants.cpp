#include "carnot/structure_constants.hpp"

#include <algorithm>
#include <sstream>

namespace carnot {

namespace {
std::string idx_name(const Gradation& g, int flat) {
  auto [layer, u] = g.locate(flat);
  std::ostringstream os;
  os << "e(" << layer << "," << u + 1 << ")";
  return os.str();
}
}  // namespace

StructureConstants::StructureConstants(Gradation grad, const std::vector<RawBracket>& entries)
    : grad_(std::move(grad)) {
  const int n = grad_.total_dim();
  for (const auto& e : entries) {
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n)
      throw StructuralError("structure constants: basis index out of range");
    const int li = grad_.layer_of(e.a);
    const int lj = grad_.layer_of(e.b);
    std::vector<std::pair<int, Rat>> terms;
    for (const auto& [t, c] : e.coeffs) {
      if (c == 0) continue;
      if (t < 0 || t >= n) throw StructuralError("structure constants: target index out of range");
      // Gradation violations ([e_a,e_b] outside layer li+lj) are recorded by
      // validate(), not rejected here, except for indices that cannot exist.
      terms.emplace_back(t, c);
      (void)li;
      (void)lj;
    }
    if (terms.empty()) continue;
    std::sort(terms.begin(), terms.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });
    auto& slot = entries_[{e.a, e.b}];
    if (!slot.empty()) throw StructuralError("structure constants: duplicate entry for basis pair");
    slot = std::move(terms);
  }
  for (const auto& [key, terms] : entries_) {
    for (const auto& [t, c] : terms)
      compiled_.push_back({key.first, key.second, t, c, to_double(c)});
  }
}

StructureConstants StructureConstants::with_skew_completion(Gradation grad,
                                                            const std::vector<RawBracket>& upper) {
  std::vector<RawBracket> all;
  all.reserve(upper.size() * 2);
  for (const auto& e : upper) {
    if (e.a >= e.b) throw StructuralError("with_skew_completion: entries must have a < b");
    all.push_back(e);
    RawBracket neg{e.b, e.a, e.coeffs};
    for (auto& [t, c] : neg.coeffs) c = -c;
    all.push_back(std::move(neg));
  }
  return StructureConstants(std::move(grad), all);
}

const std::vector<std::pair<int, Rat>>& StructureConstants::basis_bracket(int a, int b) const {
  static const std::vector<std::pair<int, Rat>> kEmpty;
  const auto it = entries_.find({a, b});
  return it == entries_.end() ? kEmpty : it->second;
}

ValidationReport StructureConstants::validate() const {
  ValidationReport rep;
  const int n = grad_.total_dim();
  const int step = grad_.step();

  auto coeff_of = [&](int a, int b, int t) -> Rat {
    for (const auto& [u, c] : basis_bracket(a, b))
      if (u == t) return c;
    return Rat(0);
  };

  // Gradation: [e_a, e_b] must live in layer la+lb, and vanish when la+lb > step.
  for (const auto& [key, terms] : entries_) {
    const int la = grad_.layer_of(key.first);
    const int lb = grad_.layer_of(key.second);
    for (const auto& [t, c] : terms) {
      if (c == 0) continue;
      const int lt = grad_.layer_of(t);
      if (la + lb > step || lt != la + lb) {
        rep.violations.push_back(
            {Violation::Kind::Gradation,
             {key.first, key.second, t},
             "[" + idx_name(grad_, key.first) + "," + idx_name(grad_, key.second) +
                 "] has a component on " + idx_name(grad_, t) + " outside layer " +
                 std::to_string(la + lb)});
      }
    }
  }

  // Skew-symmetry on all pairs, including [e_a, e_a] = 0.
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      for (int t = 0; t < n; ++t) {
        const Rat lhs = coeff_of(a, b, t);
        const Rat rhs = coeff_of(b, a, t);
        if (lhs + rhs != 0) {
          rep.violations.push_back({Violation::Kind::Skew,
                                    {a, b, t},
                                    "c(" + idx_name(grad_, a) + "," + idx_name(grad_, b) +
                                        ") + c(" + idx_name(grad_, b) + "," +
                                        idx_name(grad_, a) + ") != 0 on " + idx_name(grad_, t)});
          break;  // one witness per pair is enough
        }
      }
    }
  }

  // Jacobi identity on all basis triples, exact rational arithmetic.
  auto basis_vec = [&](int a) {
    std::vector<Rat> v(n, Rat(0));
    v[a] = 1;
    return v;
  };
  std::vector<std::vector<Rat>> basis;
  basis.reserve(n);
  for (int a = 0; a < n; ++a) basis.push_back(basis_vec(a));

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        ++rep.triples_checked;
        auto t1 = bracket<Rat>(*this, basis[a], bracket<Rat>(*this, basis[b], basis[c]));
        auto t2 = bracket<Rat>(*this, basis[b], bracket<Rat>(*this, basis[c], basis[a]));
        auto t3 = bracket<Rat>(*this, basis[c], bracket<Rat>(*this, basis[a], basis[b]));
        bool zero = true;
        for (int t = 0; t < n; ++t)
          if (t1[t] + t2[t] + t3[t] != 0) {
            zero = false;
            break;
          }
        if (!zero) {
          rep.violations.push_back({Violation::Kind::Jacobi,
                                    {a, b, c},
                                    "Jacobi identity fails on (" + idx_name(grad_, a) + "," +
                                        idx_name(grad_, b) + "," + idx_name(grad_, c) + ")"});
        }
      }
    }
  }
  return rep;
}

}  // namespace carnot
