#include "carnot/bch.hpp"

#include <array>
#include <mutex>

namespace carnot {

namespace {

Rat factorial(int k) {
  Rat f(1);
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

std::vector<DynkinComposition> enumerate_impl(int m, bool prune) {
  std::vector<DynkinComposition> out;
  std::vector<std::pair<int, int>> parts;

  // Depth-first over parts (p_i, q_i) with p_i + q_i >= 1, total weight m.
  auto rec = [&](auto&& self, int remaining) -> void {
    if (remaining == 0) {
      const int k = static_cast<int>(parts.size());
      Rat denom = Rat(k) * Rat(m);
      for (const auto& [p, q] : parts) denom *= factorial(p) * factorial(q);
      Rat coeff = Rat((k % 2 == 0) ? -1 : 1) / denom;
      out.push_back({m, parts, coeff});
      return;
    }
    for (int w = 1; w <= remaining; ++w) {
      for (int p = 0; p <= w; ++p) {
        const int q = w - p;
        if (parts.empty() && prune) {
          // Words starting xx... or yy... begin with a vanishing bracket.
          if (p >= 2) continue;
          if (p == 0 && q >= 2) continue;
        }
        parts.emplace_back(p, q);
        self(self, remaining - w);
        parts.pop_back();
      }
    }
  };
  rec(rec, m);
  return out;
}

}  // namespace

std::vector<DynkinComposition> enumerate_compositions(int m, bool prune) {
  if (m < 1 || m > kMaxStep) throw StructuralError("enumerate_compositions: degree out of range");
  // Compositions depend only on (m, prune); cache both variants.
  static std::array<std::vector<DynkinComposition>, kMaxStep + 1> cache_pruned;
  static std::array<std::vector<DynkinComposition>, kMaxStep + 1> cache_full;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = prune ? cache_pruned[m] : cache_full[m];
  if (slot.empty()) slot = enumerate_impl(m, prune);
  return slot;
}

std::vector<bool> composition_word(const DynkinComposition& c) {
  std::vector<bool> w;
  w.reserve(c.m);
  for (const auto& [p, q] : c.parts) {
    for (int i = 0; i < p; ++i) w.push_back(true);
    for (int i = 0; i < q; ++i) w.push_back(false);
  }
  return w;
}

std::vector<double> group_shift_halfwidths(const StructureConstants& sc,
                                           std::span<const double> domain_hw,
                                           std::span<const double> z_hw) {
  const int n = sc.gradation().total_dim();
  std::vector<double> out(z_hw.begin(), z_hw.end());
  // Interval (componentwise absolute) bracket: monotone upper bound.
  auto abs_bracket = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(n, 0.0);
    for (const auto& t : sc.compiled())
      r[t.target] += std::fabs(t.coeff_d) * a[t.a] * b[t.b];
    return r;
  };
  const std::vector<double> cbound(domain_hw.begin(), domain_hw.end());
  const std::vector<double> zbound(z_hw.begin(), z_hw.end());
  for (int m = 2; m <= sc.gradation().step(); ++m) {
    for (const auto& comp : enumerate_compositions(m)) {
      const auto word = composition_word(comp);
      bool has_z = false;
      for (const bool letter : word)
        if (!letter) has_z = true;
      if (!has_z) continue;  // all-c words vanish exactly
      std::vector<double> acc = word[0] ? cbound : zbound;
      for (std::size_t i = 1; i < word.size(); ++i)
        acc = abs_bracket(acc, word[i] ? cbound : zbound);
      const double coeff = std::fabs(to_double(comp.coefficient));
      for (int t = 0; t < n; ++t) out[t] += coeff * acc[t];
    }
  }
  return out;
}

}  // namespace carnot
