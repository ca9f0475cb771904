#include "carnot/norm.hpp"

#include <algorithm>
#include <cmath>

#include "carnot/rng.hpp"

namespace carnot {

double kth_root(double t, int i) {
  if (i < 1) throw std::invalid_argument("kth_root: order must be >= 1");
  if (t < 0.0) throw std::invalid_argument("kth_root: negative argument");
  if (i == 1 || t == 0.0) return t;
  if (i == 2) return std::sqrt(t);  // correctly rounded, commutes with 4^k scaling
  int e = 0;
  const double m = std::frexp(t, &e);  // t = m * 2^e, m in [0.5, 1)
  int q = e / i;
  int s = e - q * i;
  if (s < 0) {
    s += i;
    q -= 1;
  }
  const double reduced = std::ldexp(m, s);  // in [2^(s-1), 2^s)
  double r = std::pow(reduced, 1.0 / static_cast<double>(i));
  // One Newton step squeezes pow() to within an ulp; the reduced argument
  // lives in a fixed range so the polish is scale-independent.
  const double ri = std::pow(r, i - 1);
  r -= (r * ri - reduced) / (static_cast<double>(i) * ri);
  return std::ldexp(r, q);
}

namespace {
// Factors out the binary exponent of the largest entry so that scaling the
// slice by 2^k scales the result by exactly 2^k.
template <class Accum>
double scaled_reduce(std::span<const double> v, Accum&& accum, double (*finish)(double, double)) {
  double amax = 0.0;
  for (const double x : v) amax = std::max(amax, std::fabs(x));
  if (amax == 0.0) return 0.0;
  int e = 0;
  std::frexp(amax, &e);
  const double inv = std::ldexp(1.0, -e);
  double acc = 0.0;
  for (const double x : v) acc = accum(acc, std::fabs(x) * inv);
  return std::ldexp(finish(acc, 0.0), e);
}
}  // namespace

double scaled_sup_norm(std::span<const double> v) {
  double amax = 0.0;
  for (const double x : v) amax = std::max(amax, std::fabs(x));
  return amax;
}

double scaled_euclidean_norm(std::span<const double> v) {
  return scaled_reduce(
      v, [](double acc, double x) { return acc + x * x; },
      [](double acc, double) { return std::sqrt(acc); });
}

double scaled_pnorm(std::span<const double> v, double p) {
  if (p < 1.0) throw std::invalid_argument("scaled_pnorm: p must be >= 1");
  struct Fin {
    static double finish(double acc, double) { return acc; }
  };
  double amax = 0.0;
  for (const double x : v) amax = std::max(amax, std::fabs(x));
  if (amax == 0.0) return 0.0;
  int e = 0;
  std::frexp(amax, &e);
  const double inv = std::ldexp(1.0, -e);
  double acc = 0.0;
  for (const double x : v) acc += std::pow(std::fabs(x) * inv, p);
  return std::ldexp(std::pow(acc, 1.0 / p), e);
}

double LayerNorm::value(std::span<const double> slice) const {
  switch (kind) {
    case LayerNormKind::Euclidean:
      return scaled_euclidean_norm(slice);
    case LayerNormKind::Sup:
      return scaled_sup_norm(slice);
    case LayerNormKind::Pnorm:
      return scaled_pnorm(slice, to_double(p));
  }
  return 0.0;
}

std::string to_string(LayerNormKind k) {
  switch (k) {
    case LayerNormKind::Euclidean:
      return "euclidean";
    case LayerNormKind::Sup:
      return "sup";
    case LayerNormKind::Pnorm:
      return "p";
  }
  return "?";
}

HomogeneousNorm::HomogeneousNorm(Gradation grad, std::vector<LayerNorm> layer_norms,
                                 std::vector<double> sigmas)
    : grad_(std::move(grad)), layers_(std::move(layer_norms)), sigmas_(std::move(sigmas)) {
  if (static_cast<int>(layers_.size()) != grad_.step())
    throw StructuralError("HomogeneousNorm: one layer norm per layer required");
  if (static_cast<int>(sigmas_.size()) != grad_.step())
    throw StructuralError("HomogeneousNorm: one sigma per layer required");
  if (sigmas_[0] != 1.0) throw StructuralError("HomogeneousNorm: sigma_1 must be 1");
  for (const double s : sigmas_)
    if (!(s > 0.0)) throw StructuralError("HomogeneousNorm: sigmas must be positive");
}

double HomogeneousNorm::layer_value(int layer, std::span<const double> x) const {
  const int off = grad_.layer_offset(layer);
  return layers_[layer - 1].value(x.subspan(off, grad_.layer_dim(layer)));
}

double HomogeneousNorm::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != grad_.total_dim())
    throw StructuralError("norm: coordinate length mismatch");
  double best = 0.0;
  for (int i = 1; i <= grad_.step(); ++i) {
    const double term = sigmas_[i - 1] * kth_root(layer_value(i, x), i);
    best = std::max(best, term);
  }
  return best;
}

double HomogeneousNorm::banach_value(std::span<const double> x) const {
  double sum = 0.0;
  for (int i = 1; i <= grad_.step(); ++i) sum += layer_value(i, x);
  return sum;
}

std::vector<double> to_doubles(std::span<const Rat> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = to_double(x[i]);
  return out;
}

double distance(const StructureConstants& sc, const HomogeneousNorm& hn,
                std::span<const double> x, std::span<const double> y) {
  return hn.value(group_diff<double>(sc, x, y));
}

double distance(const StructureConstants& sc, const HomogeneousNorm& hn, std::span<const Rat> x,
                std::span<const Rat> y) {
  const auto diff = group_diff<Rat>(sc, x, y);
  return hn.value(to_doubles(diff));
}

std::vector<double> ball_box_halfwidths(const HomogeneousNorm& hn, double radius) {
  const auto& g = hn.gradation();
  std::vector<double> hw(g.total_dim());
  for (int i = 1; i <= g.step(); ++i) {
    const double bound = std::pow(radius / hn.sigmas()[i - 1], static_cast<double>(i));
    for (int u = 0; u < g.layer_dim(i); ++u) hw[g.layer_offset(i) + u] = bound;
  }
  return hw;
}

std::vector<std::vector<double>> sample_ball(const StructureConstants& sc,
                                             const HomogeneousNorm& hn,
                                             std::span<const double> center, double radius,
                                             std::size_t count, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ball: radius must be positive");
  const auto hw = ball_box_halfwidths(hn, radius);
  const int n = hn.gradation().total_dim();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  Rng base(seed, "sample_ball");
  const std::vector<double> c(center.begin(), center.end());
  for (std::size_t idx = 0; idx < count; ++idx) {
    Rng rng = base.fork(idx);
    std::vector<double> z(n);
    for (int tries = 0;; ++tries) {
      for (int t = 0; t < n; ++t) z[t] = rng.uniform(-hw[t], hw[t]);
      if (hn.value(z) <= radius) break;
      if (tries > 100000)
        throw std::runtime_error("sample_ball: acceptance rate degenerately low");
    }
    out.push_back(c.empty() ? z : multiply<double>(sc, c, z));
  }
  return out;
}

std::vector<std::vector<double>> sphere_mesh(const StructureConstants& sc,
                                             const HomogeneousNorm& hn, std::size_t count,
                                             std::uint64_t seed) {
  const auto& g = hn.gradation();
  const int n = g.total_dim();
  const auto hw = ball_box_halfwidths(hn, 1.0);
  std::vector<std::vector<double>> mesh;
  auto push_pair = [&](std::vector<double> v) {
    const double nv = hn.value(v);
    if (nv < 1e-12) return;
    v = dilate<double>(g, 1.0 / nv, v);
    mesh.push_back(v);
    mesh.push_back(inverse<double>(v));
  };
  for (int t = 0; t < n; ++t) {
    std::vector<double> e(n, 0.0);
    e[t] = 1.0;
    push_pair(std::move(e));
  }
  Rng rng(seed, "sphere_mesh");
  while (mesh.size() < 2 * count) {
    std::vector<double> w(n);
    for (int t = 0; t < n; ++t) w[t] = rng.uniform(-hw[t], hw[t]);
    push_pair(std::move(w));
  }
  (void)sc;
  return mesh;
}

namespace {

struct DefectEval {
  const StructureConstants& sc;
  const HomogeneousNorm& hn;

  /// Scale-invariant triangle defect (||xy|| - ||x|| - ||y||) / (||x|| + ||y||).
  double operator()(std::span<const double> x, std::span<const double> y) const {
    const double nx = hn.value(x);
    const double ny = hn.value(y);
    const double denom = nx + ny;
    if (denom < 1e-12) return 0.0;
    const double nxy = hn.value(multiply<double>(sc, x, y));
    return (nxy - nx - ny) / denom;
  }
};

int attained_layer(const HomogeneousNorm& hn, std::span<const double> z) {
  const auto& g = hn.gradation();
  int best_layer = 1;
  double best = -1.0;
  for (int i = 1; i <= g.step(); ++i) {
    const double term = hn.sigmas()[i - 1] * kth_root(hn.layer_value(i, z), i);
    if (term > best) {
      best = term;
      best_layer = i;
    }
  }
  return best_layer;
}

}  // namespace

double triangle_defect_search(const StructureConstants& sc, const HomogeneousNorm& hn,
                              std::uint64_t budget, int ascent_restarts, std::uint64_t seed,
                              std::vector<double>* worst_x, std::vector<double>* worst_y) {
  const int n = hn.gradation().total_dim();
  const auto hw = ball_box_halfwidths(hn, 1.0);
  DefectEval defect{sc, hn};
  Rng rng(seed, "triangle_defect");

  auto sample_point = [&](Rng& r) {
    std::vector<double> z(n);
    for (int t = 0; t < n; ++t) z[t] = r.uniform(-hw[t], hw[t]);
    return z;
  };

  double worst = -1e300;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> top;
  for (std::uint64_t k = 0; k < budget; ++k) {
    auto x = sample_point(rng);
    auto y = sample_point(rng);
    const double d = defect(x, y);
    if (d > worst) {
      worst = d;
      top.emplace_back(x, y);
      if (top.size() > 8) top.erase(top.begin());
      if (worst_x) *worst_x = x;
      if (worst_y) *worst_y = y;
    }
  }

  // Local ascent from the worst seeds plus fresh restarts.
  for (int restart = 0; restart < ascent_restarts; ++restart) {
    std::vector<double> x, y;
    if (restart < static_cast<int>(top.size())) {
      x = top[top.size() - 1 - restart].first;
      y = top[top.size() - 1 - restart].second;
    } else {
      x = sample_point(rng);
      y = sample_point(rng);
    }
    double cur = defect(x, y);
    double step = 0.25;
    for (int it = 0; it < 160 && step > 1e-7; ++it) {
      auto xp = x;
      auto yp = y;
      for (int t = 0; t < n; ++t) {
        xp[t] += step * hw[t] * rng.uniform(-1.0, 1.0);
        yp[t] += step * hw[t] * rng.uniform(-1.0, 1.0);
      }
      const double d = defect(xp, yp);
      if (d > cur) {
        cur = d;
        x = std::move(xp);
        y = std::move(yp);
      } else {
        step *= 0.85;
      }
    }
    if (cur > worst) {
      worst = cur;
      if (worst_x) *worst_x = x;
      if (worst_y) *worst_y = y;
    }
  }
  return worst;
}

HomogeneousNorm calibrate_sigmas(const StructureConstants& sc, std::vector<LayerNorm> layer_norms,
                                 const CalibrationOptions& opts) {
  const auto& g = sc.gradation();
  const int step = g.step();
  std::vector<double> sigmas(step, 1.0);
  if (step >= 2 && opts.sigma2_init) sigmas[1] = *opts.sigma2_init;

  if (step == 1) {
    HomogeneousNorm hn(g, std::move(layer_norms), sigmas);
    hn.certificate = {0, opts.seed, 0, 0.0, true, "abelian: ordinary norm, no search needed", {}, {}};
    return hn;
  }

  const std::uint64_t round_budget = std::max<std::uint64_t>(opts.budget / 8, 1000);
  const int max_rounds = 60;
  for (int round = 0; round < max_rounds; ++round) {
    HomogeneousNorm hn(g, layer_norms, sigmas);
    std::vector<double> wx, wy;
    const double d = triangle_defect_search(sc, hn, round_budget, opts.ascent_restarts / 4,
                                            opts.seed + round, &wx, &wy);
    if (d <= kNormTol) {
      // Final validation at full budget.
      HomogeneousNorm out(g, layer_norms, sigmas);
      std::vector<double> vx, vy;
      const double dv = triangle_defect_search(sc, out, opts.budget, opts.ascent_restarts,
                                               opts.seed ^ 0xA5A5A5A5ull, &vx, &vy);
      out.certificate.budget = opts.budget;
      out.certificate.seed = opts.seed;
      out.certificate.ascent_restarts = opts.ascent_restarts;
      out.certificate.max_defect = dv;
      out.certificate.passed = dv <= kNormTol;
      out.certificate.worst_x = vx;
      out.certificate.worst_y = vy;
      if (out.certificate.passed) {
        out.certificate.note = "accepted after " + std::to_string(round) + " shrink round(s)";
        return out;
      }
      // Validation found a defect the search round missed; shrink and go on.
      const auto diff = multiply<double>(sc, vx, vy);
      const int layer = attained_layer(out, diff);
      sigmas[std::max(layer, 2) - 1] *= 0.8;
      continue;
    }
    // Shrink the sigma of the layer attaining the violating norm value.
    HomogeneousNorm cur(g, layer_norms, sigmas);
    const auto diff = multiply<double>(sc, wx, wy);
    const int layer = attained_layer(cur, diff);
    sigmas[std::max(layer, 2) - 1] *= 0.8;
  }

  CalibrationCertificate cert;
  cert.budget = opts.budget;
  cert.seed = opts.seed;
  cert.ascent_restarts = opts.ascent_restarts;
  cert.passed = false;
  cert.note = "budget exhausted without a defect-free sigma vector";
  throw CalibrationFailure("sigma calibration failed", cert);
}

}  // namespace carnot
