#include "carnot/differentiation.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "carnot/rng.hpp"

namespace carnot {

// ---- SeminormSample ---------------------------------------------------------

double SeminormSample::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (ok.empty() || ok[i]) m = std::min(m, values[i]);
  return std::isfinite(m) ? m : 0.0;
}

double SeminormSample::max_value() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (ok.empty() || ok[i]) m = std::max(m, values[i]);
  return m;
}

double SeminormSample::evaluate(const StructureConstants& sc, const HomogeneousNorm& hn,
                                std::span<const double> z) const {
  (void)sc;
  const double nz = hn.value(z);
  if (nz < 1e-300) return 0.0;
  if (refiner) return refiner(z);
  const auto v = dilate<double>(hn.gradation(), 1.0 / nz, z);
  double best = std::numeric_limits<double>::infinity();
  double val = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (!ok.empty() && !ok[i]) continue;
    double d2 = 0.0;
    for (std::size_t t = 0; t < v.size(); ++t) {
      const double d = v[t] - directions[i][t];
      d2 += d * d;
    }
    if (d2 < best) {
      best = d2;
      val = values[i];
    }
  }
  return nz * val;
}

std::vector<int> detect_null_directions(const SeminormSample& s, double tol) {
  std::vector<int> out;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!s.ok.empty() && !s.ok[i]) continue;
    if (s.values[i] < tol) out.push_back(static_cast<int>(i));
  }
  return out;
}

// ---- Difference quotients ----------------------------------------------------

std::vector<double> difference_quotient(const MapHandle& f, std::span<const double> x,
                                        std::span<const double> v, double t) {
  if (t == 0.0) throw std::invalid_argument("difference_quotient: t must be nonzero");
  const auto& sgrad = f.source.gradation();
  const auto& tgrad = f.target.gradation();
  const auto step = dilate_signed<double>(sgrad, t, v);
  const auto x1 = multiply<double>(f.source.sc, std::vector<double>(x.begin(), x.end()), step);
  const auto fx = f(x);
  const auto fx1 = f(x1);
  return dilate_signed<double>(tgrad, 1.0 / t, group_diff<double>(f.target.sc, fx, fx1));
}

namespace {

struct ProfileJudgement {
  bool converged;
  bool diverged;
};

ProfileJudgement judge_profile(const std::vector<double>& profile, double scale) {
  if (profile.empty()) return {true, false};
  const double tail = profile.back();
  const double tol = kConvergeThreshold * std::max(1.0, scale);
  int nonincreasing = 0;
  for (std::size_t k = profile.size(); k-- > 1;) {
    if (profile[k] <= profile[k - 1] + 1e-12)
      ++nonincreasing;
    else
      break;
  }
  const bool deep_noise = tail <= 1e-9 * std::max(1.0, scale);
  const bool converged =
      deep_noise || (tail <= tol && nonincreasing >= kConsecutiveDecreases);
  double pmin = profile.front();
  for (const double p : profile) pmin = std::min(pmin, p);
  // Genuine divergence never lets the profile reach the tolerance; a tail that
  // grows after a small minimum is the rounding amplification of delta_{1/t}.
  const bool diverged = !converged && pmin > tol && tail > 10.0 * std::max(pmin, 1e-300) &&
                        profile.size() >= 2 && profile.back() >= profile[profile.size() - 2];
  return {converged, diverged};
}

}  // namespace

PartialEstimate estimate_partial(const MapHandle& f, std::span<const double> x,
                                 std::span<const double> v, const DyadicSchedule& sched) {
  PartialEstimate out;
  const int depth = std::max(3, std::min(sched.depth, 20));
  std::vector<std::vector<double>> q;
  q.reserve(depth);
  for (int k = 0; k < depth; ++k) q.push_back(difference_quotient(f, x, v, sched.t(k)));
  for (int k = 0; k + 1 < depth; ++k)
    out.profile.push_back(f.target.norm.value(group_diff<double>(f.target.sc, q[k], q[k + 1])));

  // First-order Richardson at every consecutive pair; pick the step where the
  // extrapolants stabilize. Finer steps amplify rounding by t^(-j) on layer j,
  // so the argmin stops in front of the noise floor.
  std::vector<std::vector<double>> extrap;
  for (int k = 0; k + 1 < depth; ++k) {
    std::vector<double> e(q[k].size());
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = 2.0 * q[k + 1][t] - q[k][t];
    extrap.push_back(std::move(e));
  }
  int best = 0;
  double best_change = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < extrap.size(); ++k) {
    const double c =
        f.target.norm.value(group_diff<double>(f.target.sc, extrap[k], extrap[k + 1]));
    if (c < best_change) {
      best_change = c;
      best = static_cast<int>(k + 1);
    }
  }
  out.value = extrap[best];
  const double scale = std::max(1.0, f.target.norm.value(out.value));
  const auto judge = judge_profile(out.profile, scale);
  out.converged = best_change <= kConvergeThreshold * scale && !judge.diverged;
  out.diverged = judge.diverged;
  if (out.diverged) out.value.clear();  // no estimate returned
  return out;
}

std::vector<std::vector<double>> default_frame(const GroupBundle& g) {
  std::vector<std::vector<double>> frame;
  const int n1 = g.gradation().layer_dim(1);
  for (int u = 0; u < n1; ++u) {
    std::vector<double> e(g.dim(), 0.0);
    e[g.gradation().layer_offset(1) + u] = 1.0;
    frame.push_back(std::move(e));
  }
  return frame;
}

namespace {

// Expresses every higher-layer basis vector of the source as a rational
// combination of left-nested bracket words in layer-1 basis vectors; exists
// iff the group is stratified (Carnot). Words for layer j have length j.
struct Stratification {
  // per layer j >= 2 (index j-2), per basis u: list of (word, coefficient)
  std::vector<std::vector<std::vector<std::pair<std::vector<int>, Rat>>>> decomp;
};

std::optional<Stratification> compute_stratification(const StructureConstants& sc) {
  const auto& g = sc.gradation();
  const int n1 = g.layer_dim(1);
  const int n = g.total_dim();
  Stratification strat;
  for (int j = 2; j <= g.step(); ++j) {
    // Enumerate all words (i_1, ..., i_j) over the layer-1 basis.
    std::vector<std::vector<int>> words;
    std::vector<int> w(j, 0);
    while (true) {
      words.push_back(w);
      int pos = j - 1;
      while (pos >= 0 && ++w[pos] == n1) w[pos--] = 0;
      if (pos < 0) break;
    }
    const int nj = g.layer_dim(j);
    // Matrix of word values restricted to layer j (exact rationals).
    std::vector<std::vector<Rat>> cols;
    for (const auto& word : words) {
      std::vector<std::vector<Rat>> elems;
      for (const int u : word) {
        std::vector<Rat> e(n, Rat(0));
        e[g.flat_index(1, u)] = 1;
        elems.push_back(std::move(e));
      }
      const auto val = nested_bracket<Rat>(sc, elems);
      std::vector<Rat> col(nj);
      for (int r = 0; r < nj; ++r) col[r] = val[g.layer_offset(j) + r];
      cols.push_back(std::move(col));
    }
    // Solve cols * c = e_u for each u by exact Gaussian elimination on the
    // augmented matrix [cols | I].
    const int m = static_cast<int>(words.size());
    std::vector<std::vector<Rat>> aug(nj, std::vector<Rat>(m + nj, Rat(0)));
    for (int r = 0; r < nj; ++r) {
      for (int c = 0; c < m; ++c) aug[r][c] = cols[c][r];
      aug[r][m + r] = 1;
    }
    std::vector<int> pivot_col(nj, -1);
    int row = 0;
    for (int c = 0; c < m && row < nj; ++c) {
      int p = -1;
      for (int r = row; r < nj; ++r)
        if (aug[r][c] != 0) {
          p = r;
          break;
        }
      if (p < 0) continue;
      std::swap(aug[p], aug[row]);
      const Rat inv = Rat(1) / aug[row][c];
      for (auto& val : aug[row]) val *= inv;
      for (int r = 0; r < nj; ++r) {
        if (r == row || aug[r][c] == 0) continue;
        const Rat f = aug[r][c];
        for (int cc = 0; cc < m + nj; ++cc) aug[r][cc] -= f * aug[row][cc];
      }
      pivot_col[row] = c;
      ++row;
    }
    if (row < nj) return std::nullopt;  // layer j not generated: not stratified
    // Back-substitute: e_u = sum over pivot rows of rhs * word.
    std::vector<std::vector<std::pair<std::vector<int>, Rat>>> layer(nj);
    for (int u = 0; u < nj; ++u) {
      for (int r = 0; r < nj; ++r) {
        const Rat coeff = aug[r][m + u];
        if (coeff != 0) layer[u].emplace_back(words[pivot_col[r]], coeff);
      }
    }
    strat.decomp.push_back(std::move(layer));
  }
  return strat;
}

}  // namespace

PansuCandidate assemble_pansu_differential(const MapHandle& f, std::span<const double> x,
                                           const std::vector<std::vector<double>>& frame,
                                           const DyadicSchedule& sched, std::uint64_t seed) {
  PansuCandidate out;
  const auto& sg = f.source.gradation();
  const auto& tg = f.target.gradation();
  const int n1 = sg.layer_dim(1);
  const int N = static_cast<int>(frame.size());

  // Frame must span layer 1.
  Eigen::MatrixXd V(n1, N);
  for (int i = 0; i < N; ++i)
    for (int u = 0; u < n1; ++u) V(u, i) = frame[i][sg.layer_offset(1) + u];
  if (Eigen::FullPivLU<Eigen::MatrixXd>(V).rank() < n1) {
    out.defects.frame_spans = false;
    return out;
  }

  std::vector<std::vector<double>> partials;
  for (const auto& v : frame) {
    auto p = estimate_partial(f, x, v, sched);
    if (p.diverged || p.value.empty()) {
      ++out.defects.divergent_partials;
      partials.emplace_back(tg.total_dim(), 0.0);
    } else {
      partials.push_back(p.value);
    }
  }
  if (out.defects.divergent_partials > 0) return out;

  // Leakage: partials of layer-1 directions must lie in target layer 1.
  for (const auto& p : partials) {
    std::vector<double> rest = p;
    if (tg.step() >= 1)
      for (int u = 0; u < tg.layer_dim(1); ++u) rest[tg.layer_offset(1) + u] = 0.0;
    out.defects.layer_leakage = std::max(out.defects.layer_leakage, f.target.norm.value(rest));
  }

  // L1 from the layer-1 parts: solve L1 V = P (least squares for generic frames).
  const int t1 = tg.step() >= 1 ? tg.layer_dim(1) : 0;
  Eigen::MatrixXd P(t1, N);
  for (int i = 0; i < N; ++i)
    for (int r = 0; r < t1; ++r) P(r, i) = partials[i][tg.layer_offset(1) + r];
  Eigen::MatrixXd L1 =
      V.transpose().colPivHouseholderQr().solve(P.transpose()).transpose();

  // Higher blocks forced by bracket compatibility through the stratification.
  const auto strat = compute_stratification(f.source.sc);
  if (!strat)
    throw StructuralError(
        "assemble_pansu_differential: source group is not stratified; higher blocks are "
        "not determined by horizontal partials");

  std::vector<Eigen::MatrixXd> blocks;
  blocks.push_back(L1);
  // Images of the source layer-1 basis, embedded in the target.
  std::vector<std::vector<double>> l1_img;
  for (int u = 0; u < n1; ++u) {
    std::vector<double> img(tg.total_dim(), 0.0);
    for (int r = 0; r < t1; ++r) img[tg.layer_offset(1) + r] = L1(r, u);
    l1_img.push_back(std::move(img));
  }
  for (int j = 2; j <= sg.step(); ++j) {
    if (j > tg.step()) {
      blocks.emplace_back();
      continue;
    }
    const int nj = sg.layer_dim(j);
    Eigen::MatrixXd Lj = Eigen::MatrixXd::Zero(tg.layer_dim(j), nj);
    for (int u = 0; u < nj; ++u) {
      std::vector<double> acc(tg.total_dim(), 0.0);
      for (const auto& [word, coeff] : strat->decomp[j - 2][u]) {
        std::vector<std::vector<double>> elems;
        for (const int w : word) elems.push_back(l1_img[w]);
        const auto val = nested_bracket<double>(f.target.sc, elems);
        const double c = to_double(coeff);
        for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += c * val[t];
      }
      for (int r = 0; r < tg.layer_dim(j); ++r) Lj(r, u) = acc[tg.layer_offset(j) + r];
    }
    blocks.push_back(std::move(Lj));
  }
  HHomomorphism L(f.source, f.target, std::move(blocks));

  // Defect measurements.
  Rng rng(seed, "pansu_defects");
  // Linearity on layer 1.
  for (int k = 0; k < 12; ++k) {
    std::vector<double> v(sg.total_dim(), 0.0);
    for (int u = 0; u < n1; ++u) v[sg.layer_offset(1) + u] = rng.uniform(-1.0, 1.0);
    const double nv = f.source.norm.value(v);
    if (nv < 1e-9) continue;
    const auto vn = dilate<double>(sg, 1.0 / nv, v);
    auto p = estimate_partial(f, x, vn, sched);
    if (p.diverged || p.value.empty()) continue;
    out.defects.linearity_defect =
        std::max(out.defects.linearity_defect,
                 f.target.norm.value(group_diff<double>(f.target.sc, p.value, L.apply(vn))));
  }
  // Homomorphism defect on frame products, plus the product-formula check
  // L(prod delta_{t_i} v_i) = prod delta_{t_i} partial_i.
  auto frame_product = [&](const std::vector<double>& ts) {
    std::vector<double> u(sg.total_dim(), 0.0);
    for (int i = 0; i < N; ++i) {
      if (ts[i] == 0.0) continue;
      u = multiply<double>(f.source.sc, u, dilate_signed<double>(sg, ts[i], frame[i]));
    }
    return u;
  };
  auto partial_product = [&](const std::vector<double>& ts) {
    std::vector<double> p(tg.total_dim(), 0.0);
    for (int i = 0; i < N; ++i) {
      if (ts[i] == 0.0) continue;
      p = multiply<double>(f.target.sc, p, dilate_signed<double>(tg, ts[i], partials[i]));
    }
    return p;
  };
  for (int k = 0; k < 50; ++k) {
    std::vector<double> ta(N), tb(N);
    for (int i = 0; i < N; ++i) {
      ta[i] = rng.uniform(-1.0, 1.0);
      tb[i] = rng.uniform(-1.0, 1.0);
    }
    const auto u = frame_product(ta);
    const auto w = frame_product(tb);
    const auto luw = L.apply(multiply<double>(f.source.sc, u, w));
    const auto lulw = multiply<double>(f.target.sc, L.apply(u), L.apply(w));
    out.defects.hom_defect = std::max(
        out.defects.hom_defect, f.target.norm.value(group_diff<double>(f.target.sc, luw, lulw)));
    out.defects.product_formula_defect =
        std::max(out.defects.product_formula_defect,
                 f.target.norm.value(group_diff<double>(f.target.sc, L.apply(u),
                                                        partial_product(ta))));
  }
  out.candidate = std::move(L);
  return out;
}

RemainderProfile validate_differential(const MapHandle& f, std::span<const double> x,
                                       const HHomomorphism& L, const DyadicSchedule& sched,
                                       int samples_per_scale, std::uint64_t seed) {
  RemainderProfile out;
  const auto mesh =
      sphere_mesh(f.source.sc, f.source.norm, std::max(4, samples_per_scale / 2), seed);
  const std::vector<double> xv(x.begin(), x.end());
  const auto fx = f(xv);
  for (int k = 0; k < sched.depth; ++k) {
    const double r = sched.t(k);
    double worst = 0.0;
    for (std::size_t i = 0; i < mesh.size() && static_cast<int>(i) < samples_per_scale; ++i) {
      const auto z = dilate<double>(f.source.gradation(), r, mesh[i]);
      const auto lhs = group_diff<double>(f.target.sc, fx,
                                          f(multiply<double>(f.source.sc, xv, z)));
      const double rho =
          f.target.norm.value(group_diff<double>(f.target.sc, L.apply(z), lhs));
      worst = std::max(worst, rho / r);
    }
    out.scales.push_back(r);
    out.ratios.push_back(worst);
  }
  // PASS when the ratio sequence decreases below the threshold; the tail may
  // sit on the quotient noise floor, so the minimum is what counts.
  std::size_t argmin = 0;
  for (std::size_t k = 1; k < out.ratios.size(); ++k)
    if (out.ratios[k] < out.ratios[argmin]) argmin = k;
  out.pass = out.ratios[argmin] <= kConvergeThreshold &&
             (argmin > 0 || out.ratios.front() <= kConvergeThreshold);
  return out;
}

SeminormSample estimate_metric_differential(const MapHandle& f, std::span<const double> x,
                                            const std::vector<std::vector<double>>& mesh,
                                            const DyadicSchedule& sched) {
  SeminormSample s;
  s.directions = mesh;
  s.tolerance = kConvergeThreshold;
  const std::vector<double> xv(x.begin(), x.end());
  const auto fx = f(xv);
  const int depth = std::min(sched.depth, 20);

  auto quotient = [&](std::span<const double> v, double t) {
    const auto z = dilate<double>(f.source.gradation(), t, v);
    const auto fz = f(multiply<double>(f.source.sc, xv, z));
    return f.target.norm.value(group_diff<double>(f.target.sc, fx, fz)) / t;
  };

  // Scalar Richardson with the same noise-aware step selection as
  // estimate_partial.
  auto estimate_scalar = [&](std::span<const double> v, int use_depth) {
    std::vector<double> a(use_depth);
    for (int k = 0; k < use_depth; ++k) a[k] = quotient(v, sched.t(k));
    std::vector<double> e(use_depth - 1);
    for (int k = 0; k + 1 < use_depth; ++k) e[k] = 2.0 * a[k + 1] - a[k];
    int best = static_cast<int>(e.size()) - 1;
    double best_change = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
      const double c = std::fabs(e[k] - e[k + 1]);
      if (c < best_change) {
        best_change = c;
        best = static_cast<int>(k + 1);
      }
    }
    std::vector<double> profile(use_depth - 1);
    for (int k = 0; k + 1 < use_depth; ++k) profile[k] = std::fabs(a[k] - a[k + 1]);
    return std::tuple<double, std::vector<double>>(std::max(0.0, e[best]), profile);
  };

  for (const auto& v : mesh) {
    auto [limit, profile] = estimate_scalar(v, depth);
    const auto judge = judge_profile(profile, std::max(1.0, limit));
    s.values.push_back(limit);
    s.ok.push_back(!judge.diverged);
  }

  for (std::size_t i = 0; i + 1 < s.values.size(); i += 2) {
    if (!s.ok[i] || !s.ok[i + 1]) continue;
    s.symmetry_defect = std::max(s.symmetry_defect, std::fabs(s.values[i] - s.values[i + 1]));
  }

  // Off-mesh refiner with the same estimation parameters (shallow ladder,
  // noise-aware selection).
  {
    const auto src_sc = f.source.sc;
    const auto src_norm = f.source.norm;
    const auto tgt_sc = f.target.sc;
    const auto tgt_norm = f.target.norm;
    const auto eval = f.eval;
    const auto grad = f.source.gradation();
    const DyadicSchedule rsched{sched.t0, std::min(depth, 8)};
    s.refiner = [=](std::span<const double> z) {
      const double nz = src_norm.value(z);
      if (nz < 1e-300) return 0.0;
      const auto v = dilate<double>(grad, 1.0 / nz, z);
      const auto fx0 = eval(xv);
      std::vector<double> a(rsched.depth);
      for (int k = 0; k < rsched.depth; ++k) {
        const auto zz = dilate<double>(grad, rsched.t(k), v);
        const auto fz = eval(multiply<double>(src_sc, xv, zz));
        a[k] = tgt_norm.value(group_diff<double>(tgt_sc, fx0, fz)) / rsched.t(k);
      }
      int best = rsched.depth - 2;
      double best_change = std::numeric_limits<double>::infinity();
      for (int k = 0; k + 2 < rsched.depth; ++k) {
        const double e0 = 2.0 * a[k + 1] - a[k];
        const double e1 = 2.0 * a[k + 2] - a[k + 1];
        if (std::fabs(e0 - e1) < best_change) {
          best_change = std::fabs(e0 - e1);
          best = k;
        }
      }
      return nz * std::max(0.0, 2.0 * a[best + 1] - a[best]);
    };
  }

  // Sampled triangle inequality of the extended sample (report only).
  Rng rng(0x7113, "mdf_triangle");
  const auto& sg = f.source.gradation();
  for (int k = 0; k < 40 && s.directions.size() >= 2; ++k) {
    const auto& u = s.directions[rng.below(s.directions.size())];
    const auto& w = s.directions[rng.below(s.directions.size())];
    const double au = rng.uniform(0.2, 1.0);
    const double aw = rng.uniform(0.2, 1.0);
    const auto du = dilate<double>(sg, au, u);
    const auto dw = dilate<double>(sg, aw, w);
    const auto uw = multiply<double>(f.source.sc, du, dw);
    const double lhs = s.evaluate(f.source.sc, f.source.norm, uw);
    const double rhs = s.evaluate(f.source.sc, f.source.norm, du) +
                       s.evaluate(f.source.sc, f.source.norm, dw);
    s.triangle_defect = std::max(s.triangle_defect, lhs - rhs);
  }
  return s;
}

}  // namespace carnot
