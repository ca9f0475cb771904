#include "carnot/measure.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "carnot/rng.hpp"

namespace carnot {

double omega_q(int q) {
  return std::pow(M_PI, 0.5 * q) / std::tgamma(0.5 * q + 1.0);
}

// ---- Metric contexts ---------------------------------------------------------

MetricContext metric_from_bundle(const GroupBundle& g) {
  MetricContext m;
  m.token = g.shape_token;
  m.q = g.homogeneous_dim();
  const auto sc = g.sc;
  const auto hn = g.norm;
  m.distance = [sc, hn](std::span<const double> a, std::span<const double> b) {
    return hn.value(group_diff<double>(sc, a, b));
  };
  m.box_halfwidths = [hn](double r) { return ball_box_halfwidths(hn, r); };
  m.cover_halfwidths = [sc, hn](std::span<const double> domain_hw, double r) {
    return group_shift_halfwidths(sc, domain_hw, ball_box_halfwidths(hn, r));
  };
  m.unit_ball_cloud = [sc, hn](std::size_t n, std::uint64_t seed) {
    return sample_ball(sc, hn, std::vector<double>(hn.gradation().total_dim(), 0.0), 1.0, n,
                       seed);
  };
  return m;
}

MetricContext metric_scaled(const MetricContext& base, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("metric_scaled: lambda must be positive");
  MetricContext m = base;  // same token: the balls are dilates of each other
  const auto dist = base.distance;
  m.distance = [dist, lambda](std::span<const double> a, std::span<const double> b) {
    return lambda * dist(a, b);
  };
  const auto box = base.box_halfwidths;
  m.box_halfwidths = [box, lambda](double r) { return box(r / lambda); };
  const auto chw = base.cover_halfwidths;
  m.cover_halfwidths = [chw, lambda](std::span<const double> domain_hw, double r) {
    return chw(domain_hw, r / lambda);
  };
  return m;
}

MetricContext metric_from_pullback(const HHomomorphism& L) {
  MetricContext m;
  const auto& tgt = L.target();
  const auto& src = L.source();
  m.q = src.gradation().homogeneous_dim();
  const Eigen::MatrixXd L0 = L.coordinate_matrix();
  const bool bijective = L0.rows() == L0.cols() &&
                         std::fabs(Eigen::FullPivLU<Eigen::MatrixXd>(L0).determinant()) > 1e-12;
  m.token = bijective ? tgt.shape_token : tgt.shape_token + "|img:" + subspace_signature(L0);

  auto lp = std::make_shared<HHomomorphism>(L);
  const auto tsc = tgt.sc;
  const auto tnorm = tgt.norm;
  m.distance = [lp, tsc, tnorm](std::span<const double> a, std::span<const double> b) {
    return tnorm.value(group_diff<double>(tsc, lp->apply(a), lp->apply(b)));
  };

  // s_L >= m0 * d on the unit sphere, so the s-ball of radius r sits inside
  // the d-ball of radius r / m0.
  const auto src_sc = src.sc;
  const auto src_norm = src.norm;
  double m0 = std::numeric_limits<double>::infinity();
  for (const auto& v : sphere_mesh(src_sc, src_norm, 48, 0x5EED))
    m0 = std::min(m0, tnorm.value(lp->apply(v)));
  m0 = std::max(m0, 1e-9);
  m.box_halfwidths = [src_norm, m0](double r) { return ball_box_halfwidths(src_norm, r / m0); };
  m.cover_halfwidths = [src_sc, src_norm, m0](std::span<const double> domain_hw, double r) {
    return group_shift_halfwidths(src_sc, domain_hw, ball_box_halfwidths(src_norm, r / m0));
  };

  if (bijective) {
    // Exact pullback of the target unit ball; covering it with s_L-balls is
    // isometric to the target's own canonical covering problem.
    const Eigen::MatrixXd inv = L0.inverse();
    const int n = static_cast<int>(inv.rows());
    m.unit_ball_cloud = [tsc, tnorm, inv, n](std::size_t count, std::uint64_t seed) {
      auto pts = sample_ball(tsc, tnorm, std::vector<double>(n, 0.0), 1.0, count, seed);
      for (auto& p : pts) {
        Eigen::VectorXd v(n);
        for (int t = 0; t < n; ++t) v(t) = p[t];
        const Eigen::VectorXd w = inv * v;
        for (int t = 0; t < n; ++t) p[t] = w(t);
      }
      return pts;
    };
  } else {
    const auto dist = m.distance;
    const int n = src.dim();
    const auto box = m.box_halfwidths;
    m.unit_ball_cloud = [dist, box, n](std::size_t count, std::uint64_t seed) {
      const auto hw = box(1.0);
      Rng base(seed, "pullback_ball");
      std::vector<std::vector<double>> out;
      const std::vector<double> zero(n, 0.0);
      std::size_t idx = 0;
      while (out.size() < count) {
        Rng rng = base.fork(idx++);
        std::vector<double> z(n);
        for (int t = 0; t < n; ++t) z[t] = rng.uniform(-hw[t], hw[t]);
        if (dist(zero, z) <= 1.0) out.push_back(std::move(z));
      }
      return out;
    };
  }
  return m;
}

MetricContext metric_from_sample(const GroupBundle& source, const SeminormSample& s,
                                 std::optional<std::string> token) {
  MetricContext m;
  m.q = source.homogeneous_dim();
  m.token = token.value_or(
      "sample:" + std::to_string(hash_tag(source.shape_token) ^
                                 (s.directions.size() * 2654435761ull)));
  const auto sc = source.sc;
  const auto hn = source.norm;
  auto sample = std::make_shared<SeminormSample>(s);
  m.distance = [sc, hn, sample](std::span<const double> a, std::span<const double> b) {
    return sample->evaluate(sc, hn, group_diff<double>(sc, a, b));
  };
  const double m0 = std::max(s.min_value(), 1e-9);
  m.box_halfwidths = [hn, m0](double r) { return ball_box_halfwidths(hn, r / m0); };
  m.cover_halfwidths = [sc, hn, m0](std::span<const double> domain_hw, double r) {
    return group_shift_halfwidths(sc, domain_hw, ball_box_halfwidths(hn, r / m0));
  };
  const auto dist = m.distance;
  const int n = source.dim();
  const auto box = m.box_halfwidths;
  m.unit_ball_cloud = [dist, box, n](std::size_t count, std::uint64_t seed) {
    const auto hw = box(1.0);
    Rng base(seed, "sample_norm_ball");
    std::vector<std::vector<double>> out;
    const std::vector<double> zero(n, 0.0);
    std::size_t idx = 0;
    while (out.size() < count) {
      Rng rng = base.fork(idx++);
      std::vector<double> z(n);
      for (int t = 0; t < n; ++t) z[t] = rng.uniform(-hw[t], hw[t]);
      if (dist(zero, z) <= 1.0) out.push_back(std::move(z));
    }
    return out;
  };
  return m;
}

// ---- Covering engine ----------------------------------------------------------

namespace {

// Grid over the first <= 3 coordinates; enough pruning at desk-scale
// dimensions, exact distances filter the rest.
class BucketIndex {
 public:
  BucketIndex(const std::vector<std::vector<double>>& pts, std::span<const double> widths) {
    dims_ = std::min<std::size_t>(3, widths.size());
    w_.assign(widths.begin(), widths.begin() + dims_);
    for (auto& w : w_) w = std::max(w, 1e-12);
    for (std::size_t i = 0; i < pts.size(); ++i)
      cells_[key(pts[i])].push_back(static_cast<int>(i));
  }

  template <class Fn>
  void for_box(std::span<const double> center, std::span<const double> hw, Fn&& fn) const {
    std::array<long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (std::size_t d = 0; d < dims_; ++d) {
      lo[d] = cell_of(center[d] - hw[d], d);
      hi[d] = cell_of(center[d] + hw[d], d);
    }
    std::array<long, 3> c = lo;
    while (true) {
      const auto it = cells_.find(pack(c, dims_));
      if (it != cells_.end())
        for (const int i : it->second) fn(i);
      std::size_t d = 0;
      for (; d < dims_; ++d) {
        if (++c[d] <= hi[d]) break;
        c[d] = lo[d];
      }
      if (d == dims_) break;
    }
  }

 private:
  long cell_of(double x, std::size_t d) const {
    return static_cast<long>(std::floor(x / w_[d]));
  }
  std::uint64_t key(const std::vector<double>& p) const {
    std::array<long, 3> c{0, 0, 0};
    for (std::size_t d = 0; d < dims_; ++d) c[d] = cell_of(p[d], d);
    return pack(c, dims_);
  }
  static std::uint64_t pack(const std::array<long, 3>& c, std::size_t) {
    const std::uint64_t off = 1ull << 20;
    return ((static_cast<std::uint64_t>(c[0]) + off) << 42) ^
           ((static_cast<std::uint64_t>(c[1]) + off) << 21) ^
           (static_cast<std::uint64_t>(c[2]) + off);
  }

  std::size_t dims_ = 0;
  std::vector<double> w_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

std::vector<int> cover_impl(const std::vector<std::vector<double>>& cloud,
                            const MetricContext& m, double eps, std::uint64_t seed) {
  std::vector<int> centers;
  if (cloud.empty()) return centers;
  const double r = eps / 2.0;
  std::vector<double> domain_hw(cloud.front().size(), 0.0);
  for (const auto& p : cloud)
    for (std::size_t t = 0; t < p.size(); ++t)
      domain_hw[t] = std::max(domain_hw[t], std::fabs(p[t]));
  const auto hw =
      m.cover_halfwidths ? m.cover_halfwidths(domain_hw, r) : m.box_halfwidths(r);
  BucketIndex index(cloud, hw);

  // Deterministic seeded order, independent of the metric.
  std::vector<int> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, "cover_order");
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<char> covered(cloud.size(), 0);
  for (const int idx : order) {
    if (covered[idx]) continue;
    centers.push_back(idx);
    const auto& c = cloud[idx];
    index.for_box(c, hw, [&](int j) {
      if (!covered[j] && m.distance(c, cloud[j]) <= r) covered[j] = 1;
    });
    covered[idx] = 1;
  }
  return centers;
}

}  // namespace

int CoveringEngine::cover_count(const std::vector<std::vector<double>>& cloud,
                                const MetricContext& m, double eps) const {
  return static_cast<int>(cover_impl(cloud, m, eps, opts_.seed).size());
}

double CoveringEngine::shape_theta(const MetricContext& m, double eps) {
  const auto key = std::make_pair(m.token, eps);
  const auto it = theta_cache_.find(key);
  if (it != theta_cache_.end()) return it->second;
  const std::uint64_t cal_seed = hash_tag(m.token) ^ 0x7e7aull;
  const auto ball = m.unit_ball_cloud(opts_.calibration_cloud, cal_seed);
  const int count = cover_count(ball, m, eps);
  const double theta = count * std::pow(eps / 2.0, m.q);
  theta_cache_[key] = theta;
  return theta;
}

MeasureEstimate CoveringEngine::hausdorff_estimate(
    const std::vector<std::vector<double>>& cloud, const MetricContext& m, int Q, double eps,
    const std::vector<std::vector<double>>& probes) {
  const auto centers = cover_impl(cloud, m, eps, opts_.seed);
  if (opts_.density_check && !probes.empty()) {
    // The sampler must be dense at scale eps/4; a probe farther than
    // eps/2 + eps/4 from every center exposes a hole.
    for (const auto& p : probes) {
      double best = std::numeric_limits<double>::infinity();
      for (const int c : centers) {
        best = std::min(best, m.distance(p, cloud[c]));
        if (best <= 0.75 * eps) break;
      }
      if (best > 0.75 * eps)
        throw SamplerDensityError("hausdorff_estimate: uncovered probe at distance " +
                                  std::to_string(best) + " at eps " + std::to_string(eps));
    }
  }
  const double count = static_cast<double>(centers.size());
  const double raw = omega_q(Q) * count * std::pow(eps / 2.0, Q);
  const double theta = shape_theta(m, eps);
  MeasureEstimate est;
  est.method = "covering-upper";
  est.eps = eps;
  est.budget = cloud.size();
  est.seed = opts_.seed;
  est.value = raw / theta;
  est.upper = std::max(raw, est.value);
  est.lower = est.value / std::pow(2.0, Q);
  return est;
}

// ---- Lebesgue ball volume ------------------------------------------------------

MeasureEstimate lebesgue_ball_volume(const GroupBundle& g, double radius,
                                     const std::string& method, std::uint64_t budget,
                                     std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("lebesgue_ball_volume: degenerate radius");
  const auto hw = ball_box_halfwidths(g.norm, radius);
  const int n = g.dim();
  double box_vol = 1.0;
  for (const double h : hw) box_vol *= 2.0 * h;

  MeasureEstimate est;
  est.budget = budget;
  est.seed = seed;
  if (method == "grid") {
    const int per_dim = std::max(
        2, static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / n))));
    std::int64_t total = 1;
    for (int d = 0; d < n; ++d) total *= per_dim;
    std::int64_t inside = 0;
    std::vector<double> p(n);
    for (std::int64_t cell = 0; cell < total; ++cell) {
      std::int64_t c = cell;
      for (int d = 0; d < n; ++d) {
        const int i = static_cast<int>(c % per_dim);
        c /= per_dim;
        p[d] = hw[d] * (2.0 * (i + 0.5) / per_dim - 1.0);
      }
      if (g.norm.value(p) <= radius) ++inside;
    }
    est.method = "grid-volume";
    est.grid_pitch = 2.0 * hw[0] / per_dim;
    est.value = box_vol * static_cast<double>(inside) / static_cast<double>(total);
    const double shell = static_cast<double>(per_dim - 2) / per_dim;
    est.lower = est.value * std::pow(shell, n);
    est.upper = est.value / std::pow(shell, n);
  } else if (method == "monte-carlo") {
    Rng rng(seed, "ball_volume");
    std::uint64_t inside = 0;
    std::vector<double> p(n);
    for (std::uint64_t k = 0; k < budget; ++k) {
      for (int d = 0; d < n; ++d) p[d] = rng.uniform(-hw[d], hw[d]);
      if (g.norm.value(p) <= radius) ++inside;
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(budget);
    const double sigma =
        std::sqrt(std::max(frac * (1.0 - frac), 1e-12) / static_cast<double>(budget));
    est.method = "monte-carlo-volume";
    est.value = box_vol * frac;
    est.lower = box_vol * std::max(0.0, frac - 3.0 * sigma);
    est.upper = box_vol * (frac + 3.0 * sigma);
  } else {
    throw std::invalid_argument("lebesgue_ball_volume: unknown method '" + method + "'");
  }
  return est;
}

// ---- Kirchheim integral Jacobian ------------------------------------------------

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p1 = 0.0, p0 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

double kirchheim_jacobian(const std::function<double(std::span<const double>)>& s, int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("kirchheim_jacobian: n must be 1..3");
  const double tiny = 1e-12;
  if (n == 1) {
    const std::vector<double> p{1.0}, q{-1.0};
    const double sp = s(p), sq = s(q);
    if (sp < tiny || sq < tiny) return 0.0;  // seminorm branch
    return n * omega_q(n) / (1.0 / sp + 1.0 / sq);
  }
  if (n == 2) {
    std::vector<double> gx, gw;
    gauss_legendre(16, gx, gw);
    double prev = -1.0;
    for (int panels = 8; panels <= 4096; panels *= 2) {
      double integral = 0.0;
      const double h = 2.0 * M_PI / panels;
      for (int p = 0; p < panels; ++p) {
        const double a = p * h;
        for (int i = 0; i < 16; ++i) {
          const double th = a + 0.5 * h * (gx[i] + 1.0);
          const std::vector<double> v{std::cos(th), std::sin(th)};
          const double sv = s(v);
          if (sv < tiny) return 0.0;
          integral += 0.5 * h * gw[i] / (sv * sv);
        }
      }
      if (prev > 0.0 && std::fabs(integral - prev) <= 1e-6 * std::fabs(integral))
        return n * omega_q(n) / integral;
      prev = integral;
    }
    return n * omega_q(n) / prev;
  }
  // n == 3: Gauss-Legendre in z = cos(theta), periodic trapezoid in phi.
  double prev = -1.0;
  for (int m = 24; m <= 768; m *= 2) {
    std::vector<double> gx, gw;
    gauss_legendre(m, gx, gw);
    const int mphi = 2 * m;
    double integral = 0.0;
    for (int i = 0; i < m; ++i) {
      const double z = gx[i];
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      double ring = 0.0;
      for (int j = 0; j < mphi; ++j) {
        const double phi = 2.0 * M_PI * j / mphi;
        const std::vector<double> v{rho * std::cos(phi), rho * std::sin(phi), z};
        const double sv = s(v);
        if (sv < tiny) return 0.0;
        ring += 1.0 / (sv * sv * sv);
      }
      integral += gw[i] * (2.0 * M_PI / mphi) * ring;
    }
    if (prev > 0.0 && std::fabs(integral - prev) <= 1e-6 * std::fabs(integral))
      return 3.0 * omega_q(3) / integral;
    prev = integral;
  }
  return 3.0 * omega_q(3) / prev;
}

// ---- Jacobian engine --------------------------------------------------------

namespace {

std::vector<double> default_eps_levels(int Q) {
  switch (Q) {
    case 1:
    case 2:
      return {0.12, 0.08};
    case 3:
      return {0.20, 0.14};
    case 4:
      return {0.44, 0.32};
    default:
      return {0.9, 0.7};
  }
}

}  // namespace

MeasureEstimate JacobianEngine::metric_jacobian(const GroupBundle& d, const MetricContext& s,
                                                const JacobianOptions& opts) {
  const auto d_ctx = metric_from_bundle(d);
  auto eps = opts.eps_levels.empty() ? default_eps_levels(d.homogeneous_dim()) : opts.eps_levels;
  std::sort(eps.rbegin(), eps.rend());
  const auto cloud = sample_ball(d.sc, d.norm, std::vector<double>(d.dim(), 0.0), 1.0,
                                 opts.budget, opts.seed);
  MeasureEstimate est;
  est.method = "covering-ratio";
  est.budget = opts.budget;
  est.seed = opts.seed;
  std::vector<double> levels;
  for (const double e : eps) {
    const double cs = cov_.cover_count(cloud, s, e);
    const double cd = cov_.cover_count(cloud, d_ctx, e);
    double j = cs / cd;
    if (s.token != d_ctx.token) j *= cov_.shape_theta(d_ctx, e) / cov_.shape_theta(s, e);
    levels.push_back(j);
  }
  est.eps = eps.back();
  est.value = levels.back();
  est.lower = *std::min_element(levels.begin(), levels.end());
  est.upper = *std::max_element(levels.begin(), levels.end());
  if (levels.size() >= 2) {
    const double rel = std::fabs(levels[0] - levels[1]) / std::max(levels.back(), 1e-12);
    if (rel > opts.instability_threshold) {
      est.flagged = true;
      est.flag_reason = "eps levels disagree by " + std::to_string(rel);
    }
  }
  return est;
}

MeasureEstimate JacobianEngine::metric_jacobian(const GroupBundle& d, const SeminormSample& s,
                                                const JacobianOptions& opts,
                                                std::optional<MetricContext> ctx) {
  if (s.degenerate()) {
    MeasureEstimate est;
    est.method = "covering-ratio";
    est.value = 0.0;
    est.lower = est.upper = 0.0;
    est.flagged = true;
    est.flag_reason = "seminorm: null direction detected, J = 0 branch";
    return est;
  }
  return metric_jacobian(d, ctx ? *ctx : metric_from_sample(d, s), opts);
}

MeasureEstimate JacobianEngine::hhom_jacobian(const HHomomorphism& L, const std::string& method,
                                              const JacobianOptions& opts) {
  const auto& src = L.source();
  const auto& tgt = L.target();
  const Eigen::MatrixXd L0 = L.coordinate_matrix();

  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L0);
    const auto& sv = svd.singularValues();
    if (L0.cols() > L0.rows() || sv(sv.size() - 1) <= 1e-9 * std::max(sv(0), 1e-30)) {
      MeasureEstimate est;
      est.method = method;
      est.value = 0.0;
      est.lower = est.upper = 0.0;
      est.flagged = true;
      est.flag_reason = "seminorm-degenerate: L is not injective, s_L fails definiteness";
      return est;
    }
  }

  const double detval = std::sqrt((L0.transpose() * L0).determinant());

  if (method == "determinant") {
    const std::string sig = subspace_signature(L0);
    const auto it = subspace_constant_.find(sig);
    double C;
    if (it != subspace_constant_.end()) {
      C = it->second;
    } else {
      // Calibrate the geometric constant once per image subspace using the
      // pushforward method on this representative.
      const auto push = hhom_jacobian(L, "pushforward", opts);
      C = push.value / detval;
      subspace_constant_[sig] = C;
    }
    MeasureEstimate est;
    est.method = "determinant";
    est.value = C * detval;
    est.budget = opts.budget;
    est.seed = opts.seed;
    return est;
  }
  if (method != "pushforward")
    throw std::invalid_argument("hhom_jacobian: unknown method '" + method + "'");

  const auto d_ctx = metric_from_bundle(src);
  const auto rho_ctx = metric_from_bundle(tgt);
  auto eps =
      opts.eps_levels.empty() ? default_eps_levels(src.homogeneous_dim()) : opts.eps_levels;
  std::sort(eps.rbegin(), eps.rend());

  const auto cloud = sample_ball(src.sc, src.norm, std::vector<double>(src.dim(), 0.0), 1.0,
                                 opts.budget, opts.seed);
  auto map_cloud = [&](const std::vector<std::vector<double>>& pts) {
    std::vector<std::vector<double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(L.apply(p));
    return out;
  };

  // Coarse pass for the image density target.
  const double e0 = eps.front();
  const double cd0 = cov_.cover_count(cloud, d_ctx, e0);
  const double ci0 = cov_.cover_count(map_cloud(cloud), rho_ctx, e0);
  double j0 = ci0 / cd0;
  if (rho_ctx.token != d_ctx.token)
    j0 *= cov_.shape_theta(d_ctx, e0) / cov_.shape_theta(rho_ctx, e0);

  // Image cloud resampled to the reference metric density so the covering
  // discreteness bias divides out; near J = 1 the original cloud is kept
  // bit-for-bit.
  std::vector<std::vector<double>> img;
  if (std::fabs(j0 - 1.0) <= 0.1) {
    img = map_cloud(cloud);
  } else {
    const std::size_t n_img = static_cast<std::size_t>(
        std::clamp(j0 * static_cast<double>(opts.budget), 2000.0, 6.0e6));
    img = map_cloud(sample_ball(src.sc, src.norm, std::vector<double>(src.dim(), 0.0), 1.0,
                                n_img, opts.seed ^ 0x1117ull));
  }

  MeasureEstimate est;
  est.method = "pushforward";
  est.budget = opts.budget;
  est.seed = opts.seed;
  std::vector<double> levels;
  for (const double e : eps) {
    const double cd = cov_.cover_count(cloud, d_ctx, e);
    const double ci = cov_.cover_count(img, rho_ctx, e);
    double j = ci / cd;
    if (rho_ctx.token != d_ctx.token)
      j *= cov_.shape_theta(d_ctx, e) / cov_.shape_theta(rho_ctx, e);
    levels.push_back(j);
  }
  est.eps = eps.back();
  est.value = levels.back();
  est.lower = *std::min_element(levels.begin(), levels.end());
  est.upper = *std::max_element(levels.begin(), levels.end());
  if (levels.size() >= 2) {
    const double rel = std::fabs(levels[0] - levels[1]) / std::max(levels.back(), 1e-12);
    if (rel > opts.instability_threshold) {
      est.flagged = true;
      est.flag_reason = "eps levels disagree by " + std::to_string(rel);
    }
  }
  return est;
}

std::string subspace_signature(const Eigen::MatrixXd& L0) {
  // Exact RREF of L0^T over the rationals; its nonzero rows canonically
  // represent the column space of L0.
  const int rows = static_cast<int>(L0.cols());
  const int cols = static_cast<int>(L0.rows());
  std::vector<std::vector<Rat>> m(rows, std::vector<Rat>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m[r][c] = rat_from_double(L0(c, r));
  int row = 0;
  for (int c = 0; c < cols && row < rows; ++c) {
    int p = -1;
    for (int r = row; r < rows; ++r)
      if (m[r][c] != 0) {
        p = r;
        break;
      }
    if (p < 0) continue;
    std::swap(m[p], m[row]);
    const Rat inv = Rat(1) / m[row][c];
    for (auto& v : m[row]) v *= inv;
    for (int r = 0; r < rows; ++r) {
      if (r == row || m[r][c] == 0) continue;
      const Rat f = m[r][c];
      for (int cc = 0; cc < cols; ++cc) m[r][cc] -= f * m[row][cc];
    }
    ++row;
  }
  std::ostringstream os;
  for (int r = 0; r < row; ++r) {
    for (int c = 0; c < cols; ++c) os << format_rational(m[r][c]) << ",";
    os << ";";
  }
  return os.str();
}

}  // namespace carnot
