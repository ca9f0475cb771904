#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "carnot/catalog.hpp"
#include "carnot/differentiation.hpp"
#include "carnot/measure.hpp"
#include "carnot/rng.hpp"

using namespace carnot;

TEST_CASE("omega_q: closed-form ball volumes") {
  CHECK(omega_q(1) == doctest::Approx(2.0));
  CHECK(omega_q(2) == doctest::Approx(M_PI));
  CHECK(omega_q(3) == doctest::Approx(4.0 * M_PI / 3.0));
  CHECK(omega_q(4) == doctest::Approx(M_PI * M_PI / 2.0));
}

TEST_CASE("ball volume: unit disk by grid within 0.5%") {
  const auto ab = make_abelian(2);
  const auto est = lebesgue_ball_volume(ab, 1.0, "grid", 4000000);
  CHECK(est.value == doctest::Approx(M_PI).epsilon(0.005));
  CHECK(*est.lower <= est.value);
  CHECK(est.value <= *est.upper);
}

TEST_CASE("ball volume: dilation scaling vol(B_2) = 2^Q vol(B_1)") {
  const auto& h = make_heisenberg();
  const auto v1 = lebesgue_ball_volume(h, 1.0, "monte-carlo", 400000, 3);
  const auto v2 = lebesgue_ball_volume(h, 2.0, "monte-carlo", 400000, 4);
  CHECK(v2.value / v1.value == doctest::Approx(16.0).epsilon(0.02));
}

TEST_CASE("ball volume: Heisenberg unit ball is the cylinder, volume 2 pi") {
  const auto& h = make_heisenberg();
  const auto est = lebesgue_ball_volume(h, 1.0, "grid", 3000000);
  // Regression baseline: max{|(x1,x2)|, sqrt|x3|} <= 1 is the disk times
  // height [-1, 1].
  CHECK(est.value == doctest::Approx(2.0 * M_PI).epsilon(0.01));
}

TEST_CASE("hausdorff: unit segment has H^1 = 1 within 2%") {
  const auto ab = make_abelian(1);
  CoveringEngine eng;
  Rng rng(5);
  std::vector<std::vector<double>> cloud, probes;
  for (int i = 0; i < 60000; ++i) cloud.push_back({rng.uniform(0.0, 1.0)});
  for (int i = 0; i < 2000; ++i) probes.push_back({rng.uniform(0.0, 1.0)});
  const auto m = metric_from_bundle(ab);
  for (const double eps : {0.02, 0.01}) {
    const auto est = eng.hausdorff_estimate(cloud, m, 1, eps, probes);
    CHECK(est.value == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("hausdorff: unit disk lands near pi with recorded bracketing") {
  const auto ab = make_abelian(2);
  CoveringEngine eng;
  const auto m = metric_from_bundle(ab);
  const auto cloud = sample_ball(ab.sc, ab.norm, std::vector<double>{0.0, 0.0}, 1.0, 150000, 17);
  const auto est = eng.hausdorff_estimate(cloud, m, 2, 0.08);
  CHECK(*est.lower <= est.value);
  CHECK(est.value <= *est.upper);
  // Self-calibrated value: regression window around the true area.
  CHECK(est.value == doctest::Approx(M_PI).epsilon(0.03));
}

TEST_CASE("hausdorff: sparse sampler is refused via probes") {
  const auto ab = make_abelian(2);
  CoveringEngine eng;
  const auto m = metric_from_bundle(ab);
  Rng rng(7);
  std::vector<std::vector<double>> cloud;
  // Half-disk cloud only; probes from the full disk expose the hole.
  while (cloud.size() < 5000) {
    const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(0.0, 1.0);
    if (x * x + y * y <= 1.0) cloud.push_back({x, y});
  }
  std::vector<std::vector<double>> probes;
  while (probes.size() < 500) {
    const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
    if (x * x + y * y <= 1.0) probes.push_back({x, y});
  }
  CHECK_THROWS_AS(eng.hausdorff_estimate(cloud, m, 2, 0.1, probes), SamplerDensityError);
}

TEST_CASE("hausdorff: Heisenberg dilation scaling lambda^4 within 5%") {
  const auto& h = make_heisenberg();
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 150000;
  const double lambda = 1.5;
  const auto est = eng.hhom_jacobian(hhom_dilation(h, lambda), "pushforward", opts);
  CHECK_FALSE(est.flagged);
  CHECK(est.value == doctest::Approx(std::pow(lambda, 4)).epsilon(0.05));
}

TEST_CASE("kirchheim: 1-d scaled absolute value") {
  const auto s = [](std::span<const double> v) { return 2.5 * std::fabs(v[0]); };
  CHECK(kirchheim_jacobian(s, 1) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("kirchheim: scaled euclidean in 2d and 3d") {
  for (const double lam : {0.6, 1.0, 1.7}) {
    const auto s = [lam](std::span<const double> v) {
      double acc = 0.0;
      for (const double x : v) acc += x * x;
      return lam * std::sqrt(acc);
    };
    CHECK(kirchheim_jacobian(s, 2) == doctest::Approx(lam * lam).epsilon(1e-6));
    CHECK(kirchheim_jacobian(s, 3) == doctest::Approx(lam * lam * lam).epsilon(1e-6));
  }
}

TEST_CASE("kirchheim: scaled sup norm closed forms") {
  for (const double lam : {1.0, 1.3}) {
    const auto s = [lam](std::span<const double> v) {
      double m = 0.0;
      for (const double x : v) m = std::max(m, std::fabs(x));
      return lam * m;
    };
    // J = omega_n / Leb(unit s-ball) = omega_n (lam/2)^n.
    CHECK(kirchheim_jacobian(s, 2) ==
          doctest::Approx(M_PI * lam * lam / 4.0).epsilon(1e-6));
    CHECK(kirchheim_jacobian(s, 3) ==
          doctest::Approx((4.0 * M_PI / 3.0) * std::pow(lam / 2.0, 3)).epsilon(1e-6));
  }
}

TEST_CASE("kirchheim: seminorm with a null direction gives 0") {
  const auto s = [](std::span<const double> v) { return std::fabs(v[0]); };
  CHECK(kirchheim_jacobian(s, 2) == 0.0);
}

TEST_CASE("metric_jacobian: s = d gives exactly 1") {
  const auto& h = make_heisenberg();
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 40000;
  const auto est = eng.metric_jacobian(h, metric_from_bundle(h), opts);
  CHECK(est.value == 1.0);
  CHECK_FALSE(est.flagged);
}

TEST_CASE("metric_jacobian: abelian quadratic forms agree with Kirchheim within 5%") {
  const auto ab = make_abelian(2);
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 150000;
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    // Random positive definite T = A^T A + small ridge; s(v) = |T v|.
    Eigen::Matrix2d A;
    A << rng.uniform(-1.0, 1.0) * 1.5, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0) * 1.5;
    Eigen::Matrix2d T = A.transpose() * A + 0.35 * Eigen::Matrix2d::Identity();
    auto s_fn = [T](std::span<const double> v) {
      Eigen::Vector2d w(v[0], v[1]);
      return (T * w).norm();
    };
    MetricContext ctx = metric_from_bundle(ab);  // euclidean affine class
    ctx.distance = [s_fn](std::span<const double> a, std::span<const double> b) {
      std::vector<double> d(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
      return s_fn(d);
    };
    const double smin = std::min({s_fn(std::vector<double>{1.0, 0.0}),
                                  s_fn(std::vector<double>{0.0, 1.0})}) /
                        2.0;
    ctx.box_halfwidths = [smin](double r) {
      return std::vector<double>{r / smin, r / smin};
    };
    const auto jc = eng.metric_jacobian(ab, ctx, opts);
    const double jk = kirchheim_jacobian(s_fn, 2);
    CHECK(jk == doctest::Approx(T.determinant()).epsilon(1e-6));
    CHECK(jc.value == doctest::Approx(jk).epsilon(0.05));
  }
}

TEST_CASE("metric_jacobian: scaled sup norms agree with Kirchheim within 5%") {
  JacobianEngine eng;
  for (const int n : {2, 3}) {
    const auto ab = make_abelian(n);
    const auto sup = make_abelian(n, LayerNormKind::Sup);
    JacobianOptions opts;
    opts.budget = n == 2 ? 150000 : 250000;
    for (const double lam : {1.0, 0.8}) {
      auto ctx = metric_scaled(metric_from_bundle(sup), lam);
      const auto jc = eng.metric_jacobian(ab, ctx, opts);
      auto s_fn = [lam](std::span<const double> v) {
        double m = 0.0;
        for (const double x : v) m = std::max(m, std::fabs(x));
        return lam * m;
      };
      const double jk = kirchheim_jacobian(s_fn, n);
      CHECK(jc.value == doctest::Approx(jk).epsilon(0.05));
    }
  }
}

TEST_CASE("metric_jacobian: degenerate seminorm sample returns exact 0") {
  const auto& h = make_heisenberg();
  const auto f = map_layer1_projection(h);
  const auto mesh = sphere_mesh(h.sc, h.norm, 16, 23);
  const auto s =
      estimate_metric_differential(f, std::vector<double>(3, 0.0), mesh, {0.5, 10});
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 20000;
  const auto est = eng.metric_jacobian(h, s, opts);
  CHECK(est.value == 0.0);
  CHECK(est.flagged);
}

TEST_CASE("hhom_jacobian: identity gives exactly 1 by both methods") {
  const auto& h = make_heisenberg();
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 60000;
  const auto id = hhom_identity(h);
  const auto push = eng.hhom_jacobian(id, "pushforward", opts);
  CHECK(push.value == 1.0);
  const auto det = eng.hhom_jacobian(id, "determinant", opts);
  CHECK(det.value == 1.0);
}

TEST_CASE("hhom_jacobian: dilation lambda in {1/2, 2} gives lambda^4 within 5%") {
  const auto& h = make_heisenberg();
  JacobianEngine eng;
  JacobianOptions opts;
  opts.budget = 150000;
  // Determinant method is exact after calibrating on the identity (same
  // full-space image subspace).
  (void)eng.hhom_jacobian(hhom_identity(h), "determinant", {60000, 0xFACADE, {}, 0.10});
  for (const double lambda : {0.5, 2.0}) {
    const auto push = eng.hhom_jacobian(hhom_dilation(h, lambda), "pushforward", opts);
    CHECK(push.value == doctest::Approx(std::pow(lambda, 4)).epsilon(0.05));
    const auto det = eng.hhom_jacobian(hhom_dilation(h, lambda), "determinant", opts);
    CHECK(det.value == doctest::Approx(std::pow(lambda, 4)).epsilon(1e-9));
  }
}

TEST_CASE("hhom_jacobian: rank-deficient layer-1 block returns 0 with the flag") {
  const auto& h = make_heisenberg();
  Eigen::MatrixXd l1(2, 2);
  l1 << 1.0, 0.0, 0.0, 0.0;
  HHomomorphism L(h, h, std::vector<Eigen::MatrixXd>{l1, Eigen::MatrixXd::Zero(1, 1)});
  JacobianEngine eng;
  const auto est = eng.hhom_jacobian(L, "pushforward", {});
  CHECK(est.value == 0.0);
  CHECK(est.flagged);
}

TEST_CASE("subspace signature: dilations share the identity's column space") {
  const auto& h = make_heisenberg();
  const auto s1 = subspace_signature(hhom_identity(h).coordinate_matrix());
  const auto s2 = subspace_signature(hhom_dilation(h, 0.5).coordinate_matrix());
  CHECK(s1 == s2);
  const auto p = hhom_layer1_projection(h);
  CHECK(subspace_signature(p.coordinate_matrix()) != s1);
}
