#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "carnot/catalog.hpp"
#include "carnot/norm.hpp"
#include "carnot/rng.hpp"

using namespace carnot;

TEST_CASE("kth_root: exact power-of-two homogeneity and values") {
  Rng rng(7);
  for (int k = 0; k < 2000; ++k) {
    const double t = std::exp(rng.uniform(-20.0, 20.0));
    for (int i = 2; i <= 5; ++i) {
      const double scaled = std::ldexp(t, i);  // t * 2^i
      CHECK(kth_root(scaled, i) == 2.0 * kth_root(t, i));
      CHECK(kth_root(t, i) == doctest::Approx(std::pow(t, 1.0 / i)).epsilon(1e-14));
    }
  }
  CHECK(kth_root(0.0, 3) == 0.0);
  CHECK(kth_root(8.0, 3) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("scaled layer norms: exact dyadic scaling") {
  Rng rng(11);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> v = rng.uniform_vec(5, -3.0, 3.0);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::ldexp(v[i], 7);
    CHECK(scaled_euclidean_norm(w) == std::ldexp(scaled_euclidean_norm(v), 7));
    CHECK(scaled_sup_norm(w) == std::ldexp(scaled_sup_norm(v), 7));
    CHECK(scaled_pnorm(w, 1.0) == std::ldexp(scaled_pnorm(v, 1.0), 7));
    CHECK(scaled_pnorm(w, 3.5) == std::ldexp(scaled_pnorm(v, 3.5), 7));
  }
}

TEST_CASE("norm: Heisenberg examples") {
  const auto& h = make_heisenberg();
  CHECK(h.norm.value(std::vector<double>{1.0, 0.0, 0.0}) == 1.0);
  CHECK(h.norm.value(std::vector<double>{0.0, 0.0, 4.0}) == 2.0);
  CHECK(h.norm.value(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(h.norm.value(std::vector<double>{1.0, 1.0, 1.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("norm: homogeneity, bit-exact for dyadic r, 1e-12 for general r") {
  for (const GroupBundle* g : {&make_heisenberg(), &make_engel()}) {
    Rng rng(13, g->name);
    const auto hw = ball_box_halfwidths(g->norm, 2.0);
    for (int k = 0; k < 500; ++k) {
      std::vector<double> x(g->dim());
      for (int t = 0; t < g->dim(); ++t) x[t] = rng.uniform(-hw[t], hw[t]);
      // r = 2^m exactly
      const auto x8 = dilate<double>(g->gradation(), 8.0, x);
      CHECK(g->norm.value(x8) == 8.0 * g->norm.value(x));
      // general r within float tolerance
      const double r = std::exp(rng.uniform(-2.0, 2.0));
      const auto xr = dilate<double>(g->gradation(), r, x);
      CHECK(g->norm.value(xr) ==
            doctest::Approx(r * g->norm.value(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("norm: inverse symmetry is bit-exact") {
  const auto& e = make_engel();
  Rng rng(17);
  for (int k = 0; k < 500; ++k) {
    const auto x = rng.uniform_vec(4, -5.0, 5.0);
    CHECK(e.norm.value(inverse<double>(x)) == e.norm.value(x));
  }
}

TEST_CASE("distance: examples and laws") {
  const auto& h = make_heisenberg();
  const std::vector<double> x{0.3, -1.2, 0.7};
  CHECK(distance(h.sc, h.norm, x, x) == 0.0);

  const std::vector<double> zero(3, 0.0);
  const std::vector<double> p{1.0, 1.0, 1.0};
  CHECK(distance(h.sc, h.norm, zero, p) == doctest::Approx(std::sqrt(2.0)));

  Rng rng(19);
  for (int k = 0; k < 200; ++k) {
    const auto a = rng.uniform_vec(3, -2.0, 2.0);
    const auto b = rng.uniform_vec(3, -2.0, 2.0);
    const double r = std::exp(rng.uniform(-1.5, 1.5));
    const auto da = dilate<double>(h.gradation(), r, a);
    const auto db = dilate<double>(h.gradation(), r, b);
    CHECK(distance(h.sc, h.norm, da, db) ==
          doctest::Approx(r * distance(h.sc, h.norm, a, b)).epsilon(1e-12));
  }
}

TEST_CASE("distance: left invariance exact in the rational backend") {
  const auto& e = make_engel();
  Rng rng(23);
  for (int k = 0; k < 200; ++k) {
    const auto x = rng.rational_vec(4);
    const auto y = rng.rational_vec(4);
    const auto z = rng.rational_vec(4);
    const auto zx = multiply<Rat>(e.sc, z, x);
    const auto zy = multiply<Rat>(e.sc, z, y);
    // x^{-1} z^{-1} z y collapses exactly over the rationals, so the float
    // norm sees identical coordinates.
    CHECK(distance(e.sc, e.norm, zx, zy) == distance(e.sc, e.norm, x, y));
  }
}

TEST_CASE("calibration: abelian needs no search") {
  const auto a = make_abelian(3);
  CHECK(a.norm.sigmas() == std::vector<double>{1.0});
  CHECK(a.norm.certificate.passed);
}

TEST_CASE("calibration: Heisenberg sigma = (1,1) passes a 1e4 defect search") {
  const auto& h = make_heisenberg();
  const double defect = triangle_defect_search(h.sc, h.norm, 10000, 16, 99);
  CHECK(defect <= kNormTol);
}

TEST_CASE("calibration: Engel sigmas pass and sigma2 = sqrt(2)") {
  const auto& e = make_engel();
  CHECK(e.norm.sigmas()[0] == 1.0);
  CHECK(e.norm.sigmas()[1] == doctest::Approx(std::sqrt(2.0)));
  CHECK(e.norm.certificate.passed);
  const double defect = triangle_defect_search(e.sc, e.norm, 10000, 16, 101);
  CHECK(defect <= kNormTol);
}

TEST_CASE("sample_ball: membership, determinism, abelian symmetry") {
  const auto& h = make_heisenberg();
  const std::vector<double> center{0.5, -0.25, 1.0};
  const auto pts = sample_ball(h.sc, h.norm, center, 0.8, 500, 424242);
  for (const auto& p : pts) {
    CHECK(distance(h.sc, h.norm, center, p) <= 0.8 + 1e-12);
  }
  const auto again = sample_ball(h.sc, h.norm, center, 0.8, 500, 424242);
  CHECK(pts == again);

  const auto ab = make_abelian(2);
  const std::size_t count = 20000;
  const auto cloud = sample_ball(ab.sc, ab.norm, std::vector<double>{0.0, 0.0}, 1.0, count, 7);
  double mx = 0.0, my = 0.0;
  for (const auto& p : cloud) {
    mx += p[0];
    my += p[1];
  }
  mx /= count;
  my /= count;
  CHECK(std::fabs(mx) < 3.0 / std::sqrt(static_cast<double>(count)));
  CHECK(std::fabs(my) < 3.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("sample_ball: Heisenberg acceptance rate matches a grid volume oracle within 2%") {
  const auto& h = make_heisenberg();
  // Grid oracle for the Lebesgue volume of the unit ball (cylinder for the
  // section 2.3 norm: area pi disk times height 2).
  const auto hw = ball_box_halfwidths(h.norm, 1.0);
  const int grid = 160;
  std::int64_t inside = 0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int k = 0; k < grid; ++k) {
        const std::vector<double> p{hw[0] * (2.0 * (i + 0.5) / grid - 1.0),
                                    hw[1] * (2.0 * (j + 0.5) / grid - 1.0),
                                    hw[2] * (2.0 * (k + 0.5) / grid - 1.0)};
        if (h.norm.value(p) <= 1.0) ++inside;
      }
  const double box_vol = 8.0 * hw[0] * hw[1] * hw[2];
  const double grid_vol = box_vol * static_cast<double>(inside) / (1.0 * grid * grid * grid);
  CHECK(grid_vol == doctest::Approx(2.0 * M_PI).epsilon(0.01));

  // Acceptance rate of rejection sampling vs the oracle volume fraction.
  Rng rng(31);
  const std::size_t trials = 200000;
  std::size_t accept = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> p(3);
    for (int c = 0; c < 3; ++c) p[c] = rng.uniform(-hw[c], hw[c]);
    if (h.norm.value(p) <= 1.0) ++accept;
  }
  const double rate = static_cast<double>(accept) / trials;
  CHECK(rate == doctest::Approx(grid_vol / box_vol).epsilon(0.02));
}

TEST_CASE("sphere_mesh: unit norms with inverse pairs") {
  const auto& e = make_engel();
  const auto mesh = sphere_mesh(e.sc, e.norm, 40, 5);
  REQUIRE(mesh.size() >= 80);
  REQUIRE(mesh.size() % 2 == 0);
  for (std::size_t i = 0; i < mesh.size(); i += 2) {
    CHECK(e.norm.value(mesh[i]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mesh[i + 1] == inverse<double>(mesh[i]));
  }
}
