#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "carnot/catalog.hpp"
#include "carnot/rng.hpp"

using namespace carnot;

TEST_CASE("heisenberg: gradation (2,1), Q = 4, algebra validates") {
  const auto& h = make_heisenberg();
  CHECK(h.gradation().layer_dims() == std::vector<int>{2, 1});
  CHECK(h.homogeneous_dim() == 4);
  CHECK(h.sc.validate().passed());
}

TEST_CASE("heisenberg: BCH multiply equals the closed form on 1000 random rational pairs") {
  const auto& h = make_heisenberg();
  Rng rng(61);
  for (int k = 0; k < 1000; ++k) {
    const auto x = rng.rational_vec(3);
    const auto y = rng.rational_vec(3);
    CHECK(multiply<Rat>(h.sc, x, y) == heisenberg_closed_product<Rat>(x, y));
  }
}

TEST_CASE("engel: Q = 7, Jacobi passes exhaustively") {
  const auto& e = make_engel();
  CHECK(e.homogeneous_dim() == 7);
  const auto rep = e.sc.validate();
  CHECK(rep.passed());
  CHECK(rep.triples_checked == 4);
}

TEST_CASE("two-step: beta [[0,2],[-2,0]] reproduces Heisenberg exactly") {
  TwoStepSpec spec;
  spec.dim_x = 2;
  spec.dim_t = 1;
  spec.betas = {{{Rat(0), Rat(2)}, {Rat(-2), Rat(0)}}};
  const auto g = make_two_step(spec);
  const auto& h = make_heisenberg();
  CHECK(g.sc == h.sc);
  CHECK(g.norm.sigmas()[1] == 1.0);  // sqrt(2/c) with c = 2, exactly
  Rng rng(67);
  for (int k = 0; k < 100; ++k) {
    const auto x = rng.rational_vec(3);
    const auto y = rng.rational_vec(3);
    CHECK(multiply<Rat>(g.sc, x, y) == multiply<Rat>(h.sc, x, y));
  }
}

TEST_CASE("two-step: beta = 0 gives the abelian product group") {
  TwoStepSpec spec;
  spec.dim_x = 3;
  spec.dim_t = 2;
  spec.betas.assign(2, std::vector<std::vector<Rat>>(3, std::vector<Rat>(3, Rat(0))));
  const auto g = make_two_step(spec);
  Rng rng(71);
  for (int k = 0; k < 50; ++k) {
    const auto x = rng.rational_vec(5);
    const auto y = rng.rational_vec(5);
    const auto p2 = dynkin_polynomial<Rat>(g.sc, 2, x, y);
    for (const auto& v : p2) CHECK(v == 0);
    std::vector<Rat> sum(5);
    for (int t = 0; t < 5; ++t) sum[t] = x[t] + y[t];
    CHECK(multiply<Rat>(g.sc, x, y) == sum);
  }
}

TEST_CASE("two-step: non-skew beta refused") {
  TwoStepSpec spec;
  spec.dim_x = 2;
  spec.dim_t = 1;
  spec.betas = {{{Rat(0), Rat(1)}, {Rat(1), Rat(0)}}};
  CHECK_THROWS_AS(make_two_step(spec), std::invalid_argument);
}

TEST_CASE("two-step: random skew beta accepts sigma2 = sqrt(2/c)") {
  Rng rng(73);
  TwoStepSpec spec;
  spec.dim_x = 4;
  spec.dim_t = 2;
  spec.betas.assign(2, std::vector<std::vector<Rat>>(4, std::vector<Rat>(4, Rat(0))));
  for (int r = 0; r < 2; ++r)
    for (int u = 0; u < 4; ++u)
      for (int v = u + 1; v < 4; ++v) {
        const Rat c = rng.rational(3, 2);
        spec.betas[r][u][v] = c;
        spec.betas[r][v][u] = -c;
      }
  const auto g = make_two_step(spec);
  CHECK(g.norm.certificate.passed);
  CHECK(g.sc.validate().passed());
}

TEST_CASE("h-product: per-copy Heisenberg product and the section 2.2 bound") {
  const int K = 3;
  const auto g = make_h_product(K);
  CHECK(g.gradation().layer_dims() == std::vector<int>{2 * K, K});
  CHECK(g.norm.sigmas()[1] == 1.0);
  CHECK(g.sc.validate().passed());

  Rng rng(79);
  const auto& h = make_heisenberg();
  for (int k = 0; k < 100; ++k) {
    const auto x = rng.rational_vec(3 * K);
    const auto y = rng.rational_vec(3 * K);
    const auto p = multiply<Rat>(g.sc, x, y);
    for (int j = 0; j < K; ++j) {
      const std::vector<Rat> xj{x[j], x[K + j], x[2 * K + j]};
      const std::vector<Rat> yj{y[j], y[K + j], y[2 * K + j]};
      const auto pj = heisenberg_closed_product<Rat>(xj, yj);
      CHECK(p[j] == pj[0]);
      CHECK(p[K + j] == pj[1]);
      CHECK(p[2 * K + j] == pj[2]);
    }
  }

  // |beta(x,y)|_1 <= |x|_2 |y|_2 for the group-law form (half the bracket).
  for (int k = 0; k < 2000; ++k) {
    const auto x = rng.uniform_vec(3 * K, -2.0, 2.0);
    const auto y = rng.uniform_vec(3 * K, -2.0, 2.0);
    const auto br = bracket<double>(g.sc, x, y);
    double l1 = 0.0;
    for (int j = 0; j < K; ++j) l1 += std::fabs(br[2 * K + j] / 2.0);
    double nx = 0.0, ny = 0.0;
    for (int t = 0; t < 2 * K; ++t) {
      nx += x[t] * x[t];
      ny += y[t] * y[t];
    }
    CHECK(l1 <= std::sqrt(nx) * std::sqrt(ny) * (1.0 + 1e-12));
  }
}

TEST_CASE("graded product: K = 1 reproduces the base structure constants") {
  const auto& e = make_engel();
  const auto g = make_graded_product(e, 1, {Rat(2), Rat(2), Rat(2)});
  CHECK(g.sc == e.sc);
}

TEST_CASE("graded product: Engel K = 3 with p = (2,2,p3) accepted and valid") {
  const auto& e = make_engel();
  for (const Rat& p3 : {Rat(1), Rat(2), Rat(7, 2)}) {
    const auto g = make_graded_product(e, 3, {Rat(2), Rat(2), p3});
    CHECK(g.dim() == 12);
    CHECK(g.homogeneous_dim() == 21);
    CHECK(g.sc.validate().passed());
    CHECK(g.norm.certificate.passed);
  }
}

TEST_CASE("graded product: violating p_(i+j) >= max(p_i,p_j)/2 is refused with the pair") {
  const auto& e = make_engel();
  // p2 = p1/2 - eps violates (i,j) = (1,1).
  try {
    make_graded_product(e, 2, {Rat(4), Rat(15, 8), Rat(2)});
    FAIL("expected PijViolation");
  } catch (const PijViolation& v) {
    CHECK(v.i == 1);
    CHECK(v.j == 1);
  }
}

TEST_CASE("graded product: measured bracket ratio stays below the derived constant") {
  const auto& e = make_engel();
  const auto g = make_graded_product(e, 3, {Rat(2), Rat(2), Rat(2)});
  REQUIRE(g.bracket_bound_total > 0.0);
  const double measured = measure_bracket_ratio(g, 10000, 83);
  CHECK(measured <= g.bracket_bound_total);
  CHECK(measured > 0.0);
}

TEST_CASE("catalog names resolve") {
  CHECK(make_from_name("heisenberg").has_value());
  CHECK(make_from_name("engel").has_value());
  CHECK(make_from_name("abelian:2").has_value());
  CHECK(make_from_name("abelian:2:sup").has_value());
  CHECK(make_from_name("h-product:4").has_value());
  CHECK(make_from_name("graded-product:engel:3:2,2,2").has_value());
  CHECK_FALSE(make_from_name("no-such-group").has_value());
  const auto ab = make_from_name("abelian:3:p3/2");
  REQUIRE(ab.has_value());
  CHECK(ab->norm.layer_norms()[0].kind == LayerNormKind::Pnorm);
}
