#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carnot/catalog.hpp"
#include "carnot/rng.hpp"
#include "carnot/structure_constants.hpp"

using namespace carnot;

namespace {

std::vector<Rat> basis_vec(int n, int a) {
  std::vector<Rat> v(n, Rat(0));
  v[a] = 1;
  return v;
}

}  // namespace

TEST_CASE("validate: Heisenberg constants pass") {
  const auto& h = make_heisenberg();
  const auto rep = h.sc.validate();
  CHECK(rep.passed());
  CHECK(rep.triples_checked == 1);
}

TEST_CASE("validate: abelian R^3 passes") {
  Gradation g({3});
  StructureConstants sc(g, {});
  CHECK(sc.validate().passed());
}

TEST_CASE("validate: Engel constants stored without skew partner fail with witness") {
  Gradation g({2, 1, 1});
  // Deliberately no skew completion: only [e11,e12] = e3 stored.
  StructureConstants sc(g, {{0, 1, {{2, Rat(1)}}}});
  const auto rep = sc.validate();
  REQUIRE_FALSE(rep.passed());
  bool found = false;
  for (const auto& v : rep.violations) {
    if (v.kind == Violation::Kind::Skew && v.witness[0] == 0 && v.witness[1] == 1) found = true;
  }
  CHECK(found);
}

TEST_CASE("validate: gradation violation is reported") {
  Gradation g({2, 1});
  // [e1, e3] would have to live in layer 3, which does not exist.
  StructureConstants sc(g, {{0, 2, {{1, Rat(1)}}}, {2, 0, {{1, Rat(-1)}}}});
  const auto rep = sc.validate();
  REQUIRE_FALSE(rep.passed());
  CHECK(rep.violations.front().kind == Violation::Kind::Gradation);
}

TEST_CASE("structural error: malformed index is thrown, not reported") {
  Gradation g({2, 1});
  CHECK_THROWS_AS(StructureConstants(g, {{0, 7, {{2, Rat(1)}}}}), StructuralError);
  CHECK_THROWS_AS(StructureConstants(g, {{0, 1, {{9, Rat(1)}}}}), StructuralError);
}

TEST_CASE("bracket: Heisenberg [e1,e2] = 2 e3") {
  const auto& h = make_heisenberg();
  const auto b = bracket<Rat>(h.sc, basis_vec(3, 0), basis_vec(3, 1));
  CHECK(b == std::vector<Rat>{Rat(0), Rat(0), Rat(2)});
}

TEST_CASE("bracket: Engel [e11,e3] = e4 and skew partner") {
  const auto& e = make_engel();
  CHECK(bracket<Rat>(e.sc, basis_vec(4, 0), basis_vec(4, 2)) ==
        std::vector<Rat>{Rat(0), Rat(0), Rat(0), Rat(1)});
  CHECK(bracket<Rat>(e.sc, basis_vec(4, 2), basis_vec(4, 0)) ==
        std::vector<Rat>{Rat(0), Rat(0), Rat(0), Rat(-1)});
}

TEST_CASE("bracket: [x,x] = 0 and skew-symmetry on 500 random rational pairs per group") {
  for (const GroupBundle* g : {&make_heisenberg(), &make_engel()}) {
    Rng rng(17, g->name);
    const int n = g->dim();
    for (int k = 0; k < 500; ++k) {
      const auto x = rng.rational_vec(n);
      const auto y = rng.rational_vec(n);
      const auto xx = bracket<Rat>(g->sc, x, x);
      for (const auto& c : xx) CHECK(c == 0);
      const auto xy = bracket<Rat>(g->sc, x, y);
      const auto yx = bracket<Rat>(g->sc, y, x);
      for (int t = 0; t < n; ++t) CHECK(xy[t] == -yx[t]);
    }
  }
}

TEST_CASE("nested_bracket: [x,x,y] = 0, word of length one, empty word") {
  const auto& h = make_heisenberg();
  Rng rng(3);
  const auto x = rng.rational_vec(3);
  const auto y = rng.rational_vec(3);
  const auto z = nested_bracket<Rat>(h.sc, {x, x, y});
  for (const auto& c : z) CHECK(c == 0);
  CHECK(nested_bracket<Rat>(h.sc, {x}) == x);
  CHECK_THROWS_AS(nested_bracket<Rat>(h.sc, {}), StructuralError);
}

TEST_CASE("nested_bracket: Heisenberg [e1,e2,e1] = 0 (center)") {
  const auto& h = make_heisenberg();
  const auto z = nested_bracket<Rat>(h.sc, {basis_vec(3, 0), basis_vec(3, 1), basis_vec(3, 0)});
  for (const auto& c : z) CHECK(c == 0);
}

TEST_CASE("nested_bracket: Engel [e11,e12,e11] = -e4") {
  const auto& e = make_engel();
  const auto z = nested_bracket<Rat>(e.sc, {basis_vec(4, 0), basis_vec(4, 1), basis_vec(4, 0)});
  CHECK(z == std::vector<Rat>{Rat(0), Rat(0), Rat(0), Rat(-1)});
}

TEST_CASE("nilpotency: words longer than the step vanish") {
  for (const GroupBundle* g : {&make_heisenberg(), &make_engel()}) {
    Rng rng(23, g->name);
    const int n = g->dim();
    std::vector<std::vector<Rat>> word;
    for (int i = 0; i < g->step() + 1; ++i) word.push_back(rng.rational_vec(n));
    const auto z = nested_bracket<Rat>(g->sc, word);
    for (const auto& c : z) CHECK(c == 0);
  }
}

TEST_CASE("project_layer: examples and direct-sum reassembly") {
  const auto& h = make_heisenberg();
  const std::vector<Rat> x{Rat(1), Rat(2), Rat(3)};
  CHECK(project_layer<Rat>(h.gradation(), x, 1) == std::vector<Rat>{Rat(1), Rat(2), Rat(0)});

  const std::vector<Rat> l1{Rat(5), Rat(-7), Rat(0)};
  const auto p2 = project_layer<Rat>(h.gradation(), l1, 2);
  for (const auto& c : p2) CHECK(c == 0);

  CHECK_THROWS_AS(project_layer<Rat>(h.gradation(), x, 3), std::out_of_range);

  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto v = rng.rational_vec(3);
    std::vector<Rat> sum(3, Rat(0));
    for (int j = 1; j <= 2; ++j) {
      const auto pj = project_layer<Rat>(h.gradation(), v, j);
      for (int t = 0; t < 3; ++t) sum[t] += pj[t];
    }
    CHECK(sum == v);
  }
}

TEST_CASE("gradation bookkeeping") {
  Gradation g({2, 1, 1});
  CHECK(g.step() == 3);
  CHECK(g.total_dim() == 4);
  CHECK(g.homogeneous_dim() == 7);  // 1*2 + 2*1 + 3*1
  CHECK(g.locate(3) == std::pair<int, int>{3, 0});
  CHECK(g.flat_index(2, 0) == 2);
  CHECK_THROWS_AS(g.locate(4), std::out_of_range);
  CHECK_THROWS_AS(Gradation(std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(Gradation(std::vector<int>{2, 0}), std::invalid_argument);
}
