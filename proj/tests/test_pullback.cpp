#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "crgeo/map_pullback.hpp"

using namespace crgeo;

namespace {

Jet random_real_jet(const ContextPtr& ctx, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Jet j(ctx, ctx->order());
  for (int i = 0; i < ctx->size(); ++i) j.raw(i) = Complex(u(rng), 0.0);
  return j;
}

PolynomialSpec mono(int nvars, std::vector<int> z_exps, Complex coeff = 1.0) {
  PolynomialSpec p;
  p.num_complex_vars = nvars;
  p.monomials.push_back({coeff, std::move(z_exps), std::vector<int>(nvars, 0)});
  return p;
}

std::vector<PolynomialSpec> whitney_components(int n) {
  std::vector<PolynomialSpec> comps;
  for (int k = 0; k < n; ++k) {
    std::vector<int> e(n + 1, 0);
    e[k] = 1;
    comps.push_back(mono(n + 1, e));
  }
  for (int k = 0; k < n; ++k) {
    std::vector<int> e(n + 1, 0);
    e[k] = 1;
    e[n] = 1;
    comps.push_back(mono(n + 1, e));
  }
  std::vector<int> e(n + 1, 0);
  e[n] = 2;
  comps.push_back(mono(n + 1, e));
  return comps;
}

}  // namespace

TEST_CASE("compose table reproduces a hand-built composition") {
  auto cin = get_context(2, 3);
  auto cout = get_context(2, 3);

  // g = x0^2 + 2 x1
  Jet g(cin, 3);
  g.raw(cin->index_of({2, 0})) = 1.0;
  g.raw(cin->index_of({0, 1})) = 2.0;

  // x0 = y0 + y1^2, x1 = y1
  Jet a0 = Jet::variable(cout, 0);
  a0.raw(cout->index_of({0, 2})) += 1.0;
  Jet a1 = Jet::variable(cout, 1);

  ComposeTable t = build_compose_table(cin, {a0, a1});
  Jet got = t.apply(g);

  // expected: y0^2 + 2 y0 y1^2 + 2 y1, with y1^4 beyond order 3
  Jet want(cout, 3);
  want.raw(cout->index_of({2, 0})) = 1.0;
  want.raw(cout->index_of({1, 2})) = 2.0;
  want.raw(cout->index_of({0, 1})) = 2.0;
  CHECK((got - want).max_abs() < 1e-14);

  // lowering the trusted order of g truncates the result accordingly
  Jet got2 = t.apply(g.truncated(2));
  CHECK(got2.trusted() == 2);
  CHECK(std::abs(got2.raw(cout->index_of({1, 2}))) == 0.0);

  // arguments must vanish at the base point
  Jet bad = a1;
  bad += Complex(0.5);
  CHECK_THROWS(build_compose_table(cin, {a0, bad}));
}

TEST_CASE("linear sphere-to-sphere transition round-trips") {
  auto src = std::make_shared<Chart>(build_chart(sphere_surface(2), 4));
  HypersurfaceSpec tgt_hs;
  tgt_hs.n = 3;
  tgt_hs.rho = rho_sphere(4);
  tgt_hs.base = {0.0, 0.0, 1.0, 0.0};
  auto tgt = std::make_shared<Chart>(build_chart(tgt_hs, 4));

  std::vector<PolynomialSpec> comps;
  comps.push_back(mono(3, {1, 0, 0}));
  comps.push_back(mono(3, {0, 1, 0}));
  comps.push_back(mono(3, {0, 0, 1}));
  PolynomialSpec zero;
  zero.num_complex_vars = 3;
  comps.push_back(zero);

  ChartTransition t = build_chart_transition(src, tgt, comps);
  CHECK(t.transition_residual < 1e-10);
  CHECK(t.section_residual < 1e-9);

  Jet g = random_real_jet(src->ctx, 7);
  CHECK((t.pull(t.extend(g)) - g).max_abs() < 1e-9);

  // pullback commutes with d
  Jet gh = random_real_jet(tgt->ctx, 11);
  ChartForm1 lhs = t.pull_back(d_chart(gh));
  ChartForm1 rhs = d_chart(t.pull(gh));
  for (size_t j = 0; j < lhs.comp.size(); ++j)
    CHECK((lhs.comp[j] - rhs.comp[j]).max_abs() < 1e-9);
}

TEST_CASE("whitney transition restricts ambient coordinates consistently") {
  const double s = 1.0 / std::sqrt(2.0);
  HypersurfaceSpec src_hs = sphere_surface(2);
  src_hs.base = {s, 0.0, s};
  auto src = std::make_shared<Chart>(build_chart(src_hs, 4));

  HypersurfaceSpec tgt_hs;
  tgt_hs.n = 4;
  tgt_hs.rho = rho_sphere(5);
  tgt_hs.base = {s, 0.0, 0.5, 0.0, 0.5};
  auto tgt = std::make_shared<Chart>(build_chart(tgt_hs, 4));

  auto comps = whitney_components(2);
  ChartTransition t = build_chart_transition(src, tgt, comps);
  CHECK(t.transition_residual < 1e-9);
  CHECK(t.section_residual < 1e-8);

  // pulled target coordinates must agree with the ambient map on the source
  for (int k = 0; k < 5; ++k) {
    Jet direct = poly_eval_to_jet(comps[k], src->graph.slots);
    CHECK((t.pull(tgt->emb[k]) - direct).max_abs() < 1e-9);
  }

  Jet g = random_real_jet(src->ctx, 3);
  CHECK((t.pull(t.extend(g)) - g).max_abs() < 1e-8);
}
