#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crgeo/forms.hpp"

using namespace crgeo;

namespace {

CoframeForm1 random_coframe_form(const AdmissibleCoframe& co, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CoframeForm1 w = coframe_form1(co.n, co.chart->ctx);
  for (auto& e : w.c) {
    for (int i = 0; i < std::min(co.chart->ctx->size(), 20); ++i)
      e.raw(i) = Complex(u(rng), u(rng));
  }
  return w;
}

IndexedTensor random_pair_symmetric(int n, const ContextPtr& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  IndexedTensor T = IndexedTensor::make(
      {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()}, {n, n, n, n}, ctx,
      ctx->order());
  // sums of A_{am} B_{bn} with A, B symmetric keep both pair symmetries
  for (int term = 0; term < 3; ++term) {
    std::vector<std::vector<Complex>> A(n, std::vector<Complex>(n)), B = A;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        A[i][j] = A[j][i] = Complex(u(rng), u(rng));
        B[i][j] = B[j][i] = Complex(u(rng), u(rng));
      }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int m = 0; m < n; ++m)
          for (int nu = 0; nu < n; ++nu)
            T.at({a, b, m, nu}) += Jet::constant(ctx, A[a][m] * B[b][nu]);
  }
  return T;
}

}  // namespace

TEST_CASE("exterior derivative squares to zero") {
  AdmissibleCoframe co = build_admissible_coframe(perturbed_sphere_surface(), 6);
  const ContextPtr& ctx = co.chart->ctx;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Jet f(ctx, ctx->order());
  for (int i = 0; i < std::min(ctx->size(), 40); ++i) f.raw(i) = Complex(u(rng), u(rng));
  CoframeForm1 df = exterior_derivative(f, co);
  CoframeForm2 ddf = exterior_derivative(df, co);
  CHECK(max_abs(ddf) < 1e-9);
}

TEST_CASE("exterior derivative is an antiderivation") {
  AdmissibleCoframe co = build_admissible_coframe(sphere_surface(2), 6);
  const ContextPtr& ctx = co.chart->ctx;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Jet f(ctx, ctx->order());
  for (int i = 0; i < std::min(ctx->size(), 30); ++i) f.raw(i) = Complex(u(rng), u(rng));
  CoframeForm1 alpha = random_coframe_form(co, rng);
  CoframeForm2 lhs = exterior_derivative(f * alpha, co);
  CoframeForm2 rhs = wedge(exterior_derivative(f, co), alpha) +
                     f * exterior_derivative(alpha, co);
  CHECK(max_abs(lhs - rhs) < 1e-9);
}

TEST_CASE("coframe conversion roundtrip and wedge") {
  AdmissibleCoframe co = build_admissible_coframe(sphere_surface(2), 6);
  std::mt19937 rng(11);
  CoframeForm1 a = random_coframe_form(co, rng), b = random_coframe_form(co, rng);

  CoframeForm1 rt = to_coframe(to_chart(a, co), co);
  double dev = 0.0;
  for (size_t i = 0; i < a.c.size(); ++i)
    dev = std::max(dev, jet_distance(rt.c[i].truncated(3), a.c[i].truncated(3)));
  CHECK(dev < 1e-10);

  CoframeForm2 direct = wedge(a, b);
  CoframeForm2 viachart = to_coframe(wedge(to_chart(a, co), to_chart(b, co)), co);
  double wdev = 0.0;
  for (size_t i = 0; i < direct.c.size(); ++i)
    wdev = std::max(wdev, jet_distance(direct.c[i].truncated(3), viachart.c[i].truncated(3)));
  CHECK(wdev < 1e-9);

  CoframeForm1 cc = conj_coframe(a);
  ChartForm1 lhs = to_chart(cc, co);
  ChartForm1 rhs = conj_form(to_chart(a, co));
  double cdev = 0.0;
  for (size_t i = 0; i < lhs.comp.size(); ++i)
    cdev = std::max(cdev, jet_distance(lhs.comp[i].truncated(3), rhs.comp[i].truncated(3)));
  CHECK(cdev < 1e-10);
}

TEST_CASE("traceless projection") {
  auto ctx = get_context(1, 0);
  std::mt19937 rng(2024);
  const int n = 3;
  IndexedTensor T = random_pair_symmetric(n, ctx, rng);
  IndexedTensor S = traceless_project(T);

  // trace-free in the first pair
  double tr = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Complex acc = 0.0;
      for (int m = 0; m < n; ++m) acc += S.at({m, m, a, b}).value();
      tr = std::max(tr, std::abs(acc));
    }
  CHECK(tr < 1e-9);

  // idempotent
  IndexedTensor S2 = traceless_project(S);
  double dev = 0.0;
  for (size_t i = 0; i < S.data.size(); ++i)
    dev = std::max(dev, jet_distance(S.data[i], S2.data[i]));
  CHECK(dev < 1e-12);

  // linear
  IndexedTensor T2 = random_pair_symmetric(n, ctx, rng);
  IndexedTensor sum = T;
  for (size_t i = 0; i < sum.data.size(); ++i)
    sum.data[i] += T2.data[i] * Complex(2.0);
  IndexedTensor Psum = traceless_project(sum);
  IndexedTensor P2 = traceless_project(T2);
  double ldev = 0.0;
  for (size_t i = 0; i < sum.data.size(); ++i)
    ldev = std::max(ldev,
                    jet_distance(Psum.data[i], S.data[i] + P2.data[i] * Complex(2.0)));
  CHECK(ldev < 1e-11);

  // kills the conformally flat pattern
  std::vector<std::vector<Jet>> H(n, std::vector<Jet>(n, Jet(ctx, 0)));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Complex v(u(rng), a == b ? 0.0 : u(rng));
      H[a][b] = Jet::constant(ctx, v);
      H[b][a] = Jet::constant(ctx, std::conj(v));
    }
  IndexedTensor flat = conformal_flat_pattern(H);
  CHECK(traceless_project(flat).norm_jets() < 1e-12);
}

TEST_CASE("conformally flat decomposition recovers the factor") {
  auto ctx = get_context(1, 0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 2;
  std::vector<std::vector<Jet>> H0(n, std::vector<Jet>(n, Jet(ctx, 0)));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Complex v(u(rng), a == b ? 0.0 : u(rng));
      H0[a][b] = Jet::constant(ctx, v);
      H0[b][a] = Jet::constant(ctx, std::conj(v));
    }
  FlatDecomposition d = conformal_flat_decompose(conformal_flat_pattern(H0));
  CHECK(d.residual < 1e-12);
  double dev = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) dev = std::max(dev, jet_distance(d.H[a][b], H0[a][b]));
  CHECK(dev < 1e-12);
}
