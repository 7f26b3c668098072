#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "crgeo/immersion.hpp"

using namespace crgeo;

namespace {

PolynomialSpec mono(int nvars, std::vector<int> z_exps, Complex coeff = 1.0) {
  PolynomialSpec p;
  p.num_complex_vars = nvars;
  p.monomials.push_back({coeff, std::move(z_exps), std::vector<int>(nvars, 0)});
  return p;
}

PolynomialSpec zero_poly(int nvars) {
  PolynomialSpec p;
  p.num_complex_vars = nvars;
  return p;
}

// z -> (z, 0, ..., 0), a totally geodesic sphere inside a larger sphere
CRMapSpec linear_embedding_map(int n, int d) {
  CRMapSpec s;
  s.source = sphere_surface(n);
  s.target.n = n + d;
  s.target.rho = rho_sphere(n + d + 1);
  s.target.base.assign(n + d + 1, 0.0);
  s.target.base[n] = 1.0;
  for (int k = 0; k <= n; ++k) {
    std::vector<int> e(n + 1, 0);
    e[k] = 1;
    s.components.push_back(mono(n + 1, e));
  }
  for (int k = 0; k < d; ++k) s.components.push_back(zero_poly(n + 1));
  return s;
}

// (z, w) -> (z, z w, w^2), doubling the CR dimension; base away from the axis
CRMapSpec whitney_map(int n) {
  CRMapSpec s;
  const double r = 1.0 / std::sqrt(2.0);
  s.source = sphere_surface(n);
  s.source.base.assign(n + 1, 0.0);
  s.source.base[0] = r;
  s.source.base[n] = r;
  s.target.n = 2 * n;
  s.target.rho = rho_sphere(2 * n + 1);
  s.target.base.assign(2 * n + 1, 0.0);
  s.target.base[0] = r;
  s.target.base[n] = 0.5;
  s.target.base[2 * n] = 0.5;
  for (int k = 0; k < n; ++k) {
    std::vector<int> e(n + 1, 0);
    e[k] = 1;
    s.components.push_back(mono(n + 1, e));
  }
  for (int k = 0; k < n; ++k) {
    std::vector<int> e(n + 1, 0);
    e[k] = 1;
    e[n] = 1;
    s.components.push_back(mono(n + 1, e));
  }
  std::vector<int> e(n + 1, 0);
  e[n] = 2;
  s.components.push_back(mono(n + 1, e));
  return s;
}

// great-sphere section: the last coordinate split isometrically over two
// target slots, so the image is a tilted totally geodesic S^5 in S^7
CRMapSpec tilted_section_map() {
  CRMapSpec s;
  const double r = 1.0 / std::sqrt(2.0);
  s.source = sphere_surface(2);
  s.target.n = 3;
  s.target.rho = rho_sphere(4);
  s.target.base = {0.0, 0.0, r, r};
  s.components.push_back(mono(3, {1, 0, 0}));
  s.components.push_back(mono(3, {0, 1, 0}));
  s.components.push_back(mono(3, {0, 0, 1}, r));
  s.components.push_back(mono(3, {0, 0, 1}, r));
  return s;
}

struct Pipeline {
  ImmersionGeometry G;
  AdaptedFrameData ad;
  SffData sff;
  TransportedTarget tt;
  CodazziReport cod;
  GaussReport gauss;
  InducedReport ind;
};

Pipeline run_pipeline(const CRMapSpec& spec, int order, int deriv_order,
                      AdmissibleCoframe* co_src = nullptr,
                      AdmissibleCoframe* co_tgt = nullptr) {
  Pipeline p;
  p.G = (co_src && co_tgt) ? build_immersion_geometry(spec, *co_src, *co_tgt)
                           : build_immersion_geometry(spec, order);
  p.ad = adapt_target_frame(p.G);
  p.sff = second_fundamental_form(p.G, p.ad);
  sff_covariant_derivatives(p.sff, p.ad, deriv_order);
  p.tt = transport_target(p.G, p.ad);
  p.cod = codazzi_check(p.sff, p.tt);
  p.gauss = gauss_residuals(p.G, p.ad, p.sff, p.tt);
  p.ind = induced_connection_coefficients(p.G, p.ad, p.sff, p.cod, p.tt);
  return p;
}

void check_frame_certificates(const Pipeline& p) {
  CHECK(p.G.containment_residual < 1e-10);
  CHECK(p.ad.theta_residual < 1e-9);
  CHECK(p.ad.cr_offslot < 1e-9);
  CHECK(p.ad.reeb_defect_after < 1e-9);
  CHECK(p.ad.unitary_residual < 1e-10);
  CHECK(p.ad.adapted_tangent_residual < 1e-9);
  CHECK(p.ad.adapted_normal_residual < 1e-9);
  CHECK(p.ad.tangential_connection_residual < 1e-8);
  CHECK(p.ad.tangential_torsion_residual < 1e-8);
  CHECK(p.sff.route_agreement < 1e-8);
  CHECK(p.sff.symmetry_residual < 1e-8);
  CHECK(p.sff.offslot_residual < 1e-8);
  CHECK(p.gauss.psh_residual < 1e-8);
  CHECK(p.gauss.cm_residual < 1e-7);
  CHECK(p.gauss.expanded_residual < 1e-7);
  CHECK(p.gauss.ricci_residual < 1e-8);
  CHECK(p.gauss.g_flat_residual < 1e-7);
  CHECK(p.cod.residual < 1e-7);
  CHECK(p.cod.dual_residual < 1e-7);
  CHECK(p.ind.c_agreement < 1e-7);
}

}  // namespace

TEST_CASE("cr map validation rejects malformed maps") {
  // valid: the linear embedding passes
  CHECK_NOTHROW(validate_cr_map(linear_embedding_map(2, 1)));

  // component count must match the target ambient dimension
  CRMapSpec bad = linear_embedding_map(2, 1);
  bad.components.pop_back();
  CHECK_THROWS_AS(validate_cr_map(bad), std::invalid_argument);

  // components must be holomorphic
  bad = linear_embedding_map(2, 1);
  bad.components[3].monomials.push_back({0.5, {0, 0, 0}, {0, 0, 1}});
  CHECK_THROWS_AS(validate_cr_map(bad), std::invalid_argument);

  // the base point must map to the target base point
  bad = linear_embedding_map(2, 1);
  bad.target.base = {0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(validate_cr_map(bad), std::invalid_argument);

  // the ambient differential must be injective at the base point
  CRMapSpec sq;
  sq.source = sphere_surface(1);
  sq.target.n = 2;
  sq.target.rho = rho_sphere(3);
  sq.target.base = {1.0, 0.0, 0.0};
  sq.components.push_back(mono(2, {0, 2}));
  sq.components.push_back(zero_poly(2));
  sq.components.push_back(zero_poly(2));
  CHECK_THROWS_AS(validate_cr_map(sq), std::invalid_argument);

  // holomorphic, full rank, base-preserving, but off the target hypersurface
  CRMapSpec off;
  off.source = sphere_surface(1);
  off.target.n = 2;
  off.target.rho = rho_sphere(3);
  off.target.base = {0.0, 1.0, 0.0};
  off.components.push_back(mono(2, {1, 0}));
  off.components.push_back(mono(2, {0, 1}));
  off.components.push_back(mono(2, {1, 1}));
  CHECK_NOTHROW(validate_cr_map(off));
  CHECK_THROWS_AS(build_immersion_geometry(off, 4), std::domain_error);
}

TEST_CASE("degeneracy depth beyond the jet budget throws") {
  ImmersionGeometry G = build_immersion_geometry(whitney_map(1), 4);
  CHECK_NOTHROW(ek_spaces(G, 3));
  CHECK_THROWS_AS(ek_spaces(G, 5), std::domain_error);
}

TEST_CASE("whitney curve pipeline: frames, routes, identities") {
  Pipeline p = run_pipeline(whitney_map(1), 6, 2);
  check_frame_certificates(p);

  // both contact rescale stages fire; a spherical target carries no torsion,
  // so the transported normal torsion is a certificate here
  CHECK(p.ad.reeb_defect_before > 1e-6);
  CHECK(p.ad.normal_torsion_norm < 1e-9);

  // the second fundamental form is genuinely nonzero
  CHECK(p.sff.omega.norm_jets() > 1e-2);
  CHECK(p.gauss.g_norm > 1e-2);
  CHECK(p.cod.norm > 1e-4);

  // trace coefficient gates at n = 1 and exhausted jet budget
  CHECK_FALSE(p.ind.f_available);
  CHECK_FALSE(p.ind.a_available);
  CHECK(p.ind.c_norm > 1e-4);
  CHECK(p.ind.c_trusted >= 1);

  // degeneracy dual route: ambient jets vs covariant derivative spans
  DegeneracyProfile pj = ek_spaces(p.G, 3);
  DegeneracyProfile pc = degeneracy_from_sff(p.sff, p.G, 3);
  REQUIRE(pj.dims == pc.dims);
  CHECK(pj.s0 == pc.s0);
  CHECK(pj.k0 == pc.k0);
  CHECK_FALSE(pj.unstable);
  CHECK_FALSE(pc.truncated);
  CHECK(pj.dims == std::vector<int>{1, 2, 3, 3});
  CHECK(pj.s0 == 0);
  CHECK(pj.k0 == 2);
}

TEST_CASE("adapted derivative obeys the product rule") {
  Pipeline p = run_pipeline(whitney_map(1), 6, 2);
  const ContextPtr& ctx = p.G.co.chart->ctx;
  const FrameDirections fd = frame_directions(p.G.co);
  const int n = p.G.n;

  Jet u = Jet::variable(ctx, 0) * Jet::variable(ctx, 1) + Jet::constant(ctx, Complex(0.3, 0.1));
  IndexedTensor Tu = p.sff.omega;
  for (auto& e : Tu.data) e = u * e;

  for (bool barred : {false, true}) {
    const IndexedTensor dT = adapted_derivative(p.sff.omega, p.ad, barred);
    const IndexedTensor dTu = adapted_derivative(Tu, p.ad, barred);
    double dev = 0.0;
    std::vector<int> idx(3, 0);
    while (true) {
      for (int nu = 0; nu < n; ++nu) {
        std::vector<int> odx = idx;
        odx.push_back(nu);
        const Jet want = u * dT.at(odx) +
                         apply_field(fd.X[barred ? 1 + n + nu : 1 + nu], u) * p.sff.omega.at(idx);
        dev = std::max(dev, jet_distance(dTu.at(odx), want));
      }
      int q = 2;
      while (q >= 0 && ++idx[q] == p.sff.omega.dims[q]) idx[q--] = 0;
      if (q < 0) break;
    }
    CHECK(dev < 1e-9);
  }
}

TEST_CASE("constant unitary rotations leave the reports unchanged") {
  const CRMapSpec spec = whitney_map(1);
  Pipeline p = run_pipeline(spec, 6, 2);

  const double ct = std::cos(0.7), st = std::sin(0.7);
  const Complex ph = std::polar(1.0, 0.3);
  std::vector<std::vector<Complex>> Us = {{std::polar(1.0, 0.4)}};
  std::vector<std::vector<Complex>> Ut = {{ct, -st * ph}, {st * std::conj(ph), ct}};

  AdmissibleCoframe cs = rotate_coframe(build_admissible_coframe(spec.source, 6), Us);
  AdmissibleCoframe ctg = rotate_coframe(build_admissible_coframe(spec.target, 6), Ut);
  Pipeline q = run_pipeline(spec, 6, 2, &cs, &ctg);
  check_frame_certificates(q);

  // every certified residual is reproduced
  const double pairs[][2] = {
      {p.G.containment_residual, q.G.containment_residual},
      {p.ad.theta_residual, q.ad.theta_residual},
      {p.ad.cr_offslot, q.ad.cr_offslot},
      {p.ad.reeb_defect_after, q.ad.reeb_defect_after},
      {p.ad.unitary_residual, q.ad.unitary_residual},
      {p.ad.adapted_tangent_residual, q.ad.adapted_tangent_residual},
      {p.ad.adapted_normal_residual, q.ad.adapted_normal_residual},
      {p.ad.tangential_connection_residual, q.ad.tangential_connection_residual},
      {p.ad.tangential_torsion_residual, q.ad.tangential_torsion_residual},
      {p.sff.route_agreement, q.sff.route_agreement},
      {p.sff.symmetry_residual, q.sff.symmetry_residual},
      {p.gauss.psh_residual, q.gauss.psh_residual},
      {p.gauss.expanded_residual, q.gauss.expanded_residual},
      {p.cod.residual, q.cod.residual},
      {p.cod.dual_residual, q.cod.dual_residual},
      {p.ind.c_agreement, q.ind.c_agreement},
  };
  for (const auto& pr : pairs) CHECK(std::abs(pr[0] - pr[1]) < 1e-9);

  // frame-independent scalars match as jets: the difference trace and the
  // full contraction of the second fundamental form
  auto c_trace = [](const Pipeline& pl) {
    const ContextPtr& ctx = pl.G.co.chart->ctx;
    Jet acc(ctx, ctx->order());
    for (int m = 0; m < pl.G.n; ++m) acc += pl.ind.C.at({m, m});
    return acc;
  };
  CHECK(jet_distance(c_trace(p), c_trace(q)) < 1e-9);

  auto full_pairing = [](const Pipeline& pl) {
    const ContextPtr& ctx = pl.G.co.chart->ctx;
    Jet acc(ctx, ctx->order());
    for (int a = 0; a < pl.G.n; ++a)
      for (int c = 0; c < pl.G.d; ++c)
        for (int m = 0; m < pl.G.n; ++m)
          acc += pl.sff.omega.at({a, c, m}) * pl.sff.omega.at({a, c, m}).conjugated();
    return acc;
  };
  CHECK(jet_distance(full_pairing(p), full_pairing(q)) < 1e-9);

  // integer degeneracy data is identical
  DegeneracyProfile ep = ek_spaces(p.G, 3), eq = ek_spaces(q.G, 3);
  CHECK(ep.dims == eq.dims);
  CHECK(ep.s0 == eq.s0);
  CHECK(ep.k0 == eq.k0);
}

TEST_CASE("linear embedding is totally geodesic with identity frame") {
  Pipeline p = run_pipeline(linear_embedding_map(2, 1), 6, 2);
  check_frame_certificates(p);

  // the adaptation is trivial: same chart conventions upstairs and downstairs
  const ContextPtr& ctx = p.G.co.chart->ctx;
  double wdev = 0.0;
  for (int a = 0; a < p.G.nhat; ++a)
    for (int b = 0; b < p.G.nhat; ++b) {
      Jet e = p.ad.W[a][b];
      if (a == b) e -= Jet::constant(ctx, 1.0);
      wdev = std::max(wdev, e.max_abs());
    }
  CHECK(wdev < 1e-8);

  // flat relative invariants
  CHECK(p.sff.omega.norm_jets() < 1e-9);
  CHECK(p.sff.omega_ext.norm_jets() < 1e-9);
  CHECK(p.ad.normal_torsion_norm < 1e-9);
  CHECK(p.gauss.g_norm < 1e-9);
  CHECK(p.cod.norm < 1e-9);
  CHECK(p.tt.target_s_norm < 1e-8);

  // induced coefficients vanish by both routes
  CHECK(p.ind.c_norm < 1e-8);
  CHECK(p.ind.C_formula.norm_jets() < 1e-8);
  CHECK(p.ind.f_available);
  CHECK(p.ind.f_norm < 1e-8);
  CHECK(p.ind.F_formula.norm_jets() < 1e-8);
  CHECK(p.ind.f_agreement < 1e-7);
  CHECK(p.ind.a_available);
  CHECK(p.ind.a_norm < 1e-8);
  CHECK(p.ind.A_formula.max_abs() < 1e-8);
  CHECK(p.ind.a_agreement < 1e-7);
  CHECK(p.ind.a_imag < 1e-9);
  CHECK(p.ind.vtrace_available);
  CHECK(p.ind.vtrace_residual < 1e-7);

  // degeneracy: one flat normal direction, stable from the first level
  DegeneracyProfile pj = ek_spaces(p.G, 3);
  DegeneracyProfile pc = degeneracy_from_sff(p.sff, p.G, 3);
  REQUIRE(pj.dims == pc.dims);
  CHECK(pj.dims == std::vector<int>{1, 3, 3, 3});
  CHECK(pj.s0 == 1);
  CHECK(pj.k0 == 1);
  CHECK(pc.s0 == 1);
  CHECK(pc.k0 == 1);

  DegeneracyProfile p0 = ek_spaces(p.G, 0);
  CHECK(p0.dims == std::vector<int>{1});
}

TEST_CASE("tilted great-sphere section is totally geodesic") {
  Pipeline p = run_pipeline(tilted_section_map(), 6, 2);
  check_frame_certificates(p);

  // exact containment and no contact-scale correction
  CHECK(p.G.containment_residual < 1e-12);
  CHECK(p.ad.reeb_defect_before < 1e-9);

  CHECK(p.sff.omega.norm_jets() < 1e-9);
  CHECK(p.sff.omega_ext.norm_jets() < 1e-9);
  CHECK(p.ad.normal_torsion_norm < 1e-9);
  CHECK(p.gauss.g_norm < 1e-9);
  CHECK(p.cod.norm < 1e-9);

  CHECK(p.ind.c_norm < 1e-8);
  CHECK(p.ind.f_available);
  CHECK(p.ind.f_norm < 1e-8);
  CHECK(p.ind.a_available);
  CHECK(p.ind.a_norm < 1e-8);
  CHECK(p.ind.vtrace_available);
  CHECK(p.ind.vtrace_residual < 1e-7);

  DegeneracyProfile pj = ek_spaces(p.G, 3);
  DegeneracyProfile pc = degeneracy_from_sff(p.sff, p.G, 3);
  REQUIRE(pj.dims == pc.dims);
  CHECK(pj.dims == std::vector<int>{1, 3, 3, 3});
  CHECK(pj.s0 == 1);
  CHECK(pj.k0 == 1);
}

TEST_CASE("plane embedding two dimensions up keeps the profile") {
  // degeneracy only; the full pipeline for d = 2 runs in the scenario suite
  ImmersionGeometry G = build_immersion_geometry(linear_embedding_map(2, 2), 4);
  DegeneracyProfile pj = ek_spaces(G, 3);
  CHECK(pj.dims == std::vector<int>{1, 3, 3, 3});
  CHECK(pj.s0 == 2);
  CHECK(pj.k0 == 1);
}

TEST_CASE("whitney surface pipeline at full width") {
  Pipeline p = run_pipeline(whitney_map(2), 6, 2);
  check_frame_certificates(p);

  CHECK(p.sff.omega.norm_jets() > 1e-2);
  CHECK(p.gauss.g_norm > 1e-2);
  CHECK(p.ind.c_norm > 1e-4);
  CHECK(p.ind.c_trusted >= 1);

  // divergence route for F is live here, the scalar one stays gated
  CHECK(p.ind.f_available);
  CHECK(p.ind.f_agreement < 1e-7);
  CHECK_FALSE(p.ind.a_available);
  CHECK(p.ind.vtrace_available);
  CHECK(p.ind.vtrace_residual < 1e-7);

  DegeneracyProfile pj = ek_spaces(p.G, 3);
  DegeneracyProfile pc = degeneracy_from_sff(p.sff, p.G, 3);
  REQUIRE(pj.dims == pc.dims);
  CHECK(pj.s0 == pc.s0);
  CHECK(pj.k0 == pc.k0);
  CHECK_FALSE(pj.unstable);
  CHECK(pj.dims == std::vector<int>({1, 3, 5, 5}));
  CHECK(pj.s0 == 0);
  CHECK(pj.k0 == 2);
}

TEST_CASE("polarized quadratic pair recovers its hermitian factor") {
  // Q = z1^2 + z2^2 + 4 z1 z2, Qt = z1^2 + z2^2 - 4 z1 z2, eps = 2:
  // |Q|^2 - |Qt|^2 = |z|^2 h(z) with h = 8 (z1 zb2 + zb1 z2)
  const std::vector<std::vector<Complex>> Q = {{1.0, 2.0}, {2.0, 1.0}};
  const std::vector<std::vector<Complex>> Qt = {{1.0, -2.0}, {-2.0, 1.0}};
  HuangReport rep = huang_polarization_check(Q, Qt);
  CHECK(rep.decomposition_residual < 1e-12);
  CHECK(rep.sample_residual < 1e-12);
  CHECK(rep.samples == 20);
  CHECK(std::abs(rep.H[0][0]) < 1e-12);
  CHECK(std::abs(rep.H[1][1]) < 1e-12);
  CHECK(std::abs(rep.H[0][1] - Complex(8.0)) < 1e-12);
  CHECK(std::abs(rep.H[1][0] - Complex(8.0)) < 1e-12);

  // value check at a hand point: z = (1, 1)
  // |Q(1,1)|^2 - |Qt(1,1)|^2 = 36 - 4 = 32 = |z|^2 h = 2 * 16
  CHECK(std::abs(Complex(std::norm(Complex(6.0)) - std::norm(Complex(-2.0))) -
                 Complex(2.0 * 16.0)) < 1e-12);

  // a pair violating the identity leaves a visible remainder
  const std::vector<std::vector<Complex>> Qbad = {{1.0, 0.0}, {0.0, 0.0}};
  HuangReport bad = huang_polarization_check(Q, Qbad);
  CHECK(bad.decomposition_residual > 1e-3);
}
