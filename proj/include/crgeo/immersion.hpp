#pragma once

// CR maps between embedded hypersurfaces: frames along the image adapted to
// the source coframe, the second fundamental form by an intrinsic and an
// extrinsic route, its covariant derivatives and degeneracy profile, and the
// curvature/trace identities tying source, image and target together.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "crgeo/chern_moser.hpp"
#include "crgeo/map_pullback.hpp"
#include "crgeo/webster.hpp"

namespace crgeo {

struct CRMapSpec {
  HypersurfaceSpec source;
  HypersurfaceSpec target;
  std::vector<PolynomialSpec> components;  // ambient, holomorphic
};

// Arity, holomorphy, base matching and an injective ambient differential.
// Containment in the target is a jet statement checked by the geometry build.
inline void validate_cr_map(const CRMapSpec& spec) {
  const int ns = spec.source.n + 1;
  const int nt = spec.target.n + 1;
  if (static_cast<int>(spec.components.size()) != nt)
    throw std::invalid_argument("cr map: component count must match the target ambient dimension");
  for (const auto& p : spec.components) {
    if (p.num_complex_vars != ns)
      throw std::invalid_argument("cr map: component variable count must match the source ambient dimension");
    if (!poly_is_holomorphic(p))
      throw std::invalid_argument("cr map: components must be holomorphic");
  }
  for (int k = 0; k < nt; ++k) {
    const Complex v = poly_eval(spec.components[k], spec.source.base);
    if (std::abs(v - spec.target.base[k]) > 1e-9)
      throw std::invalid_argument("cr map: base point does not map to the target base point");
  }
  Eigen::MatrixXcd J(nt, ns);
  for (int k = 0; k < nt; ++k)
    for (int j = 0; j < ns; ++j)
      J(k, j) = poly_eval(poly_partial_z(spec.components[k], j), spec.source.base);
  if (svd_rank(J).rank < ns)
    throw std::invalid_argument("cr map: ambient differential is rank deficient at the base point");
}

// ---------------------------------------------------------------------------
// Geometry shared by every map computation: the source and target coframes
// and the chart transition carrying jets both ways.

struct ImmersionGeometry {
  CRMapSpec spec;
  int n = 0;     // source CR dimension
  int nhat = 0;  // target CR dimension
  int d = 0;     // codimension nhat - n
  int order = 0;
  AdmissibleCoframe co;       // source coframe
  AdmissibleCoframe co_tgt0;  // target coframe before any image correction
  ChartTransition trans;
  double containment_residual = 0.0;
};

inline ImmersionGeometry build_immersion_geometry(const CRMapSpec& spec,
                                                  AdmissibleCoframe co_src,
                                                  AdmissibleCoframe co_tgt) {
  validate_cr_map(spec);
  ImmersionGeometry g;
  g.spec = spec;
  g.n = spec.source.n;
  g.nhat = spec.target.n;
  g.d = g.nhat - g.n;
  if (g.d < 0) throw std::invalid_argument("cr map: target dimension below source dimension");
  g.order = co_src.chart->ctx->order();
  g.co = std::move(co_src);
  g.co_tgt0 = std::move(co_tgt);
  g.trans = build_chart_transition(g.co.chart, g.co_tgt0.chart, spec.components);

  const PolynomialSpec rho_eff = poly_compose(spec.target.rho, spec.components);
  g.containment_residual = poly_eval_to_jet(rho_eff, g.co.chart->graph.slots).max_abs();
  if (g.containment_residual > 1e-8)
    throw std::domain_error("cr map: image does not lie in the target hypersurface");
  return g;
}

inline ImmersionGeometry build_immersion_geometry(const CRMapSpec& spec, int order) {
  return build_immersion_geometry(spec, build_admissible_coframe(spec.source, order),
                                  build_admissible_coframe(spec.target, order));
}

// ---------------------------------------------------------------------------
// Degeneracy spaces from ambient jets: ranks of CR derivatives of the
// antiholomorphic target gradient composed with the map, in a canonical
// non-decreasing application order (orderings of the fields agree modulo
// lower levels). These rows are the conjugates of the usual generators, so
// the rank filtration is the same.

struct DegeneracyProfile {
  std::vector<int> dims;  // dim E_k for k = 0..k_max
  int s0 = 0;             // stable ambient corank
  int k0 = 0;             // first k attaining the stable dimension
  bool unstable = false;  // a singular value sat near the rank threshold
  bool truncated = false; // jet budget cut the derivative supply short
};

inline void finish_profile(DegeneracyProfile& prof, int ambient) {
  prof.s0 = ambient - prof.dims.back();
  prof.k0 = 0;
  while (prof.dims[prof.k0] != prof.dims.back()) ++prof.k0;
}

inline DegeneracyProfile ek_spaces(const ImmersionGeometry& G, int k_max) {
  if (k_max < 0) throw std::invalid_argument("degeneracy spaces: negative depth");
  const int na = G.nhat + 1;
  const int n = G.n;

  std::vector<Jet> grad;
  grad.reserve(na);
  for (int k = 0; k < na; ++k)
    grad.push_back(poly_eval_to_jet(
        poly_compose(poly_partial_zbar(G.spec.target.rho, k), G.spec.components),
        G.co.chart->graph.slots));

  const std::vector<VectorField>& Lw = G.co.L;

  // rows[r] = values of one derivative word applied to the gradient
  std::vector<std::vector<Complex>> rows;
  DegeneracyProfile prof;
  struct Word {
    int last;
    std::vector<Jet> val;
  };
  std::vector<Word> level;
  level.push_back({0, grad});
  rows.push_back({});
  for (const auto& j : grad) rows.back().push_back(j.value());

  auto rank_of = [&](DegeneracyProfile& p) {
    Eigen::MatrixXcd M(static_cast<int>(rows.size()), na);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int k = 0; k < na; ++k) M(static_cast<int>(r), k) = rows[r][k];
    RankResult rr = svd_rank(M);
    p.unstable = p.unstable || rr.unstable;
    return rr.rank;
  };

  prof.dims.push_back(rank_of(prof));
  for (int depth = 1; depth <= k_max; ++depth) {
    if (level[0].val[0].trusted() < 1)
      throw std::domain_error("degeneracy spaces: jet budget exhausted at depth " +
                              std::to_string(depth));
    std::vector<Word> next;
    for (const auto& w : level)
      for (int m = w.last; m < n; ++m) {
        Word nw;
        nw.last = m;
        nw.val.reserve(na);
        for (const auto& j : w.val) nw.val.push_back(apply_field(Lw[m], j));
        rows.push_back({});
        for (const auto& j : nw.val) rows.back().push_back(j.value());
        next.push_back(std::move(nw));
      }
    level = std::move(next);
    prof.dims.push_back(rank_of(prof));
  }
  finish_profile(prof, na);
  return prof;
}

// ---------------------------------------------------------------------------
// Frame adaptation along the image. The target contact form is rescaled in
// two stages so that its pullback is the source contact form and the pulled
// (1,0) coframe has no contact component; the image frame is then completed
// to a unitary target frame in index order.

struct AdaptedFrameData {
  AdmissibleCoframe co_hat;  // corrected target coframe
  WebsterConnection wc_src, wc_hat;
  WebsterCurvature cv_src, cv_hat;
  JetMatrix W;          // rows: adapted frame in the corrected target frame
  JetMatrix frame_amb;  // ambient components of the adapted frame along the map
  std::vector<std::vector<CoframeForm1>> conn;  // transported connection forms
  std::vector<CoframeForm1> tors;               // transported torsion forms
  CoframeForm1 pulled_theta;                    // pullback of the corrected contact form
  std::vector<CoframeForm1> pulled_theta_a;     // pullbacks of the corrected coframe
  Jet conformal;  // pulled raw contact form = conformal * source contact form

  double theta_residual = 0.0;       // pulled contact form vs source theta
  double cr_offslot = 0.0;           // antiholomorphic slots of the pulled coframe
  double reeb_defect_before = 0.0;   // contact component before the normal correction
  double reeb_defect_after = 0.0;
  double unitary_residual = 0.0;
  double adapted_tangent_residual = 0.0;  // pulled adapted coframe vs source coframe
  double adapted_normal_residual = 0.0;   // pulled adapted normal coframe vs zero
  double tangential_connection_residual = 0.0;
  double tangential_torsion_residual = 0.0;
  double normal_torsion_norm = 0.0;
};

// Expands a target coframe form against the pulled coframe.
inline CoframeForm1 pull_to_source(const CoframeForm1& w, const ChartTransition& trans,
                                   const CoframeForm1& pth,
                                   const std::vector<CoframeForm1>& pta) {
  const int nh = w.n;
  CoframeForm1 r = trans.pull(w.th()) * pth;
  for (int c = 0; c < nh; ++c) {
    r = r + trans.pull(w.h(c)) * pta[c];
    r = r + trans.pull(w.hb(c)) * conj_coframe(pta[c]);
  }
  return r;
}

inline AdaptedFrameData adapt_target_frame(const ImmersionGeometry& G) {
  const int n = G.n, nh = G.nhat, d = G.d;
  const ContextPtr& ctx_s = G.co.chart->ctx;
  const ContextPtr& ctx_t = G.co_tgt0.chart->ctx;
  const ChartTransition& trans = G.trans;
  const Complex I(0.0, 1.0);

  AdaptedFrameData ad;
  ad.wc_src = webster_connection(G.co);
  ad.cv_src = webster_curvature(ad.wc_src);

  // Stage one: scale so the pulled contact form is the source contact form.
  // Both contact forms annihilate the image CR distribution, so their ratio
  // is one positive function, read componentwise to spend no derivative.
  const ChartForm1 pth_raw = trans.pull_back(G.co_tgt0.theta);
  int jref = 0;
  for (int i = 1; i < ctx_s->num_vars(); ++i)
    if (std::abs(G.co.theta.comp[i].value()) > std::abs(G.co.theta.comp[jref].value()))
      jref = i;
  const Jet u0 =
      (pth_raw.comp[jref] * G.co.theta.comp[jref].inverse()).realified(1e-7);
  double par_scale = 1.0, par_dev = 0.0;
  for (int i = 0; i < ctx_s->num_vars(); ++i) {
    par_scale = std::max(par_scale, pth_raw.comp[i].max_abs());
    par_dev = std::max(par_dev,
                       jet_distance(pth_raw.comp[i], u0 * G.co.theta.comp[i]));
  }
  if (par_dev > 1e-8 * par_scale)
    throw std::domain_error("adapt_target_frame: pulled contact form is not conformal to the source one");
  if (u0.value().real() < 0.1)
    throw std::domain_error("adapt_target_frame: contact forms are not positively conformal");
  ad.conformal = u0;

  AdmissibleCoframe p1 = G.co_tgt0;
  const Jet one_s = Jet::constant(ctx_s, 1.0);
  if ((u0 - one_s).max_abs() > 1e-8) {
    const Jet utan = trans.extend(u0.inverse()).realified(1e-7);
    RawFrame r1;
    r1.theta = utan * G.co_tgt0.theta;
    r1.L = G.co_tgt0.L;
    p1 = normalize_admissible(G.co_tgt0.chart, r1);
  }

  // Stage two: kill the contact component of the pulled (1,0) coframe with a
  // scale that is 1 on the image; only its conjugate CR derivatives across
  // the image enter, one real jet per off-image coordinate.
  std::vector<Jet> v1;
  for (int b = 0; b < nh; ++b)
    v1.push_back(to_coframe(trans.pull_back(p1.theta_a[b]), G.co).th());
  for (const auto& v : v1) ad.reeb_defect_before = std::max(ad.reeb_defect_before, v.max_abs());

  AdmissibleCoframe co_hat = p1;
  if (d > 0 && ad.reeb_defect_before > 1e-9) {
    std::vector<bool> kept(ctx_t->num_vars(), false);
    for (int v : trans.section_rows) kept[v] = true;
    std::vector<Jet> wj;
    for (int v = 0; v < ctx_t->num_vars(); ++v)
      if (!kept[v])
        wj.push_back((Jet::variable(ctx_t, v) - trans.extend(trans.c[v])).realified(1e-7));
    if (static_cast<int>(wj.size()) != 2 * d)
      throw std::domain_error("adapt_target_frame: off-image coordinate count mismatch");

    JetMatrix rows(2 * nh, JetVector(2 * d));
    JetVector rhs(2 * nh);
    for (int b = 0; b < nh; ++b) {
      const VectorField Lb = conj_field(p1.L[b]);
      for (int c = 0; c < 2 * d; ++c) {
        const Jet m = trans.pull(apply_field(Lb, wj[c]));
        rows[2 * b][c] = (m + m.conjugated()) * Complex(0.5);
        rows[2 * b + 1][c] = (m - m.conjugated()) * Complex(0.0, -0.5);
      }
      rhs[2 * b] = (v1[b] - v1[b].conjugated()) * Complex(0.0, 0.5);  // -Im
      rhs[2 * b + 1] = (v1[b] + v1[b].conjugated()) * Complex(0.5);   // +Re
    }
    const JetVector gsol = detail::solve_rows(rows, rhs, {});

    Jet u2 = Jet::constant(ctx_t, 1.0);
    for (int c = 0; c < 2 * d; ++c) {
      const Jet gr = (gsol[c] + gsol[c].conjugated()) * Complex(0.5);
      u2 += trans.extend(gr) * wj[c];
    }
    RawFrame r2;
    r2.theta = u2 * p1.theta;
    r2.L = p1.L;
    co_hat = normalize_admissible(G.co_tgt0.chart, r2);
  }
  ad.co_hat = co_hat;
  ad.wc_hat = webster_connection(co_hat);
  ad.cv_hat = webster_curvature(ad.wc_hat);

  // Pulled coframe and its contact/antiholomorphic drift
  ad.pulled_theta = to_coframe(trans.pull_back(co_hat.theta), G.co);
  ad.theta_residual = max_abs(ad.pulled_theta - theta_form(G.co));
  for (int b = 0; b < nh; ++b) {
    ad.pulled_theta_a.push_back(to_coframe(trans.pull_back(co_hat.theta_a[b]), G.co));
    const CoframeForm1& w = ad.pulled_theta_a.back();
    ad.reeb_defect_after = std::max(ad.reeb_defect_after, w.th().max_abs());
    for (int m = 0; m < n; ++m) ad.cr_offslot = std::max(ad.cr_offslot, w.hb(m).max_abs());
  }

  // Tangential rows carry the pushforward of the source frame
  ad.W.assign(nh, JetVector(nh, Jet(ctx_s, 0)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < nh; ++b) ad.W[a][b] = ad.pulled_theta_a[b].h(a);
  {
    Eigen::MatrixXcd V0(n, nh);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < nh; ++b) V0(a, b) = ad.W[a][b].value();
    if (svd_rank(V0).rank < n)
      throw std::domain_error("adapt_target_frame: pushforward rank deficient at the base point");
  }

  // Normal completion: project reference directions in index order; accepted
  // candidates carry an order-one residue, rejected ones vanish identically.
  int placed = n;
  for (int cand = 0; cand < nh && placed < nh; ++cand) {
    JetVector r(nh, Jet(ctx_s, 0));
    for (int b = 0; b < nh; ++b) r[b] = Jet(ctx_s, ctx_s->order());
    r[cand] = Jet::constant(ctx_s, 1.0);
    for (int p = 0; p < placed; ++p) {
      const Jet proj = ad.W[p][cand].conjugated();
      for (int b = 0; b < nh; ++b) r[b] -= proj * ad.W[p][b];
    }
    Jet nrm2(ctx_s, 0);
    {
      Jet acc(ctx_s, ctx_s->order());
      for (int b = 0; b < nh; ++b) acc += r[b] * r[b].conjugated();
      nrm2 = acc;
    }
    if (std::abs(nrm2.value()) < 1e-4) continue;
    const Jet inv = nrm2.realified(1e-7).sqrt_root().inverse();
    for (int b = 0; b < nh; ++b) ad.W[placed][b] = inv * r[b];
    ++placed;
  }
  if (placed < nh)
    throw std::domain_error("adapt_target_frame: normal completion ran out of directions");

  for (int a = 0; a < nh; ++a)
    for (int c = 0; c < nh; ++c) {
      Jet acc(ctx_s, ctx_s->order());
      for (int b = 0; b < nh; ++b) acc += ad.W[a][b] * ad.W[c][b].conjugated();
      if (a == c) acc -= one_s;
      ad.unitary_residual = std::max(ad.unitary_residual, acc.max_abs());
    }

  // Pulled adapted coframe: source coframe on tangential rows, zero on normals
  for (int a = 0; a < nh; ++a) {
    CoframeForm1 w = coframe_form1(n, ctx_s);
    for (int b = 0; b < nh; ++b) w = w + ad.W[a][b].conjugated() * ad.pulled_theta_a[b];
    if (a < n)
      ad.adapted_tangent_residual =
          std::max(ad.adapted_tangent_residual, max_abs(w - theta_a_form(G.co, a)));
    else
      ad.adapted_normal_residual = std::max(ad.adapted_normal_residual, max_abs(w));
  }

  // Ambient components of the adapted frame along the map
  const int na = nh + 1;
  JetMatrix lamb(nh, JetVector(na));
  for (int c = 0; c < nh; ++c)
    for (int k = 0; k < na; ++k)
      lamb[c][k] = trans.pull(apply_field(co_hat.L[c], G.co_tgt0.chart->emb[k]));
  ad.frame_amb.assign(nh, JetVector(na, Jet(ctx_s, 0)));
  for (int a = 0; a < nh; ++a)
    for (int k = 0; k < na; ++k) {
      Jet acc(ctx_s, ctx_s->order());
      for (int c = 0; c < nh; ++c) acc += ad.W[a][c] * lamb[c][k];
      ad.frame_amb[a][k] = acc;
    }

  // Transported connection and torsion
  std::vector<std::vector<CoframeForm1>> pf(nh, std::vector<CoframeForm1>(nh));
  for (int a = 0; a < nh; ++a)
    for (int b = 0; b < nh; ++b)
      pf[a][b] = pull_to_source(ad.wc_hat.omega[a][b], trans, ad.pulled_theta,
                                ad.pulled_theta_a);
  ad.conn.assign(nh, std::vector<CoframeForm1>(nh, coframe_form1(n, ctx_s)));
  for (int a = 0; a < nh; ++a) {
    std::vector<CoframeForm1> inner(nh);
    for (int c = 0; c < nh; ++c) {
      CoframeForm1 w = exterior_derivative(ad.W[a][c], G.co);
      for (int e = 0; e < nh; ++e) w = w + ad.W[a][e] * pf[e][c];
      inner[c] = w;
    }
    for (int b = 0; b < nh; ++b) {
      CoframeForm1 acc = coframe_form1(n, ctx_s);
      for (int c = 0; c < nh; ++c) acc = acc + ad.W[b][c].conjugated() * inner[c];
      ad.conn[a][b] = acc;
    }
  }
  ad.tors.assign(nh, coframe_form1(n, ctx_s));
  for (int a = 0; a < nh; ++a) {
    CoframeForm1 acc = coframe_form1(n, ctx_s);
    for (int c = 0; c < nh; ++c)
      acc = acc + ad.W[a][c].conjugated() *
                      pull_to_source(ad.wc_hat.tau[c], trans, ad.pulled_theta,
                                     ad.pulled_theta_a);
    ad.tors[a] = acc;
  }

  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b)
      ad.tangential_connection_residual = std::max(
          ad.tangential_connection_residual, max_abs(ad.conn[a][b] - ad.wc_src.omega[a][b]));
    ad.tangential_torsion_residual =
        std::max(ad.tangential_torsion_residual, max_abs(ad.tors[a] - ad.wc_src.tau[a]));
  }
  for (int a = n; a < nh; ++a)
    ad.normal_torsion_norm = std::max(ad.normal_torsion_norm, max_abs(ad.tors[a]));
  return ad;
}

// ---------------------------------------------------------------------------
// Tensor transport: pull target-frame tensors through the transition and
// re-express them in the adapted frame. Tangential entries sit in the leading
// index range, normal entries after them.

inline IndexedTensor pull_tensor(const IndexedTensor& T, const ChartTransition& trans) {
  IndexedTensor r = IndexedTensor::make(T.sig, T.dims, trans.src->ctx, 0);
  for (size_t i = 0; i < T.data.size(); ++i) r.data[i] = trans.pull(T.data[i]);
  return r;
}

inline IndexedTensor frame_transform(const IndexedTensor& T, const JetMatrix& W) {
  const int nh = static_cast<int>(W.size());
  const ContextPtr ctx = W[0][0].context_ptr();
  JetMatrix Wc(nh, JetVector(nh));
  for (int a = 0; a < nh; ++a)
    for (int b = 0; b < nh; ++b) Wc[a][b] = W[a][b].conjugated();

  IndexedTensor cur = T;
  const int rank = static_cast<int>(T.sig.size());
  for (int s = 0; s < rank; ++s) {
    const IndexSpec& sp = T.sig[s];
    if (sp.direction)
      throw std::invalid_argument("frame_transform: direction slots cannot be transformed");
    if (cur.dims[s] != nh)
      throw std::invalid_argument("frame_transform: slot dimension mismatch");
    const JetMatrix& M = (sp.up != sp.barred) ? Wc : W;  // down/up_bar use W
    IndexedTensor next = IndexedTensor::make(cur.sig, cur.dims, ctx, 0);
    std::vector<int> idx(rank, 0);
    while (true) {
      Jet acc(ctx, ctx->order());
      std::vector<int> jdx = idx;
      for (int g = 0; g < nh; ++g) {
        jdx[s] = g;
        acc += M[idx[s]][g] * cur.at(jdx);
      }
      next.at(idx) = acc;
      int p = rank - 1;
      while (p >= 0 && ++idx[p] == cur.dims[p]) idx[p--] = 0;
      if (p < 0) break;
    }
    cur = std::move(next);
  }
  return cur;
}

inline IndexedTensor take_block(const IndexedTensor& T, const std::vector<int>& off,
                                const std::vector<int>& len, std::vector<IndexSpec> sig) {
  IndexedTensor r = IndexedTensor::make(std::move(sig), len, T.data[0].context_ptr(), 0);
  const int rank = static_cast<int>(len.size());
  std::vector<int> idx(rank, 0);
  while (true) {
    std::vector<int> src = idx;
    for (int p = 0; p < rank; ++p) src[p] += off[p];
    r.at(idx) = T.at(src);
    int p = rank - 1;
    while (p >= 0 && ++idx[p] == len[p]) idx[p--] = 0;
    if (p < 0) break;
  }
  return r;
}

// Target curvature and trace data carried to the source in the adapted frame.
struct TransportedTarget {
  IndexedTensor R;  // lowered curvature, full adapted range
  IndexedTensor S;  // traceless curvature, full adapted range
  IndexedTensor D;  // curvature trace coefficient, full adapted range
  IndexedTensor E;  // divergence coefficient, full adapted range
  Jet B;
  double target_s_norm = 0.0;  // vanishes exactly when the target is spherical
};

inline TransportedTarget transport_target(const ImmersionGeometry& G,
                                          const AdaptedFrameData& ad) {
  TransportedTarget tt;
  const DebData deb_hat = deb_coefficients(ad.cv_hat, ad.wc_hat);
  const IndexedTensor S_hat = chern_moser_tensor(ad.cv_hat);
  tt.target_s_norm = S_hat.norm_jets();
  tt.R = frame_transform(pull_tensor(curvature_lowered(ad.cv_hat), G.trans), ad.W);
  tt.S = frame_transform(pull_tensor(S_hat, G.trans), ad.W);
  tt.D = frame_transform(pull_tensor(deb_hat.D, G.trans), ad.W);
  tt.E = frame_transform(pull_tensor(deb_hat.E, G.trans), ad.W);
  tt.B = G.trans.pull(deb_hat.B);
  return tt;
}

// ---------------------------------------------------------------------------
// Second fundamental form. Intrinsic route: tangential-to-normal block of the
// transported connection. Extrinsic route: second CR derivatives of the
// target gradient composed with the map, paired against the adapted normals
// under the ambient product; contact, antiholomorphic and lower-level
// remainders die in that pairing. The corrected contact form matches the
// defining function scaled by the correction factor, whose pullback is the
// inverse conformal factor, so the composed gradient carries that scale.

struct SffData {
  int n = 0, d = 0;
  IndexedTensor omega;      // intrinsic route
  IndexedTensor omega_ext;  // extrinsic route
  double route_agreement = 0.0;
  double symmetry_residual = 0.0;
  double offslot_residual = 0.0;  // contact/antiholomorphic slots of the mixed block
  std::vector<IndexedTensor> derivs;  // derivs[j]: j-th unbarred covariant derivative
  IndexedTensor mixed;                // one barred covariant derivative
  bool has_mixed = false;
};

inline SffData second_fundamental_form(const ImmersionGeometry& G,
                                       const AdaptedFrameData& ad) {
  const int n = G.n, nh = G.nhat, d = G.d;
  const ContextPtr& ctx = G.co.chart->ctx;

  SffData sff;
  sff.n = n;
  sff.d = d;
  sff.omega = IndexedTensor::make({idx_down(), idx_normal_up(), idx_down()}, {n, d, n}, ctx, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < d; ++b) {
      const CoframeForm1& w = ad.conn[a][n + b];
      sff.offslot_residual = std::max(sff.offslot_residual, w.th().max_abs());
      for (int m = 0; m < n; ++m) {
        sff.omega.at({a, b, m}) = w.h(m);
        sff.offslot_residual = std::max(sff.offslot_residual, w.hb(m).max_abs());
      }
    }

  const Jet ui = ad.conformal.inverse();
  std::vector<Jet> grad;
  for (int k = 0; k <= nh; ++k)
    grad.push_back(ui * poly_eval_to_jet(
                            poly_compose(poly_partial_zbar(G.spec.target.rho, k),
                                         G.spec.components),
                            G.co.chart->graph.slots));
  std::vector<JetVector> dg(n, JetVector(nh + 1));
  for (int b = 0; b < n; ++b)
    for (int k = 0; k <= nh; ++k) dg[b][k] = apply_field(G.co.L[b], grad[k]);

  sff.omega_ext =
      IndexedTensor::make({idx_down(), idx_normal_up(), idx_down()}, {n, d, n}, ctx, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      JetVector w(nh + 1);
      for (int k = 0; k <= nh; ++k) w[k] = apply_field(G.co.L[a], dg[b][k]);
      for (int c = 0; c < d; ++c) {
        Jet acc(ctx, ctx->order());
        for (int k = 0; k <= nh; ++k) acc += w[k] * ad.frame_amb[n + c][k].conjugated();
        sff.omega_ext.at({a, c, b}) = acc;
      }
    }

  for (int a = 0; a < n; ++a)
    for (int c = 0; c < d; ++c)
      for (int b = 0; b < n; ++b) {
        sff.route_agreement = std::max(
            sff.route_agreement,
            jet_distance(sff.omega.at({a, c, b}), sff.omega_ext.at({a, c, b})));
        sff.symmetry_residual = std::max(
            sff.symmetry_residual,
            jet_distance(sff.omega.at({a, c, b}), sff.omega.at({b, c, a})));
      }
  sff.derivs.push_back(sff.omega);
  return sff;
}

// Covariant derivative against the transported connection: tangential slots
// correct within the tangential block, normal slots within the normal block.
inline IndexedTensor adapted_derivative(const IndexedTensor& T, const AdaptedFrameData& ad,
                                        bool barred) {
  const AdmissibleCoframe& co = ad.wc_src.co;
  const int n = co.n;
  const int nh = static_cast<int>(ad.conn.size());
  const ContextPtr& ctx = co.chart->ctx;
  const FrameDirections fd = frame_directions(co);

  auto val = [&](const CoframeForm1& w, int dir) -> Jet {
    if (dir == 0) return w.th();
    if (dir <= n) return w.h(dir - 1);
    return w.hb(dir - 1 - n);
  };
  auto conj_dir = [&](int dir) {
    if (dir == 0) return 0;
    return dir <= n ? dir + n : dir - n;
  };

  std::vector<IndexSpec> sig = T.sig;
  sig.push_back(barred ? idx_down_bar() : idx_down());
  std::vector<int> dims = T.dims;
  dims.push_back(n);
  IndexedTensor out = IndexedTensor::make(sig, dims, ctx, 0);

  const int rank = static_cast<int>(T.sig.size());
  std::vector<int> idx(rank, 0);
  while (true) {
    for (int nu = 0; nu < n; ++nu) {
      const int dir = barred ? 1 + n + nu : 1 + nu;
      Jet v = apply_field(fd.X[dir], T.at(idx));
      std::vector<int> jdx = idx;
      for (int p = 0; p < rank; ++p) {
        const IndexSpec& s = T.sig[p];
        if (s.direction)
          throw std::invalid_argument("adapted_derivative: direction slots unsupported");
        const int i0 = s.normal ? n : 0;
        const int len = s.normal ? nh - n : n;
        const int ip = idx[p];
        for (int g = 0; g < len; ++g) {
          jdx[p] = g;
          Jet w = s.barred ? val(ad.conn[s.up ? i0 + g : i0 + ip]
                                        [s.up ? i0 + ip : i0 + g],
                                 conj_dir(dir))
                                 .conjugated()
                           : val(ad.conn[s.up ? i0 + g : i0 + ip]
                                        [s.up ? i0 + ip : i0 + g],
                                 dir);
          if (s.up)
            v += T.at(jdx) * w;
          else
            v -= w * T.at(jdx);
        }
        jdx[p] = ip;
      }
      std::vector<int> odx = idx;
      odx.push_back(nu);
      out.at(odx) = v;
    }
    int p = rank - 1;
    while (p >= 0 && ++idx[p] == T.dims[p]) idx[p--] = 0;
    if (p < 0) break;
  }
  return out;
}

inline void sff_covariant_derivatives(SffData& sff, const AdaptedFrameData& ad,
                                      int max_order) {
  while (static_cast<int>(sff.derivs.size()) <= max_order)
    sff.derivs.push_back(adapted_derivative(sff.derivs.back(), ad, false));
  if (!sff.has_mixed) {
    sff.mixed = adapted_derivative(sff.omega, ad, true);
    sff.has_mixed = true;
  }
}

// Degeneracy profile from the covariant route: the contact direction and the
// tangential frame always contribute; normal components of the derivative
// tower fill out the remaining directions.
inline DegeneracyProfile degeneracy_from_sff(const SffData& sff, const ImmersionGeometry& G,
                                             int k_max) {
  if (k_max >= 2 && static_cast<int>(sff.derivs.size()) < k_max - 1)
    throw std::invalid_argument("degeneracy_from_sff: derivative tower too short");
  const int n = sff.n, d = sff.d;
  DegeneracyProfile prof;
  prof.dims.push_back(1);
  std::vector<std::vector<Complex>> rows;
  auto rank_of = [&](DegeneracyProfile& p) {
    if (rows.empty()) return 0;
    Eigen::MatrixXcd M(static_cast<int>(rows.size()), d);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int k = 0; k < d; ++k) M(static_cast<int>(r), k) = rows[r][k];
    RankResult rr = svd_rank(M);
    p.unstable = p.unstable || rr.unstable;
    return rr.rank;
  };
  for (int k = 1; k <= k_max; ++k) {
    if (k >= 2) {
      const IndexedTensor& T = sff.derivs[k - 2];
      if (T.data[0].trusted() < 0) {
        prof.truncated = true;
      } else {
        const int rank = static_cast<int>(T.sig.size());
        std::vector<int> idx(rank, 0);
        while (true) {
          if (idx[1] == 0) {
            std::vector<Complex> row(d);
            std::vector<int> jdx = idx;
            for (int a = 0; a < d; ++a) {
              jdx[1] = a;
              row[a] = T.at(jdx).value();
            }
            rows.push_back(std::move(row));
          }
          int p = rank - 1;
          while (p >= 0 && ++idx[p] == T.dims[p]) idx[p--] = 0;
          if (p < 0) break;
        }
      }
    }
    prof.dims.push_back(1 + n + rank_of(prof));
  }
  finish_profile(prof, G.nhat + 1);
  return prof;
}

// ---------------------------------------------------------------------------
// Codazzi: the barred derivative of the second fundamental form is determined
// by its own right-slot trace; the trace also reproduces the transported
// mixed trace coefficient.

struct CodazziReport {
  IndexedTensor dhat;  // mixed coefficient from the trace identity
  double residual = 0.0;
  double dual_residual = 0.0;
  double norm = 0.0;
};

inline CodazziReport codazzi_check(const SffData& sff, const TransportedTarget& tt) {
  if (!sff.has_mixed)
    throw std::invalid_argument("codazzi_check: barred derivative missing");
  const int n = sff.n, d = sff.d;
  const ContextPtr ctx = sff.omega.data[0].context_ptr();
  const Complex I(0.0, 1.0);

  CodazziReport rep;
  rep.dhat = IndexedTensor::make({idx_down(), idx_normal_up()}, {n, d}, ctx, 0);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < d; ++a) {
      Jet acc(ctx, ctx->order());
      for (int m = 0; m < n; ++m) acc += sff.mixed.at({m, a, b, m});
      rep.dhat.at({b, a}) = acc * (Complex(1.0) / (I * double(n + 1)));
    }
  rep.norm = rep.dhat.norm_jets();

  for (int al = 0; al < n; ++al)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < n; ++b)
        for (int g = 0; g < n; ++g) {
          Jet r = sff.mixed.at({al, a, b, g});
          if (al == g) r -= I * rep.dhat.at({b, a});
          if (b == g) r -= I * rep.dhat.at({al, a});
          rep.residual = std::max(rep.residual, r.max_abs());
        }

  for (int b = 0; b < n; ++b)
    for (int a = 0; a < d; ++a)
      rep.dual_residual = std::max(
          rep.dual_residual, jet_distance(rep.dhat.at({b, a}), tt.D.at({b, n + a})));
  return rep;
}

// ---------------------------------------------------------------------------
// Gauss identities: the transported curvature restricted to the image splits
// into the source curvature plus the pairing of the second fundamental form
// with itself; the traceless parts obey the same relation, checked once with
// projections and once with every trace term written out.

struct GaussReport {
  double psh_residual = 0.0;       // curvature relation on the tangential block
  double cm_residual = 0.0;        // traceless relation via projections
  double expanded_residual = 0.0;  // traceless relation with explicit traces
  double ricci_residual = 0.0;     // contracted relation
  double g_norm = 0.0;             // size of the pairing
  double g_flat_residual = 0.0;    // pairing vs the conformally flat pattern
};

inline GaussReport gauss_residuals(const ImmersionGeometry& G, const AdaptedFrameData& ad,
                                   const SffData& sff, const TransportedTarget& tt) {
  const int n = G.n, d = G.d;
  const ContextPtr& ctx = G.co.chart->ctx;
  GaussReport rep;

  IndexedTensor G4 = IndexedTensor::make(
      {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()}, {n, n, n, n}, ctx, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          Jet acc(ctx, ctx->order());
          for (int c = 0; c < d; ++c)
            acc += sff.omega.at({a, c, m}) * sff.omega.at({b, c, nu}).conjugated();
          G4.at({a, b, m, nu}) = acc;
        }
  rep.g_norm = G4.norm_jets();
  rep.g_flat_residual = conformal_flat_decompose(G4).residual;

  const std::vector<int> off = {0, 0, 0, 0}, len = {n, n, n, n};
  const std::vector<IndexSpec> sig4 = {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()};
  const IndexedTensor Rt = take_block(tt.R, off, len, sig4);
  const IndexedTensor St = take_block(tt.S, off, len, sig4);
  const IndexedTensor R_src = curvature_lowered(ad.cv_src);

  for (size_t i = 0; i < Rt.data.size(); ++i)
    rep.psh_residual = std::max(
        rep.psh_residual, jet_distance(Rt.data[i], R_src.data[i] + G4.data[i]));

  {
    const IndexedTensor Sb = traceless_project(St);
    const IndexedTensor S_src = chern_moser_tensor(ad.cv_src);
    const IndexedTensor Gb = traceless_project(G4);
    for (size_t i = 0; i < Sb.data.size(); ++i)
      rep.cm_residual = std::max(
          rep.cm_residual, jet_distance(Sb.data[i], S_src.data[i] + Gb.data[i]));
  }

  // explicit-trace route: [X] = X - pattern(tr X)/(n+2)
  //                               + pattern(id * trtr X / 2)/((n+1)(n+2))
  {
    auto tr1 = [&](const IndexedTensor& T) {
      std::vector<std::vector<Jet>> t(n, std::vector<Jet>(n, Jet(ctx, ctx->order())));
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Jet acc(ctx, ctx->order());
          for (int m = 0; m < n; ++m) acc += T.at({m, m, a, b});
          t[a][b] = acc;
        }
      return t;
    };
    auto scaled_id = [&](const Jet& s) {
      std::vector<std::vector<Jet>> t(n, std::vector<Jet>(n, Jet(ctx, ctx->order())));
      for (int a = 0; a < n; ++a) t[a][a] = s * Complex(0.5);
      return t;
    };
    auto combo = [&](const IndexedTensor& T) {
      auto t = tr1(T);
      Jet tt2(ctx, ctx->order());
      for (int a = 0; a < n; ++a) tt2 += t[a][a];
      IndexedTensor p1 = conformal_flat_pattern(t);
      IndexedTensor p2 = conformal_flat_pattern(scaled_id(tt2));
      IndexedTensor r = T;
      const double c1 = 1.0 / double(n + 2);
      const double c2 = 1.0 / double((n + 1) * (n + 2));
      for (size_t i = 0; i < r.data.size(); ++i)
        r.data[i] = T.data[i] - Complex(c1) * p1.data[i] + Complex(c2) * p2.data[i];
      return r;
    };
    const IndexedTensor Sexp = combo(St);
    const IndexedTensor Gexp = combo(G4);
    const IndexedTensor S_src = chern_moser_tensor(ad.cv_src);
    for (size_t i = 0; i < Sexp.data.size(); ++i)
      rep.expanded_residual = std::max(
          rep.expanded_residual,
          jet_distance(S_src.data[i], Sexp.data[i] - Gexp.data[i]));

    // contracted relation: source trace = transported trace - pairing trace
    auto rt = tr1(Rt);
    auto gt = tr1(G4);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        rep.ricci_residual = std::max(
            rep.ricci_residual,
            jet_distance(ad.cv_src.ricci.at({a, b}), rt[a][b] - gt[a][b]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Connection coefficients induced by the ambient relation between the two
// pseudoconformal structures, each by a trace formula and by transporting the
// target coefficient and subtracting the source one.

struct InducedReport {
  IndexedTensor C;          // transported-difference route
  IndexedTensor C_formula;  // curvature/pairing trace route
  double c_agreement = 0.0;
  double c_norm = 0.0;
  IndexedTensor F;          // transported-difference route
  IndexedTensor F_formula;  // divergence-of-C route
  double f_agreement = 0.0;
  double f_norm = 0.0;
  bool f_available = false;  // needs n >= 2
  Jet A;                     // transported-difference route
  Jet A_formula;             // divergence/pairing route, spherical targets
  double a_agreement = 0.0;
  double a_norm = 0.0;
  double a_imag = 0.0;
  bool a_available = false;
  double vtrace_residual = 0.0;  // slot identity tying the mixed trace to C and F
  bool vtrace_available = false;
  int c_trusted = -1, f_trusted = -1, a_trusted = -1;
};

inline InducedReport induced_connection_coefficients(const ImmersionGeometry& G,
                                                     const AdaptedFrameData& ad,
                                                     const SffData& sff,
                                                     const CodazziReport& cod,
                                                     const TransportedTarget& tt) {
  const int n = G.n, d = G.d;
  const ContextPtr& ctx = G.co.chart->ctx;
  const Complex I(0.0, 1.0);
  const DebData deb_src = deb_coefficients(ad.cv_src, ad.wc_src);

  InducedReport rep;
  rep.C = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      rep.C.at({a, b}) = tt.D.at({a, b}) - deb_src.D.at({a, b});
  rep.c_norm = rep.C.norm_jets();
  rep.c_trusted = rep.C.data[0].trusted();

  // trace route: normal trace of the transported traceless curvature plus the
  // pairing trace, with the doubly traced part spread over the identity
  {
    std::vector<std::vector<Jet>> st(n, std::vector<Jet>(n, Jet(ctx, ctx->order())));
    std::vector<std::vector<Jet>> gt = st;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Jet s(ctx, ctx->order()), g(ctx, ctx->order());
        for (int c = 0; c < d; ++c) s += tt.S.at({n + c, n + c, a, b});
        for (int m = 0; m < n; ++m)
          for (int c = 0; c < d; ++c)
            g += sff.omega.at({m, c, a}) * sff.omega.at({m, c, b}).conjugated();
        st[a][b] = s;
        gt[a][b] = g;
      }
    Jet stt(ctx, ctx->order()), gtt(ctx, ctx->order());
    for (int a = 0; a < n; ++a) {
      stt += st[a][a];
      gtt += gt[a][a];
    }
    rep.C_formula = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx, 0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Jet v = (I / double(n + 2)) * (st[a][b] + gt[a][b]);
        if (a == b) v -= (I / double(2 * (n + 1) * (n + 2))) * (stt + gtt);
        rep.C_formula.at({a, b}) = v;
      }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        rep.c_agreement = std::max(
            rep.c_agreement, jet_distance(rep.C.at({a, b}), rep.C_formula.at({a, b})));
  }

  rep.F = IndexedTensor::make({idx_up()}, {n}, ctx, 0);
  for (int a = 0; a < n; ++a) rep.F.at({a}) = tt.E.at({a}) - deb_src.E.at({a});
  rep.f_norm = rep.F.norm_jets();
  rep.f_trusted = rep.F.data[0].trusted();

  const IndexedTensor dC = covariant_derivative(rep.C, ad.wc_src);
  rep.f_available = n >= 2;
  if (rep.f_available) {
    rep.F_formula = IndexedTensor::make({idx_up()}, {n}, ctx, 0);
    for (int a = 0; a < n; ++a) {
      Jet acc(ctx, ctx->order());
      for (int m = 0; m < n; ++m)
        acc += dC.at({m, a, 1 + n + m}) - dC.at({m, m, 1 + n + a});
      rep.F_formula.at({a}) = acc * (Complex(2.0) / (I * double(n - 1)));
    }
    for (int a = 0; a < n; ++a)
      rep.f_agreement = std::max(
          rep.f_agreement, jet_distance(rep.F.at({a}), rep.F_formula.at({a})));
  }

  rep.A = tt.B - deb_src.B;
  rep.a_norm = rep.A.max_abs();
  rep.a_trusted = rep.A.trusted();
  rep.a_imag = ((rep.A - rep.A.conjugated()) * Complex(0.5)).max_abs();

  // divergence route; the curvature trace of a spherical target drops out
  rep.a_available = tt.target_s_norm < 1e-7 && rep.a_trusted >= 0;
  if (rep.a_available) {
    IndexedTensor Fup = rep.F;
    IndexedTensor Fdn = IndexedTensor::make({idx_down()}, {n}, ctx, 0);
    for (int a = 0; a < n; ++a) Fdn.at({a}) = rep.F.at({a}).conjugated();
    const IndexedTensor dFup = covariant_derivative(Fup, ad.wc_src);
    const IndexedTensor dFdn = covariant_derivative(Fdn, ad.wc_src);
    Jet div(ctx, ctx->order());
    for (int m = 0; m < n; ++m)
      div += dFup.at({m, 1 + m}) + dFdn.at({m, 1 + n + m});
    Jet cc(ctx, ctx->order()), cd(ctx, ctx->order()), dd(ctx, ctx->order());
    for (int m = 0; m < n; ++m)
      for (int g = 0; g < n; ++g) {
        cc += rep.C.at({m, g}) * rep.C.at({m, g}).conjugated();
        const Jet x = rep.C.at({m, g}) * deb_src.D.at({m, g}).conjugated();
        cd += x + x.conjugated();
      }
    for (int m = 0; m < n; ++m)
      for (int c = 0; c < d; ++c)
        dd += cod.dhat.at({m, c}) * cod.dhat.at({m, c}).conjugated();
    rep.A_formula = (div + Complex(2.0) * (cc + cd + dd)) * Complex(1.0 / double(n));
    rep.a_agreement = jet_distance(rep.A, rep.A_formula);
    rep.a_imag = std::max(rep.a_imag,
                          ((rep.A_formula - rep.A_formula.conjugated()) * Complex(0.5)).max_abs());
  }

  // slot identity: the paired mixed coefficients reproduce the divergence
  // sources of the source structure equations
  rep.vtrace_available = tt.target_s_norm < 1e-7 && rep.f_available;
  if (rep.vtrace_available) {
    const PhiForms ph_src = pulled_back_phi_forms(ad.wc_src, deb_src);
    const CmStructureReport rep_src =
        cm_structure_residuals(ad.wc_src, ad.cv_src, deb_src, ph_src);
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          Jet r(ctx, ctx->order());
          for (int c = 0; c < d; ++c)
            r -= cod.dhat.at({m, c}) * sff.omega.at({a, c, nu}).conjugated();
          if (m == nu) r -= I * rep.F.at({a});
          if (m == a) r -= (I * 0.5) * rep.F.at({nu});
          r -= rep_src.V6.at({a, m, nu});
          r += dC.at({m, a, 1 + n + nu});
          rep.vtrace_residual = std::max(rep.vtrace_residual, r.max_abs());
        }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Polarization identity for pairs of quadratic forms whose squared moduli
// differ by a product with the hermitian norm: the coefficient difference
// tensor lies in the conformally flat pattern and the hermitian factor is
// recovered from its traces.

struct HuangReport {
  std::vector<std::vector<Complex>> H;
  double decomposition_residual = 0.0;
  double sample_residual = 0.0;
  int samples = 0;
};

inline HuangReport huang_polarization_check(const std::vector<std::vector<Complex>>& Q,
                                            const std::vector<std::vector<Complex>>& Qt,
                                            int samples = 20) {
  const int n = static_cast<int>(Q.size());
  if (n == 0 || static_cast<int>(Qt.size()) != n)
    throw std::invalid_argument("polarization check: coefficient arity mismatch");
  auto sym = [&](const std::vector<std::vector<Complex>>& M) {
    std::vector<std::vector<Complex>> r(n, std::vector<Complex>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r[a][b] = (M[a][b] + M[b][a]) * 0.5;
    return r;
  };
  const auto Qs = sym(Q), Qts = sym(Qt);

  const ContextPtr ctx0 = get_context(1, 0);
  IndexedTensor T = IndexedTensor::make(
      {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()}, {n, n, n, n}, ctx0, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu)
          T.at({a, b, m, nu}) = Jet::constant(
              ctx0, Qs[a][m] * std::conj(Qs[b][nu]) - Qts[a][m] * std::conj(Qts[b][nu]));

  HuangReport rep;
  const FlatDecomposition dec = conformal_flat_decompose(T);
  rep.decomposition_residual = dec.residual;
  rep.H.assign(n, std::vector<Complex>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) rep.H[a][b] = 4.0 * dec.H[a][b].value();

  std::mt19937 rng(20240531);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    std::vector<Complex> z(n);
    for (auto& e : z) e = Complex(gauss(rng), gauss(rng));
    Complex q = 0.0, qt = 0.0, h = 0.0;
    double zz = 0.0;
    for (int a = 0; a < n; ++a) {
      zz += std::norm(z[a]);
      for (int b = 0; b < n; ++b) {
        q += Qs[a][b] * z[a] * z[b];
        qt += Qts[a][b] * z[a] * z[b];
        h += rep.H[a][b] * z[a] * std::conj(z[b]);
      }
    }
    const double lhs = std::norm(q) - std::norm(qt);
    const double rhs = zz * h.real();
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    rep.sample_residual = std::max(rep.sample_residual, std::abs(lhs - rhs) / scale);
    rep.sample_residual = std::max(rep.sample_residual, std::abs(h.imag()) / scale);
  }
  return rep;
}

}  // namespace crgeo
