#pragma once

// Webster connection machinery for a normalized admissible coframe (Levi
// form = identity):
//
//   d theta^beta = theta^alpha ^ omega_alpha^beta + theta ^ tau^beta,
//   tau^beta     = A^beta_nubar theta^nubar,
//   omega_alpha^beta + conj(omega_beta^alpha) = 0  (as 1-forms),
//
// posed as one dense real-split linear system over all omega coefficients
// and torsion entries at once.  Curvature, Ricci/scalar traces, and
// covariant differentiation of indexed tensors live here too.

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "crgeo/forms.hpp"

namespace crgeo {

inline CoframeForm1 theta_form(const AdmissibleCoframe& co) {
  CoframeForm1 w = coframe_form1(co.n, co.chart->ctx);
  w.th() = Jet::constant(co.chart->ctx, 1.0);
  return w;
}

inline CoframeForm1 theta_a_form(const AdmissibleCoframe& co, int alpha, bool barred = false) {
  CoframeForm1 w = coframe_form1(co.n, co.chart->ctx);
  (barred ? w.hb(alpha) : w.h(alpha)) = Jet::constant(co.chart->ctx, 1.0);
  return w;
}

struct WebsterConnection {
  AdmissibleCoframe co;
  std::vector<std::vector<CoframeForm1>> omega;  // omega[a][b] = omega_alpha^beta
  std::vector<std::vector<Jet>> A;               // A[b][m]: theta^mubar coefficient of tau^beta
  std::vector<CoframeForm1> tau;
  std::vector<CoframeForm2> dtheta_a;
  // worst defect over the structure equations, skew-hermitian rows, and
  // torsion symmetry, as jets
  double solve_residual = 0.0;
};

inline WebsterConnection webster_connection(const AdmissibleCoframe& co) {
  const int n = co.n;
  const ContextPtr& ctx = co.chart->ctx;

  WebsterConnection wc;
  wc.co = co;
  for (int b = 0; b < n; ++b)
    wc.dtheta_a.push_back(to_coframe(d_chart(co.theta_a[b]), co));
  const int t0 = wc.dtheta_a[0].c[0].trusted();

  // complex unknown layout: p[a][b] (theta comp), q[a][m][b] (theta^mu),
  // r[a][m][b] (theta^mubar), A[b][m]
  const int kP = 0;
  const int kQ = n * n;
  const int kR = kQ + n * n * n;
  const int kA = kR + n * n * n;
  const int NC = kA + n * n;
  auto up = [&](int a, int b) { return kP + a * n + b; };
  auto uq = [&](int a, int m, int b) { return kQ + (a * n + m) * n + b; };
  auto ur = [&](int a, int m, int b) { return kR + (a * n + m) * n + b; };
  auto ua = [&](int b, int m) { return kA + b * n + m; };

  const int NE = 3 * n * n + n * n * (n - 1) / 2 + 2 * n * n * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * NE, 2 * NC);
  std::vector<const Jet*> rhs_jet(NE, nullptr);
  int e = 0;
  // real coefficient s on the unknown itself / on its conjugate
  auto lin = [&](int u, double s) {
    M(2 * e, 2 * u) += s;
    M(2 * e + 1, 2 * u + 1) += s;
  };
  auto con = [&](int u, double s) {
    M(2 * e, 2 * u) += s;
    M(2 * e + 1, 2 * u + 1) -= s;
  };

  for (int b = 0; b < n; ++b)
    for (int m = 0; m < n; ++m) {  // theta^theta^mu slot: -p_mu^beta
      lin(up(m, b), -1.0);
      rhs_jet[e] = &wc.dtheta_a[b].th_h(m);
      ++e;
    }
  for (int b = 0; b < n; ++b)
    for (int m = 0; m < n; ++m) {  // theta^theta^mubar slot: A^beta_mubar
      lin(ua(b, m), 1.0);
      rhs_jet[e] = &wc.dtheta_a[b].th_hb(m);
      ++e;
    }
  for (int b = 0; b < n; ++b)
    for (int m = 0; m < n; ++m)
      for (int nu = m + 1; nu < n; ++nu) {  // theta^mu^theta^nu slot
        lin(uq(m, nu, b), 1.0);
        lin(uq(nu, m, b), -1.0);
        rhs_jet[e] = &wc.dtheta_a[b].hh(m, nu);
        ++e;
      }
  for (int b = 0; b < n; ++b)
    for (int m = 0; m < n; ++m)
      for (int nu = 0; nu < n; ++nu) {  // theta^mu^theta^nubar slot
        lin(ur(m, nu, b), 1.0);
        rhs_jet[e] = &wc.dtheta_a[b].hhb(m, nu);
        ++e;
      }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {  // skew-hermitian, theta component
      lin(up(a, b), 1.0);
      con(up(b, a), 1.0);
      ++e;
    }
  for (int a = 0; a < n; ++a)
    for (int m = 0; m < n; ++m)
      for (int b = 0; b < n; ++b) {  // skew-hermitian, theta^mu component
        lin(uq(a, m, b), 1.0);
        con(ur(b, m, a), 1.0);
        ++e;
      }
  if (e != NE) throw std::logic_error("webster_connection: equation count");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  if (qr.rank() < 2 * NC)
    throw std::runtime_error("webster_connection: structure system rank-deficient");

  wc.omega.assign(n, std::vector<CoframeForm1>(
                         n, CoframeForm1{n, JetVector(2 * n + 1, Jet(ctx, t0))}));
  wc.A.assign(n, std::vector<Jet>(n, Jet(ctx, t0)));

  const int bound = ctx->first_of_degree(std::min(t0, ctx->order()) + 1);
  Eigen::VectorXd rhs(2 * NE), x(2 * NC);
  for (int i = 0; i < bound; ++i) {
    for (int k = 0; k < NE; ++k) {
      const Complex s = rhs_jet[k] ? rhs_jet[k]->raw(i) : Complex(0.0);
      rhs(2 * k) = s.real();
      rhs(2 * k + 1) = s.imag();
    }
    x = qr.solve(rhs);
    auto val = [&](int u) { return Complex(x(2 * u), x(2 * u + 1)); };
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        wc.omega[a][b].th().raw(i) = val(up(a, b));
        for (int m = 0; m < n; ++m) {
          wc.omega[a][b].h(m).raw(i) = val(uq(a, m, b));
          wc.omega[a][b].hb(m).raw(i) = val(ur(a, m, b));
        }
        wc.A[a][b].raw(i) = val(ua(a, b));
      }
  }

  for (int b = 0; b < n; ++b) {
    CoframeForm1 t{n, JetVector(2 * n + 1, Jet(ctx, t0))};
    for (int m = 0; m < n; ++m) t.hb(m) = wc.A[b][m];
    wc.tau.push_back(t);
  }

  const CoframeForm1 th = theta_form(co);
  double resid = 0.0;
  for (int b = 0; b < n; ++b) {
    CoframeForm2 rec = wedge(th, wc.tau[b]);
    for (int a = 0; a < n; ++a)
      rec = rec + wedge(theta_a_form(co, a), wc.omega[a][b]);
    resid = std::max(resid, max_abs(wc.dtheta_a[b] - rec));
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      resid = std::max(resid, max_abs(wc.omega[a][b] + conj_coframe(wc.omega[b][a])));
      resid = std::max(resid, jet_distance(wc.A[a][b], wc.A[b][a]));
    }
  wc.solve_residual = resid;
  return wc;
}

// ---------------------------------------------------------------------------
// Curvature

struct WebsterCurvature {
  IndexedTensor R;    // R_alpha^beta_{mu nubar}
  IndexedTensor Wm;   // W_alpha^beta_mu
  IndexedTensor Wmb;  // W^beta_{alpha mubar}
  IndexedTensor ricci;
  Jet scalar;
  // leftover in the theta^mu^theta^nu and conjugate slots after the
  // explicit torsion terms are subtracted
  double decomposition_residual = 0.0;
  double hermitian_deviation = 0.0;
};

inline WebsterCurvature webster_curvature(const WebsterConnection& wc) {
  const AdmissibleCoframe& co = wc.co;
  const int n = co.n;
  const ContextPtr& ctx = co.chart->ctx;
  const Complex I(0.0, 1.0);

  WebsterCurvature cv;
  cv.R = IndexedTensor::make({idx_down(), idx_up(), idx_down(), idx_down_bar()},
                             {n, n, n, n}, ctx, 0);
  cv.Wm = IndexedTensor::make({idx_down(), idx_up(), idx_down()}, {n, n, n}, ctx, 0);
  cv.Wmb = IndexedTensor::make({idx_down(), idx_up(), idx_down_bar()}, {n, n, n}, ctx, 0);

  double resid = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      CoframeForm2 Pi = exterior_derivative(wc.omega[a][b], co);
      for (int g = 0; g < n; ++g) Pi = Pi - wedge(wc.omega[a][g], wc.omega[g][b]);

      for (int m = 0; m < n; ++m) {
        cv.Wm.at({a, b, m}) = -Pi.th_h(m);
        cv.Wmb.at({a, b, m}) = Pi.th_hb(m);
        for (int nu = 0; nu < n; ++nu) cv.R.at({a, b, m, nu}) = Pi.hhb(m, nu);
      }
      for (int m = 0; m < n; ++m)
        for (int nu = m + 1; nu < n; ++nu) {
          Jet ehh(ctx, wc.A[0][0].trusted());
          if (nu == b) ehh -= I * wc.A[a][m].conjugated();
          if (m == b) ehh += I * wc.A[a][nu].conjugated();
          resid = std::max(resid, jet_distance(Pi.hh(m, nu), ehh));
          Jet ebb(ctx, wc.A[0][0].trusted());
          if (a == m) ebb += I * wc.A[b][nu];
          if (a == nu) ebb -= I * wc.A[b][m];
          resid = std::max(resid, jet_distance(Pi.hbhb(m, nu), ebb));
        }
    }
  cv.decomposition_residual = resid;
  cv.hermitian_deviation = hermitian_symmetry_deviation(cv.R);

  cv.ricci = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx,
                                 cv.R.data[0].trusted());
  cv.scalar = Jet(ctx, cv.R.data[0].trusted());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      for (int m = 0; m < n; ++m) cv.ricci.at({a, b}) += cv.R.at({m, m, a, b});
      if (a == b) cv.scalar += cv.ricci.at({a, b});
    }
  return cv;
}

// numerically equal view of R_alpha^beta_{mu nubar} with the beta index
// lowered by g = delta
inline IndexedTensor curvature_lowered(const WebsterCurvature& cv) {
  IndexedTensor t = cv.R;
  t.sig = {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()};
  return t;
}

inline IndexedTensor metric_tensor(const WebsterConnection& wc) {
  const int n = wc.co.n;
  const ContextPtr& ctx = wc.co.chart->ctx;
  IndexedTensor g = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx,
                                        ctx->order());
  for (int a = 0; a < n; ++a) g.at({a, a}) = Jet::constant(ctx, 1.0);
  return g;
}

// ---------------------------------------------------------------------------
// Covariant differentiation
//
// Appends one direction slot over {0, mu, mubar}: value 0 is the Reeb
// direction, 1..n the (1,0) frame, n+1..2n its conjugate.  The Reeb field
// and theta are parallel, so direction slots of earlier derivatives only
// pick up omega corrections in their frame range.

struct FrameDirections {
  std::vector<VectorField> X;  // 2n+1 fields
};

inline FrameDirections frame_directions(const AdmissibleCoframe& co) {
  FrameDirections fd;
  fd.X.push_back(co.T);
  for (int m = 0; m < co.n; ++m) fd.X.push_back(co.L[m]);
  for (int m = 0; m < co.n; ++m) fd.X.push_back(conj_field(co.L[m]));
  return fd;
}

inline IndexedTensor covariant_derivative(const IndexedTensor& T,
                                          const WebsterConnection& wc) {
  const int n = wc.co.n;
  const ContextPtr& ctx = wc.co.chart->ctx;
  const FrameDirections fd = frame_directions(wc.co);
  const int nd = 2 * n + 1;

  // omega_alpha^beta and its conjugate form evaluated on frame directions
  std::vector<std::vector<std::vector<Jet>>> wv(
      n, std::vector<std::vector<Jet>>(n)), wvb = wv;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const CoframeForm1& w = wc.omega[a][b];
      wv[a][b].push_back(w.th());
      wvb[a][b].push_back(w.th().conjugated());
      for (int m = 0; m < n; ++m) wv[a][b].push_back(w.h(m));
      for (int m = 0; m < n; ++m) wv[a][b].push_back(w.hb(m));
      for (int m = 0; m < n; ++m) wvb[a][b].push_back(w.hb(m).conjugated());
      for (int m = 0; m < n; ++m) wvb[a][b].push_back(w.h(m).conjugated());
    }

  std::vector<IndexSpec> sig = T.sig;
  sig.push_back(idx_direction());
  std::vector<int> dims = T.dims;
  dims.push_back(nd);
  IndexedTensor out = IndexedTensor::make(sig, dims, ctx, 0);

  for (const IndexSpec& s : T.sig)
    if (s.normal)
      throw std::invalid_argument(
          "covariant_derivative: normal indices need the immersion-side connection");

  const int rank = static_cast<int>(T.sig.size());
  std::vector<int> idx(rank, 0);
  while (true) {
    for (int dir = 0; dir < nd; ++dir) {
      Jet v = apply_field(fd.X[dir], T.at(idx));
      std::vector<int> jdx = idx;
      for (int p = 0; p < rank; ++p) {
        const IndexSpec& s = T.sig[p];
        const int ip = idx[p];
        if (s.direction) {
          if (ip == 0) continue;
          const bool bar = ip > n;
          const int m = bar ? ip - 1 - n : ip - 1;
          for (int g = 0; g < n; ++g) {
            jdx[p] = bar ? 1 + n + g : 1 + g;
            v -= (bar ? wvb : wv)[m][g][dir] * T.at(jdx);
          }
        } else if (s.up) {
          for (int g = 0; g < n; ++g) {
            jdx[p] = g;
            v += T.at(jdx) * (s.barred ? wvb : wv)[g][ip][dir];
          }
        } else {
          for (int g = 0; g < n; ++g) {
            jdx[p] = g;
            v -= (s.barred ? wvb : wv)[ip][g][dir] * T.at(jdx);
          }
        }
        jdx[p] = ip;
      }
      std::vector<int> odx = idx;
      odx.push_back(dir);
      out.at(odx) = v;
    }
    int p = rank - 1;
    while (p >= 0 && ++idx[p] == T.dims[p]) idx[p--] = 0;
    if (p < 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lee identity: W_alpha^beta_mu = A_{alpha mu;}^beta and
// W^beta_{alpha nubar} = A^beta_{nubar;alpha}, compared at the base point.

struct LeeReport {
  double w_residual = 0.0;     // at the base point
  double wbar_residual = 0.0;
  double w_norm = 0.0;
  double wbar_norm = 0.0;
  double w_residual_jets = 0.0;  // through the trusted jet order
  double wbar_residual_jets = 0.0;
  double w_norm_jets = 0.0;
  double wbar_norm_jets = 0.0;
};

inline LeeReport lee_identity_residual(const WebsterCurvature& cv,
                                       const WebsterConnection& wc) {
  const int n = wc.co.n;
  const ContextPtr& ctx = wc.co.chart->ctx;
  const int ta = wc.A[0][0].trusted();

  IndexedTensor Alow =
      IndexedTensor::make({idx_down(), idx_down()}, {n, n}, ctx, ta);
  IndexedTensor Amix =
      IndexedTensor::make({idx_up(), idx_down_bar()}, {n, n}, ctx, ta);
  for (int a = 0; a < n; ++a)
    for (int m = 0; m < n; ++m) {
      Alow.at({a, m}) = wc.A[a][m].conjugated();
      Amix.at({a, m}) = wc.A[a][m];
    }
  IndexedTensor dAlow = covariant_derivative(Alow, wc);
  IndexedTensor dAmix = covariant_derivative(Amix, wc);

  LeeReport rep;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m) {
        rep.w_residual = std::max(
            rep.w_residual, std::abs(cv.Wm.at({a, b, m}).value() -
                                     dAlow.at({a, m, 1 + n + b}).value()));
        rep.wbar_residual = std::max(
            rep.wbar_residual, std::abs(cv.Wmb.at({a, b, m}).value() -
                                        dAmix.at({b, m, 1 + a}).value()));
        rep.w_residual_jets = std::max(
            rep.w_residual_jets,
            jet_distance(cv.Wm.at({a, b, m}), dAlow.at({a, m, 1 + n + b})));
        rep.wbar_residual_jets = std::max(
            rep.wbar_residual_jets,
            jet_distance(cv.Wmb.at({a, b, m}), dAmix.at({b, m, 1 + a})));
      }
  rep.w_norm = cv.Wm.norm_at_base();
  rep.wbar_norm = cv.Wmb.norm_at_base();
  rep.w_norm_jets = cv.Wm.norm_jets();
  rep.wbar_norm_jets = cv.Wmb.norm_jets();
  return rep;
}

// ---------------------------------------------------------------------------
// Constant unitary rotation of the (1,0) coframe; theta, T, and the Levi
// normalization are untouched.

inline AdmissibleCoframe rotate_coframe(const AdmissibleCoframe& co,
                                        const std::vector<std::vector<Complex>>& U) {
  const int n = co.n;
  AdmissibleCoframe r = co;
  for (int a = 0; a < n; ++a) {
    ChartForm1 th = Complex(0.0) * co.theta_a[0];
    VectorField Lf = co.L[0];
    for (auto& comp : Lf.comp) comp = Complex(0.0) * comp;
    for (int b = 0; b < n; ++b) {
      th = th + U[a][b] * co.theta_a[b];
      for (size_t k = 0; k < Lf.comp.size(); ++k)
        Lf.comp[k] += std::conj(U[a][b]) * co.L[b].comp[k];
    }
    r.theta_a[a] = th;
    r.L[a] = Lf;
  }
  return r;
}

}  // namespace crgeo
