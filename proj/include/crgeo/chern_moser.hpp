#pragma once

// Pseudoconformal layer on top of the Webster connection: the totally
// trace-free fourth-order curvature tensor, the D/E/B coefficients that
// promote (omega, tau) to the pulled-back connection forms
// (phi_beta^alpha, phi^alpha, psi), and residual checks for the full
// pulled-back structure-equation system with its trace and symmetry
// constraints.
//
// Index conventions follow the Webster layer: the Levi metric is the
// identity in an admissible normalized coframe, so raising or lowering an
// index never changes a stored value, only the slot tag.  Barred lower
// components of an unbarred vector are plain metric transports (E_nubar has
// the entries of E^nu); conjugation enters only through explicitly
// conjugated tensors.

#include "crgeo/webster.hpp"

namespace crgeo {

// totally trace-free part of the lowered curvature
inline IndexedTensor chern_moser_tensor(const WebsterCurvature& cv) {
  return traceless_project(curvature_lowered(cv));
}

struct DebData {
  IndexedTensor D;  // D_{alpha betabar}
  IndexedTensor E;  // E^alpha
  Jet B;
  double d_herm_deviation = 0.0;  // how far iD is from hermitian
  double b_imag = 0.0;            // imaginary residue of B
};

// D from the Ricci contraction, E from covariant divergences of A and D,
// B from the divergence of E plus the |A|^2 and |D|^2 pairings.  The
// |D|^2 term uses the conjugate pairing: with D skew-hermitian this is the
// sign that kills the P-trace on the standard sphere.
inline DebData deb_coefficients(const WebsterCurvature& cv,
                                const WebsterConnection& wc) {
  const int n = wc.co.n;
  const ContextPtr& ctx = wc.co.chart->ctx;
  const Complex I(0.0, 1.0);

  DebData deb;
  const int tR = cv.ricci.data[0].trusted();
  deb.D = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx, tR);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      deb.D.at({a, b}) = (I / double(n + 2)) * cv.ricci.at({a, b});
      if (a == b)
        deb.D.at({a, b}) -= (I / double(2 * (n + 1) * (n + 2))) * cv.scalar;
    }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      deb.d_herm_deviation =
          std::max(deb.d_herm_deviation,
                   jet_distance(deb.D.at({a, b}), -deb.D.at({b, a}).conjugated()));

  IndexedTensor Aupup = IndexedTensor::make({idx_up(), idx_up()}, {n, n}, ctx,
                                            wc.A[0][0].trusted());
  for (int a = 0; a < n; ++a)
    for (int m = 0; m < n; ++m) Aupup.at({a, m}) = wc.A[a][m];
  IndexedTensor Dup = deb.D;
  Dup.sig = {idx_up_bar(), idx_up()};
  const IndexedTensor dA = covariant_derivative(Aupup, wc);
  const IndexedTensor dD = covariant_derivative(Dup, wc);

  deb.E = IndexedTensor::make({idx_up()}, {n}, ctx, 0);
  const Complex cE = 2.0 * I / double(2 * n + 1);
  for (int a = 0; a < n; ++a) {
    Jet s = dA.at({a, 0, 1}) - dD.at({0, a, 1 + n});
    for (int m = 1; m < n; ++m)
      s = s + dA.at({a, m, 1 + m}) - dD.at({m, a, 1 + n + m});
    deb.E.at({a}) = cE * s;
  }

  IndexedTensor Ebar = deb.E;
  Ebar.sig = {idx_up_bar()};
  for (Jet& f : Ebar.data) f = f.conjugated();
  const IndexedTensor dE = covariant_derivative(deb.E, wc);
  const IndexedTensor dEb = covariant_derivative(Ebar, wc);

  Jet acc = dE.at({0, 1}) + dEb.at({0, 1 + n});
  for (int m = 1; m < n; ++m) acc = acc + dE.at({m, 1 + m}) + dEb.at({m, 1 + n + m});
  for (int b = 0; b < n; ++b)
    for (int m = 0; m < n; ++m) {
      acc -= Complex(2.0) * (wc.A[b][m] * wc.A[b][m].conjugated());
      acc += Complex(2.0) * (deb.D.at({b, m}) * deb.D.at({b, m}).conjugated());
    }
  deb.B = acc * (Complex(1.0) / double(n));
  deb.b_imag = imag_part(deb.B).max_abs();
  return deb;
}

struct PhiForms {
  std::vector<std::vector<CoframeForm1>> phi;  // phi[b][a] = phi_beta^alpha
  std::vector<CoframeForm1> phi_a;             // phi^alpha
  CoframeForm1 psi;
  double skew_residual = 0.0;  // phi_beta^alpha + conj(phi_alpha^beta)
};

// phi_beta^alpha = omega_beta^alpha + D_beta^alpha theta
// phi^alpha      = tau^alpha + D_mu^alpha theta^mu + E^alpha theta
// psi            = i E_mu theta^mu - i E_nubar theta^nubar + B theta
inline PhiForms pulled_back_phi_forms(const WebsterConnection& wc,
                                      const DebData& deb) {
  const int n = wc.co.n;
  const ContextPtr& ctx = wc.co.chart->ctx;
  const Complex I(0.0, 1.0);

  PhiForms ph;
  ph.phi = wc.omega;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) ph.phi[b][a].th() += deb.D.at({b, a});

  ph.phi_a = wc.tau;
  for (int a = 0; a < n; ++a) {
    for (int m = 0; m < n; ++m) ph.phi_a[a].h(m) += deb.D.at({m, a});
    ph.phi_a[a].th() += deb.E.at({a});
  }

  ph.psi = coframe_form1(n, ctx);
  ph.psi.th() = deb.B;
  for (int m = 0; m < n; ++m) {
    ph.psi.h(m) = I * deb.E.at({m}).conjugated();
    ph.psi.hb(m) = -I * deb.E.at({m});
  }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      ph.skew_residual = std::max(
          ph.skew_residual, max_abs(ph.phi[a][b] + conj_coframe(ph.phi[b][a])));
  return ph;
}

struct CmStructureReport {
  // rows of the pulled-back structure system; eq1 is the hermitian pairing
  // condition on phi_beta^alpha (the scalar form vanishes on pullback)
  double eq1_residual = 0.0;
  double eq2_residual = 0.0;
  double eq3_residual = 0.0;
  double eq4_residual = 0.0;
  // slots of the curvature 2-forms that the decompositions say must vanish
  double eq5_offslot = 0.0;
  double eq6_offslot = 0.0;
  double eq7_offslot = 0.0;  // includes the deviation of Psi from a real form

  IndexedTensor S;     // S_beta^alpha_{mu nubar} from Phi_beta^alpha
  IndexedTensor Vbam;  // V_beta^alpha_mu from Phi_beta^alpha
  IndexedTensor V5;    // V^alpha_{beta nubar} from Phi_beta^alpha
  IndexedTensor V6;    // V^alpha_{mu nubar} from Phi^alpha
  IndexedTensor P;     // P_mu^alpha from Phi^alpha
  IndexedTensor Q;     // Q_nubar^alpha from Phi^alpha
  IndexedTensor Pmn;   // P_{mu nubar} from Psi
  JetVector Rmu;       // R_mu from Psi

  double s_trace = 0.0;
  double v_trace = 0.0;
  double p_trace = 0.0;
  double s_symmetry = 0.0;
  double v_cross = 0.0;        // V read off eq5 vs eq6
  double p_cross = 0.0;        // P read off eq6 vs eq7
  double s_vs_projection = 0.0;
  double e_dual_route = 0.0;   // E formula vs traced curvature identity
  double v_identity = 0.0;     // untraced A/D derivative identity vs V
};

inline CmStructureReport cm_structure_residuals(const WebsterConnection& wc,
                                                const WebsterCurvature& cv,
                                                const DebData& deb,
                                                const PhiForms& ph) {
  const AdmissibleCoframe& co = wc.co;
  const int n = co.n;
  const ContextPtr& ctx = co.chart->ctx;
  const Complex I(0.0, 1.0);

  CmStructureReport rep;
  rep.eq1_residual = ph.skew_residual;

  const CoframeForm1 th = theta_form(co);
  std::vector<CoframeForm1> tha, thab;
  for (int m = 0; m < n; ++m) {
    tha.push_back(theta_a_form(co, m));
    thab.push_back(theta_a_form(co, m, true));
  }

  {
    CoframeForm2 r = to_coframe(co.dtheta, co);
    for (int m = 0; m < n; ++m) r.hhb(m, m) -= Jet::constant(ctx, I);
    rep.eq2_residual = max_abs(r);
  }

  for (int a = 0; a < n; ++a) {
    CoframeForm2 r = wc.dtheta_a[a] - wedge(th, ph.phi_a[a]);
    for (int m = 0; m < n; ++m) r = r - wedge(tha[m], ph.phi[m][a]);
    rep.eq3_residual = std::max(rep.eq3_residual, max_abs(r));
  }

  {
    CoframeForm2 r = wedge(th, ph.psi);
    for (int m = 0; m < n; ++m)
      r = r + I * wedge(tha[m], conj_coframe(ph.phi_a[m])) +
          I * wedge(ph.phi_a[m], thab[m]);
    rep.eq4_residual = max_abs(r);
  }

  rep.S = IndexedTensor::make({idx_down(), idx_up(), idx_down(), idx_down_bar()},
                              {n, n, n, n}, ctx, 0);
  rep.Vbam = IndexedTensor::make({idx_down(), idx_up(), idx_down()}, {n, n, n},
                                 ctx, 0);
  rep.V5 = IndexedTensor::make({idx_up(), idx_down(), idx_down_bar()}, {n, n, n},
                               ctx, 0);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      CoframeForm2 Phi = exterior_derivative(ph.phi[b][a], co) -
                         I * wedge(thab[b], ph.phi_a[a]) +
                         I * wedge(conj_coframe(ph.phi_a[b]), tha[a]);
      for (int m = 0; m < n; ++m) Phi = Phi - wedge(ph.phi[b][m], ph.phi[m][a]);
      if (a == b) {
        for (int m = 0; m < n; ++m)
          Phi = Phi + I * wedge(conj_coframe(ph.phi_a[m]), tha[m]);
        Phi = Phi + Complex(0.5) * wedge(ph.psi, th);
      }
      for (int m = 0; m < n; ++m) {
        rep.Vbam.at({b, a, m}) = -Phi.th_h(m);
        rep.V5.at({a, b, m}) = Phi.th_hb(m);
        for (int nu = 0; nu < n; ++nu) rep.S.at({b, a, m, nu}) = Phi.hhb(m, nu);
      }
      for (int m = 0; m < n; ++m)
        for (int nu = m + 1; nu < n; ++nu) {
          rep.eq5_offslot = std::max(rep.eq5_offslot, Phi.hh(m, nu).max_abs());
          rep.eq5_offslot = std::max(rep.eq5_offslot, Phi.hbhb(m, nu).max_abs());
        }
    }

  rep.V6 = IndexedTensor::make({idx_up(), idx_down(), idx_down_bar()}, {n, n, n},
                               ctx, 0);
  rep.P = IndexedTensor::make({idx_down(), idx_up()}, {n, n}, ctx, 0);
  rep.Q = IndexedTensor::make({idx_down_bar(), idx_up()}, {n, n}, ctx, 0);
  for (int a = 0; a < n; ++a) {
    CoframeForm2 Phi = exterior_derivative(ph.phi_a[a], co) +
                       Complex(0.5) * wedge(ph.psi, tha[a]);
    for (int m = 0; m < n; ++m) Phi = Phi - wedge(ph.phi_a[m], ph.phi[m][a]);
    for (int m = 0; m < n; ++m) {
      rep.P.at({m, a}) = -Phi.th_h(m);
      rep.Q.at({m, a}) = -Phi.th_hb(m);
      for (int nu = 0; nu < n; ++nu) rep.V6.at({a, m, nu}) = Phi.hhb(m, nu);
    }
    for (int m = 0; m < n; ++m)
      for (int nu = m + 1; nu < n; ++nu) {
        rep.eq6_offslot = std::max(rep.eq6_offslot, Phi.hh(m, nu).max_abs());
        rep.eq6_offslot = std::max(rep.eq6_offslot, Phi.hbhb(m, nu).max_abs());
      }
  }

  {
    CoframeForm2 Psi = exterior_derivative(ph.psi, co);
    for (int m = 0; m < n; ++m)
      Psi = Psi - (2.0 * I) * wedge(ph.phi_a[m], conj_coframe(ph.phi_a[m]));
    rep.Pmn = IndexedTensor::make({idx_down(), idx_down_bar()}, {n, n}, ctx, 0);
    rep.Rmu = JetVector(n, Jet(ctx, 0));
    for (int m = 0; m < n; ++m) {
      rep.Rmu[m] = -Psi.th_h(m);
      for (int nu = 0; nu < n; ++nu)
        rep.Pmn.at({m, nu}) = (Complex(0.5) * I) * Psi.hhb(m, nu);
    }
    for (int m = 0; m < n; ++m)
      for (int nu = m + 1; nu < n; ++nu) {
        rep.eq7_offslot = std::max(rep.eq7_offslot, Psi.hh(m, nu).max_abs());
        rep.eq7_offslot = std::max(rep.eq7_offslot, Psi.hbhb(m, nu).max_abs());
      }
    rep.eq7_offslot = std::max(rep.eq7_offslot, max_abs(Psi - conj_coframe(Psi)));
  }

  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      Jet s = rep.S.at({0, 0, a, b});
      for (int m = 1; m < n; ++m) s = s + rep.S.at({m, m, a, b});
      rep.s_trace = std::max(rep.s_trace, s.max_abs());
    }
    Jet v = rep.Vbam.at({a, 0, 0});
    for (int m = 1; m < n; ++m) v = v + rep.Vbam.at({a, m, m});
    rep.v_trace = std::max(rep.v_trace, v.max_abs());
  }
  {
    Jet p = rep.P.at({0, 0});
    for (int m = 1; m < n; ++m) p = p + rep.P.at({m, m});
    rep.p_trace = p.max_abs();
  }

  // lowered S is symmetric under beta<->mu and alphabar<->nubar and
  // hermitian under full conjugate transposition
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          const Jet& s = rep.S.at({b, a, m, nu});
          rep.s_symmetry =
              std::max(rep.s_symmetry, jet_distance(s, rep.S.at({m, a, b, nu})));
          rep.s_symmetry =
              std::max(rep.s_symmetry, jet_distance(s, rep.S.at({b, nu, m, a})));
          rep.s_symmetry = std::max(
              rep.s_symmetry,
              jet_distance(s, rep.S.at({a, b, nu, m}).conjugated()));
        }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int nu = 0; nu < n; ++nu)
        rep.v_cross = std::max(
            rep.v_cross, jet_distance(rep.V5.at({a, b, nu}), rep.V6.at({a, b, nu})));
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a)
      rep.p_cross =
          std::max(rep.p_cross, jet_distance(rep.P.at({m, a}), rep.Pmn.at({m, a})));

  {
    const IndexedTensor Sp = chern_moser_tensor(cv);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        for (int m = 0; m < n; ++m)
          for (int nu = 0; nu < n; ++nu)
            rep.s_vs_projection =
                std::max(rep.s_vs_projection,
                         jet_distance(rep.S.at({b, a, m, nu}), Sp.at({b, a, m, nu})));
  }

  // dual route for E and the untraced identity behind it
  {
    IndexedTensor Amix = IndexedTensor::make({idx_up(), idx_down_bar()}, {n, n},
                                             ctx, wc.A[0][0].trusted());
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m) Amix.at({a, m}) = wc.A[a][m];
    IndexedTensor Dmix = deb.D;
    Dmix.sig = {idx_down(), idx_up()};
    const IndexedTensor dAm = covariant_derivative(Amix, wc);
    const IndexedTensor dDm = covariant_derivative(Dmix, wc);

    const Complex cE = 2.0 / ((2.0 * n + 1.0) * I);
    for (int a = 0; a < n; ++a) {
      Jet s = rep.V6.at({a, 0, 0}) - dAm.at({a, 0, 1}) + dDm.at({0, a, 1 + n});
      for (int m = 1; m < n; ++m)
        s = s + rep.V6.at({a, m, m}) - dAm.at({a, m, 1 + m}) +
            dDm.at({m, a, 1 + n + m});
      rep.e_dual_route =
          std::max(rep.e_dual_route, jet_distance(deb.E.at({a}), cE * s));
    }

    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          Jet r = dAm.at({a, nu, 1 + m}) - dDm.at({m, a, 1 + n + nu}) -
                  rep.V6.at({a, m, nu});
          if (m == nu) r += I * deb.E.at({a});
          if (m == a) r += (Complex(0.5) * I) * deb.E.at({nu});
          rep.v_identity = std::max(rep.v_identity, r.max_abs());
        }
  }

  return rep;
}

}  // namespace crgeo
