#pragma once

// Forms in the admissible coframe basis (theta, theta^mu, theta^mubar) and
// indexed tensors with conjugation-aware signatures.
//
// Degree-2 components follow the canonical slot order
//   theta^theta^mu, theta^theta^mubar, theta^mu^theta^nu (mu<nu),
//   theta^mu^theta^nubar (all pairs), theta^mubar^theta^nubar (mu<nu).

#include "crgeo/hypersurface.hpp"

namespace crgeo {

struct CoframeForm1 {
  int n = 0;
  JetVector c;  // [theta, theta^mu..., theta^mubar...]

  Jet& th() { return c[0]; }
  const Jet& th() const { return c[0]; }
  Jet& h(int mu) { return c[1 + mu]; }
  const Jet& h(int mu) const { return c[1 + mu]; }
  Jet& hb(int mu) { return c[1 + n + mu]; }
  const Jet& hb(int mu) const { return c[1 + n + mu]; }
};

struct CoframeForm2 {
  int n = 0;
  JetVector c;

  int o_th_h() const { return 0; }
  int o_th_hb() const { return n; }
  int o_hh() const { return 2 * n; }
  int o_hhb() const { return 2 * n + n * (n - 1) / 2; }
  int o_hbhb() const { return o_hhb() + n * n; }
  static int pair_flat(int n, int mu, int nu) {
    return mu * (2 * n - mu - 1) / 2 + (nu - mu - 1);
  }

  Jet& th_h(int mu) { return c[o_th_h() + mu]; }
  const Jet& th_h(int mu) const { return c[o_th_h() + mu]; }
  Jet& th_hb(int mu) { return c[o_th_hb() + mu]; }
  const Jet& th_hb(int mu) const { return c[o_th_hb() + mu]; }
  Jet& hh(int mu, int nu) { return c[o_hh() + pair_flat(n, mu, nu)]; }
  const Jet& hh(int mu, int nu) const { return c[o_hh() + pair_flat(n, mu, nu)]; }
  Jet& hhb(int mu, int nu) { return c[o_hhb() + mu * n + nu]; }
  const Jet& hhb(int mu, int nu) const { return c[o_hhb() + mu * n + nu]; }
  Jet& hbhb(int mu, int nu) { return c[o_hbhb() + pair_flat(n, mu, nu)]; }
  const Jet& hbhb(int mu, int nu) const { return c[o_hbhb() + pair_flat(n, mu, nu)]; }

  // signed lookup for arbitrary index order
  Jet hh_signed(int mu, int nu) const {
    if (mu == nu) return Jet(c[0].context_ptr(), c[0].trusted());
    return mu < nu ? hh(mu, nu) : -hh(nu, mu);
  }
  Jet hbhb_signed(int mu, int nu) const {
    if (mu == nu) return Jet(c[0].context_ptr(), c[0].trusted());
    return mu < nu ? hbhb(mu, nu) : -hbhb(nu, mu);
  }
};

inline CoframeForm1 coframe_form1(int n, const ContextPtr& ctx) {
  return {n, JetVector(2 * n + 1, Jet(ctx, ctx->order()))};
}

inline CoframeForm2 coframe_form2(int n, const ContextPtr& ctx) {
  return {n, JetVector(2 * n * n + n, Jet(ctx, ctx->order()))};
}

inline CoframeForm1 operator+(const CoframeForm1& a, const CoframeForm1& b) {
  CoframeForm1 r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}
inline CoframeForm1 operator-(const CoframeForm1& a, const CoframeForm1& b) {
  CoframeForm1 r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
  return r;
}
inline CoframeForm1 operator*(const Jet& f, const CoframeForm1& w) {
  CoframeForm1 r = w;
  for (auto& e : r.c) e = f * e;
  return r;
}
inline CoframeForm1 operator*(Complex s, const CoframeForm1& w) {
  CoframeForm1 r = w;
  for (auto& e : r.c) e *= s;
  return r;
}
inline CoframeForm2 operator+(const CoframeForm2& a, const CoframeForm2& b) {
  CoframeForm2 r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}
inline CoframeForm2 operator-(const CoframeForm2& a, const CoframeForm2& b) {
  CoframeForm2 r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
  return r;
}
inline CoframeForm2 operator*(const Jet& f, const CoframeForm2& w) {
  CoframeForm2 r = w;
  for (auto& e : r.c) e = f * e;
  return r;
}
inline CoframeForm2 operator*(Complex s, const CoframeForm2& w) {
  CoframeForm2 r = w;
  for (auto& e : r.c) e *= s;
  return r;
}

inline double max_abs(const CoframeForm1& w, int cut = -1) {
  double m = 0.0;
  for (const auto& e : w.c) m = std::max(m, cut < 0 ? e.max_abs() : e.truncated(cut).max_abs());
  return m;
}
inline double max_abs(const CoframeForm2& w, int cut = -1) {
  double m = 0.0;
  for (const auto& e : w.c) m = std::max(m, cut < 0 ? e.max_abs() : e.truncated(cut).max_abs());
  return m;
}

// conj(theta^mu) = theta^mubar flips the component blocks
inline CoframeForm1 conj_coframe(const CoframeForm1& w) {
  CoframeForm1 r = w;
  r.th() = w.th().conjugated();
  for (int mu = 0; mu < w.n; ++mu) {
    r.h(mu) = w.hb(mu).conjugated();
    r.hb(mu) = w.h(mu).conjugated();
  }
  return r;
}

inline CoframeForm2 conj_coframe(const CoframeForm2& w) {
  const ContextPtr ctx = w.c[0].context_ptr();
  CoframeForm2 r = coframe_form2(w.n, ctx);
  for (int mu = 0; mu < w.n; ++mu) {
    r.th_h(mu) = w.th_hb(mu).conjugated();
    r.th_hb(mu) = w.th_h(mu).conjugated();
    for (int nu = mu + 1; nu < w.n; ++nu) {
      r.hh(mu, nu) = w.hbhb(mu, nu).conjugated();
      r.hbhb(mu, nu) = w.hh(mu, nu).conjugated();
    }
    for (int nu = 0; nu < w.n; ++nu)
      r.hhb(mu, nu) = -w.hhb(nu, mu).conjugated();
  }
  return r;
}

// wedge of two coframe 1-forms, assembled directly in the canonical basis
inline CoframeForm2 wedge(const CoframeForm1& a, const CoframeForm1& b) {
  const int n = a.n;
  const ContextPtr ctx = a.c[0].context_ptr();
  CoframeForm2 r = coframe_form2(n, ctx);
  for (int mu = 0; mu < n; ++mu) {
    r.th_h(mu) = a.th() * b.h(mu) - a.h(mu) * b.th();
    r.th_hb(mu) = a.th() * b.hb(mu) - a.hb(mu) * b.th();
    for (int nu = mu + 1; nu < n; ++nu) {
      r.hh(mu, nu) = a.h(mu) * b.h(nu) - a.h(nu) * b.h(mu);
      r.hbhb(mu, nu) = a.hb(mu) * b.hb(nu) - a.hb(nu) * b.hb(mu);
    }
    for (int nu = 0; nu < n; ++nu)
      r.hhb(mu, nu) = a.h(mu) * b.hb(nu) - a.hb(nu) * b.h(mu);
  }
  return r;
}

inline ChartForm1 to_chart(const CoframeForm1& w, const AdmissibleCoframe& co) {
  ChartForm1 r = w.th() * co.theta;
  for (int mu = 0; mu < w.n; ++mu) {
    r = r + w.h(mu) * co.theta_a[mu];
    r = r + w.hb(mu) * conj_form(co.theta_a[mu]);
  }
  return r;
}

inline CoframeForm1 to_coframe(const ChartForm1& w, const AdmissibleCoframe& co) {
  CoframeForm1 r = coframe_form1(co.n, co.chart->ctx);
  r.th() = pair_form(w, co.T);
  for (int mu = 0; mu < co.n; ++mu) {
    r.h(mu) = pair_form(w, co.L[mu]);
    r.hb(mu) = pair_form(w, conj_field(co.L[mu]));
  }
  return r;
}

inline CoframeForm2 to_coframe(const ChartForm2& w, const AdmissibleCoframe& co) {
  CoframeForm2 r = coframe_form2(co.n, co.chart->ctx);
  std::vector<VectorField> Lb;
  for (int mu = 0; mu < co.n; ++mu) Lb.push_back(conj_field(co.L[mu]));
  for (int mu = 0; mu < co.n; ++mu) {
    r.th_h(mu) = pair_form(w, co.T, co.L[mu]);
    r.th_hb(mu) = pair_form(w, co.T, Lb[mu]);
    for (int nu = mu + 1; nu < co.n; ++nu) {
      r.hh(mu, nu) = pair_form(w, co.L[mu], co.L[nu]);
      r.hbhb(mu, nu) = pair_form(w, Lb[mu], Lb[nu]);
    }
    for (int nu = 0; nu < co.n; ++nu)
      r.hhb(mu, nu) = pair_form(w, co.L[mu], Lb[nu]);
  }
  return r;
}

inline CoframeForm1 exterior_derivative(const Jet& f, const AdmissibleCoframe& co) {
  return to_coframe(d_chart(f), co);
}

inline CoframeForm2 exterior_derivative(const CoframeForm1& w, const AdmissibleCoframe& co) {
  return to_coframe(d_chart(to_chart(w, co)), co);
}

// Directional derivative along a frame field.
inline Jet apply_field(const VectorField& X, const Jet& f) {
  const ContextPtr ctx = f.context_ptr();
  Jet acc(ctx, ctx->order());
  for (size_t i = 0; i < X.comp.size(); ++i) acc += X.comp[i] * f.partial(static_cast<int>(i));
  return acc;
}

// ---------------------------------------------------------------------------
// Indexed tensors

struct IndexSpec {
  bool up = false;
  bool barred = false;
  bool normal = false;     // normal-space index (dimension nhat - n)
  bool direction = false;  // covariant-derivative slot over {0, mu, mubar}
};

struct IndexedTensor {
  std::vector<IndexSpec> sig;
  std::vector<int> dims;
  std::vector<Jet> data;

  static IndexedTensor make(std::vector<IndexSpec> sig, std::vector<int> dims,
                            const ContextPtr& ctx, int trusted) {
    IndexedTensor t;
    t.sig = std::move(sig);
    t.dims = std::move(dims);
    long long total = 1;
    for (int d : t.dims) total *= d;
    t.data.assign(static_cast<size_t>(total), Jet(ctx, trusted));
    return t;
  }

  int flat(const std::vector<int>& idx) const {
    int f = 0;
    for (size_t i = 0; i < dims.size(); ++i) f = f * dims[i] + idx[i];
    return f;
  }
  Jet& at(const std::vector<int>& idx) { return data[flat(idx)]; }
  const Jet& at(const std::vector<int>& idx) const { return data[flat(idx)]; }

  double norm_at_base() const {
    double m = 0.0;
    for (const auto& e : data) m = std::max(m, std::abs(e.value()));
    return m;
  }
  double norm_jets(int cut = -1) const {
    double m = 0.0;
    for (const auto& e : data)
      m = std::max(m, cut < 0 ? e.max_abs() : e.truncated(cut).max_abs());
    return m;
  }
};

inline IndexSpec idx_down() { return {}; }
inline IndexSpec idx_down_bar() { return {false, true, false, false}; }
inline IndexSpec idx_up() { return {true, false, false, false}; }
inline IndexSpec idx_up_bar() { return {true, true, false, false}; }
inline IndexSpec idx_normal_down() { return {false, false, true, false}; }
inline IndexSpec idx_normal_down_bar() { return {false, true, true, false}; }
inline IndexSpec idx_normal_up() { return {true, false, true, false}; }
inline IndexSpec idx_normal_up_bar() { return {true, true, true, false}; }
inline IndexSpec idx_direction() { return {false, false, false, true}; }

// Deviation from the hermitian symmetry T_{a bbar m nbar} = conj(T_{b abar n mbar})
// of a 4-index tensor in (down, down-bar, down, down-bar) signature.
inline double hermitian_symmetry_deviation(const IndexedTensor& T) {
  const int n = T.dims[0];
  double m = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          m = std::max(m, jet_distance(T.at({a, b, c, d}),
                                       T.at({b, a, d, c}).conjugated()));
  return m;
}

// Chern-Moser projection onto totally trace-free tensors (identity Levi form).
// Requires the pair symmetry T_{a bbar m nbar} = T_{m bbar a nbar} (and the
// conjugate one) to 1e-9 relative; linear and idempotent.
inline IndexedTensor traceless_project(const IndexedTensor& T) {
  const int n = T.dims[0];
  double scale = std::max(1.0, T.norm_jets());
  double dev = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          dev = std::max(dev, jet_distance(T.at({a, b, c, d}), T.at({c, b, a, d})));
          dev = std::max(dev, jet_distance(T.at({a, b, c, d}), T.at({a, d, c, b})));
        }
  if (dev > 1e-9 * scale)
    throw std::invalid_argument("traceless_project: input lacks pair symmetry");

  const ContextPtr ctx = T.data[0].context_ptr();
  int trusted = ctx->order();
  for (const auto& e : T.data) trusted = std::min(trusted, e.trusted());

  // trace over the first pair, then the scalar trace
  std::vector<std::vector<Jet>> ric(n, std::vector<Jet>(n, Jet(ctx, trusted)));
  Jet r(ctx, trusted);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet acc(ctx, trusted);
      for (int m = 0; m < n; ++m) acc += T.at({m, m, a, b});
      ric[a][b] = acc;
      if (a == b) r += acc;
    }

  IndexedTensor S = T;
  const double c1 = 1.0 / (n + 2);
  const double c2 = 1.0 / ((n + 1) * (n + 2));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          Jet& e = S.at({a, b, m, nu});
          if (m == nu) e -= Complex(c1) * ric[a][b];
          if (a == nu) e -= Complex(c1) * ric[m][b];
          if (m == b) e -= Complex(c1) * ric[a][nu];
          if (a == b) e -= Complex(c1) * ric[m][nu];
          if (a == b && m == nu) e += Complex(c2) * r;
          if (a == nu && m == b) e += Complex(c2) * r;
        }
  return S;
}

// The conformally flat pattern H_{a bbar} g_{m nbar} + H_{m bbar} g_{a nbar}
// + H_{a nbar} g_{m bbar} + H_{m nbar} g_{a bbar} with g = delta.
inline IndexedTensor conformal_flat_pattern(const std::vector<std::vector<Jet>>& H) {
  const int n = static_cast<int>(H.size());
  const ContextPtr ctx = H[0][0].context_ptr();
  int trusted = ctx->order();
  for (const auto& row : H)
    for (const auto& e : row) trusted = std::min(trusted, e.trusted());
  IndexedTensor T = IndexedTensor::make(
      {idx_down(), idx_down_bar(), idx_down(), idx_down_bar()}, {n, n, n, n}, ctx, trusted);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m)
        for (int nu = 0; nu < n; ++nu) {
          Jet& e = T.at({a, b, m, nu});
          if (m == nu) e += H[a][b];
          if (a == nu) e += H[m][b];
          if (m == b) e += H[a][nu];
          if (a == b) e += H[m][nu];
        }
  return T;
}

struct FlatDecomposition {
  std::vector<std::vector<Jet>> H;
  double residual = 0.0;
};

// Least-squares split of T into the conformally flat pattern plus a remainder;
// closed form through the first-pair traces.
inline FlatDecomposition conformal_flat_decompose(const IndexedTensor& T) {
  const int n = T.dims[0];
  const ContextPtr ctx = T.data[0].context_ptr();
  int trusted = ctx->order();
  for (const auto& e : T.data) trusted = std::min(trusted, e.trusted());

  std::vector<std::vector<Jet>> tr(n, std::vector<Jet>(n, Jet(ctx, trusted)));
  Jet h(ctx, trusted);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet acc(ctx, trusted);
      for (int m = 0; m < n; ++m) acc += T.at({m, m, a, b});
      tr[a][b] = acc;
      if (a == b) h += acc;
    }
  h = h * Complex(1.0 / (2.0 * (n + 1)));

  FlatDecomposition out;
  out.H.assign(n, std::vector<Jet>(n, Jet(ctx, trusted)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet e = tr[a][b];
      if (a == b) e -= h;
      out.H[a][b] = e * Complex(1.0 / (n + 2));
    }
  // hermitian part only
  auto Hh = out.H;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      Hh[a][b] = (out.H[a][b] + out.H[b][a].conjugated()) * Complex(0.5);
  out.H = Hh;

  IndexedTensor rec = conformal_flat_pattern(out.H);
  double res = 0.0;
  for (size_t i = 0; i < T.data.size(); ++i)
    res = std::max(res, jet_distance(T.data[i], rec.data[i]));
  out.residual = res;
  return out;
}

}  // namespace crgeo
