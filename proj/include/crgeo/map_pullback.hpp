#pragma once

// Chart transitions induced by holomorphic polynomial maps between embedded
// hypersurfaces. The target chart coordinates are solved along the source
// chart by Newton iteration against the target graph, together with a
// one-sided section, so jets and one-forms can be carried both ways.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crgeo/chart_forms.hpp"
#include "crgeo/hypersurface.hpp"
#include "crgeo/jet.hpp"
#include "crgeo/polynomial.hpp"

namespace crgeo {

// Monomial powers of a fixed argument tuple, cached so that many jets can be
// composed against the same arguments. The arguments must vanish at the base
// point; a composition is then exact through min(g.trusted, table.trusted).
struct ComposeTable {
  ContextPtr ctx_in;   // context the composed jets live in
  ContextPtr ctx_out;  // context of the arguments
  int trusted = 0;
  std::vector<Jet> pw;  // pw[idx] = prod_v args[v]^e(idx)_v

  Jet apply(const Jet& g) const {
    if (g.context_ptr().get() != ctx_in.get())
      throw std::invalid_argument("compose: jet context does not match table");
    Jet r(ctx_out, std::min(g.trusted(), trusted));
    if (r.trusted() < 0) return r;
    const int cut = ctx_in->first_of_degree(std::min(r.trusted(), ctx_in->order()) + 1);
    const int ocut = ctx_out->first_of_degree(std::min(r.trusted(), ctx_out->order()) + 1);
    for (int idx = 0; idx < cut; ++idx) {
      const Complex c = g.raw(idx);
      if (c == Complex(0.0)) continue;
      const auto& p = pw[idx].coeffs();
      for (int j = 0; j < ocut; ++j) r.raw(j) += c * p[j];
    }
    return r;
  }
};

inline ComposeTable build_compose_table(const ContextPtr& ctx_in, const std::vector<Jet>& args) {
  if (static_cast<int>(args.size()) != ctx_in->num_vars())
    throw std::invalid_argument("compose table: argument count mismatch");
  ComposeTable t;
  t.ctx_in = ctx_in;
  t.ctx_out = args[0].context_ptr();
  int tr = ctx_in->order();
  for (const auto& a : args) tr = std::min(tr, a.trusted());
  t.trusted = tr;

  std::vector<Jet> clean;
  clean.reserve(args.size());
  for (const auto& a : args) {
    if (std::abs(a.value()) > 1e-8 * std::max(1.0, a.max_abs()))
      throw std::invalid_argument("compose table: argument does not vanish at base");
    Jet b = a;
    b.raw(0) = 0.0;  // drop solver noise so powers stay nilpotent
    clean.push_back(std::move(b));
  }

  const int cap = ctx_in->first_of_degree(std::min(tr, ctx_in->order()) + 1);
  t.pw.reserve(cap);
  t.pw.push_back(Jet::constant(t.ctx_out, 1.0).truncated(tr));
  for (int idx = 1; idx < cap; ++idx) {
    auto e = ctx_in->exponents(idx);
    int v = 0;
    while (e[v] == 0) ++v;
    e[v] -= 1;
    t.pw.push_back(t.pw[ctx_in->index_of(e)] * clean[v]);
  }
  return t;
}

namespace detail {

inline Jet with_trust(const ContextPtr& ctx, const std::vector<Complex>& coeffs, int trusted) {
  Jet r(ctx, trusted);
  const int cut = ctx->first_of_degree(std::min(std::max(trusted, 0), ctx->order()) + 1);
  for (int i = 0; i < cut; ++i) r.raw(i) = coeffs[i];
  return r;
}

struct ComposeSolve {
  std::vector<Jet> solution;   // argument jets, one per ctx_eq variable
  ComposeTable table;          // table at the solution
  std::vector<int> rows;       // equations selected to pin the unknowns
  double residual_selected = 0.0;
  double residual_all = 0.0;   // includes the unselected equations
};

// Solves eqs(x) = rhs for the argument tuple x by Newton iteration with the
// constant base Jacobian. eqs live on ctx_eq and rhs on the output context;
// both sides must be real-valued with matching base values. The best-
// conditioned square row subset pins the unknowns; the remaining rows are
// reported, not enforced.
inline ComposeSolve solve_compose_system(const std::vector<Jet>& eqs, const std::vector<Jet>& rhs) {
  if (eqs.empty() || rhs.size() != eqs.size())
    throw std::invalid_argument("compose solve: equation/rhs count mismatch");
  const ContextPtr ctx_eq = eqs[0].context_ptr();
  const ContextPtr ctx_out = rhs[0].context_ptr();
  const int m = static_cast<int>(eqs.size());
  const int u = ctx_eq->num_vars();

  double scale = 1.0;
  for (const auto& r : rhs) scale = std::max(scale, r.max_abs());
  for (int k = 0; k < m; ++k)
    if (std::abs(rhs[k].value() - eqs[k].value()) > 1e-8 * scale)
      throw std::invalid_argument("compose solve: base values do not match");

  Eigen::MatrixXd jac(m, u);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < u; ++j) jac(k, j) = eqs[k].raw(1 + j).real();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac.transpose());
  if (qr.rank() < u)
    throw std::runtime_error("compose solve: degenerate base jacobian");
  ComposeSolve out;
  const auto perm = qr.colsPermutation().indices();
  out.rows.assign(perm.data(), perm.data() + u);

  Eigen::MatrixXd jsel(u, u);
  for (int k = 0; k < u; ++k)
    for (int j = 0; j < u; ++j) jsel(k, j) = jac(out.rows[k], j);
  const Eigen::MatrixXd jinv = Eigen::PartialPivLU<Eigen::MatrixXd>(jsel).inverse();

  int tr = ctx_eq->order();
  for (const auto& r : rhs) tr = std::min(tr, r.trusted());

  std::vector<std::vector<Complex>> x(u, std::vector<Complex>(ctx_out->size(), Complex(0.0)));
  for (int it = 1; it <= tr; ++it) {
    std::vector<Jet> args;
    args.reserve(u);
    for (int j = 0; j < u; ++j) args.push_back(with_trust(ctx_out, x[j], it));
    const ComposeTable table = build_compose_table(ctx_eq, args);
    std::vector<Jet> res;
    res.reserve(u);
    for (int k = 0; k < u; ++k)
      res.push_back(rhs[out.rows[k]].truncated(it) - table.apply(eqs[out.rows[k]]));
    for (int j = 0; j < u; ++j) {
      Jet dx(ctx_out, it);
      for (int k = 0; k < u; ++k) dx += Complex(jinv(j, k)) * res[k];
      dx = dx.realified(1e-7);
      const int cut = ctx_out->first_of_degree(std::min(it, ctx_out->order()) + 1);
      for (int i = 0; i < cut; ++i) x[j][i] += dx.raw(i);
    }
  }

  out.solution.reserve(u);
  for (int j = 0; j < u; ++j) out.solution.push_back(with_trust(ctx_out, x[j], tr).realified(1e-7));
  out.table = build_compose_table(ctx_eq, out.solution);
  for (int k = 0; k < m; ++k) {
    const double r = (rhs[k] - out.table.apply(eqs[k])).max_abs() / scale;
    out.residual_all = std::max(out.residual_all, r);
    if (std::find(out.rows.begin(), out.rows.end(), k) != out.rows.end())
      out.residual_selected = std::max(out.residual_selected, r);
  }
  return out;
}

}  // namespace detail

// A holomorphic ambient map restricted to the hypersurfaces, realized as the
// pair of chart-level composition maps: c carries target-chart jets to the
// source chart (restriction to the image), phi extends source-chart jets to
// the target chart (a section along the image, phi . c = id).
struct ChartTransition {
  std::shared_ptr<const Chart> src;
  std::shared_ptr<const Chart> tgt;
  std::vector<PolynomialSpec> components;
  std::vector<Jet> c;    // target chart coordinates along the source chart
  std::vector<Jet> phi;  // source chart coordinates along the target chart
  ComposeTable pull_table;
  ComposeTable extend_table;
  std::vector<int> section_rows;     // target chart variables the section reproduces
  double transition_residual = 0.0;  // ambient consistency, incl. containment row
  double section_residual = 0.0;     // phi . c = id drift

  Jet pull(const Jet& g) const { return pull_table.apply(g); }
  Jet extend(const Jet& g) const { return extend_table.apply(g); }

  // (f^* w)_j = sum_i (w_i . c) dc_i/dx_j
  ChartForm1 pull_back(const ChartForm1& w) const {
    const int ns = src->ctx->num_vars();
    const int nt = tgt->ctx->num_vars();
    ChartForm1 r = chart_form1_zero(src->ctx);
    for (int i = 0; i < nt; ++i) {
      const Jet wi = pull(w.comp[i]);
      for (int j = 0; j < ns; ++j) r.comp[j] += wi * c[i].partial(j);
    }
    return r;
  }
};

inline ChartTransition build_chart_transition(std::shared_ptr<const Chart> src,
                                              std::shared_ptr<const Chart> tgt,
                                              std::vector<PolynomialSpec> components) {
  const int amb_src = src->hs.n + 1;
  const int amb_tgt = tgt->hs.n + 1;
  if (static_cast<int>(components.size()) != amb_tgt)
    throw std::invalid_argument("chart transition: ambient component count mismatch");
  for (const auto& p : components) {
    if (p.num_complex_vars != amb_src)
      throw std::invalid_argument("chart transition: component variable count mismatch");
    if (!poly_is_holomorphic(p))
      throw std::invalid_argument("chart transition: components must be holomorphic");
  }

  ChartTransition t;
  t.src = src;
  t.tgt = tgt;
  t.components = std::move(components);

  std::vector<Jet> freal;
  freal.reserve(2 * amb_tgt);
  for (int k = 0; k < amb_tgt; ++k) {
    const Jet f = poly_eval_to_jet(t.components[k], src->graph.slots);
    freal.push_back(((f + f.conjugated()) * Complex(0.5)).realified(1e-9));
    freal.push_back(((f - f.conjugated()) * Complex(0.0, -0.5)).realified(1e-9));
  }

  auto fwd = detail::solve_compose_system(tgt->graph.slots, freal);
  t.c = std::move(fwd.solution);
  t.pull_table = std::move(fwd.table);
  t.transition_residual = fwd.residual_all;

  std::vector<Jet> id_tgt;
  id_tgt.reserve(tgt->ctx->num_vars());
  for (int v = 0; v < tgt->ctx->num_vars(); ++v) id_tgt.push_back(Jet::variable(tgt->ctx, v));
  auto sec = detail::solve_compose_system(t.c, id_tgt);
  t.phi = std::move(sec.solution);
  t.extend_table = std::move(sec.table);
  t.section_rows = sec.rows;

  double drift = sec.residual_selected;
  for (int v = 0; v < src->ctx->num_vars(); ++v)
    drift = std::max(drift, (t.pull(t.phi[v]) - Jet::variable(src->ctx, v)).max_abs());
  t.section_residual = drift;
  return t;
}

}  // namespace crgeo
