#pragma once

// Strictly pseudoconvex hypersurfaces in C^{n+1}: graph charts, the raw CR
// frame from the gradient of the defining function, the characteristic
// (Reeb) field, and Gram-Schmidt normalization to an admissible coframe with
// identity Levi form.

#include <memory>

#include "crgeo/chart_forms.hpp"
#include "crgeo/implicit.hpp"
#include "crgeo/jet_linalg.hpp"

namespace crgeo {

struct HypersurfaceSpec {
  int n = 0;  // CR dimension; ambient dimension is n+1
  PolynomialSpec rho;
  std::vector<Complex> base;
};

inline void validate_hypersurface(const HypersurfaceSpec& hs) {
  validate_polynomial(hs.rho);
  if (hs.rho.num_complex_vars != hs.n + 1)
    throw std::invalid_argument("hypersurface: rho arity must be n+1");
  if (static_cast<int>(hs.base.size()) != hs.n + 1)
    throw std::invalid_argument("hypersurface: base arity must be n+1");
  if (!poly_is_real(hs.rho))
    throw std::invalid_argument("hypersurface: rho must be real-valued");
  if (std::abs(poly_eval(hs.rho, hs.base)) > 1e-12)
    throw std::invalid_argument("hypersurface: rho(base) != 0");
  double grad = 0.0;
  for (int k = 0; k <= hs.n; ++k)
    grad = std::max(grad, std::abs(poly_eval(poly_partial_z(hs.rho, k), hs.base)));
  if (grad < 1e-10) throw std::invalid_argument("hypersurface: d rho vanishes at base");
}

struct Chart {
  HypersurfaceSpec hs;
  ContextPtr ctx;      // 2n+1 chart variables, all vanishing at the base
  int solve_var = -1;  // ambient real coordinate solved for by the graph
  GraphJet graph;
  std::vector<Jet> emb;                 // Z_k along the chart, k = 0..n
  std::vector<std::vector<Jet>> demb;   // demb[i][k] = d emb[k] / d x_i
};

inline Chart build_chart(const HypersurfaceSpec& hs, int order) {
  validate_hypersurface(hs);
  Chart c;
  c.hs = hs;
  c.ctx = get_context(2 * hs.n + 1, order);
  // largest |d rho / d real coordinate| picks the graph direction; ties go to
  // the lowest index, so the chart is deterministic
  double best = -1.0;
  for (int r = 0; r < 2 * (hs.n + 1); ++r) {
    double g = std::abs(poly_eval(poly_partial_real(hs.rho, r), hs.base));
    if (g > best + 1e-14) {
      best = g;
      c.solve_var = r;
    }
  }
  c.graph = implicit_graph_jet(hs.rho, hs.base, c.solve_var, c.ctx);
  c.emb.reserve(hs.n + 1);
  for (int k = 0; k <= hs.n; ++k)
    c.emb.push_back(c.graph.slots[2 * k] + Complex(0.0, 1.0) * c.graph.slots[2 * k + 1]);
  c.demb.assign(c.ctx->num_vars(), std::vector<Jet>());
  for (int i = 0; i < c.ctx->num_vars(); ++i)
    for (int k = 0; k <= hs.n; ++k) c.demb[i].push_back(c.emb[k].partial(i));
  return c;
}

struct RawFrame {
  ChartForm1 theta;              // real contact form, pullback of i d-bar rho
  std::vector<VectorField> L;    // raw (1,0) frame, n fields
  std::vector<Jet> rho_z;        // d rho / d Z_k along the chart
  int pivot = -1;
};

namespace detail {

// Selects rows of an overdetermined consistent system by QR column pivoting
// on the transposed constant part, solves the square jet system, and checks
// the dropped rows.
inline JetVector solve_rows(const JetMatrix& rows, const JetVector& rhs,
                            const std::vector<int>& forced) {
  const int m = static_cast<int>(rows[0].size());
  const int total = static_cast<int>(rows.size());
  std::vector<bool> used(total, false);
  std::vector<int> chosen = forced;
  for (int i : forced) used[i] = true;

  // QR column pivoting on the transposed candidate block ranks the remaining
  // equations; the selection is deterministic
  std::vector<int> cand;
  for (int r = 0; r < total; ++r)
    if (!used[r]) cand.push_back(r);
  Eigen::MatrixXcd Mt(m, static_cast<int>(cand.size()));
  for (size_t c = 0; c < cand.size(); ++c)
    for (int j = 0; j < m; ++j) Mt(j, static_cast<int>(c)) = rows[cand[c]][j].value();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(Mt);
  const auto& perm = qr.colsPermutation().indices();
  for (int i = 0; static_cast<int>(chosen.size()) < m; ++i) {
    if (i >= static_cast<int>(cand.size()))
      throw std::domain_error("row selection: rank deficient system");
    int r = cand[perm(i)];
    used[r] = true;
    chosen.push_back(r);
  }

  JetMatrix A(m);
  JetVector b(m);
  for (int i = 0; i < m; ++i) {
    A[i] = rows[chosen[i]];
    b[i] = rhs[chosen[i]];
  }
  JetVector x = jet_linear_solve(A, b);

  double scale = 1.0;
  for (const auto& row : rows)
    for (const auto& e : row) scale = std::max(scale, e.max_abs());
  for (int r = 0; r < total; ++r) {
    if (used[r]) continue;
    Jet acc = -rhs[r];
    for (int j = 0; j < m; ++j) acc += rows[r][j] * x[j];
    if (acc.max_abs() > 1e-9 * scale)
      throw std::domain_error("row selection: dropped equation residual too large");
  }
  return x;
}

}  // namespace detail

inline RawFrame raw_cr_frame(const Chart& chart) {
  const int n = chart.hs.n;
  const int N = n + 1;
  const ContextPtr& ctx = chart.ctx;
  RawFrame f;

  f.rho_z.reserve(N);
  for (int k = 0; k < N; ++k)
    f.rho_z.push_back(poly_eval_to_jet(poly_partial_z(chart.hs.rho, k), chart.graph.slots));

  // theta = pullback of i * sum_k rho_{Zbar_k} dZbar_k; rho real makes
  // rho_{Zbar_k} the conjugate of rho_{Z_k}
  f.theta.comp.assign(ctx->num_vars(), Jet(ctx, ctx->order()));
  for (int i = 0; i < ctx->num_vars(); ++i) {
    Jet acc(ctx, ctx->order());
    for (int k = 0; k < N; ++k)
      acc += f.rho_z[k].conjugated() * chart.demb[i][k].conjugated();
    f.theta.comp[i] = Complex(0.0, 1.0) * acc;
  }
  for (const auto& c : f.theta.comp)
    if (imag_part(c).max_abs() > 1e-12 * std::max(1.0, c.max_abs()))
      throw std::domain_error("raw_cr_frame: contact form is not real");
  for (auto& c : f.theta.comp) c = c.realified();

  // pivot j* = argmax |rho_{Z_j}(base)|, ties to the lowest index
  double best = -1.0;
  for (int k = 0; k < N; ++k) {
    double g = std::abs(f.rho_z[k].value());
    if (g > best + 1e-14) {
      best = g;
      f.pivot = k;
    }
  }

  // L_alpha = rho_{Z_pivot} d/dZ_alpha' - rho_{Z_alpha'} d/dZ_pivot, realized
  // as a chart field: type (1,0) and tangent to the zero set
  const int m = ctx->num_vars();
  for (int a = 0; a < n; ++a) {
    int ap = -1;
    for (int k = 0, cnt = 0; k < N; ++k) {
      if (k == f.pivot) continue;
      if (cnt++ == a) {
        ap = k;
        break;
      }
    }
    JetVector c(N, Jet(ctx, ctx->order()));
    c[ap] = f.rho_z[f.pivot];
    c[f.pivot] = -f.rho_z[ap];
    JetMatrix rows(2 * N, JetVector(m));
    JetVector rhs(2 * N, Jet(ctx, ctx->order()));
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < m; ++i) {
        rows[k][i] = chart.demb[i][k];
        rows[N + k][i] = chart.demb[i][k].conjugated();
      }
      rhs[k] = c[k];
    }
    VectorField L;
    L.comp = detail::solve_rows(rows, rhs, {});
    f.L.push_back(std::move(L));
  }
  return f;
}

// Reeb field: theta(T) = 1 and T hooks trivially into d theta.
inline VectorField characteristic_field(const Chart& chart, const ChartForm1& theta) {
  const ContextPtr& ctx = chart.ctx;
  const int m = ctx->num_vars();
  ChartForm2 dth = d_chart(theta);
  JetMatrix rows(m + 1, JetVector(m, Jet(ctx, ctx->order())));
  JetVector rhs(m + 1, Jet(ctx, ctx->order()));
  rows[0] = theta.comp;
  rhs[0] = Jet::constant(ctx, 1.0);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (i < j)
        rows[1 + j][i] = dth.at(i, j);
      else if (i > j)
        rows[1 + j][i] = -dth.at(j, i);
    }
  }
  VectorField T;
  T.comp = detail::solve_rows(rows, rhs, {0});
  for (const auto& c : T.comp)
    if (imag_part(c).max_abs() > 1e-10 * std::max(1.0, c.max_abs()))
      throw std::domain_error("characteristic_field: Reeb field is not real");
  for (auto& c : T.comp) c = c.realified(1e-9);
  return T;
}

struct AdmissibleCoframe {
  std::shared_ptr<const Chart> chart;
  int n = 0;
  ChartForm1 theta;
  VectorField T;
  std::vector<VectorField> L;        // Levi-orthonormal (1,0) frame
  std::vector<ChartForm1> theta_a;   // dual coframe forms theta^alpha
  ChartForm2 dtheta;
};

// -i dtheta(X, conj Y), the Levi pairing of (1,0) fields.
inline Jet levi_pair(const ChartForm2& dth, const VectorField& X, const VectorField& Y) {
  return Complex(0.0, -1.0) * pair_form(dth, X, conj_field(Y));
}

inline AdmissibleCoframe normalize_admissible(const std::shared_ptr<const Chart>& chart,
                                              const RawFrame& raw) {
  const ContextPtr& ctx = chart->ctx;
  const int n = chart->hs.n;
  const int m = ctx->num_vars();
  AdmissibleCoframe co;
  co.chart = chart;
  co.n = n;
  co.theta = raw.theta;
  co.dtheta = d_chart(raw.theta);
  co.T = characteristic_field(*chart, raw.theta);

  // Levi positivity at the base
  Eigen::MatrixXcd levi0(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      levi0(a, b) = levi_pair(co.dtheta, raw.L[a], raw.L[b]).value();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(levi0);
  if (es.eigenvalues().minCoeff() < 1e-10)
    throw std::domain_error("normalize_admissible: Levi form not positive definite");

  // Gram-Schmidt in index order with positive square roots
  co.L = raw.L;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < a; ++b) {
      Jet proj = levi_pair(co.dtheta, co.L[a], co.L[b]);
      for (int i = 0; i < m; ++i) co.L[a].comp[i] -= proj * co.L[b].comp[i];
    }
    Jet nrm2 = levi_pair(co.dtheta, co.L[a], co.L[a]).realified(1e-9);
    Jet inv_nrm = nrm2.sqrt_root().inverse();
    for (int i = 0; i < m; ++i) co.L[a].comp[i] = inv_nrm * co.L[a].comp[i];
  }

  // dual coframe rows from the inverse of the frame matrix (T, L, conj L)
  JetMatrix E(m, JetVector(m));
  for (int i = 0; i < m; ++i) {
    E[i][0] = co.T.comp[i];
    for (int a = 0; a < n; ++a) {
      E[i][1 + a] = co.L[a].comp[i];
      E[i][1 + n + a] = co.L[a].comp[i].conjugated();
    }
  }
  JetMatrix F = jet_matrix_inverse(E);
  double theta_dev = 0.0;
  for (int i = 0; i < m; ++i)
    theta_dev = std::max(theta_dev, jet_distance(F[0][i].truncated(ctx->order() - 2),
                                                 co.theta.comp[i].truncated(ctx->order() - 2)));
  if (theta_dev > 1e-9)
    throw std::domain_error("normalize_admissible: theta row of the dual coframe drifted");
  co.theta_a.assign(n, ChartForm1{});
  for (int a = 0; a < n; ++a) {
    co.theta_a[a].comp.resize(m);
    for (int i = 0; i < m; ++i) co.theta_a[a].comp[i] = F[1 + a][i];
  }
  return co;
}

inline AdmissibleCoframe build_admissible_coframe(const HypersurfaceSpec& hs, int order) {
  auto chart = std::make_shared<Chart>(build_chart(hs, order));
  RawFrame raw = raw_cr_frame(*chart);
  return normalize_admissible(chart, raw);
}

// Builtin defining functions used by the scenario corpus.

inline PolynomialSpec rho_sphere(int N) {
  PolynomialSpec p;
  p.num_complex_vars = N;
  for (int k = 0; k < N; ++k) {
    std::vector<int> z(N, 0), zb(N, 0);
    z[k] = 1;
    zb[k] = 1;
    p.monomials.push_back({1.0, z, zb});
  }
  p.monomials.push_back({-1.0, std::vector<int>(N, 0), std::vector<int>(N, 0)});
  return p;
}

inline PolynomialSpec rho_heisenberg(int n) {
  PolynomialSpec p;
  p.num_complex_vars = n + 1;
  for (int k = 0; k < n; ++k) {
    std::vector<int> z(n + 1, 0), zb(n + 1, 0);
    z[k] = 1;
    zb[k] = 1;
    p.monomials.push_back({1.0, z, zb});
  }
  std::vector<int> w(n + 1, 0), zero(n + 1, 0);
  w[n] = 1;
  p.monomials.push_back({Complex(0.0, 0.5), w, zero});
  p.monomials.push_back({Complex(0.0, -0.5), zero, w});
  return p;
}

// |z1|^2 + |z2|^2 + |w|^2 - 1 + eps * Re(z1^2 zbar2^2)
inline PolynomialSpec rho_perturbed_sphere(double eps = 0.1) {
  PolynomialSpec p = rho_sphere(3);
  p.monomials.push_back({eps / 2.0, {2, 0, 0}, {0, 2, 0}});
  p.monomials.push_back({eps / 2.0, {0, 2, 0}, {2, 0, 0}});
  return p;
}

inline HypersurfaceSpec sphere_surface(int n) {
  HypersurfaceSpec hs;
  hs.n = n;
  hs.rho = rho_sphere(n + 1);
  hs.base.assign(n + 1, 0.0);
  hs.base[n] = 1.0;
  return hs;
}

inline HypersurfaceSpec heisenberg_surface(int n) {
  HypersurfaceSpec hs;
  hs.n = n;
  hs.rho = rho_heisenberg(n);
  hs.base.assign(n + 1, 0.0);
  return hs;
}

inline HypersurfaceSpec perturbed_sphere_surface() {
  HypersurfaceSpec hs;
  hs.n = 2;
  hs.rho = rho_perturbed_sphere();
  hs.base = {0.0, 0.0, 1.0};
  return hs;
}

}  // namespace crgeo
