#pragma once

// Linear solves with jet-valued matrices: LU of the constant term plus
// degree-by-degree fixed-point sweeps. Also the shared Eigen rank helper.

#include <Eigen/Dense>
#include <vector>

#include "crgeo/jet.hpp"

namespace crgeo {

using JetVector = std::vector<Jet>;
using JetMatrix = std::vector<JetVector>;

inline Eigen::MatrixXcd constant_part(const JetMatrix& A) {
  const int n = static_cast<int>(A.size());
  const int m = n ? static_cast<int>(A[0].size()) : 0;
  Eigen::MatrixXcd M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = A[i][j].value();
  return M;
}

// Solves A x = b for square jet matrices. The constant part must be
// invertible; the residual is verified to 1e-10 relative to the data scale.
inline JetVector jet_linear_solve(const JetMatrix& A, const JetVector& b) {
  const int n = static_cast<int>(A.size());
  if (n == 0 || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("jet_linear_solve: shape mismatch");
  const ContextPtr ctx = b[0].context_ptr();
  int trusted = ctx->order();
  double scale = 1.0;
  for (int i = 0; i < n; ++i) {
    trusted = std::min(trusted, b[i].trusted());
    scale = std::max(scale, b[i].max_abs());
    for (int j = 0; j < n; ++j) {
      trusted = std::min(trusted, A[i][j].trusted());
      scale = std::max(scale, A[i][j].max_abs());
    }
  }
  if (trusted < 0) throw std::invalid_argument("jet_linear_solve: no trusted orders");

  Eigen::MatrixXcd A0 = constant_part(A);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A0);
  const double rcond = 1.0 / (A0.norm() * lu.inverse().norm());
  if (!(rcond > 1e-12))
    throw std::domain_error("jet_linear_solve: constant term is singular");

  auto solve_const = [&](const std::vector<Complex>& rhs) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = rhs[i];
    Eigen::VectorXcd s = lu.solve(v);
    std::vector<Complex> out(n);
    for (int i = 0; i < n; ++i) out[i] = s(i);
    return out;
  };

  // Hoist the non-constant part of A; zero entries never enter a product.
  JetMatrix Atil(n, JetVector(n));
  bool any_tail = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet t = A[i][j].truncated(trusted);
      t -= A[i][j].value();
      if (t.max_abs() > 0.0) any_tail = true;
      Atil[i][j] = t;
    }

  JetVector x(n, Jet(ctx, trusted));
  // x <- A0^{-1} (b - (A - A0) x); each sweep fixes one more degree.
  const int sweeps = any_tail ? trusted : 0;
  for (int sweep = 0; sweep <= sweeps; ++sweep) {
    JetVector rhs(n, Jet(ctx, trusted));
    for (int i = 0; i < n; ++i) {
      Jet acc = b[i].truncated(trusted);
      for (int j = 0; j < n; ++j) {
        if (Atil[i][j].max_abs() == 0.0) continue;
        acc -= Atil[i][j] * x[j];
      }
      rhs[i] = acc;
    }
    const int count = ctx->first_of_degree(trusted + 1);
    for (int c = 0; c < count; ++c) {
      std::vector<Complex> slot(n);
      for (int i = 0; i < n; ++i) slot[i] = rhs[i].raw(c);
      auto s = solve_const(slot);
      for (int i = 0; i < n; ++i) x[i].raw(c) = s[i];
    }
  }

  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    Jet acc = -b[i].truncated(trusted);
    for (int j = 0; j < n; ++j) acc += A[i][j].truncated(trusted) * x[j];
    res = std::max(res, acc.max_abs());
  }
  if (res > 1e-10 * scale)
    throw std::domain_error("jet_linear_solve: residual check failed");
  return x;
}

inline JetMatrix jet_matrix_inverse(const JetMatrix& A) {
  const int n = static_cast<int>(A.size());
  const ContextPtr ctx = A[0][0].context_ptr();
  JetMatrix inv(n, JetVector(n));
  for (int col = 0; col < n; ++col) {
    JetVector e(n, Jet(ctx, ctx->order()));
    e[col] += Complex(1.0);
    JetVector x = jet_linear_solve(A, e);
    for (int i = 0; i < n; ++i) inv[i][col] = x[i];
  }
  return inv;
}

struct RankResult {
  int rank = 0;
  bool unstable = false;
  std::vector<double> singular_values;
};

// Rank with threshold 1e-8 * max(1, sigma_max); flags instability when a
// singular value sits within a factor of 10 of the threshold.
inline RankResult svd_rank(const Eigen::MatrixXcd& M, double rel = 1e-8) {
  RankResult r;
  if (M.rows() == 0 || M.cols() == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& sv = svd.singularValues();
  const double thr = rel * std::max(1.0, sv.size() ? sv(0) : 0.0);
  for (int i = 0; i < sv.size(); ++i) {
    r.singular_values.push_back(sv(i));
    if (sv(i) > thr) ++r.rank;
    if (sv(i) > thr / 10.0 && sv(i) < thr * 10.0) r.unstable = true;
  }
  return r;
}

}  // namespace crgeo
