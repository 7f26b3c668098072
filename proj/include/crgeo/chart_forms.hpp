#pragma once

// Differential forms in chart coordinates with jet coefficients, degrees 0..2.
// Degree-2 components are stored for i < j only.

#include <vector>

#include "crgeo/jet.hpp"

namespace crgeo {

struct VectorField {
  std::vector<Jet> comp;
};

struct ChartForm1 {
  std::vector<Jet> comp;
};

struct ChartForm2 {
  // comp[flat(i,j)] for i < j
  int num_vars = 0;
  std::vector<Jet> comp;

  static int flat(int num_vars, int i, int j) {
    // row-major upper triangle
    return i * (2 * num_vars - i - 1) / 2 + (j - i - 1);
  }
  const Jet& at(int i, int j) const { return comp[flat(num_vars, i, j)]; }
  Jet& at(int i, int j) { return comp[flat(num_vars, i, j)]; }
};

inline ChartForm1 chart_form1_zero(const ContextPtr& ctx) {
  return {std::vector<Jet>(ctx->num_vars(), Jet(ctx, ctx->order()))};
}

inline ChartForm2 chart_form2_zero(const ContextPtr& ctx) {
  const int m = ctx->num_vars();
  return {m, std::vector<Jet>(m * (m - 1) / 2, Jet(ctx, ctx->order()))};
}

inline ChartForm1 d_chart(const Jet& f) {
  const ContextPtr& ctx = f.context_ptr();
  ChartForm1 r;
  r.comp.reserve(ctx->num_vars());
  for (int i = 0; i < ctx->num_vars(); ++i) r.comp.push_back(f.partial(i));
  return r;
}

inline ChartForm2 d_chart(const ChartForm1& w) {
  const ContextPtr& ctx = w.comp[0].context_ptr();
  const int m = ctx->num_vars();
  ChartForm2 r = chart_form2_zero(ctx);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) r.at(i, j) = w.comp[j].partial(i) - w.comp[i].partial(j);
  return r;
}

inline ChartForm2 wedge(const ChartForm1& a, const ChartForm1& b) {
  const ContextPtr& ctx = a.comp[0].context_ptr();
  const int m = ctx->num_vars();
  ChartForm2 r = chart_form2_zero(ctx);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) r.at(i, j) = a.comp[i] * b.comp[j] - a.comp[j] * b.comp[i];
  return r;
}

inline Jet pair_form(const ChartForm1& w, const VectorField& X) {
  Jet acc = w.comp[0] * X.comp[0];
  for (size_t i = 1; i < w.comp.size(); ++i) acc += w.comp[i] * X.comp[i];
  return acc;
}

inline Jet pair_form(const ChartForm2& W, const VectorField& X, const VectorField& Y) {
  const ContextPtr& ctx = X.comp[0].context_ptr();
  Jet acc(ctx, ctx->order());
  for (int i = 0; i < W.num_vars; ++i)
    for (int j = i + 1; j < W.num_vars; ++j)
      acc += W.at(i, j) * (X.comp[i] * Y.comp[j] - X.comp[j] * Y.comp[i]);
  return acc;
}

inline VectorField conj_field(const VectorField& X) {
  VectorField r;
  r.comp.reserve(X.comp.size());
  for (const auto& c : X.comp) r.comp.push_back(c.conjugated());
  return r;
}

inline ChartForm1 conj_form(const ChartForm1& w) {
  ChartForm1 r;
  r.comp.reserve(w.comp.size());
  for (const auto& c : w.comp) r.comp.push_back(c.conjugated());
  return r;
}

inline ChartForm1 operator+(const ChartForm1& a, const ChartForm1& b) {
  ChartForm1 r = a;
  for (size_t i = 0; i < r.comp.size(); ++i) r.comp[i] += b.comp[i];
  return r;
}

inline ChartForm1 operator-(const ChartForm1& a, const ChartForm1& b) {
  ChartForm1 r = a;
  for (size_t i = 0; i < r.comp.size(); ++i) r.comp[i] -= b.comp[i];
  return r;
}

inline ChartForm1 operator*(const Jet& f, const ChartForm1& w) {
  ChartForm1 r = w;
  for (auto& c : r.comp) c = f * c;
  return r;
}

inline ChartForm1 operator*(Complex s, const ChartForm1& w) {
  ChartForm1 r = w;
  for (auto& c : r.comp) c *= s;
  return r;
}

inline ChartForm2 operator+(const ChartForm2& a, const ChartForm2& b) {
  ChartForm2 r = a;
  for (size_t i = 0; i < r.comp.size(); ++i) r.comp[i] += b.comp[i];
  return r;
}

inline ChartForm2 operator-(const ChartForm2& a, const ChartForm2& b) {
  ChartForm2 r = a;
  for (size_t i = 0; i < r.comp.size(); ++i) r.comp[i] -= b.comp[i];
  return r;
}

inline ChartForm2 operator*(const Jet& f, const ChartForm2& w) {
  ChartForm2 r = w;
  for (auto& c : r.comp) c = f * c;
  return r;
}

inline ChartForm2 operator*(Complex s, const ChartForm2& w) {
  ChartForm2 r = w;
  for (auto& c : r.comp) c *= s;
  return r;
}

inline double max_abs(const ChartForm1& w) {
  double m = 0.0;
  for (const auto& c : w.comp) m = std::max(m, c.max_abs());
  return m;
}

inline double max_abs(const ChartForm2& w) {
  double m = 0.0;
  for (const auto& c : w.comp) m = std::max(m, c.max_abs());
  return m;
}

inline double max_abs(const VectorField& X) {
  double m = 0.0;
  for (const auto& c : X.comp) m = std::max(m, c.max_abs());
  return m;
}

}  // namespace crgeo
