#pragma once

// Polynomials in complex variables Z_k and their conjugates, with exact
// symbolic derivative/composition helpers and evaluation into jets through
// real coordinate slots (Z_k = slot[2k] + i slot[2k+1]).

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "crgeo/jet.hpp"

namespace crgeo {

struct Monomial {
  Complex coeff;
  std::vector<int> z_exps;
  std::vector<int> zbar_exps;
};

struct PolynomialSpec {
  int num_complex_vars = 0;
  std::vector<Monomial> monomials;
};

inline void validate_polynomial(const PolynomialSpec& p) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, int> seen;
  for (const auto& m : p.monomials) {
    if (static_cast<int>(m.z_exps.size()) != p.num_complex_vars ||
        static_cast<int>(m.zbar_exps.size()) != p.num_complex_vars)
      throw std::invalid_argument("polynomial: exponent arity mismatch");
    for (int e : m.z_exps)
      if (e < 0) throw std::invalid_argument("polynomial: negative exponent");
    for (int e : m.zbar_exps)
      if (e < 0) throw std::invalid_argument("polynomial: negative exponent");
    if (!seen.emplace(std::make_pair(m.z_exps, m.zbar_exps), 1).second)
      throw std::invalid_argument("polynomial: duplicate exponent pair");
  }
}

// Canonical form: merged duplicate terms, zero terms dropped, sorted.
inline PolynomialSpec normalized(const PolynomialSpec& p) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, Complex> acc;
  for (const auto& m : p.monomials) acc[{m.z_exps, m.zbar_exps}] += m.coeff;
  PolynomialSpec r;
  r.num_complex_vars = p.num_complex_vars;
  for (const auto& [key, c] : acc)
    if (std::abs(c) > 0.0) r.monomials.push_back({c, key.first, key.second});
  return r;
}

inline PolynomialSpec poly_conjugated(const PolynomialSpec& p) {
  PolynomialSpec r;
  r.num_complex_vars = p.num_complex_vars;
  for (const auto& m : p.monomials)
    r.monomials.push_back({std::conj(m.coeff), m.zbar_exps, m.z_exps});
  return r;
}

inline bool poly_is_real(const PolynomialSpec& p) {
  auto a = normalized(p), b = normalized(poly_conjugated(p));
  if (a.monomials.size() != b.monomials.size()) return false;
  for (size_t i = 0; i < a.monomials.size(); ++i) {
    if (a.monomials[i].z_exps != b.monomials[i].z_exps ||
        a.monomials[i].zbar_exps != b.monomials[i].zbar_exps ||
        std::abs(a.monomials[i].coeff - b.monomials[i].coeff) > 1e-12)
      return false;
  }
  return true;
}

inline bool poly_is_holomorphic(const PolynomialSpec& p) {
  for (const auto& m : p.monomials)
    for (int e : m.zbar_exps)
      if (e > 0) return false;
  return true;
}

inline PolynomialSpec poly_partial_z(const PolynomialSpec& p, int k) {
  PolynomialSpec r;
  r.num_complex_vars = p.num_complex_vars;
  for (const auto& m : p.monomials) {
    if (m.z_exps[k] == 0) continue;
    Monomial d = m;
    d.coeff *= static_cast<double>(m.z_exps[k]);
    d.z_exps[k] -= 1;
    r.monomials.push_back(d);
  }
  return r;
}

inline PolynomialSpec poly_partial_zbar(const PolynomialSpec& p, int k) {
  PolynomialSpec r;
  r.num_complex_vars = p.num_complex_vars;
  for (const auto& m : p.monomials) {
    if (m.zbar_exps[k] == 0) continue;
    Monomial d = m;
    d.coeff *= static_cast<double>(m.zbar_exps[k]);
    d.zbar_exps[k] -= 1;
    r.monomials.push_back(d);
  }
  return r;
}

// Real coordinate r = 2k is Re Z_k, r = 2k+1 is Im Z_k.
inline PolynomialSpec poly_partial_real(const PolynomialSpec& p, int r) {
  const int k = r / 2;
  PolynomialSpec a = poly_partial_z(p, k), b = poly_partial_zbar(p, k);
  PolynomialSpec out;
  out.num_complex_vars = p.num_complex_vars;
  const Complex ca = (r % 2 == 0) ? Complex(1.0) : Complex(0.0, 1.0);
  const Complex cb = (r % 2 == 0) ? Complex(1.0) : Complex(0.0, -1.0);
  for (auto m : a.monomials) {
    m.coeff *= ca;
    out.monomials.push_back(m);
  }
  for (auto m : b.monomials) {
    m.coeff *= cb;
    out.monomials.push_back(m);
  }
  return normalized(out);
}

inline Complex poly_eval(const PolynomialSpec& p, const std::vector<Complex>& Z) {
  Complex s = 0.0;
  for (const auto& m : p.monomials) {
    Complex t = m.coeff;
    for (int k = 0; k < p.num_complex_vars; ++k) {
      for (int e = 0; e < m.z_exps[k]; ++e) t *= Z[k];
      for (int e = 0; e < m.zbar_exps[k]; ++e) t *= std::conj(Z[k]);
    }
    s += t;
  }
  return s;
}

inline PolynomialSpec poly_add(const PolynomialSpec& a, const PolynomialSpec& b) {
  PolynomialSpec r = a;
  r.monomials.insert(r.monomials.end(), b.monomials.begin(), b.monomials.end());
  return normalized(r);
}

inline PolynomialSpec poly_scale(const PolynomialSpec& a, Complex s) {
  PolynomialSpec r = a;
  for (auto& m : r.monomials) m.coeff *= s;
  return r;
}

inline PolynomialSpec poly_multiply(const PolynomialSpec& a, const PolynomialSpec& b) {
  PolynomialSpec r;
  r.num_complex_vars = a.num_complex_vars;
  for (const auto& ma : a.monomials)
    for (const auto& mb : b.monomials) {
      Monomial m;
      m.coeff = ma.coeff * mb.coeff;
      m.z_exps = ma.z_exps;
      m.zbar_exps = ma.zbar_exps;
      for (int k = 0; k < r.num_complex_vars; ++k) {
        m.z_exps[k] += mb.z_exps[k];
        m.zbar_exps[k] += mb.zbar_exps[k];
      }
      r.monomials.push_back(m);
    }
  return normalized(r);
}

// outer(W, conj W) with W_j = components[j](Z); components must be holomorphic,
// so conj W_j = conjugated component. The result is exact.
inline PolynomialSpec poly_compose(const PolynomialSpec& outer,
                                   const std::vector<PolynomialSpec>& components) {
  if (static_cast<int>(components.size()) != outer.num_complex_vars)
    throw std::invalid_argument("poly_compose: component count mismatch");
  for (const auto& c : components)
    if (!poly_is_holomorphic(c))
      throw std::invalid_argument("poly_compose: components must be holomorphic");
  const int n_inner = components.empty() ? 0 : components[0].num_complex_vars;
  PolynomialSpec one;
  one.num_complex_vars = n_inner;
  one.monomials.push_back(
      {1.0, std::vector<int>(n_inner, 0), std::vector<int>(n_inner, 0)});
  PolynomialSpec result;
  result.num_complex_vars = n_inner;
  for (const auto& m : outer.monomials) {
    PolynomialSpec t = poly_scale(one, m.coeff);
    for (int k = 0; k < outer.num_complex_vars; ++k) {
      for (int e = 0; e < m.z_exps[k]; ++e) t = poly_multiply(t, components[k]);
      for (int e = 0; e < m.zbar_exps[k]; ++e)
        t = poly_multiply(t, poly_conjugated(components[k]));
    }
    result = poly_add(result, t);
  }
  return result;
}

// Evaluates p with Z_k = slots[2k] + i slots[2k+1]. Slots must be real-valued
// jets so that the conjugate variables are honest conjugates.
inline Jet poly_eval_to_jet(const PolynomialSpec& p, const std::vector<Jet>& slots) {
  if (static_cast<int>(slots.size()) != 2 * p.num_complex_vars)
    throw std::invalid_argument("poly_eval_to_jet: slot count mismatch");
  const ContextPtr ctx = slots[0].context_ptr();
  std::vector<int> max_z(p.num_complex_vars, 0), max_zb(p.num_complex_vars, 0);
  for (const auto& m : p.monomials)
    for (int k = 0; k < p.num_complex_vars; ++k) {
      max_z[k] = std::max(max_z[k], m.z_exps[k]);
      max_zb[k] = std::max(max_zb[k], m.zbar_exps[k]);
    }
  // power ladders per variable
  std::vector<std::vector<Jet>> zp(p.num_complex_vars), zbp(p.num_complex_vars);
  for (int k = 0; k < p.num_complex_vars; ++k) {
    Jet z = slots[2 * k] + Complex(0.0, 1.0) * slots[2 * k + 1];
    Jet zb = slots[2 * k] - Complex(0.0, 1.0) * slots[2 * k + 1];
    zp[k].push_back(Jet::constant(ctx, 1.0));
    zbp[k].push_back(Jet::constant(ctx, 1.0));
    for (int e = 1; e <= max_z[k]; ++e) zp[k].push_back(zp[k].back() * z);
    for (int e = 1; e <= max_zb[k]; ++e) zbp[k].push_back(zbp[k].back() * zb);
  }
  Jet acc(ctx, ctx->order());
  for (const auto& m : p.monomials) {
    Jet t = Jet::constant(ctx, m.coeff);
    for (int k = 0; k < p.num_complex_vars; ++k) {
      if (m.z_exps[k] > 0) t = t * zp[k][m.z_exps[k]];
      if (m.zbar_exps[k] > 0) t = t * zbp[k][m.zbar_exps[k]];
    }
    acc += t;
  }
  return acc;
}

// Assignment of the 2N real coordinates to jet variables: entry >= 0 selects a
// jet variable, -1 freezes the coordinate at the base value.
inline Jet jet_from_polynomial(const PolynomialSpec& p, const std::vector<Complex>& base,
                               const std::vector<int>& assignment, const ContextPtr& ctx) {
  if (static_cast<int>(base.size()) != p.num_complex_vars)
    throw std::invalid_argument("jet_from_polynomial: base arity mismatch");
  if (static_cast<int>(assignment.size()) != 2 * p.num_complex_vars)
    throw std::invalid_argument("jet_from_polynomial: assignment arity mismatch");
  std::vector<Jet> slots;
  slots.reserve(assignment.size());
  for (int r = 0; r < static_cast<int>(assignment.size()); ++r) {
    const double b = (r % 2 == 0) ? base[r / 2].real() : base[r / 2].imag();
    if (assignment[r] < 0)
      slots.push_back(Jet::constant(ctx, b));
    else
      slots.push_back(Jet::variable(ctx, assignment[r], b));
  }
  return poly_eval_to_jet(p, slots);
}

}  // namespace crgeo
