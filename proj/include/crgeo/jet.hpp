#pragma once

// Truncated multivariate Taylor expansions over complex<double>.
//
// A jet carries a trusted order alongside its coefficients: partials lose one
// order, binary operations take the minimum. Coefficients above the trusted
// order are kept at exact zero so that products never read garbage.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "crgeo/multiindex.hpp"

namespace crgeo {

using Complex = std::complex<double>;

class Jet {
 public:
  Jet() = default;

  Jet(ContextPtr ctx, int trusted)
      : ctx_(std::move(ctx)), coeffs_(ctx_->size(), Complex(0.0)), trusted_(trusted) {
    if (trusted_ > ctx_->order()) trusted_ = ctx_->order();
  }

  static Jet constant(const ContextPtr& ctx, Complex value) {
    Jet j(ctx, ctx->order());
    j.coeffs_[0] = value;
    return j;
  }

  static Jet variable(const ContextPtr& ctx, int var, Complex base = 0.0) {
    if (var < 0 || var >= ctx->num_vars())
      throw std::invalid_argument("jet variable index out of range");
    Jet j(ctx, ctx->order());
    j.coeffs_[0] = base;
    if (ctx->order() >= 1) j.coeffs_[1 + var] = 1.0;
    return j;
  }

  bool empty() const { return !ctx_; }
  const JetContext& context() const { return *ctx_; }
  const ContextPtr& context_ptr() const { return ctx_; }
  int trusted() const { return trusted_; }

  Jet truncated(int new_trusted) const {
    Jet r = *this;
    if (new_trusted < r.trusted_) {
      r.trusted_ = new_trusted;
      r.zero_above_trusted();
    }
    return r;
  }

  Complex value() const { return coeffs_[0]; }
  const std::vector<Complex>& coeffs() const { return coeffs_; }
  Complex& raw(int idx) { return coeffs_[idx]; }
  Complex raw(int idx) const { return coeffs_[idx]; }

  Complex coeff(const std::vector<uint8_t>& exps) const {
    int idx = ctx_->index_of(exps);
    if (idx < 0) throw std::invalid_argument("jet coeff: exponent out of range");
    return coeffs_[idx];
  }

  double max_abs() const {
    double m = 0.0;
    const int n = upper_index();
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(coeffs_[i]));
    return m;
  }

  Jet conjugated() const {
    Jet r = *this;
    for (auto& c : r.coeffs_) c = std::conj(c);
    return r;
  }

  Jet& operator+=(const Jet& o) {
    check_same(o);
    trusted_ = std::min(trusted_, o.trusted_);
    const int n = static_cast<int>(coeffs_.size());
    for (int i = 0; i < n; ++i) coeffs_[i] += o.coeffs_[i];
    zero_above_trusted();
    return *this;
  }

  Jet& operator-=(const Jet& o) {
    check_same(o);
    trusted_ = std::min(trusted_, o.trusted_);
    const int n = static_cast<int>(coeffs_.size());
    for (int i = 0; i < n; ++i) coeffs_[i] -= o.coeffs_[i];
    zero_above_trusted();
    return *this;
  }

  Jet& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  Jet& operator+=(Complex s) {
    coeffs_[0] += s;
    return *this;
  }

  Jet& operator-=(Complex s) {
    coeffs_[0] -= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, Complex s) { return a += s; }
  friend Jet operator+(Complex s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, Complex s) { return a -= s; }
  friend Jet operator*(Jet a, Complex s) { return a *= s; }
  friend Jet operator*(Complex s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, Complex s) { return a *= Complex(1.0) / s; }
  friend Jet operator-(Complex s, const Jet& a) {
    Jet r = a * Complex(-1.0);
    return r += s;
  }
  friend Jet operator-(const Jet& a) { return a * Complex(-1.0); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same(b);
    Jet r(a.ctx_, std::min(a.trusted_, b.trusted_));
    if (r.trusted_ < 0) return r;
    const auto& groups = a.ctx_->mul_by_degree();
    for (int d = 0; d <= r.trusted_; ++d)
      for (const auto& t : groups[d])
        r.coeffs_[t.out] += a.coeffs_[t.a] * b.coeffs_[t.b];
    return r;
  }

  Jet partial(int var) const {
    Jet r(ctx_, trusted_ - 1);
    if (r.trusted_ < 0) return r;
    const int n = upper_index();
    for (int i = 0; i < n; ++i) {
      const auto& e = ctx_->exponents(i);
      if (e[var] == 0) continue;
      int j = ctx_->index_shift_down(i, var);
      r.coeffs_[j] += coeffs_[i] * static_cast<double>(e[var]);
    }
    r.zero_above_trusted();
    return r;
  }

  // Geometric series around the constant term; requires it to be nonzero.
  Jet inverse() const {
    Complex c = coeffs_[0];
    if (std::abs(c) < 1e-14)
      throw std::domain_error("jet inverse: constant term is zero");
    Jet h = (*this) * (Complex(-1.0) / c);
    h += Complex(1.0);  // h = 1 - f/c, no constant term
    Jet acc = Jet::constant(ctx_, 1.0).truncated(trusted_);
    Jet pw = h;
    for (int k = 1; k <= trusted_; ++k) {
      acc += pw;
      if (k < trusted_) pw = pw * h;
    }
    return acc * (Complex(1.0) / c);
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.inverse(); }

  // Binomial series for the principal square root; requires a constant term
  // away from the branch cut (callers only use positive real ones).
  Jet sqrt_root() const {
    Complex c = coeffs_[0];
    if (std::abs(c) < 1e-14)
      throw std::domain_error("jet sqrt: constant term is zero");
    Jet h = (*this) * (Complex(1.0) / c);
    h -= Complex(1.0);
    Jet acc = Jet::constant(ctx_, 1.0).truncated(trusted_);
    Jet pw = Jet::constant(ctx_, 1.0).truncated(trusted_);
    double b = 1.0;
    for (int k = 1; k <= trusted_; ++k) {
      b *= (0.5 - (k - 1)) / k;
      pw = pw * h;
      acc += pw * Complex(b);
    }
    return acc * std::sqrt(c);
  }

  Jet exponential() const {
    Complex c = coeffs_[0];
    Jet h = *this;
    h -= c;
    Jet acc = Jet::constant(ctx_, 1.0).truncated(trusted_);
    Jet pw = Jet::constant(ctx_, 1.0).truncated(trusted_);
    double fact = 1.0;
    for (int k = 1; k <= trusted_; ++k) {
      fact *= k;
      pw = pw * h;
      acc += pw * Complex(1.0 / fact);
    }
    return acc * std::exp(c);
  }

  // Zeroes imaginary dust so conjugation identities stay exact; the caller
  // asserts the input is real-valued up to tolerance first.
  Jet realified(double tol = 1e-11) const {
    Jet r = *this;
    for (auto& c : r.coeffs_) {
      if (std::abs(c.imag()) > tol * std::max(1.0, std::abs(c)))
        throw std::domain_error("realified: jet has a non-real coefficient");
      c = Complex(c.real(), 0.0);
    }
    return r;
  }

 private:
  int upper_index() const {
    if (trusted_ < 0) return 0;
    return ctx_->first_of_degree(std::min(trusted_, ctx_->order()) + 1);
  }

  void zero_above_trusted() {
    const int n = static_cast<int>(coeffs_.size());
    for (int i = upper_index(); i < n; ++i) coeffs_[i] = 0.0;
  }

  void check_same(const Jet& o) const {
    if (ctx_.get() != o.ctx_.get())
      throw std::invalid_argument("jet operation across different contexts");
  }

  ContextPtr ctx_;
  std::vector<Complex> coeffs_;
  int trusted_ = -1;
};

inline Jet real_part(const Jet& f) { return (f + f.conjugated()) * Complex(0.5); }
inline Jet imag_part(const Jet& f) {
  return (f - f.conjugated()) * Complex(0.0, -0.5);
}

// Max-abs distance over the common trusted range.
inline double jet_distance(const Jet& a, const Jet& b) {
  return (a - b).max_abs();
}

inline void require_trusted(const Jet& j, int order, const char* what) {
  if (j.trusted() < order)
    throw std::invalid_argument(std::string(what) + ": jet order budget exhausted");
}

}  // namespace crgeo
