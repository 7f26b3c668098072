#pragma once

// Implicit-function jets: solve rho = 0 for one real coordinate as a graph
// over the remaining ones, by Newton iteration in jet arithmetic.

#include <cmath>

#include "crgeo/polynomial.hpp"

namespace crgeo {

struct GraphJet {
  Jet h;                      // real-valued graph jet, h(0) = 0
  std::vector<Jet> slots;     // 2N real slot jets realizing the embedding
  std::vector<int> var_of_real;  // real coord -> jet variable (-1 for solved)
};

// Solves rho(Z, conj Z) = 0 for real coordinate solve_var near base. The free
// real coordinates become jet variables in increasing order. Converges
// quadratically; iteration cap ceil(log2 K) + 2, final residual < 1e-10.
inline GraphJet implicit_graph_jet(const PolynomialSpec& rho,
                                   const std::vector<Complex>& base, int solve_var,
                                   const ContextPtr& ctx) {
  validate_polynomial(rho);
  if (!poly_is_real(rho))
    throw std::invalid_argument("implicit_graph_jet: rho must be real-valued");
  const int nreal = 2 * rho.num_complex_vars;
  if (ctx->num_vars() != nreal - 1)
    throw std::invalid_argument("implicit_graph_jet: context must have 2N-1 variables");
  if (std::abs(poly_eval(rho, base)) > 1e-12)
    throw std::invalid_argument("implicit_graph_jet: base is not on the zero set");

  const PolynomialSpec drho = poly_partial_real(rho, solve_var);
  if (std::abs(poly_eval(drho, base)) < 1e-8)
    throw std::domain_error("implicit_graph_jet: zero gradient in the solve direction");

  GraphJet out;
  out.var_of_real.assign(nreal, -1);
  int v = 0;
  for (int r = 0; r < nreal; ++r)
    if (r != solve_var) out.var_of_real[r] = v++;

  const double base_solve =
      (solve_var % 2 == 0) ? base[solve_var / 2].real() : base[solve_var / 2].imag();
  auto make_slots = [&](const Jet& h) {
    std::vector<Jet> slots(nreal);
    for (int r = 0; r < nreal; ++r) {
      const double b = (r % 2 == 0) ? base[r / 2].real() : base[r / 2].imag();
      if (r == solve_var)
        slots[r] = Jet::constant(ctx, base_solve) + h;
      else
        slots[r] = Jet::variable(ctx, out.var_of_real[r], b);
    }
    return slots;
  };

  Jet h(ctx, ctx->order());
  const int max_iter = static_cast<int>(std::ceil(std::log2(std::max(2, ctx->order())))) + 2;
  double res = 1.0;
  for (int it = 0; it <= max_iter; ++it) {
    auto slots = make_slots(h);
    Jet F = poly_eval_to_jet(rho, slots);
    res = F.max_abs();
    if (res < 1e-10) break;
    if (it == max_iter)
      throw std::domain_error("implicit_graph_jet: Newton iteration did not converge");
    Jet dF = poly_eval_to_jet(drho, slots);
    h -= F / dF;
  }
  out.h = h.realified();
  out.slots = make_slots(out.h);
  return out;
}

}  // namespace crgeo
