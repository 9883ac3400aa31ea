#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fwl/numerics.hpp"
#include "json.hpp"

namespace fwl {

// Bounded symbol of a Toeplitz operator. Families declare where their
// discontinuities sit (radial_jumps) so quadratures can refine boundary
// cells, and a finite support_radius when truncation is exact.
struct SymbolFn {
  ComplexFn eval;
  double sup_norm_hint = 1.0;
  bool radial = false;
  double support_radius = std::numeric_limits<double>::infinity();
  std::vector<double> radial_jumps;
  std::string family;
  nlohmann::json params;

  static SymbolFn constant(Complex value);
  static SymbolFn indicator_ball(double radius);
  static SymbolFn plane_wave(std::vector<double> k);  // e^{i k . t} over the 2n real axes
};

// {"symbol":"constant","value":...} | {"symbol":"indicator_ball","radius":...}
// | {"symbol":"plane_wave","k":[...]} | {"symbol":"tabulated","R":..,"h":..,
//   "values_re":[...],"values_im":[...]}
SymbolFn make_symbol(const nlohmann::json& j, int n);

}  // namespace fwl
