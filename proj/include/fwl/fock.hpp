#pragma once

#include <memory>
#include <vector>

#include "fwl/numerics.hpp"
#include "fwl/symbols.hpp"
#include "fwl/weights.hpp"

namespace fwl {

struct FockParams {
  double alpha = 1.0;
  int n = 1;

  FockParams() = default;
  FockParams(double a, int dim);
};

// Samples of a function on a fixed quadrature grid.
struct GridFunction {
  GridPtr grid;
  std::vector<Complex> values;

  std::size_t size() const { return values.size(); }
};

GridFunction sample_fn(GridPtr grid, const ComplexFn& f);
GridFunction sample_kernel(const FockParams& params, GridPtr grid, PointView z, bool normalized);

// K_z(u) = e^{alpha <u,z>}; k_z(u) = e^{alpha <u,z> - alpha|z|^2/2}.
// The log forms are the safe entry points for large arguments.
Complex kernel_log(const FockParams& params, PointView z, PointView u);
Complex normalized_kernel_log(const FockParams& params, PointView z, PointView u);
Complex kernel_eval(const FockParams& params, PointView z, PointView u);
Complex normalized_kernel_eval(const FockParams& params, PointView z, PointView u);

// <f,g>_alpha = int f conj(g) dlambda_alpha over the sample grid.
Complex pairing(const FockParams& params, const GridFunction& f, const GridFunction& g);

// (int |f|^p e^{-p alpha |z|^2 / 2} w dv)^{1/p} on the sample grid.
double weighted_norm(const FockParams& params, const GridFunction& f, const ExponentPair& p,
                     const Weight& w);

struct KernelNormResult {
  double value = 0.0;      // ||K_z||_{F^p_{alpha,w}}, inf if the magnitude overflows
  double log_value = 0.0;  // always finite
  // value / (e^{alpha|z|^2/2} w(Q_1(z))^{1/p}), the two-sided comparison target
  double ratio_vs_estimate = 0.0;
  bool truncation_warning = false;
};

KernelNormResult kernel_norm(const FockParams& params, PointView z, const ExponentPair& p,
                             const Weight& w, const QuadratureGrid& grid);

// g_{p,w}(u) = (int e^{-p alpha |xi-u|^2/2} w(xi) dv)^{1/p} at every grid
// node, so that ||K_u||_{F^p_{alpha,w}} = e^{alpha|u|^2/2} g_{p,w}(u).
std::vector<double> kernel_norm_field(const FockParams& params, const ExponentPair& p,
                                      const Weight& w, const QuadratureGrid& grid);

// P_alpha f(z) resp. T_phi f(z) by quadrature; truncation_warn is set when z
// sits within 3 units of the box edge.
Complex projection_apply(const FockParams& params, const GridFunction& f, PointView z,
                         bool* truncation_warn = nullptr);
Complex toeplitz_apply(const FockParams& params, const SymbolFn& phi, const GridFunction& f,
                       PointView z, bool* truncation_warn = nullptr);

// Berezin transform of T_phi in closed heat-kernel form:
// (alpha/pi)^n int phi(u) e^{-alpha|z-u|^2} dv(u).
Complex berezin_symbol(const FockParams& params, const SymbolFn& phi, PointView z,
                       const QuadratureGrid& grid, bool* truncation_warn = nullptr);

enum class TestVariant { nece, main3 };

struct TestFunction {
  GridFunction values;
  // the L^p bound carried by the construction:
  //   nece : (int_{Q cap E_m} |phi|^{p'} w' dv)^{1/p}
  //   main3: (int_{Q cap E_m} sigma^{-p'/p} dv)^{1/p}
  double norm_bound = 0.0;
  bool degenerate = false;
};

// Extremal test function supported on Q_r(u) cap E_m; m may be +inf.
TestFunction test_function_build(const FockParams& params, TestVariant variant,
                                 const ExponentPair& p, const Weight& weight_or_sigma,
                                 const SymbolFn* phi, PointView u, double r, double m,
                                 GridPtr grid);

enum class LocalKind { toeplitz, projection };

// Rank-one localized operator: chi_{Q_r(u)} k_u int_{Q_r(u)} [phi] f conj(k_u) dlambda.
GridFunction localized_operator_apply(const FockParams& params, LocalKind kind,
                                      const SymbolFn* phi, PointView u, double r,
                                      const GridFunction& f);

}  // namespace fwl
