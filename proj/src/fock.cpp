#include "fwl/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// e^{-kLogCut} is where Gaussian windows are truncated.
constexpr double kLogCut = 40.0;
constexpr double kExpOverflow = 709.0;

double gaussian_prefactor(const FockParams& p) {
  return std::pow(p.alpha / 3.14159265358979323846, p.n);
}

// index range of axis nodes within [lo, hi]
std::pair<int, int> axis_range(const QuadratureGrid& g, double lo, double hi) {
  const double R = g.box_radius();
  const double d = g.spacing();
  int a = static_cast<int>(std::ceil((lo + R) / d - 0.5 - 1e-12));
  int b = static_cast<int>(std::floor((hi + R) / d - 0.5 + 1e-12));
  a = std::max(a, 0);
  b = std::min(b, g.cells_per_axis() - 1);
  return {a, b};
}

}  // namespace

FockParams::FockParams(double a, int dim) : alpha(a), n(dim) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (n < 1) throw ConfigError("dimension n must be >= 1");
}

GridFunction sample_fn(GridPtr grid, const ComplexFn& f) {
  GridFunction out;
  out.grid = std::move(grid);
  out.values.resize(out.grid->size());
  parallel_chunks(out.grid->size(), kDefaultChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out.values[i] = f(out.grid->node(i));
  });
  return out;
}

GridFunction sample_kernel(const FockParams& params, GridPtr grid, PointView z, bool normalized) {
  std::vector<double> zc(z.begin(), z.end());
  FockParams p = params;
  if (normalized) {
    return sample_fn(std::move(grid), [p, zc](PointView u) {
      return normalized_kernel_eval(p, zc, u);
    });
  }
  return sample_fn(std::move(grid), [p, zc](PointView u) { return kernel_eval(p, zc, u); });
}

Complex kernel_log(const FockParams& params, PointView z, PointView u) {
  return params.alpha * hermitian_inner(u, z);
}

Complex normalized_kernel_log(const FockParams& params, PointView z, PointView u) {
  return params.alpha * hermitian_inner(u, z) - 0.5 * params.alpha * abs2(z);
}

Complex kernel_eval(const FockParams& params, PointView z, PointView u) {
  Complex lg = kernel_log(params, z, u);
  if (lg.real() > kExpOverflow) {
    throw EvaluationError("kernel magnitude exceeds the double range; combine exponents in log space");
  }
  return std::exp(lg);
}

Complex normalized_kernel_eval(const FockParams& params, PointView z, PointView u) {
  Complex lg = normalized_kernel_log(params, z, u);
  if (lg.real() > kExpOverflow) {
    throw EvaluationError("kernel magnitude exceeds the double range; combine exponents in log space");
  }
  return std::exp(lg);
}

Complex pairing(const FockParams& params, const GridFunction& f, const GridFunction& g) {
  if (f.grid != g.grid || f.size() != g.size()) {
    throw ConfigError("pairing needs both functions on the same grid");
  }
  const QuadratureGrid& grid = *f.grid;
  const double pref = gaussian_prefactor(params);
  const double alpha = params.alpha;

  auto parts = chunk_map<KahanComplex>(grid.size(), kDefaultChunk,
                                       [&](std::size_t b, std::size_t e) {
    KahanComplex acc;
    for (std::size_t i = b; i < e; ++i) {
      acc.add(f.values[i] * std::conj(g.values[i]) * std::exp(-alpha * abs2(grid.node(i))));
    }
    return acc;
  });
  KahanComplex total;
  for (const auto& p : parts) total.merge(p);
  return total.value() * (pref * grid.node_weight());
}

double weighted_norm(const FockParams& params, const GridFunction& f, const ExponentPair& p,
                     const Weight& w) {
  const QuadratureGrid& grid = *f.grid;
  const double coef = -p.p * params.alpha / 2.0;
  auto parts = chunk_map<KahanSum>(grid.size(), kDefaultChunk,
                                   [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    for (std::size_t i = b; i < e; ++i) {
      PointView u = grid.node(i);
      double m = std::abs(f.values[i]);
      if (m == 0.0) continue;
      acc.add(std::pow(m, p.p) * std::exp(coef * abs2(u)) * w.eval(u));
    }
    return acc;
  });
  KahanSum total;
  for (const auto& q : parts) total.merge(q);
  return std::pow(total.value() * grid.node_weight(), 1.0 / p.p);
}

KernelNormResult kernel_norm(const FockParams& params, PointView z, const ExponentPair& p,
                             const Weight& w, const QuadratureGrid& grid) {
  const double alpha = params.alpha;
  const double coef = p.p * alpha / 2.0;  // e^{-coef |u-z|^2}
  const double window = std::sqrt(kLogCut / coef);
  const int axes = grid.axes();

  // integral of e^{-coef|u-z|^2} w(u) over grid nodes in the window;
  // the Gaussian factors separate per axis
  std::vector<std::pair<int, int>> ranges(axes);
  std::vector<std::vector<double>> gauss(axes);
  for (int a = 0; a < axes; ++a) {
    ranges[a] = axis_range(grid, z[a] - window, z[a] + window);
    auto& g = gauss[a];
    for (int k = ranges[a].first; k <= ranges[a].second; ++k) {
      double d = grid.axis_nodes()[k] - z[a];
      g.push_back(std::exp(-coef * d * d));
    }
  }

  KahanSum acc;
  std::vector<int> idx(axes);
  std::vector<double> pt(axes);
  std::function<void(int, double)> walk = [&](int a, double factor) {
    if (a == axes) {
      acc.add(factor * w.eval(pt));
      return;
    }
    int count = ranges[a].second - ranges[a].first + 1;
    for (int k = 0; k < count; ++k) {
      pt[a] = grid.axis_nodes()[ranges[a].first + k];
      walk(a + 1, factor * gauss[a][k]);
    }
  };
  bool empty = false;
  for (int a = 0; a < axes; ++a) empty = empty || ranges[a].second < ranges[a].first;
  if (!empty) walk(0, 1.0);

  const double integral = acc.value() * grid.node_weight();
  const double g_val = std::pow(integral, 1.0 / p.p);

  KernelNormResult res;
  res.log_value = alpha * abs2(z) / 2.0 + std::log(std::max(g_val, 1e-300));
  res.value = res.log_value > kExpOverflow ? kInf : std::exp(res.log_value);
  const double hat = cube_mass_unchecked(w, CubeSpec{ComplexPoint(std::vector<double>(z.begin(), z.end())), 1.0},
                                         grid.spacing());
  res.ratio_vs_estimate = hat > 0.0 ? g_val / std::pow(hat, 1.0 / p.p) : kInf;
  res.truncation_warning = std::sqrt(abs2(z)) > grid.box_radius() - 3.0;
  return res;
}

std::vector<double> kernel_norm_field(const FockParams& params, const ExponentPair& p,
                                      const Weight& w, const QuadratureGrid& grid) {
  const double coef = p.p * params.alpha / 2.0;
  const double window = std::sqrt(kLogCut / coef);
  const int M = grid.cells_per_axis();
  if (grid.dim_n() != 1) throw ConfigError("kernel_norm_field is implemented for n = 1");

  const int D = std::min(M - 1, static_cast<int>(std::ceil(window / grid.spacing())));
  std::vector<double> table(D + 1);
  for (int d = 0; d <= D; ++d) {
    double s = d * grid.spacing();
    table[d] = std::exp(-coef * s * s);
  }

  // w on nodes, reshaped M x M (axis 0 slow)
  std::vector<double> wv(grid.size());
  parallel_chunks(grid.size(), kDefaultChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) wv[i] = w.eval(grid.node(i));
  });

  // separable pass 1: convolve along the fast axis
  std::vector<double> pass1(grid.size());
  parallel_chunks(static_cast<std::size_t>(M), 8, [&](std::size_t, std::size_t rb, std::size_t re) {
    for (std::size_t row = rb; row < re; ++row) {
      const double* src = wv.data() + row * M;
      double* dst = pass1.data() + row * M;
      for (int i = 0; i < M; ++i) {
        KahanSum acc;
        int lo = std::max(0, i - D), hi = std::min(M - 1, i + D);
        for (int j = lo; j <= hi; ++j) acc.add(table[std::abs(i - j)] * src[j]);
        dst[i] = acc.value();
      }
    }
  });
  // pass 2: convolve along the slow axis
  std::vector<double> out(grid.size());
  parallel_chunks(static_cast<std::size_t>(M), 8, [&](std::size_t, std::size_t cb, std::size_t ce) {
    for (std::size_t col = cb; col < ce; ++col) {
      for (int i = 0; i < M; ++i) {
        KahanSum acc;
        int lo = std::max(0, i - D), hi = std::min(M - 1, i + D);
        for (int j = lo; j <= hi; ++j) acc.add(table[std::abs(i - j)] * pass1[j * M + col]);
        out[i * M + col] = std::pow(acc.value() * grid.node_weight(), 1.0 / p.p);
      }
    }
  });
  return out;
}

namespace {

Complex apply_kernel_quadrature(const FockParams& params, const GridFunction& f, PointView z,
                                const SymbolFn* phi, bool* truncation_warn) {
  const QuadratureGrid& grid = *f.grid;
  const double alpha = params.alpha;
  std::vector<double> zc(z.begin(), z.end());

  auto parts = chunk_map<KahanComplex>(grid.size(), kDefaultChunk,
                                       [&](std::size_t b, std::size_t e) {
    KahanComplex acc;
    for (std::size_t i = b; i < e; ++i) {
      PointView u = grid.node(i);
      Complex v = f.values[i];
      if (phi) v *= phi->eval(u);
      if (v == 0.0) continue;
      // conj(K_z(u)) dlambda = e^{alpha<z,u> - alpha|u|^2} (alpha/pi)^n dv
      Complex lg = alpha * hermitian_inner(zc, u) - alpha * abs2(u);
      acc.add(v * std::exp(lg));
    }
    return acc;
  });
  KahanComplex total;
  for (const auto& p : parts) total.merge(p);
  if (truncation_warn) {
    *truncation_warn = std::sqrt(abs2(z)) > grid.box_radius() - 3.0;
  }
  return total.value() * (gaussian_prefactor(params) * grid.node_weight());
}

}  // namespace

Complex projection_apply(const FockParams& params, const GridFunction& f, PointView z,
                         bool* truncation_warn) {
  return apply_kernel_quadrature(params, f, z, nullptr, truncation_warn);
}

Complex toeplitz_apply(const FockParams& params, const SymbolFn& phi, const GridFunction& f,
                       PointView z, bool* truncation_warn) {
  return apply_kernel_quadrature(params, f, z, &phi, truncation_warn);
}

Complex berezin_symbol(const FockParams& params, const SymbolFn& phi, PointView z,
                       const QuadratureGrid& grid, bool* truncation_warn) {
  const double alpha = params.alpha;
  const double window = std::sqrt(kLogCut / alpha);
  const int axes = grid.axes();
  const double spacing = grid.spacing();

  std::vector<std::pair<int, int>> ranges(axes);
  for (int a = 0; a < axes; ++a) ranges[a] = axis_range(grid, z[a] - window, z[a] + window);

  // cells straddling a declared discontinuity circle of phi get subdivided
  const int refine = axes <= 2 ? 128 : 8;
  auto straddles = [&](PointView mid) {
    if (phi.radial_jumps.empty()) return false;
    double lo2 = 0.0, hi2 = 0.0;
    for (int a = 0; a < axes; ++a) {
      double lo = std::max(0.0, std::abs(mid[a]) - spacing / 2.0);
      double hi = std::abs(mid[a]) + spacing / 2.0;
      lo2 += lo * lo;
      hi2 += hi * hi;
    }
    for (double rho : phi.radial_jumps) {
      if (lo2 < rho * rho && rho * rho < hi2) return true;
    }
    return false;
  };

  // two-point Gauss rule per cell axis: the symbol may clip the Gaussian to
  // a finite region, which breaks the whole-lattice midpoint superconvergence
  const double gauss_off = spacing / (2.0 * std::sqrt(3.0));
  KahanComplex acc;
  std::vector<double> pt(axes), sub(axes);
  std::vector<int> sdx(axes);
  std::function<void(int)> walk = [&](int a) {
    if (a == axes) {
      if (!straddles(pt)) {
        KahanComplex cell;
        std::fill(sdx.begin(), sdx.end(), 0);
        for (;;) {
          for (int b = 0; b < axes; ++b) sub[b] = pt[b] + (sdx[b] ? gauss_off : -gauss_off);
          cell.add(phi.eval(sub) * std::exp(-alpha * dist2(sub, z)));
          int b = axes - 1;
          while (b >= 0 && ++sdx[b] == 2) sdx[b--] = 0;
          if (b < 0) break;
        }
        acc.add(cell.value() / std::pow(2.0, axes));
        return;
      }
      std::fill(sdx.begin(), sdx.end(), 0);
      KahanComplex cell;
      for (;;) {
        for (int b = 0; b < axes; ++b) {
          sub[b] = pt[b] - spacing / 2.0 + (sdx[b] + 0.5) * spacing / refine;
        }
        cell.add(phi.eval(sub) * std::exp(-alpha * dist2(sub, z)));
        int b = axes - 1;
        while (b >= 0 && ++sdx[b] == refine) sdx[b--] = 0;
        if (b < 0) break;
      }
      acc.add(cell.value() / std::pow(refine, axes));
      return;
    }
    for (int k = ranges[a].first; k <= ranges[a].second; ++k) {
      pt[a] = grid.axis_nodes()[k];
      walk(a + 1);
    }
  };
  bool empty = false;
  for (int a = 0; a < axes; ++a) empty = empty || ranges[a].second < ranges[a].first;
  if (!empty) walk(0);

  if (truncation_warn) {
    *truncation_warn = sup_coord(z) + window > grid.box_radius();
  }
  return acc.value() * (gaussian_prefactor(params) * grid.node_weight());
}

TestFunction test_function_build(const FockParams& params, TestVariant variant,
                                 const ExponentPair& p, const Weight& weight_or_sigma,
                                 const SymbolFn* phi, PointView u, double r, double m,
                                 GridPtr grid) {
  if (p.is_one()) throw ConfigError("test functions need p > 1");
  if (variant == TestVariant::nece && !phi) {
    throw ConfigError("the nece test function needs a symbol");
  }
  const double pc = p.conj();
  const double dual_expo = -p.dual_ratio();
  const Weight& base = weight_or_sigma;
  if (!base.strictly_positive) {
    throw ConfigError("test functions need a strictly positive weight on the cube");
  }

  std::vector<double> uc(u.begin(), u.end());
  const double half = r / 2.0;
  auto in_cube = [&](PointView xi) {
    for (std::size_t a = 0; a < xi.size(); ++a) {
      if (std::abs(xi[a] - uc[a]) > half) return false;
    }
    return true;
  };

  // density against which both the samples and the carried norm bound are
  // formed: nece uses |phi|^{p'} w', main3 uses sigma^{-p'/p}
  auto e_m_density = [&](PointView xi) {
    double wd = std::pow(base.eval(xi), dual_expo);
    if (variant == TestVariant::main3) return wd;
    double mag = std::abs(phi->eval(xi));
    return mag == 0.0 ? 0.0 : std::pow(mag, pc) * wd;
  };
  auto in_e_m = [&](PointView xi) {
    if (std::isinf(m)) return true;
    if (variant == TestVariant::main3) {
      return std::pow(base.eval(xi), dual_expo) <= m;
    }
    double mag = std::abs(phi->eval(xi));
    double wd = std::pow(base.eval(xi), dual_expo);
    return (mag == 0.0 ? 0.0 : std::pow(mag, pc) * wd) <= m;
  };

  TestFunction out;
  out.values.grid = grid;
  out.values.values.assign(grid->size(), Complex{0.0, 0.0});

  bool any_support = false;
  bool any_nonzero = false;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    PointView xi = grid->node(i);
    if (!in_cube(xi) || !in_e_m(xi)) continue;
    any_support = true;
    Complex v;
    if (variant == TestVariant::main3) {
      v = normalized_kernel_eval(params, uc, xi) * std::pow(base.eval(xi), dual_expo);
    } else {
      Complex pv = phi->eval(xi);
      double mag = std::abs(pv);
      if (mag == 0.0) continue;
      // conj(phi)/|phi|^delta = phase(conj(phi)) |phi|^{p'-1} with delta=(p-2)/(p-1)
      Complex phase = std::conj(pv) / mag;
      v = phase * std::pow(mag, pc - 1.0) * std::pow(base.eval(xi), dual_expo) *
          normalized_kernel_eval(params, uc, xi);
    }
    if (v != 0.0) any_nonzero = true;
    out.values.values[i] = v;
  }
  if (!any_support) {
    throw DegenerateTestError("Q_r(u) cap E_m contains no grid node; raise m");
  }
  out.degenerate = !any_nonzero;

  // norm bound via a cube-aligned subgrid, independent of the sample grid
  RealFn density = [&](PointView xi) { return in_e_m(xi) ? e_m_density(xi) : 0.0; };
  std::vector<double> jumps = base.radial_jumps;
  if (phi) {
    jumps.insert(jumps.end(), phi->radial_jumps.begin(), phi->radial_jumps.end());
  }
  Weight density_w;
  density_w.eval = density;
  density_w.radial_jumps = jumps;
  double mass = cube_mass_unchecked(density_w, CubeSpec{ComplexPoint(uc), r}, grid->spacing());
  out.norm_bound = std::pow(mass, 1.0 / p.p);
  return out;
}

GridFunction localized_operator_apply(const FockParams& params, LocalKind kind,
                                      const SymbolFn* phi, PointView u, double r,
                                      const GridFunction& f) {
  if (kind == LocalKind::toeplitz && !phi) throw ConfigError("localized Toeplitz needs a symbol");
  const QuadratureGrid& grid = *f.grid;
  if (sup_coord(u) + r / 2.0 > grid.box_radius() + 1e-12) {
    throw TruncationError("Q_r(u) escapes the quadrature box");
  }
  std::vector<double> uc(u.begin(), u.end());
  const double half = r / 2.0;
  auto in_cube = [&](PointView xi) {
    for (std::size_t a = 0; a < xi.size(); ++a) {
      if (std::abs(xi[a] - uc[a]) > half) return false;
    }
    return true;
  };

  // c = int_{Q_r(u)} [phi] f conj(k_u) dlambda_alpha
  KahanComplex acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PointView xi = grid.node(i);
    if (!in_cube(xi)) continue;
    Complex v = f.values[i];
    if (kind == LocalKind::toeplitz) v *= phi->eval(xi);
    if (v == 0.0) continue;
    acc.add(v * std::conj(normalized_kernel_eval(params, uc, xi)) *
            std::exp(-params.alpha * abs2(xi)));
  }
  const Complex c = acc.value() * (gaussian_prefactor(params) * grid.node_weight());

  GridFunction out;
  out.grid = f.grid;
  out.values.assign(grid.size(), Complex{0.0, 0.0});
  if (c != 0.0) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      PointView zi = grid.node(i);
      if (!in_cube(zi)) continue;
      out.values[i] = c * normalized_kernel_eval(params, uc, zi);
    }
  }
  return out;
}

}  // namespace fwl
