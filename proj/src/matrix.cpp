#include "fwl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

void require_dim_one(const FockParams& p, const char* what) {
  if (p.n != 1) throw ConfigError(std::string(what) + " is implemented for n = 1 only");
}

// 32-point Gauss-Legendre on [-1,1], generated once by Newton iteration.
struct GaussRule {
  std::vector<double> x, w;
};

const GaussRule& gauss32() {
  static const GaussRule rule = [] {
    constexpr int n = 32;
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n / 2; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        double step = p1 / dp;
        t -= step;
        if (std::abs(step) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      r.x[i] = -t;
      r.x[n - 1 - i] = t;
      r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// int_a^b f(t) dt by 32-point Gauss panels of width <= 2.
double gauss_panels(double a, double b, const std::function<double(double)>& f) {
  const GaussRule& g = gauss32();
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 2.0)));
  const double width = (b - a) / panels;
  KahanSum acc;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + width / 2.0, half = width / 2.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      acc.add(g.w[i] * half * f(mid + half * g.x[i]));
    }
  }
  return acc.value();
}

}  // namespace

OperatorMatrix identity_matrix(const FockParams& params, int basis_degree) {
  require_dim_one(params, "OperatorMatrix");
  OperatorMatrix op;
  op.params = params;
  op.basis_degree = basis_degree;
  op.entries = Eigen::MatrixXcd::Identity(basis_degree + 1, basis_degree + 1);
  return op;
}

OperatorMatrix toeplitz_matrix(const FockParams& params, const SymbolFn& phi, int basis_degree,
                               const QuadratureGrid& grid) {
  require_dim_one(params, "toeplitz_matrix");
  if (grid.dim_n() != 1) throw ConfigError("toeplitz_matrix needs an n = 1 grid");
  if (basis_degree < 0 || basis_degree > 200) {
    throw ConfigError("basis degree must lie in [0, 200]");
  }
  const double R = grid.box_radius();
  const double alpha = params.alpha;
  const bool compact = phi.support_radius < R;
  if (!compact && alpha * R * R < basis_degree + 10) {
    std::ostringstream os;
    os << "grid cannot resolve degree " << basis_degree << ": needs alpha R^2 >= "
       << basis_degree + 10 << " but has " << alpha * R * R;
    throw ConfigError(os.str());
  }

  OperatorMatrix op;
  op.params = params;
  op.basis_degree = basis_degree;
  const int dim = basis_degree + 1;
  op.entries = Eigen::MatrixXcd::Zero(dim, dim);

  if (phi.radial) {
    // <phi e_m, e_m>_alpha = (1/m!) int_0^T phi(sqrt(t/alpha)) t^m e^{-t} dt,
    // after the angular integral kills every off-diagonal entry.
    const double t_end = alpha * std::min(R, phi.support_radius) * std::min(R, phi.support_radius);
    std::vector<double> cuts{0.0};
    for (double rho : phi.radial_jumps) {
      double t = alpha * rho * rho;
      if (t > 0.0 && t < t_end) cuts.push_back(t);
    }
    cuts.push_back(t_end);
    std::sort(cuts.begin(), cuts.end());

    parallel_chunks(static_cast<std::size_t>(dim), 4, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t m = b; m < e; ++m) {
        const double lg = std::lgamma(static_cast<double>(m) + 1.0);
        auto integrand = [&](double t) {
          if (t <= 0.0) return m == 0 ? std::exp(-t - lg) * std::real(phi.eval(std::vector<double>{0.0, 0.0})) : 0.0;
          double rad = std::sqrt(t / alpha);
          double ln = static_cast<double>(m) * std::log(t) - t - lg;
          return std::exp(ln) * std::real(phi.eval(std::vector<double>{rad, 0.0}));
        };
        KahanSum acc;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
          acc.add(gauss_panels(cuts[c], cuts[c + 1], integrand));
        }
        op.entries(m, m) = acc.value();
      }
    });
    return op;
  }

  // general 2-d path: entry(k,m) = sum_u phi(u) e_m(u) conj(e_k(u)) dlambda
  const double pref = (alpha / kPi) * grid.node_weight();
  auto parts = chunk_map<Eigen::MatrixXcd>(grid.size(), kDefaultChunk,
                                           [&](std::size_t b, std::size_t e) {
    Eigen::MatrixXcd part = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXcd basis(dim);
    for (std::size_t i = b; i < e; ++i) {
      PointView up = grid.node(i);
      const Complex u{up[0], up[1]};
      Complex v = phi.eval(up);
      if (v == 0.0) continue;
      v *= pref * std::exp(-alpha * std::norm(u));
      basis(0) = 1.0;
      for (int m = 1; m < dim; ++m) basis(m) = basis(m - 1) * u * std::sqrt(alpha / m);
      part.noalias() += v * basis * basis.adjoint();
    }
    return part;
  });
  for (const auto& p : parts) op.entries += p;
  // <phi e_m, e_k> places e_m on the column index
  op.entries = op.entries.transpose().eval();
  return op;
}

OperatorMatrix algebra_compose(const std::vector<std::vector<OperatorMatrix>>& terms) {
  if (terms.empty()) throw ConfigError("algebra_compose needs at least one term");
  const OperatorMatrix* first = nullptr;
  for (const auto& t : terms) {
    for (const auto& m : t) {
      if (!first) {
        first = &m;
      } else if (m.basis_degree != first->basis_degree ||
                 m.params.alpha != first->params.alpha || m.params.n != first->params.n) {
        throw ConfigError("algebra_compose operands must share degree and parameters");
      }
    }
  }
  if (!first) throw ConfigError("algebra_compose needs at least one factor");

  OperatorMatrix out;
  out.params = first->params;
  out.basis_degree = first->basis_degree;
  const int dim = first->dim();
  out.entries = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& term : terms) {
    if (term.empty()) throw ConfigError("algebra_compose terms must be non-empty products");
    Eigen::MatrixXcd prod = term.front().entries;
    for (std::size_t i = 1; i < term.size(); ++i) prod = prod * term[i].entries;
    out.entries += prod;
  }
  return out;
}

Eigen::VectorXcd kernel_coefficients(const FockParams& params, Complex z, int basis_degree,
                                     bool normalized) {
  require_dim_one(params, "kernel_coefficients");
  Eigen::VectorXcd c(basis_degree + 1);
  Complex cur = normalized ? Complex{std::exp(-params.alpha * std::norm(z) / 2.0), 0.0}
                           : Complex{1.0, 0.0};
  c(0) = cur;
  const Complex zb = std::conj(z);
  for (int m = 1; m <= basis_degree; ++m) {
    cur = cur * zb * std::sqrt(params.alpha / m);
    c(m) = cur;
  }
  return c;
}

Complex berezin_of_matrix(const OperatorMatrix& op, Complex z) {
  Eigen::VectorXcd c = kernel_coefficients(op.params, z, op.basis_degree, true);
  return c.dot(op.entries * c);
}

nlohmann::json operator_matrix_to_json(const OperatorMatrix& op) {
  nlohmann::json flat = nlohmann::json::array();
  for (int i = 0; i < op.dim(); ++i) {
    for (int j = 0; j < op.dim(); ++j) {
      flat.push_back(op.entries(i, j).real());
      flat.push_back(op.entries(i, j).imag());
    }
  }
  return {{"alpha", op.params.alpha}, {"n", op.params.n}, {"degree", op.basis_degree},
          {"entries", std::move(flat)}};
}

OperatorMatrix operator_matrix_from_json(const nlohmann::json& j) {
  OperatorMatrix op;
  op.params = FockParams(j.at("alpha").get<double>(), j.at("n").get<int>());
  op.basis_degree = j.at("degree").get<int>();
  const int dim = op.dim();
  const auto& flat = j.at("entries");
  if (!flat.is_array() || flat.size() != static_cast<std::size_t>(2 * dim * dim)) {
    throw ConfigError("operator matrix payload has the wrong length");
  }
  op.entries.resize(dim, dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int jj = 0; jj < dim; ++jj) {
      double re = flat[k++].get<double>();
      double im = flat[k++].get<double>();
      op.entries(i, jj) = Complex{re, im};
    }
  }
  return op;
}

PowerIterationResult norm2_power_iteration(const OperatorMatrix& op, std::uint64_t seed) {
  const int dim = op.dim();
  Rng rng(seed);
  Eigen::VectorXcd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  double nv = v.norm();
  if (nv == 0.0) v(0) = 1.0, nv = 1.0;
  v /= nv;

  PowerIterationResult res;
  double prev = 0.0;
  for (int it = 1; it <= kPowerIterMax; ++it) {
    Eigen::VectorXcd y = op.entries * v;
    const double est = y.norm();
    res.value = est;
    res.iterations = it;
    res.last_gap = std::abs(est - prev) / std::max(est, 1e-300);
    if (est == 0.0) {
      res.converged = true;
      return res;
    }
    if (it > 1 && res.last_gap < kPowerIterTol) {
      res.converged = true;
      return res;
    }
    prev = est;
    Eigen::VectorXcd x = op.entries.adjoint() * y;
    const double nx = x.norm();
    if (nx == 0.0) {
      res.converged = true;
      res.value = 0.0;
      return res;
    }
    v = x / nx;
  }
  return res;
}

WeightedGridOperator::WeightedGridOperator(const FockParams& params, const Weight& sigma,
                                           const Weight& w, const ExponentPair& p, GridPtr grid,
                                           const SymbolFn* phi)
    : params_(params), p_(p), grid_(std::move(grid)) {
  if (!sigma.strictly_positive) {
    throw ConfigError("grid operator needs a strictly positive source weight");
  }
  const QuadratureGrid& g = *grid_;
  const std::size_t nn = g.size();
  const double alpha = params_.alpha;
  const double hw = g.node_weight();
  const double pref = std::pow(alpha / kPi, params_.n) * hw;
  source_w_.resize(nn);
  target_w_.resize(nn);
  col_.resize(nn);
  parallel_chunks(nn, kDefaultChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      PointView u = g.node(i);
      const double a2 = abs2(u);
      const double gaussian_p = std::exp(-p_.p * alpha / 2.0 * a2);
      source_w_[i] = gaussian_p * sigma.eval(u) * hw;
      target_w_[i] = gaussian_p * w.eval(u) * hw;
      if (source_w_[i] <= 0.0) throw ConfigError("source weight vanished on a node");
      Complex c = pref * std::exp(-alpha * a2);
      if (phi) c *= phi->eval(u);
      col_[i] = c;
    }
  });

  if (nn <= kDenseNodeCap) {
    dense_.resize(nn, nn);
    parallel_chunks(nn, 64, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        PointView z = g.node(i);
        for (std::size_t j = 0; j < nn; ++j) {
          dense_(i, j) = std::exp(alpha * hermitian_inner(z, g.node(j))) * col_[j];
        }
      }
    });
    has_dense_ = true;
  }
}

void WeightedGridOperator::apply_kernel(const std::vector<Complex>& q, std::vector<Complex>& out,
                                        bool adjoint) const {
  const QuadratureGrid& g = *grid_;
  const std::size_t nn = g.size();
  out.assign(nn, Complex{});
  if (has_dense_) {
    if (!adjoint) {
      parallel_chunks(nn, 64, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          Complex acc{};
          for (std::size_t j = 0; j < nn; ++j) acc += dense_(i, j) * q[j];
          out[i] = acc;
        }
      });
    } else {
      parallel_chunks(nn, 64, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
          Complex acc{};
          for (std::size_t i = 0; i < nn; ++i) acc += std::conj(dense_(i, j)) * q[i];
          out[j] = acc;
        }
      });
    }
    return;
  }
  if (g.dim_n() != 1) {
    // direct double loop for n >= 2 (small grids only)
    const double alpha = params_.alpha;
    parallel_chunks(nn, 16, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        PointView zi = g.node(i);
        Complex acc{};
        for (std::size_t j = 0; j < nn; ++j) {
          Complex lg = alpha * (adjoint ? hermitian_inner(g.node(j), zi)
                                        : hermitian_inner(zi, g.node(j)));
          acc += std::exp(lg) * q[j];
        }
        out[i] = acc;
      }
    });
    return;
  }
  // n = 1: e^{alpha c conj(u)} = e^{alpha x_u c} e^{-i alpha y_u c} separates
  // over the two real axes of u for each fixed output point c.
  const int M = g.cells_per_axis();
  const auto& axis = g.axis_nodes();
  const double alpha = params_.alpha;
  parallel_chunks(nn, 64, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<Complex> e1(M), e2(M);
    for (std::size_t i = b; i < e; ++i) {
      PointView cp = g.node(i);
      const Complex c{cp[0], cp[1]};
      for (int k = 0; k < M; ++k) {
        e1[k] = std::exp(alpha * axis[k] * c);
        e2[k] = std::exp(Complex{0.0, -alpha * axis[k]} * c);
      }
      Complex acc{};
      for (int jx = 0; jx < M; ++jx) {
        Complex row{};
        const Complex* qrow = q.data() + static_cast<std::size_t>(jx) * M;
        for (int jy = 0; jy < M; ++jy) row += e2[jy] * qrow[jy];
        acc += e1[jx] * row;
      }
      out[i] = acc;
    }
  });
}

void WeightedGridOperator::apply(const std::vector<Complex>& f, std::vector<Complex>& out) const {
  const std::size_t nn = grid_->size();
  if (f.size() != nn) throw ConfigError("grid operator input has the wrong length");
  if (has_dense_) {
    apply_kernel(f, out, false);
    return;
  }
  std::vector<Complex> q(nn);
  for (std::size_t j = 0; j < nn; ++j) q[j] = col_[j] * f[j];
  apply_kernel(q, out, false);
}

void WeightedGridOperator::apply_weighted_adjoint(const std::vector<Complex>& gvec,
                                                  std::vector<Complex>& out) const {
  const std::size_t nn = grid_->size();
  if (gvec.size() != nn) throw ConfigError("grid operator input has the wrong length");
  std::vector<Complex> q(nn);
  for (std::size_t i = 0; i < nn; ++i) q[i] = target_w_[i] * gvec[i];
  apply_kernel(q, out, true);
  if (!has_dense_) {
    for (std::size_t j = 0; j < nn; ++j) out[j] *= std::conj(col_[j]);
  }
  for (std::size_t j = 0; j < nn; ++j) out[j] /= source_w_[j];
}

double WeightedGridOperator::source_norm(const std::vector<Complex>& f) const {
  KahanSum acc;
  for (std::size_t i = 0; i < f.size(); ++i) {
    acc.add(source_w_[i] * std::pow(std::abs(f[i]), p_.p));
  }
  return std::pow(acc.value(), 1.0 / p_.p);
}

double WeightedGridOperator::target_norm(const std::vector<Complex>& g) const {
  KahanSum acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    acc.add(target_w_[i] * std::pow(std::abs(g[i]), p_.p));
  }
  return std::pow(acc.value(), 1.0 / p_.p);
}

WeightedGridOperator grid_operator_build(const FockParams& params, const Weight& sigma,
                                         const Weight& w, const ExponentPair& p, GridPtr grid,
                                         const SymbolFn* phi) {
  return WeightedGridOperator(params, sigma, w, p, std::move(grid), phi);
}

PowerIterationResult norm2_power_iteration(const WeightedGridOperator& op, std::uint64_t seed) {
  if (op.exponent().p != 2.0) {
    throw ConfigError("power iteration needs the p = 2 weighted inner products");
  }
  const std::size_t nn = op.grid().size();
  Rng rng(seed);
  std::vector<Complex> v(nn), y, x;
  for (auto& c : v) c = Complex{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  double nv = op.source_norm(v);
  if (nv == 0.0) {
    v[0] = 1.0;
    nv = op.source_norm(v);
  }
  for (auto& c : v) c /= nv;

  PowerIterationResult res;
  double prev = 0.0;
  for (int it = 1; it <= kPowerIterMax; ++it) {
    op.apply(v, y);
    const double est = op.target_norm(y);
    res.value = est;
    res.iterations = it;
    res.last_gap = std::abs(est - prev) / std::max(est, 1e-300);
    if (est == 0.0) {
      res.converged = true;
      return res;
    }
    if (it > 1 && res.last_gap < kPowerIterTol) {
      res.converged = true;
      return res;
    }
    prev = est;
    op.apply_weighted_adjoint(y, x);
    const double nx = op.source_norm(x);
    if (nx == 0.0) {
      res.converged = true;
      res.value = 0.0;
      return res;
    }
    for (std::size_t i = 0; i < nn; ++i) v[i] = x[i] / nx;
  }
  return res;
}

namespace {

// Midpoint rule over cube cap cell geometry: every grid cell clipped against
// the cube contributes f(clip midpoint) * clip measure; cells straddling a
// radial jump are subdivided.
double grid_cube_integral(const QuadratureGrid& grid, const RealFn& f, PointView center,
                          double side, const std::vector<double>& jumps, bool sup_mode) {
  const int axes = grid.axes();
  const double d = grid.spacing();
  const double R = grid.box_radius();
  for (int a = 0; a < axes; ++a) {
    if (std::abs(center[a]) + side / 2.0 > R + 1e-12) {
      throw TruncationError("scanned cube escapes the quadrature box");
    }
  }
  std::vector<std::pair<int, int>> ranges(axes);
  for (int a = 0; a < axes; ++a) {
    const double lo = center[a] - side / 2.0, hi = center[a] + side / 2.0;
    int ka = static_cast<int>(std::floor((lo + R) / d));
    int kb = static_cast<int>(std::ceil((hi + R) / d)) - 1;
    ranges[a] = {std::max(ka, 0), std::min(kb, grid.cells_per_axis() - 1)};
  }

  const int refine = axes <= 2 ? 32 : 8;
  KahanSum acc;
  double best = -kInf;
  std::vector<int> idx(axes);
  std::vector<double> mid(axes), len(axes);
  for (int a = 0; a < axes; ++a) idx[a] = ranges[a].first;
  for (;;) {
    double measure = 1.0;
    for (int a = 0; a < axes; ++a) {
      const double node = grid.axis_nodes()[idx[a]];
      const double clo = std::max(node - d / 2.0, center[a] - side / 2.0);
      const double chi = std::min(node + d / 2.0, center[a] + side / 2.0);
      len[a] = std::max(0.0, chi - clo);
      mid[a] = (clo + chi) / 2.0;
      measure *= len[a];
    }
    if (measure > 0.0) {
      bool split = false;
      if (!jumps.empty()) {
        double lo2 = 0.0, hi2 = 0.0;
        for (int a = 0; a < axes; ++a) {
          double lo = std::max(0.0, std::abs(mid[a]) - len[a] / 2.0);
          double hi = std::abs(mid[a]) + len[a] / 2.0;
          lo2 += lo * lo;
          hi2 += hi * hi;
        }
        for (double rho : jumps) {
          if (lo2 < rho * rho && rho * rho < hi2) {
            split = true;
            break;
          }
        }
      }
      if (!split) {
        if (sup_mode) {
          best = std::max(best, f(mid));
        } else {
          acc.add(f(mid) * measure);
        }
      } else {
        std::vector<int> sdx(axes, 0);
        std::vector<double> sp(axes);
        const double sub_measure = measure / std::pow(refine, axes);
        for (;;) {
          for (int a = 0; a < axes; ++a) {
            sp[a] = mid[a] - len[a] / 2.0 + (sdx[a] + 0.5) * len[a] / refine;
          }
          if (sup_mode) {
            best = std::max(best, f(sp));
          } else {
            acc.add(f(sp) * sub_measure);
          }
          int a = axes - 1;
          while (a >= 0 && ++sdx[a] == refine) sdx[a--] = 0;
          if (a < 0) break;
        }
      }
    }
    int a = axes - 1;
    while (a >= 0 && ++idx[a] > ranges[a].second) {
      idx[a] = ranges[a].first;
      --a;
    }
    if (a < 0) break;
  }
  return sup_mode ? best : acc.value();
}

struct SchurSum {
  double value = 0.0;
  double tail_bound = 0.0;
  bool diverged = false;
};

// sum over the lattice r Z^{2n} of C^{|delta|} e^{-coef |delta|^2}, expanded
// in sup-norm shells until the shell contribution is negligible; the last
// shell is carried once more as an explicit remainder.
SchurSum schur_lattice_sum(int n, double r, double C, double coef) {
  const int axes = 2 * n;
  SchurSum s;
  KahanSum acc;
  acc.add(1.0);  // delta = 0
  double last_shell = 0.0;
  for (int shell = 1; shell <= 10000; ++shell) {
    KahanSum shell_acc;
    std::vector<int> idx(axes, -shell);
    for (;;) {
      bool on_shell = false;
      for (int a = 0; a < axes; ++a) on_shell = on_shell || std::abs(idx[a]) == shell;
      if (on_shell) {
        double d2 = 0.0;
        for (int a = 0; a < axes; ++a) d2 += static_cast<double>(idx[a]) * idx[a];
        d2 *= r * r;
        const double term = std::exp(std::log(C) * std::sqrt(d2) - coef * d2);
        if (term > 1e100) {
          s.diverged = true;
          return s;
        }
        shell_acc.add(term);
      }
      int a = axes - 1;
      while (a >= 0 && ++idx[a] > shell) idx[a--] = -shell;
      if (a < 0) break;
    }
    last_shell = shell_acc.value();
    acc.add(last_shell);
    const double so_far = acc.value();
    if (shell >= 4 && last_shell < 1e-16 * std::max(so_far, 1.0)) break;
    if (shell == 10000) {
      s.diverged = true;
      return s;
    }
  }
  s.tail_bound = last_shell;
  s.value = acc.value() + s.tail_bound;
  return s;
}

}  // namespace

CharacteristicReport characteristic_on_grid(const Weight& w, const Weight& sigma,
                                            const ExponentPair& p, double r, const SymbolFn* phi,
                                            const ScanSpec& scan, const QuadratureGrid& grid) {
  if (!(r > 0.0)) throw ConfigError("characteristic needs r > 0");
  const int n = grid.dim_n();
  const int axes = 2 * n;
  const double volume = std::pow(r, axes);

  std::vector<double> jumps = sigma.radial_jumps;
  if (phi) jumps.insert(jumps.end(), phi->radial_jumps.begin(), phi->radial_jumps.end());
  std::sort(jumps.begin(), jumps.end());
  jumps.erase(std::unique(jumps.begin(), jumps.end()), jumps.end());

  const double pc = p.conj();
  const double dual_expo = p.is_one() ? 0.0 : -p.dual_ratio();

  auto value = [&](PointView c) {
    double avg_w = grid_cube_integral(grid, w.eval, c, r, w.radial_jumps, false) / volume;
    if (p.is_one()) {
      RealFn ess = [&](PointView z) {
        double s = sigma.eval(z);
        double mag = phi ? std::abs(phi->eval(z)) : 1.0;
        if (mag == 0.0) return 0.0;
        return s > 0.0 ? mag / s : kInf;
      };
      double sup = grid_cube_integral(grid, ess, c, r, jumps, true);
      if (avg_w > kDivergenceSentinel || sup > kDivergenceSentinel) return kInf;
      return avg_w * sup;
    }
    RealFn second = [&](PointView z) {
      double s = sigma.eval(z);
      double sv = s > 0.0 ? std::pow(s, dual_expo) : kInf;
      if (phi) {
        double mag = std::abs(phi->eval(z));
        if (mag == 0.0) return 0.0;
        sv = std::isinf(sv) ? kInf : std::pow(mag, pc) * sv;
      }
      return sv;
    };
    double avg_2 = grid_cube_integral(grid, second, c, r, jumps, false) / volume;
    if (avg_w > kDivergenceSentinel || avg_2 > kDivergenceSentinel) return kInf;
    return avg_w * std::pow(avg_2, p.p / pc);
  };

  auto run = [&](double step) {
    auto centers = scan_centers(n, scan.radius, step);
    std::vector<double> vals(centers.size());
    parallel_chunks(centers.size(), 16, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) vals[i] = value(centers[i].view());
    });
    std::size_t arg = 0;
    double best = -kInf;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (vals[i] > best) {
        best = vals[i];
        arg = i;
      }
    }
    return std::pair<double, ComplexPoint>(best, centers[arg]);
  };

  auto [base, argmax] = run(scan.step);
  auto [refined, arg2] = run(scan.step / 2.0);
  (void)arg2;
  CharacteristicReport rep;
  rep.value = base;
  rep.argmax_center = argmax;
  rep.scan_radius = scan.radius;
  rep.scan_step = scan.step;
  rep.refinement_gap = (std::isinf(base) && std::isinf(refined))
                           ? 0.0
                           : std::abs(refined - base) / std::max(std::abs(refined), 1e-300);
  return rep;
}

NormBracket norm_bracket(const FockParams& params, NormProblem problem, const SymbolFn* phi,
                         const Weight& sigma, const Weight& w, const ExponentPair& p, double r,
                         GridPtr grid, const ScanSpec& scan, std::uint64_t seed,
                         bool compute_point) {
  if (!(r > 0.0)) throw ConfigError("norm bracket needs r > 0");
  if (problem == NormProblem::toeplitz && !phi) {
    throw ConfigError("the Toeplitz bracket needs a symbol");
  }
  const Weight& source = problem == NormProblem::toeplitz ? w : sigma;
  const SymbolFn* phi_used = problem == NormProblem::toeplitz ? phi : nullptr;
  const QuadratureGrid& g = *grid;
  const double alpha = params.alpha;
  const int n = params.n;
  const double r2 = r * r;

  // cubes must stay inside the quadrature box for both code paths
  ScanSpec sc = scan;
  sc.radius = std::min(scan.radius, g.box_radius() - r / 2.0);
  if (sc.radius < 0.0) throw ConfigError("cube side exceeds the quadrature box");

  NormBracket out;
  out.method = problem == NormProblem::toeplitz ? "toeplitz" : "projection";
  out.witnesses["scan_radius"] = sc.radius;
  out.witnesses["scan_step"] = sc.step;
  out.witnesses["r"] = r;
  out.witnesses["p"] = p.p;

  // lower bound: localized test-function certificate, cube-subgrid route
  CharacteristicReport char_sub =
      joint_characteristic(w, source, p, r, phi_used, sc, g.spec());
  double lower;
  if (p.is_one()) {
    lower = std::pow(alpha * r2 / kPi, n) * std::exp(-n * alpha * r2) * char_sub.value;
  } else {
    lower = std::pow(alpha / kPi, n) * std::exp(-5.0 * n * alpha * r2 / 4.0) *
            std::pow(r2, n) * std::pow(char_sub.value, 1.0 / p.p);
  }
  out.lower = lower;
  out.witnesses["char_sub_path"] = char_sub.value;
  out.witnesses["lower_argmax_re"] = char_sub.argmax_center.coords[0];
  out.witnesses["lower_argmax_im"] = char_sub.argmax_center.coords[1];

  // upper bound: lattice Schur route on global-grid cube integrals
  DoublingReport doubling =
      doubling_constant(w, r, ScanSpec{std::max(sc.radius, 2.0 * r), r / 2.0}, g.spec());
  out.witnesses["doubling_value"] = doubling.report.value;
  out.witnesses["doubling_growth"] = doubling.growth_ratio;
  out.witnesses["doubling_suspect"] = doubling.suspect;

  CharacteristicReport char_grid = characteristic_on_grid(w, source, p, r, phi_used, sc, g);
  out.witnesses["char_grid_path"] = char_grid.value;

  // lattice comparability constant over r Z^{2n} within the scan
  double c_lat = 1.0;
  bool zero_mass = false;
  {
    auto lattice = scan_centers(n, sc.radius, r);
    std::vector<double> masses(lattice.size());
    parallel_chunks(lattice.size(), 16, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        masses[i] =
            grid_cube_integral(g, w.eval, lattice[i].view(), r, w.radial_jumps, false);
      }
    });
    for (std::size_t i = 0; i < lattice.size() && !zero_mass; ++i) {
      if (masses[i] <= 0.0) zero_mass = true;
    }
    if (!zero_mass) {
      for (std::size_t i = 0; i < lattice.size(); ++i) {
        for (std::size_t j = i + 1; j < lattice.size(); ++j) {
          double dist = std::sqrt(dist2(lattice[i].view(), lattice[j].view()));
          double ratio = masses[i] > masses[j] ? masses[i] / masses[j] : masses[j] / masses[i];
          c_lat = std::max(c_lat, std::pow(ratio, 1.0 / dist));
        }
      }
    }
  }
  out.witnesses["c_lat"] = zero_mass ? -1.0 : c_lat;

  if (doubling.suspect || zero_mass || std::isinf(char_grid.value) ||
      std::isinf(char_sub.value)) {
    out.upper = kInf;
    out.witnesses["upper_reason"] =
        zero_mass ? "a lattice cube has zero mass"
                  : (doubling.suspect ? "weight is doubling-suspect" : "characteristic diverged");
    if (std::isinf(char_sub.value)) out.lower = kInf;
  } else {
    SchurSum s2 = schur_lattice_sum(n, r, c_lat, (p.is_one() ? 1.0 : p.p / 2.0) * alpha / 4.0);
    if (p.is_one()) {
      out.witnesses["s2"] = s2.value;
      out.witnesses["schur_tail"] = s2.tail_bound;
      out.upper = s2.diverged ? kInf
                              : std::pow(alpha / kPi, n) * std::exp(n * alpha * r2) *
                                    std::pow(r2, n) * s2.value * char_grid.value;
    } else {
      SchurSum s1 = schur_lattice_sum(n, r, 1.0, p.conj() * alpha / 8.0);
      out.witnesses["s1"] = s1.value;
      out.witnesses["s2"] = s2.value;
      out.witnesses["schur_tail"] = s1.tail_bound + s2.tail_bound;
      out.upper = (s1.diverged || s2.diverged)
                      ? kInf
                      : std::pow(alpha / kPi, n) * std::exp(n * alpha * r2) * std::pow(r2, n) *
                            std::pow(s1.value, 1.0 / p.conj()) * std::pow(s2.value, 1.0 / p.p) *
                            std::pow(char_grid.value, 1.0 / p.p);
    }
    if (s2.diverged) out.witnesses["upper_reason"] = "lattice sum diverged numerically";
  }

  // iterative point estimate, p = 2 only
  if (compute_point && p.p == 2.0) {
    WeightedGridOperator op =
        problem == NormProblem::toeplitz
            ? grid_operator_build(params, w, w, p, grid, phi)
            : grid_operator_build(params, sigma, w, p, grid, nullptr);
    PowerIterationResult pi = norm2_power_iteration(op, seed);
    out.point_estimate = pi.value;
    out.point_available = true;
    out.witnesses["point_iterations"] = pi.iterations;
    out.witnesses["point_converged"] = pi.converged;
    out.witnesses["point_last_gap"] = pi.last_gap;
  }
  return out;
}

}  // namespace fwl
