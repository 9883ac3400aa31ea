#include "fwl/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogCut = 40.0;

Eigen::VectorXcd normalized_coeffs(const FockParams& params, Complex z, int degree) {
  return kernel_coefficients(params, z, degree, true);
}

}  // namespace

WLContext::WLContext(const FockParams& params, const ExponentPair& p, const Weight& w,
                     GridPtr grid)
    : params_(params), p_(p), w_(w), w_dual_(dual_weight(w, p)), grid_(std::move(grid)) {
  if (params_.n != 1) throw ConfigError("weak-localization integrals run at n = 1");
  if (p_.is_one()) throw ConfigError("weak localization needs 1 < p < inf");
  field_pw_ = kernel_norm_field(params_, p_, w_, *grid_);
  field_pcwd_ = kernel_norm_field(params_, ExponentPair(p_.conj()), w_dual_, *grid_);
}

double WLContext::integral(const OperatorMatrix& T, Complex fixed, double r,
                           WLOrientation o) const {
  const QuadratureGrid& g = *grid_;
  if (std::abs(fixed) + r > g.box_radius() - 1.0) {
    throw TruncationError("excluded-ball integral reaches the box edge; enlarge R");
  }
  const int dim = T.dim();

  // rho factors: 1/g at the fixed point for its side, field for the free side
  KernelNormResult fixed_norm =
      kernel_norm(params_, point_from(fixed).view(),
                  o == WLOrientation::integrate_u ? p_ : ExponentPair(p_.conj()),
                  o == WLOrientation::integrate_u ? w_ : w_dual_, g);
  // kernel_norm reports the full norm; strip e^{alpha|z|^2/2} to get g(fixed)
  const double g_fixed = std::exp(fixed_norm.log_value - params_.alpha * std::norm(fixed) / 2.0);
  const double rho_fixed = 1.0 / g_fixed;

  Eigen::VectorXcd vec;
  if (o == WLOrientation::integrate_u) {
    vec = T.entries * normalized_coeffs(params_, fixed, T.basis_degree);   // A c(z)
  } else {
    vec = T.entries.adjoint() * normalized_coeffs(params_, fixed, T.basis_degree);  // A* c(u)
  }
  const std::vector<double>& free_field =
      o == WLOrientation::integrate_u ? field_pcwd_ : field_pw_;

  const double alpha = params_.alpha;
  auto parts = chunk_map<KahanSum>(g.size(), kDefaultChunk, [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    Eigen::VectorXcd basis(dim);
    for (std::size_t i = b; i < e; ++i) {
      PointView np = g.node(i);
      const Complex node{np[0], np[1]};
      if (std::norm(node - fixed) <= r * r) continue;
      // normalized coefficients of k_node
      Complex cur = std::exp(-alpha * std::norm(node) / 2.0);
      Complex dot{};
      const Complex nb = std::conj(node);
      dot += std::conj(cur) * vec(0);
      for (int m = 1; m < dim; ++m) {
        cur = cur * nb * std::sqrt(alpha / m);
        dot += std::conj(cur) * vec(m);
      }
      const double rho_free = 1.0 / free_field[i];
      acc.add(std::abs(dot) * rho_free);
    }
    return acc;
  });
  KahanSum total;
  for (const auto& p : parts) total.merge(p);
  return total.value() * g.node_weight() * rho_fixed;
}

double wl_integral(const OperatorMatrix& T, const ExponentPair& p, const Weight& w, Complex fixed,
                   double r, WLOrientation o, GridPtr grid) {
  WLContext ctx(T.params, p, w, std::move(grid));
  return ctx.integral(T, fixed, r, o);
}

WLProfile wl_profile(const OperatorMatrix& T, const ExponentPair& p, const Weight& w,
                     const std::vector<double>& radii, const std::vector<Complex>& samples,
                     WLOrientation o, GridPtr grid) {
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw ConfigError("profile radii must increase strictly");
  }
  WLContext ctx(T.params, p, w, std::move(grid));
  WLProfile prof;
  prof.orientation = o;
  prof.radii = radii;
  prof.values.reserve(radii.size());
  for (double r : radii) {
    double sup = 0.0;
    for (Complex z : samples) sup = std::max(sup, ctx.integral(T, z, r, o));
    prof.values.push_back(sup);
  }
  return prof;
}

std::vector<Complex> circle_samples(const std::vector<double>& rhos, int count) {
  std::vector<Complex> out;
  for (double rho : rhos) {
    if (rho == 0.0) {
      out.push_back(Complex{0.0, 0.0});
      continue;
    }
    for (int k = 0; k < count; ++k) {
      double t = 2.0 * 3.14159265358979323846 * k / count;
      out.push_back(rho * Complex{std::cos(t), std::sin(t)});
    }
  }
  return out;
}

namespace {

// Streaming Gram assembly: B over the whole box with weight w, and one
// tail Gram per radius with weight hat-w, all in a single pass over nodes.
struct Grams {
  Eigen::MatrixXcd b;
  std::vector<Eigen::MatrixXcd> tails;
};

Grams assemble_grams(const FockParams& params, const ExponentPair& p, const Weight& w,
                     const std::vector<double>& radii, const QuadratureGrid& g, int dim) {
  const double alpha = params.alpha;
  const Weight hat = hat_weight(w, g.spacing());

  struct Part {
    Eigen::MatrixXcd b;
    std::vector<Eigen::MatrixXcd> tails;
  };
  auto parts = chunk_map<Part>(g.size(), 2048, [&](std::size_t bgn, std::size_t end) {
    Part part;
    part.b = Eigen::MatrixXcd::Zero(dim, dim);
    part.tails.assign(radii.size(), Eigen::MatrixXcd::Zero(dim, dim));
    Eigen::VectorXcd basis(dim);
    for (std::size_t i = bgn; i < end; ++i) {
      PointView np = g.node(i);
      const Complex u{np[0], np[1]};
      const double a2 = std::norm(u);
      const double gw = std::exp(-p.p * alpha / 2.0 * a2);
      basis(0) = 1.0;
      for (int m = 1; m < dim; ++m) basis(m) = basis(m - 1) * u * std::sqrt(alpha / m);
      Eigen::MatrixXcd outer = basis * basis.adjoint();
      part.b.noalias() += (gw * w.eval(np)) * outer;
      const double hv = gw * hat.eval(np);
      for (std::size_t t = 0; t < radii.size(); ++t) {
        if (a2 > radii[t] * radii[t]) part.tails[t].noalias() += hv * outer;
      }
    }
    return part;
  });

  Grams out;
  out.b = Eigen::MatrixXcd::Zero(dim, dim);
  out.tails.assign(radii.size(), Eigen::MatrixXcd::Zero(dim, dim));
  for (const auto& part : parts) {
    out.b += part.b;
    for (std::size_t t = 0; t < radii.size(); ++t) out.tails[t] += part.tails[t];
  }
  const double nw = g.node_weight();
  out.b *= nw;
  for (auto& t : out.tails) t *= nw;
  return out;
}

}  // namespace

std::vector<TailNormResult> tail_norms(const OperatorMatrix& T, const ExponentPair& p,
                                       const Weight& w, const std::vector<double>& radii,
                                       GridPtr grid, std::uint64_t seed) {
  const QuadratureGrid& g = *grid;
  if (g.dim_n() != 1) throw ConfigError("tail norms run at n = 1");
  const int dim = T.dim();
  std::vector<TailNormResult> out;

  if (p.p == 2.0) {
    Grams grams = assemble_grams(T.params, p, w, radii, g, dim);
    Eigen::LLT<Eigen::MatrixXcd> llt(grams.b);
    if (llt.info() != Eigen::Success) {
      throw EvaluationError("weighted Gram matrix is not positive definite on this grid");
    }
    for (std::size_t t = 0; t < radii.size(); ++t) {
      // largest eigenvalue of B^{-1} A^H M_r A by power iteration
      const Eigen::MatrixXcd m = T.entries.adjoint() * grams.tails[t] * T.entries;
      Rng rng(seed);
      Eigen::VectorXcd v(dim);
      for (int i = 0; i < dim; ++i) {
        v(i) = Complex{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      }
      TailNormResult res;
      res.radius = radii[t];
      res.exact = true;
      double prev = 0.0;
      auto b_norm = [&](const Eigen::VectorXcd& x) {
        return std::sqrt(std::max(0.0, std::real(x.dot(grams.b * x))));
      };
      double nv = b_norm(v);
      if (nv == 0.0) {
        v(0) = 1.0;
        nv = b_norm(v);
      }
      v /= nv;
      for (int it = 1; it <= kPowerIterMax; ++it) {
        const Eigen::VectorXcd mv = m * v;
        const double est = std::sqrt(std::max(0.0, std::real(v.dot(mv))));
        res.value = est;
        res.iteration.iterations = it;
        res.iteration.value = est;
        res.iteration.last_gap = std::abs(est - prev) / std::max(est, 1e-300);
        if (est == 0.0 || (it > 1 && res.iteration.last_gap < kPowerIterTol)) {
          res.iteration.converged = true;
          break;
        }
        prev = est;
        Eigen::VectorXcd x = llt.solve(mv);
        const double nx = b_norm(x);
        if (nx == 0.0) {
          res.value = 0.0;
          res.iteration.converged = true;
          break;
        }
        v = x / nx;
      }
      out.push_back(res);
    }
    return out;
  }

  // p != 2: flagged lower estimate from a seeded candidate search
  const double alpha = T.params.alpha;
  const Weight hat = hat_weight(w, g.spacing());
  std::vector<Eigen::VectorXcd> candidates;
  Rng rng(seed);
  for (int c = 0; c < 40; ++c) {
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = Complex{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    candidates.push_back(v);
  }
  for (Complex z : circle_samples({0.0, 1.0, 2.0}, 8)) {
    candidates.push_back(kernel_coefficients(T.params, z, T.basis_degree, true));
  }

  // node values of both f and Tf per candidate
  std::vector<double> hat_field(g.size());
  parallel_chunks(g.size(), kDefaultChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hat_field[i] = hat.eval(g.node(i));
  });

  for (double radius : radii) {
    double best = 0.0;
    for (const auto& cand : candidates) {
      const Eigen::VectorXcd img = T.entries * cand;
      auto parts = chunk_map<std::pair<KahanSum, KahanSum>>(
          g.size(), kDefaultChunk, [&](std::size_t bgn, std::size_t end) {
        std::pair<KahanSum, KahanSum> pp;
        for (std::size_t i = bgn; i < end; ++i) {
          PointView np = g.node(i);
          const Complex u{np[0], np[1]};
          Complex basis = 1.0, fv{}, gv{};
          fv += cand(0) * basis;
          gv += img(0) * basis;
          for (int m = 1; m < dim; ++m) {
            basis = basis * u * std::sqrt(alpha / m);
            fv += cand(m) * basis;
            gv += img(m) * basis;
          }
          const double gauss = std::exp(-p.p * alpha / 2.0 * std::norm(u));
          pp.first.add(std::pow(std::abs(fv), p.p) * gauss * w.eval(np));
          if (std::norm(u) > radius * radius) {
            pp.second.add(std::pow(std::abs(gv), p.p) * gauss * hat_field[i]);
          }
        }
        return pp;
      });
      KahanSum denom, numer;
      for (const auto& pp : parts) {
        denom.merge(pp.first);
        numer.merge(pp.second);
      }
      if (denom.value() > 0.0) {
        best = std::max(best, std::pow(numer.value() / denom.value(), 1.0 / p.p));
      }
    }
    TailNormResult res;
    res.radius = radius;
    res.value = best;
    res.exact = false;
    out.push_back(res);
  }
  return out;
}

TailNormResult tail_norm(const OperatorMatrix& T, const ExponentPair& p, const Weight& w,
                         double r, GridPtr grid, std::uint64_t seed) {
  return tail_norms(T, p, w, {r}, std::move(grid), seed).front();
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::compact_consistent:
      return "compact-consistent";
    case Verdict::non_compact_consistent:
      return "non-compact-consistent";
    default:
      return "inconclusive";
  }
}

CompactnessVerdict compactness_verdict(const OperatorMatrix& T, const ExponentPair& p,
                                       const Weight& w, GridPtr grid,
                                       const CompactnessConfig& config) {
  CompactnessVerdict out;
  out.config = config;

  for (double rho : config.berezin_radii) {
    double sup = 0.0;
    for (Complex z : circle_samples({rho}, config.circle_samples)) {
      sup = std::max(sup, std::abs(berezin_of_matrix(T, z)));
    }
    out.berezin_sup.push_back(sup);
  }
  auto tails = tail_norms(T, p, w, config.tail_radii, std::move(grid), config.seed);
  for (const auto& t : tails) out.tail.push_back(t.value);

  bool berezin_small = !out.berezin_sup.empty() &&
                       out.berezin_sup.back() < config.berezin_compact_threshold;
  bool tail_small = !out.tail.empty() && out.tail.back() < config.tail_compact_threshold;
  bool tail_decreasing = true;
  for (std::size_t i = 1; i < out.tail.size(); ++i) {
    tail_decreasing = tail_decreasing && out.tail[i] <= out.tail[i - 1] + 1e-10;
  }
  double berezin_min = kInf;
  for (double b : out.berezin_sup) berezin_min = std::min(berezin_min, b);

  if (berezin_small && tail_small && tail_decreasing) {
    out.verdict = Verdict::compact_consistent;
  } else if (berezin_min > config.berezin_noncompact_floor) {
    out.verdict = Verdict::non_compact_consistent;
  } else {
    out.verdict = Verdict::inconclusive;
  }
  return out;
}

}  // namespace fwl
