#include "fwl/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

Complex as_complex(PointView z) { return {z[0], z[1]}; }

void require_disk(PointView z, const char* what) {
  if (z.size() != 2) throw ConfigError(std::string(what) + " quadrature runs on the disk (n = 1)");
}

// accumulates sum f and sum f^{-q} over member nodes with one f eval per node
struct PairAverages {
  double avg = 0.0;
  double avg_dual = 0.0;
  std::size_t members = 0;
  double measure = 0.0;
};

template <class Member>
PairAverages pair_averages(const RealFn& f, double dual_expo, double cell_measure,
                           int cells_x, int cells_y, double x0, double y0, double spacing,
                           Member&& member) {
  KahanSum sum, sum_dual;
  std::size_t count = 0;
  double pt[2];
  for (int ix = 0; ix < cells_x; ++ix) {
    pt[0] = x0 + (ix + 0.5) * spacing;
    for (int iy = 0; iy < cells_y; ++iy) {
      pt[1] = y0 + (iy + 0.5) * spacing;
      if (!member(PointView(pt, 2))) continue;
      ++count;
      double v = f(PointView(pt, 2));
      if (std::isnan(v)) throw EvaluationError("non-finite disk weight value");
      sum.add(v);
      sum_dual.add(v > 0.0 ? std::pow(v, dual_expo) : kInf);
    }
  }
  PairAverages out;
  out.members = count;
  out.measure = static_cast<double>(count) * cell_measure;
  if (count) {
    out.avg = sum.value() / count;
    out.avg_dual = sum_dual.value() / count;
  }
  return out;
}

// tent at apex a rotated to the positive real axis: zeta = z e^{-i arg a}
PairAverages tent_pair_averages(const RealFn& f, const BallPoint& apex, double dual_expo,
                                const DiskQuadSpec& quad) {
  require_disk(apex.view(), "tent");
  const Complex a = as_complex(apex.view());
  const double rmax2 = (1.0 - quad.delta) * (1.0 - quad.delta);
  if (std::abs(a) == 0.0) {
    const int m = quad.ball_cells;
    const double spacing = 2.0 / m;
    return pair_averages(f, dual_expo, spacing * spacing, m, m, -1.0, -1.0, spacing,
                         [&](PointView z) { return abs2(z) <= rmax2; });
  }
  const double t = 1.0 - std::abs(a);
  const Complex rot = a / std::abs(a);
  const int m = quad.tent_cells;
  const double spacing = std::max(t, 2.0 * quad.delta) / m * 2.0;
  // canonical box [1-t, 1] x [-t, t] in zeta; f sees z = zeta * rot
  const int cells_x = std::max(1, static_cast<int>(std::ceil(t / spacing))),
            cells_y = std::max(1, static_cast<int>(std::ceil(2.0 * t / spacing)));
  RealFn rotated = [&](PointView zeta) {
    Complex z = Complex{zeta[0], zeta[1]} * rot;
    double pt[2] = {z.real(), z.imag()};
    return f(PointView(pt, 2));
  };
  return pair_averages(rotated, dual_expo, spacing * spacing, cells_x, cells_y, 1.0 - t, -t,
                       spacing, [&](PointView zeta) {
    double dx = 1.0 - zeta[0], dy = zeta[1];
    return dx * dx + dy * dy < t * t && abs2(zeta) <= rmax2;
  });
}

PairAverages ball_pair_averages(const RealFn& f, Complex center, double metric_radius,
                                double dual_expo, const DiskQuadSpec& quad) {
  // D(c, rho) realized exactly as a Euclidean disk; membership through the
  // closed form instead of per-node metric evaluations
  Complex ec;
  double er;
  metric_ball_euclid(center, metric_radius, &ec, &er);
  const int m = quad.metric_ball_cells;
  const double spacing = 2.0 * er / m;
  const double rmax2 = (1.0 - quad.delta) * (1.0 - quad.delta);
  const double ex = ec.real(), ey = ec.imag(), er2 = er * er;
  return pair_averages(f, dual_expo, spacing * spacing, m, m, ec.real() - er, ec.imag() - er,
                       spacing, [&](PointView u) {
    if (abs2(u) > rmax2) return false;
    const double dx = u[0] - ex, dy = u[1] - ey;
    return dx * dx + dy * dy < er2;
  });
}

struct ApexList {
  std::vector<BallPoint> apexes;
  double max_radius = 0.0;
  int angles = 0;
};

ApexList expand_apexes(const ApexScan& scan) {
  ApexList out;
  out.angles = scan.angles;
  for (double r : scan.radii) {
    out.max_radius = std::max(out.max_radius, r);
    if (r == 0.0) {
      out.apexes.push_back(BallPoint(0.0, 0.0));
      continue;
    }
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("apex radii must lie in [0, 1)");
    for (int k = 0; k < scan.angles; ++k) {
      double th = 2.0 * kPi * k / scan.angles;
      out.apexes.push_back(BallPoint(r * std::cos(th), r * std::sin(th)));
    }
  }
  return out;
}

ApexScan refine_apexes(const ApexScan& scan) {
  ApexScan fine;
  fine.angles = scan.angles * 2;
  std::vector<double> radii = scan.radii;
  std::sort(radii.begin(), radii.end());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    fine.radii.push_back(radii[i]);
    if (i + 1 < radii.size()) {
      // geometric midpoint in the boundary distance 1 - |a|
      double mid = 1.0 - std::sqrt((1.0 - radii[i]) * (1.0 - radii[i + 1]));
      fine.radii.push_back(mid);
    }
  }
  return fine;
}

CharacteristicReport scan_apexes(const ApexScan& scan,
                                 const std::function<double(const BallPoint&)>& value) {
  auto run = [&](const ApexScan& s) {
    ApexList list = expand_apexes(s);
    std::vector<double> vals(list.apexes.size());
    parallel_chunks(list.apexes.size(), 4, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) vals[i] = value(list.apexes[i]);
    });
    double best = -kInf;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (vals[i] > best) {
        best = vals[i];
        arg = i;
      }
    }
    return std::tuple<double, BallPoint, double>(best, list.apexes[arg], list.max_radius);
  };
  auto [base, argmax, max_r] = run(scan);
  auto [fine, arg2, mr2] = run(refine_apexes(scan));
  (void)arg2;
  (void)mr2;
  CharacteristicReport rep;
  rep.value = base;
  rep.argmax_center = ComplexPoint(std::vector<double>(argmax.coords));
  rep.scan_radius = max_r;
  rep.scan_step = 2.0 * kPi / scan.angles;
  rep.refinement_gap = (std::isinf(base) && std::isinf(fine))
                           ? 0.0
                           : std::abs(fine - base) / std::max(std::abs(fine), 1e-300);
  return rep;
}

}  // namespace

BallPoint::BallPoint(std::vector<double> c) : coords(std::move(c)) {
  if (coords.size() % 2 != 0 || coords.empty()) {
    throw ConfigError("BallPoint needs 2n coordinates");
  }
  if (abs2(coords) >= 1.0 + 1e-12) throw ConfigError("BallPoint must satisfy |z| < 1");
}

bool tent_membership(PointView a, PointView z) {
  const double na = std::sqrt(abs2(a));
  if (na == 0.0) return true;
  // 1 - <z, a/|a|>
  Complex inner = hermitian_inner(z, a) / na;
  return std::abs(Complex{1.0, 0.0} - inner) < 1.0 - na;
}

double bergman_metric(PointView z, PointView u) {
  const double z2 = abs2(z), u2 = abs2(u);
  if (z2 >= 1.0 || u2 >= 1.0) throw ConfigError("bergman_metric needs points inside the ball");
  const Complex inner = hermitian_inner(z, u);
  const double denom = std::norm(Complex{1.0, 0.0} - inner);
  const double q = (1.0 - z2) * (1.0 - u2) / denom;  // = 1 - |phi_z(u)|^2
  if (q >= 1.0) return 0.0;
  const double rho = std::sqrt(std::max(0.0, 1.0 - q));
  // atanh(rho) written through q to stay stable when rho -> 1
  return 0.5 * std::log((1.0 + rho) * (1.0 + rho) / q);
}

TentSpec make_tent(const BallPoint& apex) {
  TentSpec spec;
  spec.apex = apex;
  const double na = std::sqrt(abs2(apex.view()));
  if (na > 19.0 / 20.0) {
    spec.has_tilde = true;
    const double scale = (1.0 - 20.0 * (1.0 - na)) / na;
    std::vector<double> tc(apex.coords);
    for (double& c : tc) c *= scale;
    spec.tilde = BallPoint(std::move(tc));
  }
  return spec;
}

void metric_ball_euclid(Complex c, double rho, Complex* center, double* radius) {
  const double t = std::tanh(rho);
  const double c2 = std::norm(c);
  const double denom = 1.0 - t * t * c2;
  *center = c * ((1.0 - t * t) / denom);
  *radius = (1.0 - c2) * t / denom;
}

CharacteristicReport bp_characteristic(const Weight& sigma, const ExponentPair& p,
                                       const ApexScan& scan, const DiskQuadSpec& quad) {
  if (p.is_one()) throw ConfigError("B_p needs p > 1");
  if (!sigma.strictly_positive) throw ConfigError("B_p needs a strictly positive weight");
  const double dual_expo = -p.dual_ratio();
  const double power = p.p / p.conj();
  return scan_apexes(scan, [&](const BallPoint& a) {
    PairAverages pa = tent_pair_averages(sigma.eval, a, dual_expo, quad);
    if (pa.members == 0) return -kInf;  // numerically empty tent: skipped
    if (pa.avg > kDivergenceSentinel || pa.avg_dual > kDivergenceSentinel) return kInf;
    return pa.avg * std::pow(pa.avg_dual, power);
  });
}

CharacteristicReport cp_characteristic(const Weight& sigma, const ExponentPair& p,
                                       const ApexScan& scan, const DiskQuadSpec& quad) {
  if (p.is_one()) throw ConfigError("C_p needs p > 1");
  if (!sigma.strictly_positive) throw ConfigError("C_p needs a strictly positive weight");
  const double dual_expo = -p.dual_ratio();
  const double power = p.p / p.conj();
  return scan_apexes(scan, [&](const BallPoint& a) {
    PairAverages pa =
        ball_pair_averages(sigma.eval, as_complex(a.view()), 1.0, dual_expo, quad);
    if (pa.members == 0) return -kInf;
    if (pa.avg > kDivergenceSentinel || pa.avg_dual > kDivergenceSentinel) return kInf;
    return pa.avg * std::pow(pa.avg_dual, power);
  });
}

Weight hat_sigma(const Weight& sigma, const DiskQuadSpec& quad) {
  Weight out;
  out.eval = [sigma, quad](PointView z) {
    require_disk(z, "hat_sigma");
    PairAverages pa = ball_pair_averages(sigma.eval, as_complex(z), 1.0, -1.0, quad);
    return pa.members ? pa.avg : 0.0;
  };
  out.family = "hat(" + sigma.family + ")";
  out.params = {{"family", "hat_sigma"}, {"base", sigma.params}};
  out.radial = false;
  out.strictly_positive = sigma.strictly_positive;
  return out;
}

double tent_measure(const BallPoint& apex, const DiskQuadSpec& quad) {
  RealFn one = [](PointView) { return 1.0; };
  return tent_pair_averages(one, apex, -1.0, quad).measure;
}

ContainmentReport containment_check(const BallPoint& apex, int samples, std::uint64_t seed) {
  require_disk(apex.view(), "containment_check");
  const double na = std::sqrt(abs2(apex.view()));
  if (!(na > 19.0 / 20.0)) throw ConfigError("containment check needs |a| > 19/20");
  TentSpec spec = make_tent(apex);
  const Complex a = as_complex(apex.view());
  const Complex rot = a / na;
  const double t = 1.0 - na;
  const double tilde_dir[2] = {spec.tilde.coords[0], spec.tilde.coords[1]};
  const double ntilde = std::sqrt(abs2(PointView(tilde_dir, 2)));

  Rng rng(seed);
  ContainmentReport rep;
  rep.samples = samples;
  int accepted = 0;
  while (accepted < samples) {
    // rejection-sample zeta in the canonical tent box
    Complex zeta{rng.uniform(1.0 - t, 1.0), rng.uniform(-t, t)};
    if (std::abs(Complex{1.0, 0.0} - zeta) >= t || std::abs(zeta) >= 1.0) continue;
    ++accepted;
    const Complex z = zeta * rot;
    Complex ec;
    double er;
    metric_ball_euclid(z, 1.0, &ec, &er);
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const double rad = er * std::sqrt(rng.uniform());
    const Complex u = ec + rad * Complex{std::cos(theta), std::sin(theta)};

    const double up[2] = {u.real(), u.imag()};
    if (!tent_membership(PointView(tilde_dir, 2), PointView(up, 2))) ++rep.violations;
    const Complex inner = hermitian_inner(PointView(up, 2), PointView(tilde_dir, 2)) / ntilde;
    rep.max_constant =
        std::max(rep.max_constant, std::abs(Complex{1.0, 0.0} - inner) / (1.0 - na));
  }
  return rep;
}

Complex bergman_berezin(const SymbolFn& phi, PointView z, const DiskQuadSpec& quad) {
  require_disk(z, "bergman_berezin");
  const Complex zc = as_complex(z);
  if (std::abs(zc) >= 1.0) throw ConfigError("Berezin transform needs |z| < 1");
  const int m = quad.ball_cells;
  const double spacing = 2.0 / m;
  const double rmax = 1.0 - quad.delta;
  const double rmax2 = rmax * rmax;
  constexpr int kEdgeRefine = 64;  // subcell count along the domain circle

  auto value_at = [&](double x, double y) {
    const Complex zeta{x, y};
    const Complex w = (zc - zeta) / (Complex{1.0, 0.0} - std::conj(zc) * zeta);
    double pt[2] = {w.real(), w.imag()};
    return phi.eval(PointView(pt, 2));
  };

  auto parts = chunk_map<KahanComplex>(static_cast<std::size_t>(m), 16,
                                       [&](std::size_t b, std::size_t e) {
    KahanComplex acc;
    for (std::size_t ix = b; ix < e; ++ix) {
      const double x = -1.0 + (ix + 0.5) * spacing;
      for (int iy = 0; iy < m; ++iy) {
        const double y = -1.0 + (iy + 0.5) * spacing;
        const double lo_x = std::max(0.0, std::abs(x) - spacing / 2.0);
        const double lo_y = std::max(0.0, std::abs(y) - spacing / 2.0);
        const double hi_x = std::abs(x) + spacing / 2.0;
        const double hi_y = std::abs(y) + spacing / 2.0;
        const double lo2 = lo_x * lo_x + lo_y * lo_y;
        const double hi2 = hi_x * hi_x + hi_y * hi_y;
        if (lo2 > rmax2) continue;
        if (hi2 <= rmax2) {
          acc.add(value_at(x, y));
          continue;
        }
        // cell straddles the domain circle: resolve the clipped fraction
        KahanComplex cell;
        for (int sx = 0; sx < kEdgeRefine; ++sx) {
          const double xs = x - spacing / 2.0 + (sx + 0.5) * spacing / kEdgeRefine;
          for (int sy = 0; sy < kEdgeRefine; ++sy) {
            const double ys = y - spacing / 2.0 + (sy + 0.5) * spacing / kEdgeRefine;
            if (xs * xs + ys * ys > rmax2) continue;
            cell.add(value_at(xs, ys));
          }
        }
        acc.add(cell.value() / (kEdgeRefine * static_cast<double>(kEdgeRefine)));
      }
    }
    return acc;
  });
  KahanComplex total;
  for (const auto& p : parts) total.merge(p);
  return total.value() * (spacing * spacing / kPi);
}

HatLemmaReport hat_lemma_check(double gamma, const ExponentPair& p, const ApexScan& scan,
                               const DiskQuadSpec& quad) {
  nlohmann::json family = {{"family", "std_radial"}, {"gamma", gamma}};
  Weight sigma = make_weight(family, 1);
  Weight hat = hat_sigma(sigma, quad);

  HatLemmaReport rep;
  CharacteristicReport base = bp_characteristic(sigma, p, scan, quad);
  CharacteristicReport hatted = bp_characteristic(hat, p, scan, quad);
  rep.bp_sigma = base.value;
  rep.bp_hat = hatted.value;
  rep.gap_sigma = base.refinement_gap;
  rep.gap_hat = hatted.refinement_gap;
  rep.ratio = rep.bp_sigma > 0.0 ? rep.bp_hat / rep.bp_sigma : kInf;

  // metric balls of tent points reach past the delta shell once the farthest
  // tent point r satisfies (r + tanh 1)/(1 + r tanh 1) > 1 - delta
  const double t1 = std::tanh(1.0);
  const double r_far = 1.0 - quad.delta;
  rep.boundary_truncated = (r_far + t1) / (1.0 + r_far * t1) > 1.0 - quad.delta;
  return rep;
}

}  // namespace fwl
