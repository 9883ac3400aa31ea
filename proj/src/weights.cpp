#include "fwl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fwl/json_util.hpp"
#include "fwl/kahan.hpp"
#include "fwl/parallel.hpp"

namespace fwl {

namespace {

constexpr int kMinCubeCells = 8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Cells per axis used when a cube cell straddles a declared radial jump.
int jump_refinement(int axes) { return axes <= 2 ? 64 : 8; }

struct CellRange {
  double lo2 = 0.0;  // min |u|^2 over the cell
  double hi2 = 0.0;  // max |u|^2 over the cell
};

CellRange cell_radius_range(PointView center, double half) {
  CellRange r;
  for (double c : center) {
    double lo = std::max(0.0, std::abs(c) - half);
    double hi = std::abs(c) + half;
    r.lo2 += lo * lo;
    r.hi2 += hi * hi;
  }
  return r;
}

bool crosses_jump(const CellRange& r, const std::vector<double>& jumps) {
  for (double rho : jumps) {
    double rho2 = rho * rho;
    if (r.lo2 < rho2 && rho2 < r.hi2) return true;
  }
  return false;
}

// Odometer over an axes-dimensional box of M cells per axis; cb gets each
// cell midpoint. Serial on purpose: callers parallelize over cubes.
template <class Cb>
void for_each_cell(int axes, int cells, PointView origin, double spacing, Cb&& cb) {
  std::vector<int> idx(axes, 0);
  std::vector<double> pt(axes);
  for (;;) {
    for (int a = 0; a < axes; ++a) pt[a] = origin[a] + (idx[a] + 0.5) * spacing;
    cb(PointView(pt));
    int a = axes - 1;
    while (a >= 0 && ++idx[a] == cells) idx[a--] = 0;
    if (a < 0) break;
  }
}

double checked(double v, PointView where) {
  if (std::isnan(v)) {
    std::ostringstream os;
    os << "non-finite weight value at (";
    for (std::size_t j = 0; j < where.size(); ++j) os << (j ? "," : "") << where[j];
    os << ")";
    throw EvaluationError(os.str());
  }
  return v;
}

double cube_integral(const RealFn& f, PointView center, double side, double max_spacing,
                     const std::vector<double>& jumps) {
  const int axes = static_cast<int>(center.size());
  const int cells = std::max(kMinCubeCells, static_cast<int>(std::ceil(side / max_spacing - 1e-12)));
  const double spacing = side / cells;
  std::vector<double> origin(center.begin(), center.end());
  for (double& c : origin) c -= side / 2.0;

  const int refine = jump_refinement(axes);
  const double cell_measure = std::pow(spacing, axes);
  const double sub_measure = std::pow(spacing / refine, axes);

  KahanSum acc;
  std::vector<double> sub_origin(axes);
  for_each_cell(axes, cells, origin, spacing, [&](PointView mid) {
    if (!jumps.empty() && crosses_jump(cell_radius_range(mid, spacing / 2.0), jumps)) {
      for (int a = 0; a < axes; ++a) sub_origin[a] = mid[a] - spacing / 2.0;
      KahanSum cell;
      for_each_cell(axes, refine, sub_origin, spacing / refine, [&](PointView sm) {
        cell.add(checked(f(sm), sm));
      });
      acc.add(cell.value() * sub_measure);
    } else {
      acc.add(checked(f(mid), mid) * cell_measure);
    }
  });
  return acc.value();
}

double cube_sup(const RealFn& f, PointView center, double side, double max_spacing,
                const std::vector<double>& jumps) {
  const int axes = static_cast<int>(center.size());
  const int cells = std::max(kMinCubeCells, static_cast<int>(std::ceil(side / max_spacing - 1e-12)));
  const double spacing = side / cells;
  std::vector<double> origin(center.begin(), center.end());
  for (double& c : origin) c -= side / 2.0;

  const int refine = jump_refinement(axes);
  double best = -kInf;
  std::vector<double> sub_origin(axes);
  for_each_cell(axes, cells, origin, spacing, [&](PointView mid) {
    if (!jumps.empty() && crosses_jump(cell_radius_range(mid, spacing / 2.0), jumps)) {
      for (int a = 0; a < axes; ++a) sub_origin[a] = mid[a] - spacing / 2.0;
      for_each_cell(axes, refine, sub_origin, spacing / refine, [&](PointView sm) {
        double v = f(sm);
        if (std::isnan(v)) throw EvaluationError("non-finite value in ess-sup scan");
        best = std::max(best, v);
      });
    } else {
      double v = f(mid);
      if (std::isnan(v)) throw EvaluationError("non-finite value in ess-sup scan");
      best = std::max(best, v);
    }
  });
  return best;
}

std::vector<double> merge_jumps(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

ExponentPair::ExponentPair(double p_in) : p(p_in) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("exponent p must satisfy 1 <= p < inf");
}

double ExponentPair::conj() const {
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

Weight Weight::constant(double value) {
  if (value < 0.0) throw ConfigError("constant weight must be nonnegative");
  Weight w;
  w.eval = [value](PointView) { return value; };
  w.family = "constant";
  w.params = {{"family", "constant"}, {"value", value}};
  w.radial = true;
  w.strictly_positive = value > 0.0;
  return w;
}

Weight Weight::gaussian(double beta) {
  Weight w;
  w.eval = [beta](PointView z) { return std::exp(beta * abs2(z)); };
  w.family = "gaussian";
  w.params = {{"family", "gaussian"}, {"beta", beta}};
  w.radial = true;
  w.strictly_positive = true;
  return w;
}

Weight Weight::power(double beta) {
  Weight w;
  w.eval = [beta](PointView z) { return std::pow(1.0 + std::sqrt(abs2(z)), beta); };
  w.family = "power";
  w.params = {{"family", "power"}, {"beta", beta}};
  w.radial = true;
  w.strictly_positive = true;
  return w;
}

Weight Weight::radial_step(double radius, double inside, double outside) {
  if (radius <= 0.0) throw ConfigError("radial_step radius must be positive");
  if (inside < 0.0 || outside < 0.0) throw ConfigError("radial_step values must be nonnegative");
  Weight w;
  w.eval = [=](PointView z) { return abs2(z) < radius * radius ? inside : outside; };
  w.family = "radial_step";
  w.params = {{"family", "radial_step"}, {"radius", radius}, {"inside", inside}, {"outside", outside}};
  w.radial = true;
  w.strictly_positive = inside > 0.0 && outside > 0.0;
  w.radial_jumps = {radius};
  return w;
}

Weight Weight::anisotropic_power(std::vector<double> exponents) {
  Weight w;
  w.eval = [e = exponents](PointView z) {
    double v = 1.0;
    for (std::size_t j = 0; j < z.size() && j < e.size(); ++j) {
      v *= std::pow(1.0 + std::abs(z[j]), e[j]);
    }
    return v;
  };
  w.family = "anisotropic_power";
  w.params = {{"family", "anisotropic_power"}, {"exponents", exponents}};
  w.radial = false;
  w.strictly_positive = true;
  return w;
}

Weight Weight::product(std::vector<Weight> factors) {
  if (factors.empty()) throw ConfigError("product weight needs at least one factor");
  Weight w;
  w.family = "product";
  w.params = {{"family", "product"}};
  auto factor_params = nlohmann::json::array();
  w.radial = true;
  w.strictly_positive = true;
  for (const auto& f : factors) {
    factor_params.push_back(f.params);
    w.radial = w.radial && f.radial;
    w.strictly_positive = w.strictly_positive && f.strictly_positive;
    w.radial_jumps = merge_jumps(w.radial_jumps, f.radial_jumps);
  }
  w.params["factors"] = factor_params;
  w.eval = [fs = std::move(factors)](PointView z) {
    double v = 1.0;
    for (const auto& f : fs) v *= f.eval(z);
    return v;
  };
  return w;
}

Weight make_weight(const nlohmann::json& j, int n) {
  const std::string where = "/weight";
  std::string family = require_string(j, "family", where);
  if (family == "constant") {
    check_object(j, {"family", "value"}, where);
    return Weight::constant(require_number(j, "value", where));
  }
  if (family == "gaussian") {
    check_object(j, {"family", "beta"}, where);
    return Weight::gaussian(require_number(j, "beta", where));
  }
  if (family == "power") {
    check_object(j, {"family", "beta"}, where);
    return Weight::power(require_number(j, "beta", where));
  }
  if (family == "radial_step") {
    check_object(j, {"family", "radius", "inside", "outside"}, where);
    return Weight::radial_step(require_number(j, "radius", where),
                               require_number(j, "inside", where),
                               require_number(j, "outside", where));
  }
  if (family == "anisotropic_power") {
    check_object(j, {"family", "exponents"}, where);
    const auto& e = require_member(j, "exponents", where);
    if (!e.is_array()) throw ConfigError("expected an array at " + where + "/exponents");
    std::vector<double> exps;
    for (const auto& v : e) exps.push_back(v.get<double>());
    if (static_cast<int>(exps.size()) != 2 * n) {
      throw ConfigError("anisotropic_power needs 2n exponents at " + where + "/exponents");
    }
    return Weight::anisotropic_power(std::move(exps));
  }
  if (family == "product") {
    check_object(j, {"family", "factors"}, where);
    const auto& fs = require_member(j, "factors", where);
    if (!fs.is_array() || fs.empty()) {
      throw ConfigError("expected a non-empty array at " + where + "/factors");
    }
    std::vector<Weight> factors;
    for (const auto& f : fs) factors.push_back(make_weight(f, n));
    return Weight::product(std::move(factors));
  }
  if (family == "std_radial") {
    // disk family (1-|z|^2)^gamma, used by the Bergman module
    check_object(j, {"family", "gamma"}, where);
    double gamma = require_number(j, "gamma", where);
    Weight w;
    w.eval = [gamma](PointView z) { return std::pow(std::max(0.0, 1.0 - abs2(z)), gamma); };
    w.family = "std_radial";
    w.params = {{"family", "std_radial"}, {"gamma", gamma}};
    w.radial = true;
    w.strictly_positive = true;
    return w;
  }
  if (family == "tabulated") {
    check_object(j, {"family", "R", "h", "values"}, where);
    GridSpec gs{n, require_number(j, "R", where), require_number(j, "h", where)};
    auto grid = QuadratureGrid::build_shared(gs);
    const auto& vals = require_member(j, "values", where);
    if (!vals.is_array() || vals.size() != grid->size()) {
      throw ConfigError("tabulated weight needs one value per grid node at " + where + "/values");
    }
    auto values = std::make_shared<std::vector<double>>();
    values->reserve(vals.size());
    bool positive = true;
    for (const auto& v : vals) {
      double x = v.get<double>();
      if (x < 0.0) throw ConfigError("tabulated weight values must be nonnegative");
      positive = positive && x > 0.0;
      values->push_back(x);
    }
    Weight w;
    w.eval = [grid, values](PointView z) {
      // nearest-node lookup, clamped to the box
      std::size_t index = 0;
      for (int a = 0; a < grid->axes(); ++a) {
        double t = (z[a] + grid->box_radius()) / grid->spacing() - 0.5;
        long k = std::lround(t);
        k = std::clamp<long>(k, 0, grid->cells_per_axis() - 1);
        index = index * grid->cells_per_axis() + static_cast<std::size_t>(k);
      }
      return (*values)[index];
    };
    w.family = "tabulated";
    w.params = {{"family", "tabulated"}, {"R", gs.R}, {"h", gs.h}};
    w.strictly_positive = positive;
    return w;
  }
  throw ConfigError("unknown weight family '" + family + "' at " + where + "/family");
}

ScanSpec make_scan(const nlohmann::json& j) {
  check_object(j, {"radius", "step"}, "/scan");
  ScanSpec s;
  s.radius = number_or(j, "radius", s.radius, "/scan");
  s.step = number_or(j, "step", s.step, "/scan");
  if (!(s.radius >= 0.0) || !(s.step > 0.0)) throw ConfigError("invalid scan spec");
  return s;
}

double cube_mass(const Weight& w, const CubeSpec& q, const GridSpec& resolution) {
  const double reach = sup_coord(q.center.view()) + q.side / 2.0;
  if (reach > resolution.R + 1e-12) {
    std::ostringstream os;
    os << "cube escapes the quadrature box: needs R >= " << reach << " but grid has R = "
       << resolution.R;
    throw TruncationError(os.str());
  }
  return cube_mass_unchecked(w, q, resolution.h);
}

double cube_mass_unchecked(const Weight& w, const CubeSpec& q, double max_spacing) {
  if (!(q.side > 0.0)) throw ConfigError("cube side must be positive");
  return cube_integral(w.eval, q.center.view(), q.side, max_spacing, w.radial_jumps);
}

Weight hat_weight(const Weight& w, double max_spacing) {
  Weight out;
  out.eval = [w, max_spacing](PointView z) {
    return cube_integral(w.eval, z, 1.0, max_spacing, w.radial_jumps);
  };
  out.family = "hat(" + w.family + ")";
  out.params = {{"family", "hat"}, {"base", w.params}};
  out.radial = false;  // cube averages break exact rotation invariance
  out.strictly_positive = w.strictly_positive;
  return out;
}

Weight dual_weight(const Weight& w, const ExponentPair& p) {
  if (p.is_one()) throw ConfigError("dual weight is undefined for p = 1");
  if (!w.strictly_positive) {
    throw ConfigError("dual weight needs a strictly positive base weight");
  }
  const double expo = -p.dual_ratio();
  Weight out;
  out.eval = [base = w.eval, expo](PointView z) {
    double v = base(z);
    if (v <= 0.0) throw EvaluationError("dual weight hit a zero of the base weight");
    return std::pow(v, expo);
  };
  out.family = "dual(" + w.family + ")";
  out.params = {{"family", "dual"}, {"base", w.params}, {"exponent", expo}};
  out.radial = w.radial;
  out.strictly_positive = true;
  out.radial_jumps = w.radial_jumps;
  return out;
}

std::vector<ComplexPoint> scan_centers(int n, double radius, double step) {
  const int axes = 2 * n;
  const int half = static_cast<int>(std::floor(radius / step + 1e-9));
  const int per_axis = 2 * half + 1;
  double total = 1.0;
  for (int a = 0; a < axes; ++a) total *= per_axis;
  if (total > static_cast<double>(node_cap())) {
    std::ostringstream os;
    os << "scan would need " << total << " centers, above the cap of " << node_cap();
    throw CapacityError(os.str());
  }
  std::vector<ComplexPoint> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> idx(axes, -half);
  for (;;) {
    std::vector<double> c(axes);
    for (int a = 0; a < axes; ++a) c[a] = idx[a] * step;
    out.push_back(ComplexPoint(std::move(c)));
    int a = axes - 1;
    while (a >= 0 && ++idx[a] > half) idx[a--] = -half;
    if (a < 0) break;
  }
  return out;
}

namespace {

// Shared scaffolding for the scanned suprema: evaluate `value` over the
// center lattice at `step`, keep the max and argmax (first index wins ties).
struct ScanResult {
  double value = -kInf;
  std::size_t argmax = 0;
};

ScanResult scan_max(const std::vector<ComplexPoint>& centers,
                    const std::function<double(PointView)>& value) {
  std::vector<double> vals(centers.size());
  parallel_chunks(centers.size(), 16, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) vals[i] = value(centers[i].view());
  });
  ScanResult r;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] > r.value) {
      r.value = vals[i];
      r.argmax = i;
    }
  }
  return r;
}

CharacteristicReport scanned_characteristic(int n, const ScanSpec& scan,
                                            const std::function<double(PointView)>& value) {
  auto centers = scan_centers(n, scan.radius, scan.step);
  ScanResult base = scan_max(centers, value);
  auto fine = scan_centers(n, scan.radius, scan.step / 2.0);
  ScanResult refined = scan_max(fine, value);

  CharacteristicReport rep;
  rep.value = base.value;
  rep.argmax_center = centers[base.argmax];
  rep.scan_radius = scan.radius;
  rep.scan_step = scan.step;
  if (std::isinf(base.value) && std::isinf(refined.value)) {
    rep.refinement_gap = 0.0;
  } else {
    rep.refinement_gap =
        std::abs(refined.value - base.value) / std::max(std::abs(refined.value), 1e-300);
  }
  return rep;
}

}  // namespace

DoublingReport doubling_constant(const Weight& w, double r, const ScanSpec& scan,
                                 const GridSpec& resolution) {
  if (!(r > 0.0)) throw ConfigError("doubling needs r > 0");
  if (scan.radius < 2.0 * r) throw ConfigError("doubling scan radius must be at least 2r");

  auto ratio = [&](PointView c) {
    double denom = cube_integral(w.eval, c, r, resolution.h, w.radial_jumps);
    double numer = cube_integral(w.eval, c, 2.0 * r, resolution.h, w.radial_jumps);
    if (denom <= 0.0) return kInf;
    return numer / denom;
  };

  DoublingReport rep;
  rep.report = scanned_characteristic(resolution.n, scan, ratio);

  ScanSpec half = scan;
  half.radius = scan.radius / 2.0;
  auto centers_half = scan_centers(resolution.n, half.radius, half.step);
  double value_half = scan_max(centers_half, ratio).value;
  rep.growth_ratio = value_half > 0.0 ? rep.report.value / value_half : kInf;
  rep.suspect = std::isinf(rep.report.value) || rep.growth_ratio > kDoublingSuspectRatio;
  return rep;
}

CharacteristicReport joint_characteristic(const Weight& w, const Weight& sigma,
                                          const ExponentPair& p, double r,
                                          const SymbolFn* phi, const ScanSpec& scan,
                                          const GridSpec& resolution) {
  if (!(r > 0.0)) throw ConfigError("joint characteristic needs r > 0");
  if (!p.is_one() && !sigma.strictly_positive) {
    throw ConfigError("joint characteristic with p > 1 needs a strictly positive sigma");
  }

  const int axes = 2 * resolution.n;
  const double cube_volume = std::pow(r, axes);
  std::vector<double> jumps = merge_jumps(w.radial_jumps, sigma.radial_jumps);
  if (phi) jumps = merge_jumps(jumps, phi->radial_jumps);

  std::function<double(PointView)> value;
  if (p.is_one()) {
    RealFn ess = [&sigma, phi](PointView z) {
      double s = sigma.eval(z);
      double mag = phi ? std::abs(phi->eval(z)) : 1.0;
      if (mag == 0.0) return 0.0;
      if (s <= 0.0) return kInf;
      return mag / s;
    };
    value = [&, ess, jumps](PointView c) {
      double avg_w = cube_integral(w.eval, c, r, resolution.h, w.radial_jumps) / cube_volume;
      double sup = cube_sup(ess, c, r, resolution.h, jumps);
      if (avg_w > kDivergenceSentinel || sup > kDivergenceSentinel) return kInf;
      return avg_w * sup;
    };
  } else {
    const double pc = p.conj();
    const double dual_expo = -p.dual_ratio();
    RealFn second = [&sigma, phi, pc, dual_expo](PointView z) {
      double s = sigma.eval(z);
      double sv = s > 0.0 ? std::pow(s, dual_expo) : kInf;
      if (phi) {
        double mag = std::abs(phi->eval(z));
        if (mag == 0.0) return 0.0;
        sv = std::isinf(sv) ? kInf : std::pow(mag, pc) * sv;
      }
      return sv;
    };
    const double power = p.p / pc;
    value = [&, second, jumps, power](PointView c) {
      double avg_w = cube_integral(w.eval, c, r, resolution.h, w.radial_jumps) / cube_volume;
      double avg_2 = cube_integral(second, c, r, resolution.h, jumps) / cube_volume;
      if (avg_w > kDivergenceSentinel || avg_2 > kDivergenceSentinel) return kInf;
      return avg_w * std::pow(avg_2, power);
    };
  }

  return scanned_characteristic(resolution.n, scan, value);
}

}  // namespace fwl
