#include "fwl/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fwl/bergman.hpp"
#include "fwl/fock.hpp"
#include "fwl/format.hpp"
#include "fwl/json_util.hpp"
#include "fwl/localization.hpp"
#include "fwl/matrix.hpp"
#include "fwl/numerics.hpp"
#include "fwl/symbols.hpp"
#include "fwl/weights.hpp"

namespace fwl {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Common {
  FockParams params;
  GridSpec grid;
  std::uint64_t seed = 42;
};

Common parse_common(const json& cfg, const RunOptions& opt) {
  Common c;
  c.params = FockParams(number_or(cfg, "alpha", 1.0, "/"),
                        static_cast<int>(number_or(cfg, "n", 1.0, "/")));
  c.grid.n = c.params.n;
  if (cfg.contains("grid")) {
    check_object(cfg.at("grid"), {"n", "R", "h"}, "/grid");
    c.grid.R = number_or(cfg.at("grid"), "R", c.grid.R, "/grid");
    c.grid.h = number_or(cfg.at("grid"), "h", c.grid.h, "/grid");
    if (cfg.at("grid").contains("n") &&
        static_cast<int>(cfg.at("grid").at("n").get<double>()) != c.params.n) {
      throw ConfigError("grid dimension must match n at /grid/n");
    }
  }
  if (opt.grid_R) c.grid.R = *opt.grid_R;
  if (opt.grid_h) c.grid.h = *opt.grid_h;
  c.seed = static_cast<std::uint64_t>(number_or(cfg, "seed", 42.0, "/"));
  return c;
}

json grid_echo(const GridSpec& g) { return {{"n", g.n}, {"R", g.R}, {"h", g.h}}; }

ScanSpec parse_scan_or(const json& cfg, const ScanSpec& fallback) {
  if (!cfg.contains("scan")) return fallback;
  return make_scan(cfg.at("scan"));
}

std::vector<double> number_list(const json& cfg, const char* key,
                                const std::vector<double>& fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& arr = cfg.at(key);
  if (!arr.is_array() || arr.empty()) {
    throw ConfigError(std::string("expected a non-empty array at /") + key);
  }
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(v.get<double>());
  return out;
}

const json& thresholds_of(const json& cfg) {
  static const json empty = json::object();
  return cfg.contains("thresholds") ? cfg.at("thresholds") : empty;
}

std::string characteristic_csv(const CharacteristicReport& rep) {
  CsvWriter csv({"value", "argmax_re", "argmax_im", "scan_radius", "scan_step",
                 "refinement_gap"});
  csv.add_row({CsvWriter::cell(rep.value), CsvWriter::cell(rep.argmax_center.coords[0]),
               CsvWriter::cell(rep.argmax_center.coords[1]), CsvWriter::cell(rep.scan_radius),
               CsvWriter::cell(rep.scan_step), CsvWriter::cell(rep.refinement_gap)});
  return csv.str();
}

json characteristic_metrics(const CharacteristicReport& rep) {
  return {{"value", rep.value},
          {"argmax_re", rep.argmax_center.coords[0]},
          {"argmax_im", rep.argmax_center.coords[1]},
          {"refinement_gap", rep.refinement_gap}};
}

struct ScenarioOutput {
  std::string csv;
  json metrics;
  json effective;  // config echo with defaults applied
  bool pass = true;
};

// ---------------------------------------------------------------- weight-check

ScenarioOutput run_weight_check(const json& cfg, const RunOptions& opt) {
  check_object(cfg, {"scenario", "alpha", "n", "grid", "seed", "weight", "sigma", "symbol", "p",
                     "r", "scan", "characteristic", "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  Weight w = make_weight(require_member(cfg, "weight", "/"), c.params.n);
  Weight sigma = cfg.contains("sigma") ? make_weight(cfg.at("sigma"), c.params.n) : w;
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  const double r = number_or(cfg, "r", 1.0, "/");
  ScanSpec scan = parse_scan_or(cfg, ScanSpec{});
  std::string kind = cfg.contains("characteristic")
                         ? cfg.at("characteristic").get<std::string>()
                         : "joint";
  const json& th = thresholds_of(cfg);
  check_object(th, {"max_value", "max_refinement_gap"}, "/thresholds");

  ScenarioOutput out;
  CharacteristicReport rep;
  if (kind == "joint") {
    std::optional<SymbolFn> phi;
    if (cfg.contains("symbol")) phi = make_symbol(cfg.at("symbol"), c.params.n);
    rep = joint_characteristic(w, sigma, p, r, phi ? &*phi : nullptr, scan, c.grid);
    out.metrics = characteristic_metrics(rep);
  } else if (kind == "doubling") {
    DoublingReport drep = doubling_constant(w, r, scan, c.grid);
    rep = drep.report;
    out.metrics = characteristic_metrics(rep);
    out.metrics["growth_ratio"] = drep.growth_ratio;
    out.metrics["suspect"] = drep.suspect;
  } else {
    throw ConfigError("characteristic must be 'joint' or 'doubling' at /characteristic");
  }
  out.csv = characteristic_csv(rep);
  out.pass = std::isfinite(rep.value);
  if (th.contains("max_value")) out.pass = out.pass && rep.value <= th.at("max_value").get<double>();
  if (th.contains("max_refinement_gap")) {
    out.pass = out.pass && rep.refinement_gap <= th.at("max_refinement_gap").get<double>();
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", c.params.n}, {"grid", grid_echo(c.grid)},
                   {"weight", w.params}, {"p", p.p}, {"r", r},
                   {"scan", {{"radius", scan.radius}, {"step", scan.step}}},
                   {"characteristic", kind}, {"seed", c.seed}};
  return out;
}

// ------------------------------------------------- projection- / toeplitz-norm

ScenarioOutput run_norm_bracket(const json& cfg, const RunOptions& opt, NormProblem problem) {
  check_object(cfg, {"scenario", "alpha", "n", "grid", "seed", "weight", "sigma", "symbol", "p",
                     "r", "scan", "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  Weight w = make_weight(require_member(cfg, "weight", "/"), c.params.n);
  std::optional<Weight> sigma;
  std::optional<SymbolFn> phi;
  if (problem == NormProblem::projection) {
    sigma = make_weight(require_member(cfg, "sigma", "/"), c.params.n);
    if (cfg.contains("symbol")) throw ConfigError("unknown key at /symbol");
  } else {
    phi = make_symbol(require_member(cfg, "symbol", "/"), c.params.n);
    if (cfg.contains("sigma")) throw ConfigError("unknown key at /sigma");
  }
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  const double r = number_or(cfg, "r", 1.0, "/");
  ScanSpec scan = parse_scan_or(cfg, ScanSpec{4.0, 0.25});
  const json& th = thresholds_of(cfg);
  check_object(th, {"bracket_slack", "max_ratio", "expect_unbounded"}, "/thresholds");
  const double slack = number_or(th, "bracket_slack", 0.1, "/thresholds");
  const double max_ratio = number_or(th, "max_ratio", 1e3, "/thresholds");
  const bool expect_unbounded =
      th.contains("expect_unbounded") && th.at("expect_unbounded").get<bool>();

  auto grid = QuadratureGrid::build_shared(c.grid);
  NormBracket nb = norm_bracket(c.params, problem, phi ? &*phi : nullptr,
                                sigma ? *sigma : w, w, p, r, grid, scan, c.seed);

  ScenarioOutput out;
  CsvWriter csv({"lower", "point", "upper", "method", "char_sub", "char_grid", "c_lat", "s1",
                 "s2", "schur_tail", "scan_radius", "scan_step"});
  auto wit = [&](const char* key) {
    return nb.witnesses.contains(key) ? nb.witnesses.at(key).get<double>() : 0.0;
  };
  csv.add_row({CsvWriter::cell(nb.lower),
               CsvWriter::cell(nb.point_available ? nb.point_estimate
                                                  : std::numeric_limits<double>::quiet_NaN()),
               CsvWriter::cell(nb.upper), nb.method, CsvWriter::cell(wit("char_sub_path")),
               CsvWriter::cell(wit("char_grid_path")), CsvWriter::cell(wit("c_lat")),
               CsvWriter::cell(wit("s1")), CsvWriter::cell(wit("s2")),
               CsvWriter::cell(wit("schur_tail")), CsvWriter::cell(wit("scan_radius")),
               CsvWriter::cell(wit("scan_step"))});
  out.csv = csv.str();
  out.metrics = {{"lower", nb.lower}, {"upper", nb.upper}, {"witnesses", nb.witnesses}};
  if (nb.point_available) out.metrics["point"] = nb.point_estimate;

  if (expect_unbounded) {
    out.pass = std::isinf(nb.upper);
  } else {
    bool ok = std::isfinite(nb.lower) && std::isfinite(nb.upper) && nb.lower <= nb.upper;
    if (ok && nb.point_available) {
      ok = nb.lower <= (1.0 + slack) * nb.point_estimate &&
           nb.point_estimate <= (1.0 + slack) * nb.upper;
    }
    if (ok && nb.lower > 0.0) ok = nb.upper / nb.lower <= max_ratio;
    out.pass = ok;
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", c.params.n}, {"grid", grid_echo(c.grid)},
                   {"weight", w.params}, {"p", p.p}, {"r", r},
                   {"scan", {{"radius", scan.radius}, {"step", scan.step}}}, {"seed", c.seed}};
  if (sigma) out.effective["sigma"] = sigma->params;
  if (phi) out.effective["symbol"] = phi->params;
  return out;
}

// ---------------------------------------------------------------- berezin-scan

ScenarioOutput run_berezin_scan(const json& cfg, const RunOptions& opt) {
  check_object(cfg, {"scenario", "alpha", "n", "grid", "seed", "symbol", "radii",
                     "circle_samples", "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  SymbolFn phi = make_symbol(require_member(cfg, "symbol", "/"), c.params.n);
  std::vector<double> radii = number_list(cfg, "radii", {0.0, 1.0, 2.0, 3.0, 4.0});
  const int samples = static_cast<int>(number_or(cfg, "circle_samples", 16.0, "/"));
  const json& th = thresholds_of(cfg);
  check_object(th, {"compact_threshold", "noncompact_floor", "expect_verdict"}, "/thresholds");
  const double compact_thr = number_or(th, "compact_threshold", 1e-2, "/thresholds");
  const double floor = number_or(th, "noncompact_floor", 0.1, "/thresholds");

  auto grid = QuadratureGrid::build(c.grid);
  ScenarioOutput out;
  CsvWriter csv({"radius", "berezin_sup"});
  std::vector<double> sups;
  for (double rho : radii) {
    double sup = 0.0;
    for (Complex z : circle_samples({rho}, samples)) {
      double pt[2] = {z.real(), z.imag()};
      std::vector<double> full(2 * c.params.n, 0.0);
      full[0] = pt[0];
      full[1] = pt[1];
      sup = std::max(sup, std::abs(berezin_symbol(c.params, phi, full, grid)));
    }
    sups.push_back(sup);
    csv.add_row({CsvWriter::cell(rho), CsvWriter::cell(sup)});
  }
  out.csv = csv.str();

  double minimum = kInf;
  for (double s : sups) minimum = std::min(minimum, s);
  Verdict verdict = Verdict::inconclusive;
  if (!sups.empty() && sups.back() < compact_thr) {
    verdict = Verdict::compact_consistent;
  } else if (minimum > floor) {
    verdict = Verdict::non_compact_consistent;
  }
  out.metrics = {{"verdict", to_string(verdict)}, {"sup_at_max_radius", sups.back()}};
  out.pass = true;
  if (th.contains("expect_verdict")) {
    out.pass = to_string(verdict) == th.at("expect_verdict").get<std::string>();
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", c.params.n}, {"grid", grid_echo(c.grid)},
                   {"symbol", phi.params}, {"radii", radii}, {"circle_samples", samples},
                   {"seed", c.seed}};
  return out;
}

// ---------------------------------------------------------------- compactness

std::vector<std::vector<SymbolFn>> parse_terms(const json& cfg, int n) {
  std::vector<std::vector<SymbolFn>> terms;
  if (cfg.contains("terms")) {
    const json& tt = cfg.at("terms");
    if (!tt.is_array() || tt.empty()) throw ConfigError("expected a non-empty array at /terms");
    for (const auto& product : tt) {
      if (!product.is_array() || product.empty()) {
        throw ConfigError("each term at /terms must be a non-empty array of symbols");
      }
      std::vector<SymbolFn> factors;
      for (const auto& s : product) factors.push_back(make_symbol(s, n));
      terms.push_back(std::move(factors));
    }
  } else {
    terms.push_back({make_symbol(require_member(cfg, "symbol", "/"), n)});
  }
  return terms;
}

ScenarioOutput run_compactness(const json& cfg, const RunOptions& opt) {
  check_object(cfg, {"scenario", "alpha", "n", "grid", "seed", "symbol", "terms", "weight", "p",
                     "degree", "radii", "circle_samples", "with_wl", "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  if (c.params.n != 1) throw ConfigError("compactness runs at n = 1");
  Weight w = cfg.contains("weight") ? make_weight(cfg.at("weight"), 1) : Weight::constant(1.0);
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  const int degree = static_cast<int>(number_or(cfg, "degree", 70.0, "/"));
  std::vector<double> radii = number_list(cfg, "radii", {0.0, 1.0, 2.0, 3.0, 4.0});
  const int samples = static_cast<int>(number_or(cfg, "circle_samples", 16.0, "/"));
  const bool with_wl = cfg.contains("with_wl") && cfg.at("with_wl").get<bool>();
  const json& th = thresholds_of(cfg);
  check_object(th, {"berezin_compact", "tail_compact", "noncompact_floor", "expect_verdict"},
               "/thresholds");

  auto grid = QuadratureGrid::build_shared(c.grid);
  auto term_symbols = parse_terms(cfg, 1);
  std::vector<std::vector<OperatorMatrix>> terms;
  for (const auto& product : term_symbols) {
    std::vector<OperatorMatrix> factors;
    for (const auto& s : product) factors.push_back(toeplitz_matrix(c.params, s, degree, *grid));
    terms.push_back(std::move(factors));
  }
  OperatorMatrix T = algebra_compose(terms);

  CompactnessConfig cc;
  cc.berezin_radii = radii;
  cc.tail_radii = radii;
  cc.circle_samples = samples;
  cc.seed = c.seed;
  cc.berezin_compact_threshold = number_or(th, "berezin_compact", cc.berezin_compact_threshold,
                                           "/thresholds");
  cc.tail_compact_threshold = number_or(th, "tail_compact", cc.tail_compact_threshold,
                                        "/thresholds");
  cc.berezin_noncompact_floor = number_or(th, "noncompact_floor", cc.berezin_noncompact_floor,
                                          "/thresholds");
  CompactnessVerdict verdict = compactness_verdict(T, p, w, grid, cc);

  std::vector<double> wl_vals(radii.size(), std::numeric_limits<double>::quiet_NaN());
  if (with_wl) {
    auto zs = circle_samples({0.0, 1.0, 2.0, 3.0}, 16);
    WLProfile prof = wl_profile(T, p, w, radii.front() == 0.0
                                             ? std::vector<double>(radii.begin(), radii.end())
                                             : radii,
                                zs, WLOrientation::integrate_u, grid);
    for (std::size_t i = 0; i < prof.values.size() && i < wl_vals.size(); ++i) {
      wl_vals[i] = prof.values[i];
    }
  }

  ScenarioOutput out;
  CsvWriter csv({"radius", "berezin_sup", "tail_norm", "wl_profile_value"});
  for (std::size_t i = 0; i < radii.size(); ++i) {
    csv.add_row({CsvWriter::cell(radii[i]), CsvWriter::cell(verdict.berezin_sup[i]),
                 CsvWriter::cell(verdict.tail[i]), CsvWriter::cell(wl_vals[i])});
  }
  out.csv = csv.str();
  out.metrics = {{"verdict", to_string(verdict.verdict)},
                 {"berezin_at_max", verdict.berezin_sup.back()},
                 {"tail_at_max", verdict.tail.back()},
                 {"thresholds",
                  {{"berezin_compact", cc.berezin_compact_threshold},
                   {"tail_compact", cc.tail_compact_threshold},
                   {"noncompact_floor", cc.berezin_noncompact_floor}}}};
  out.pass = verdict.verdict != Verdict::inconclusive;
  if (th.contains("expect_verdict")) {
    out.pass = to_string(verdict.verdict) == th.at("expect_verdict").get<std::string>();
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", 1}, {"grid", grid_echo(c.grid)},
                   {"weight", w.params}, {"p", p.p}, {"degree", degree}, {"radii", radii},
                   {"circle_samples", samples}, {"with_wl", with_wl}, {"seed", c.seed}};
  return out;
}

// -------------------------------------------------------------- counterexample

ScenarioOutput run_counterexample(const json& cfg, const RunOptions& opt) {
  check_object(cfg, {"scenario", "alpha", "n", "seed", "h", "R_list", "sigma", "weight", "p",
                     "mode", "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  const double h = number_or(cfg, "h", 0.2, "/");
  std::vector<double> r_list = number_list(cfg, "R_list", {2.0, 3.0, 4.0});
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  Weight sigma = cfg.contains("sigma") ? make_weight(cfg.at("sigma"), c.params.n)
                                       : Weight::gaussian(-c.params.alpha);
  Weight w = cfg.contains("weight") ? make_weight(cfg.at("weight"), c.params.n)
                                    : Weight::gaussian(-4.0 * c.params.alpha);
  std::string mode = cfg.contains("mode") ? cfg.at("mode").get<std::string>() : "growth";
  if (mode != "growth" && mode != "control") {
    throw ConfigError("mode must be 'growth' or 'control' at /mode");
  }
  const json& th = thresholds_of(cfg);
  check_object(th, {"min_growth_ratio", "norm_tolerance", "stabilization"}, "/thresholds");
  const double min_growth = number_or(th, "min_growth_ratio", 2.0, "/thresholds");
  const double norm_tol = number_or(th, "norm_tolerance", 0.02, "/thresholds");
  const double stabilization = number_or(th, "stabilization", 0.05, "/thresholds");

  ScenarioOutput out;
  CsvWriter csv({"R", "nodes", "norm", "iterations", "converged"});
  std::vector<double> norms;
  for (double R : r_list) {
    GridSpec gs{c.params.n, R, h};
    auto grid = QuadratureGrid::build_shared(gs);
    WeightedGridOperator op = grid_operator_build(c.params, sigma, w, p, grid, nullptr);
    PowerIterationResult pi = norm2_power_iteration(op, c.seed);
    norms.push_back(pi.value);
    csv.add_row({CsvWriter::cell(R), CsvWriter::cell(static_cast<double>(grid->size())),
                 CsvWriter::cell(pi.value), CsvWriter::cell(pi.iterations),
                 pi.converged ? "1" : "0"});
  }
  out.csv = csv.str();

  bool increasing = true;
  for (std::size_t i = 1; i < norms.size(); ++i) increasing = increasing && norms[i] > norms[i - 1];
  const double growth = norms.front() > 0.0 ? norms.back() / norms.front() : kInf;
  const double last_change = norms.size() >= 2
                                 ? std::abs(norms.back() - norms[norms.size() - 2]) /
                                       std::max(norms.back(), 1e-300)
                                 : 0.0;
  out.metrics = {{"norms", norms}, {"growth_ratio", growth}, {"last_change", last_change}};
  if (mode == "growth") {
    out.pass = increasing && growth >= min_growth;
  } else {
    bool near_one = true;
    for (double v : norms) near_one = near_one && std::abs(v - 1.0) <= norm_tol;
    out.pass = near_one && last_change <= stabilization;
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", c.params.n}, {"h", h}, {"R_list", r_list},
                   {"sigma", sigma.params}, {"weight", w.params}, {"p", p.p}, {"mode", mode},
                   {"seed", c.seed}};
  return out;
}

// ------------------------------------------------------------------ wl-profile

ScenarioOutput run_wl_profile(const json& cfg, const RunOptions& opt) {
  check_object(cfg, {"scenario", "alpha", "n", "grid", "seed", "symbol", "terms", "weight", "p",
                     "degree", "radii", "circle_radii", "circle_samples", "orientation",
                     "thresholds"},
               "/");
  Common c = parse_common(cfg, opt);
  if (c.params.n != 1) throw ConfigError("wl-profile runs at n = 1");
  Weight w = cfg.contains("weight") ? make_weight(cfg.at("weight"), 1) : Weight::constant(1.0);
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  const int degree = static_cast<int>(number_or(cfg, "degree", 40.0, "/"));
  std::vector<double> radii = number_list(cfg, "radii", {1.0, 2.0, 3.0, 4.0});
  std::vector<double> circle_radii = number_list(cfg, "circle_radii", {0.0, 1.0, 2.0, 3.0});
  const int samples = static_cast<int>(number_or(cfg, "circle_samples", 64.0, "/"));
  std::string orientation =
      cfg.contains("orientation") ? cfg.at("orientation").get<std::string>() : "integrate_u";
  WLOrientation o;
  if (orientation == "integrate_u") {
    o = WLOrientation::integrate_u;
  } else if (orientation == "integrate_z") {
    o = WLOrientation::integrate_z;
  } else {
    throw ConfigError("orientation must be integrate_u or integrate_z at /orientation");
  }
  const json& th = thresholds_of(cfg);
  check_object(th, {"ratio_radii", "max_ratio"}, "/thresholds");

  auto grid = QuadratureGrid::build_shared(c.grid);
  auto term_symbols = parse_terms(cfg, 1);
  std::vector<std::vector<OperatorMatrix>> terms;
  for (const auto& product : term_symbols) {
    std::vector<OperatorMatrix> factors;
    for (const auto& s : product) factors.push_back(toeplitz_matrix(c.params, s, degree, *grid));
    terms.push_back(std::move(factors));
  }
  OperatorMatrix T = algebra_compose(terms);

  auto zs = circle_samples(circle_radii, samples);
  WLProfile prof = wl_profile(T, p, w, radii, zs, o, grid);

  ScenarioOutput out;
  CsvWriter csv({"radius", "profile_value"});
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    csv.add_row({CsvWriter::cell(prof.radii[i]), CsvWriter::cell(prof.values[i])});
  }
  out.csv = csv.str();

  bool decreasing = true;
  for (std::size_t i = 1; i < prof.values.size(); ++i) {
    decreasing = decreasing && prof.values[i] <= prof.values[i - 1] + 1e-10;
  }
  out.metrics = {{"values", prof.values}, {"decreasing", decreasing}};
  out.pass = decreasing;
  if (th.contains("ratio_radii")) {
    auto rr = number_list(th, "ratio_radii", {});
    if (rr.size() != 2) throw ConfigError("ratio_radii needs two entries at /thresholds");
    const double max_ratio = number_or(th, "max_ratio", 0.2, "/thresholds");
    double num = -1.0, den = -1.0;
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
      if (prof.radii[i] == rr[1]) num = prof.values[i];
      if (prof.radii[i] == rr[0]) den = prof.values[i];
    }
    if (num < 0.0 || den <= 0.0) throw ConfigError("ratio_radii must appear in /radii");
    out.metrics["ratio"] = num / den;
    out.pass = out.pass && num / den <= max_ratio;
  }
  out.effective = {{"alpha", c.params.alpha}, {"n", 1}, {"grid", grid_echo(c.grid)},
                   {"weight", w.params}, {"p", p.p}, {"degree", degree}, {"radii", radii},
                   {"circle_radii", circle_radii}, {"circle_samples", samples},
                   {"orientation", orientation}, {"seed", c.seed}};
  return out;
}

// ------------------------------------------------------------------ bergman-*

DiskQuadSpec parse_quad(const json& cfg) {
  DiskQuadSpec q;
  if (cfg.contains("quad")) {
    const json& j = cfg.at("quad");
    check_object(j, {"tent_cells", "ball_cells", "metric_ball_cells", "delta"}, "/quad");
    q.tent_cells = static_cast<int>(number_or(j, "tent_cells", q.tent_cells, "/quad"));
    q.ball_cells = static_cast<int>(number_or(j, "ball_cells", q.ball_cells, "/quad"));
    q.metric_ball_cells =
        static_cast<int>(number_or(j, "metric_ball_cells", q.metric_ball_cells, "/quad"));
    q.delta = number_or(j, "delta", q.delta, "/quad");
  }
  return q;
}

ApexScan parse_apexes(const json& cfg) {
  ApexScan scan;
  scan.radii = number_list(cfg, "apex_radii", scan.radii);
  scan.angles = static_cast<int>(number_or(cfg, "angles", scan.angles, "/"));
  return scan;
}

ScenarioOutput run_bergman_bp(const json& cfg, const RunOptions&) {
  check_object(cfg, {"scenario", "seed", "weight", "p", "apex_radii", "angles", "quad", "kind",
                     "thresholds"},
               "/");
  Weight sigma = make_weight(require_member(cfg, "weight", "/"), 1);
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  ApexScan scan = parse_apexes(cfg);
  DiskQuadSpec quad = parse_quad(cfg);
  std::string kind = cfg.contains("kind") ? cfg.at("kind").get<std::string>() : "bp";
  const json& th = thresholds_of(cfg);
  check_object(th, {"max_value", "max_refinement_gap"}, "/thresholds");

  CharacteristicReport rep;
  if (kind == "bp") {
    rep = bp_characteristic(sigma, p, scan, quad);
  } else if (kind == "cp") {
    rep = cp_characteristic(sigma, p, scan, quad);
  } else {
    throw ConfigError("kind must be 'bp' or 'cp' at /kind");
  }

  ScenarioOutput out;
  out.csv = characteristic_csv(rep);
  out.metrics = characteristic_metrics(rep);
  out.pass = std::isfinite(rep.value);
  if (th.contains("max_value")) out.pass = out.pass && rep.value <= th.at("max_value").get<double>();
  const double max_gap = number_or(th, "max_refinement_gap", 0.05, "/thresholds");
  out.pass = out.pass && rep.refinement_gap <= max_gap;
  out.effective = {{"weight", sigma.params}, {"p", p.p}, {"apex_radii", scan.radii},
                   {"angles", scan.angles}, {"kind", kind},
                   {"quad",
                    {{"tent_cells", quad.tent_cells}, {"ball_cells", quad.ball_cells},
                     {"metric_ball_cells", quad.metric_ball_cells}, {"delta", quad.delta}}}};
  return out;
}

ScenarioOutput run_bergman_containment(const json& cfg, const RunOptions&) {
  check_object(cfg, {"scenario", "seed", "apex_radii", "samples", "thresholds"}, "/");
  std::vector<double> radii = number_list(cfg, "apex_radii", {0.955, 0.97, 0.99});
  const int samples = static_cast<int>(number_or(cfg, "samples", 10000.0, "/"));
  const std::uint64_t seed = static_cast<std::uint64_t>(number_or(cfg, "seed", 42.0, "/"));
  const json& th = thresholds_of(cfg);
  check_object(th, {"max_constant"}, "/thresholds");
  const double max_constant = number_or(th, "max_constant", 20.0, "/thresholds");

  ScenarioOutput out;
  CsvWriter csv({"a", "samples", "violations", "max_constant"});
  out.pass = true;
  double worst = 0.0;
  for (double a : radii) {
    ContainmentReport rep = containment_check(BallPoint(a, 0.0), samples, seed);
    csv.add_row({CsvWriter::cell(a), CsvWriter::cell(rep.samples),
                 CsvWriter::cell(rep.violations), CsvWriter::cell(rep.max_constant)});
    out.pass = out.pass && rep.violations == 0 && rep.max_constant < max_constant;
    worst = std::max(worst, rep.max_constant);
  }
  out.csv = csv.str();
  out.metrics = {{"max_constant", worst}};
  out.effective = {{"apex_radii", radii}, {"samples", samples}, {"seed", seed}};
  return out;
}

ScenarioOutput run_bergman_hatlemma(const json& cfg, const RunOptions&) {
  check_object(cfg, {"scenario", "seed", "gammas", "p", "apex_radii", "angles", "quad",
                     "thresholds"},
               "/");
  std::vector<double> gammas = number_list(cfg, "gammas", {-0.3, 0.0, 0.5, 1.0});
  ExponentPair p(number_or(cfg, "p", 2.0, "/"));
  ApexScan scan = parse_apexes(cfg);
  DiskQuadSpec quad = parse_quad(cfg);
  const json& th = thresholds_of(cfg);
  check_object(th, {"max_ratio"}, "/thresholds");
  const double max_ratio = number_or(th, "max_ratio", 50.0, "/thresholds");

  ScenarioOutput out;
  CsvWriter csv({"gamma", "bp_sigma", "bp_hat", "ratio"});
  out.pass = true;
  for (double g : gammas) {
    HatLemmaReport rep = hat_lemma_check(g, p, scan, quad);
    csv.add_row({CsvWriter::cell(g), CsvWriter::cell(rep.bp_sigma), CsvWriter::cell(rep.bp_hat),
                 CsvWriter::cell(rep.ratio)});
    out.pass = out.pass && std::isfinite(rep.bp_sigma) && std::isfinite(rep.bp_hat) &&
               rep.ratio <= max_ratio;
  }
  out.csv = csv.str();
  out.metrics = {{"max_ratio_allowed", max_ratio}};
  out.effective = {{"gammas", gammas}, {"p", p.p}, {"apex_radii", scan.radii},
                   {"angles", scan.angles}};
  return out;
}

}  // namespace

RunReport run_scenario(const json& config, const RunOptions& options) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object at /");
  const auto start = std::chrono::steady_clock::now();
  std::string name = require_string(config, "scenario", "/");

  ScenarioOutput out;
  if (name == "weight-check") {
    out = run_weight_check(config, options);
  } else if (name == "projection-norm") {
    out = run_norm_bracket(config, options, NormProblem::projection);
  } else if (name == "toeplitz-norm") {
    out = run_norm_bracket(config, options, NormProblem::toeplitz);
  } else if (name == "berezin-scan") {
    out = run_berezin_scan(config, options);
  } else if (name == "compactness") {
    out = run_compactness(config, options);
  } else if (name == "counterexample") {
    out = run_counterexample(config, options);
  } else if (name == "wl-profile") {
    out = run_wl_profile(config, options);
  } else if (name == "bergman-bp") {
    out = run_bergman_bp(config, options);
  } else if (name == "bergman-containment") {
    out = run_bergman_containment(config, options);
  } else if (name == "bergman-hatlemma") {
    out = run_bergman_hatlemma(config, options);
  } else {
    throw ConfigError("unknown scenario '" + name + "' at /scenario");
  }

  RunReport rep;
  rep.scenario = name;
  rep.pass = out.pass;
  rep.csv = out.csv;
  const auto end = std::chrono::steady_clock::now();
  rep.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
  rep.summary = {{"scenario", name}, {"pass", out.pass}, {"metrics", out.metrics},
                 {"config", out.effective}, {"wall_ms", rep.wall_ms}};

  if (options.write_files) {
    std::filesystem::create_directories(options.out_dir);
    rep.csv_path = options.out_dir + "/" + name + ".csv";
    rep.json_path = options.out_dir + "/" + name + ".json";
    std::ofstream csv_file(rep.csv_path, std::ios::binary);
    csv_file << rep.csv;
    std::ofstream json_file(rep.json_path, std::ios::binary);
    json_file << rep.summary.dump(2) << "\n";
  }
  return rep;
}

const std::vector<ScenarioInfo>& list_scenarios() {
  static const std::vector<ScenarioInfo> infos = {
      {"berezin-scan", "symbol",
       "Berezin transforms of bounded symbols: Gaussian averages scanned over circles"},
      {"bergman-bp", "weight, p",
       "tent-average B_p (or metric-ball C_p) weight characteristics on the disk"},
      {"bergman-containment", "apex_radii",
       "unit metric balls around Carleson tent points stay inside the pushed-out tent"},
      {"bergman-hatlemma", "gammas, p",
       "B_p characteristic of the ball-averaged weight is controlled by the original"},
      {"compactness", "symbol|terms, weight, p",
       "compactness dichotomy: vanishing Berezin transform vs weighted tail norms"},
      {"counterexample", "(defaults: Gaussian pair)",
       "finite joint two-weight characteristic with box-growing projection norms"},
      {"projection-norm", "sigma, weight, p, r",
       "two-weight projection norm bracketed between test-function and lattice Schur bounds"},
      {"toeplitz-norm", "symbol, weight, p, r",
       "symbol-adapted Toeplitz norm bracket on one weighted space"},
      {"weight-check", "weight, p, r",
       "cube-average weight characteristics: joint A_{p,r} products and doubling ratios"},
      {"wl-profile", "symbol|terms, weight, p",
       "excluded-ball decay of normalized kernel coefficients of Toeplitz-algebra operators"},
  };
  return infos;
}

}  // namespace fwl
