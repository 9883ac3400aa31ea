#include "fwl/symbols.hpp"

#include <cmath>

#include "fwl/json_util.hpp"

namespace fwl {

SymbolFn SymbolFn::constant(Complex value) {
  SymbolFn s;
  s.eval = [value](PointView) { return value; };
  s.sup_norm_hint = std::abs(value);
  s.radial = true;
  s.family = "constant";
  s.params = {{"symbol", "constant"}, {"value", value.real()}};
  if (value.imag() != 0.0) s.params["value_im"] = value.imag();
  return s;
}

SymbolFn SymbolFn::indicator_ball(double radius) {
  if (!(radius > 0.0)) throw ConfigError("indicator_ball radius must be positive");
  SymbolFn s;
  s.eval = [radius](PointView u) -> Complex {
    return abs2(u) < radius * radius ? 1.0 : 0.0;
  };
  s.sup_norm_hint = 1.0;
  s.radial = true;
  s.support_radius = radius;
  s.radial_jumps = {radius};
  s.family = "indicator_ball";
  s.params = {{"symbol", "indicator_ball"}, {"radius", radius}};
  return s;
}

SymbolFn SymbolFn::plane_wave(std::vector<double> k) {
  SymbolFn s;
  s.eval = [k](PointView u) {
    double phase = 0.0;
    for (std::size_t j = 0; j < u.size() && j < k.size(); ++j) phase += k[j] * u[j];
    return Complex{std::cos(phase), std::sin(phase)};
  };
  s.sup_norm_hint = 1.0;
  s.radial = false;
  s.family = "plane_wave";
  s.params = {{"symbol", "plane_wave"}, {"k", k}};
  return s;
}

SymbolFn make_symbol(const nlohmann::json& j, int n) {
  const std::string where = "/symbol";
  std::string kind = require_string(j, "symbol", where);
  if (kind == "constant") {
    check_object(j, {"symbol", "value"}, where);
    return SymbolFn::constant(require_number(j, "value", where));
  }
  if (kind == "indicator_ball") {
    check_object(j, {"symbol", "radius"}, where);
    return SymbolFn::indicator_ball(require_number(j, "radius", where));
  }
  if (kind == "plane_wave") {
    check_object(j, {"symbol", "k"}, where);
    const auto& kv = require_member(j, "k", where);
    if (!kv.is_array()) throw ConfigError("expected an array at " + where + "/k");
    std::vector<double> k;
    for (const auto& v : kv) k.push_back(v.get<double>());
    if (static_cast<int>(k.size()) != 2 * n) {
      throw ConfigError("plane_wave needs a 2n-vector at " + where + "/k");
    }
    return SymbolFn::plane_wave(std::move(k));
  }
  if (kind == "tabulated") {
    check_object(j, {"symbol", "R", "h", "values_re", "values_im"}, where);
    GridSpec gs{n, require_number(j, "R", where), require_number(j, "h", where)};
    auto grid = QuadratureGrid::build_shared(gs);
    const auto& re = require_member(j, "values_re", where);
    const auto& im = require_member(j, "values_im", where);
    if (!re.is_array() || !im.is_array() || re.size() != grid->size() || im.size() != grid->size()) {
      throw ConfigError("tabulated symbol needs one value per grid node at " + where);
    }
    auto values = std::make_shared<std::vector<Complex>>();
    values->reserve(re.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) {
      Complex v{re[i].get<double>(), im[i].get<double>()};
      sup = std::max(sup, std::abs(v));
      values->push_back(v);
    }
    SymbolFn s;
    s.eval = [grid, values](PointView z) {
      std::size_t index = 0;
      for (int a = 0; a < grid->axes(); ++a) {
        double t = (z[a] + grid->box_radius()) / grid->spacing() - 0.5;
        long kk = std::lround(t);
        kk = std::clamp<long>(kk, 0, grid->cells_per_axis() - 1);
        index = index * grid->cells_per_axis() + static_cast<std::size_t>(kk);
      }
      return (*values)[index];
    };
    s.sup_norm_hint = sup;
    s.family = "tabulated";
    s.params = {{"symbol", "tabulated"}, {"R", gs.R}, {"h", gs.h}};
    return s;
  }
  throw ConfigError("unknown symbol '" + kind + "' at " + where + "/symbol");
}

}  // namespace fwl
