#include "fwl/json_util.hpp"

namespace fwl {

using nlohmann::json;

namespace {

std::string join(const std::string& where, const std::string& key) {
  return where == "/" ? "/" + key : where + "/" + key;
}

}  // namespace

void check_object(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!j.is_object()) throw ConfigError("expected an object at " + where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown key at " + join(where, it.key()));
  }
}

const json& require_member(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing key at " + join(where, key));
  return *it;
}

double require_number(const json& j, const char* key, const std::string& where) {
  const json& v = require_member(j, key, where);
  if (!v.is_number()) throw ConfigError("expected a number at " + join(where, key));
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError("expected a number at " + join(where, key));
  return it->get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require_member(j, key, where);
  if (!v.is_string()) throw ConfigError("expected a string at " + join(where, key));
  return v.get<std::string>();
}

}  // namespace fwl
