#pragma once

#include <initializer_list>
#include <string>

#include "fwl/errors.hpp"
#include "json.hpp"

namespace fwl {

// Strict accessors: unknown keys and wrong types are ConfigErrors carrying a
// JSON-pointer-style location.
void check_object(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& where);
double require_number(const nlohmann::json& j, const char* key, const std::string& where);
double number_or(const nlohmann::json& j, const char* key, double fallback,
                 const std::string& where);
std::string require_string(const nlohmann::json& j, const char* key, const std::string& where);
const nlohmann::json& require_member(const nlohmann::json& j, const char* key,
                                     const std::string& where);

}  // namespace fwl
