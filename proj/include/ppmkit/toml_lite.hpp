#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace ppm {

/// Parses the TOML subset used for experiment configs into an ordered JSON
/// document: [section] and nested [a.b] tables become objects, [[array.of]]
/// tables become arrays of objects, values are strings, integers, floats,
/// booleans and single-line arrays of those. Comments start with '#'.
/// Duplicate keys are errors.
nlohmann::ordered_json parse_toml_lite(std::string_view text,
                                       const std::string& origin = "<config>");

nlohmann::ordered_json parse_toml_file(const std::string& path);

}  // namespace ppm
