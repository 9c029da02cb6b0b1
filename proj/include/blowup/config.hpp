#ifndef BLOWUP_CONFIG_HPP
#define BLOWUP_CONFIG_HPP

#include <string>

#include <json.hpp>

#include "blowup/core.hpp"

// JSON system definitions. Schema (see README for the full description):
//   {
//     "kind": "power" | "logpower" | "exponential",
//     "p": 2.0, "beta": 2.0,
//     "g": {"const": 1.0} | {"table": [[t, v], ...]},
//     "n": 1,
//     "A": {"const": [[...]]} | {"rotation": w},            // optional, default 0
//     "controls": {"ball": {"B": [[...]], "radius": 1.0}}
//               | {"finite": [u, ...]},                     // optional, default none
//     "y0": [..] | scalar,
//     "zeta": {"R0": 2.0, "coeff": 0.5, "power": 2.0},      // optional, zeta = c r^q
//     "law": {"const": u} | {"piecewise": {"breakpoints": [...], "values": [...]}}
//   }

namespace blowup {

ControlSystem system_from_json(const nlohmann::json& j);
ControlSystem load_system(const std::string& path);  // throws ConfigError

// The law section, or the zero control of the right dimension if absent.
ControlLaw law_from_json(const nlohmann::json& j, const ControlSystem& sys);

// Default extreme-point sample of U for brute_force when the config gives none.
std::vector<Vec> default_control_values(const ControlSystem& sys);

nlohmann::json parse_file(const std::string& path);  // ConfigError with position info

}  // namespace blowup

#endif
