#pragma once

#include <string>
#include <vector>

#include "pnpmpc/io/scenario.hpp"

namespace pnpmpc::io {

/// Names accepted by builtin(): scenarios first, then deltas.
std::vector<std::string> builtin_names();
bool is_builtin_delta(const std::string& name);

/// Scenario or delta document; throws std::invalid_argument for unknown names.
Json builtin(const std::string& name);

Scenario builtin_scenario(const std::string& name);

}  // namespace pnpmpc::io
