#pragma once

#include "rydswitch/config.hpp"

#include <string>
#include <vector>

namespace rydswitch::presets {

std::vector<std::string> names();

// Raw JSON text of a shipped preset.
const std::string& text(const std::string& name);

config::RunConfig load(const std::string& name);

} // namespace rydswitch::presets
