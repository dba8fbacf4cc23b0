#pragma once

#include <string>

#include "nsym/certify.hpp"

namespace nsym {

/// Report-facing renderings shared by the command driver.
std::string zero_state_name(ZeroState s);
std::string render_assignments(const ProbePoint& p); // "atom=value, ..." for witnesses

} // namespace nsym
