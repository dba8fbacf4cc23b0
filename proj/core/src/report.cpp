#include "nsym/report.hpp"

#include <sstream>

namespace nsym {

std::string zero_state_name(ZeroState s) {
    switch (s) {
    case ZeroState::ProvedZero: return "proved-zero";
    case ZeroState::ProbablyZero: return "probably-zero";
    case ZeroState::Nonzero: return "nonzero";
    }
    return "?";
}

std::string render_assignments(const ProbePoint& p) {
    std::ostringstream os;
    for (std::size_t i = 0; i < p.assign.size(); ++i) {
        if (i) os << ", ";
        os << to_string(p.assign[i].target) << "=" << p.assign[i].value.str();
    }
    return os.str();
}

} // namespace nsym
