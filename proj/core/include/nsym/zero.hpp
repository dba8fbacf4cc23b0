#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nsym/expr.hpp"

namespace nsym {

/// Default probe seed; reports quote it so runs are reproducible.
inline constexpr std::uint64_t kDefaultProbeSeed = 20260809ull;

enum class ZeroState { ProvedZero, ProbablyZero, Nonzero };

struct ProbeAssignment {
    Expr target; // atom, or an opaque application treated as an independent sample
    Rational value;
};

struct ProbePoint {
    std::vector<ProbeAssignment> assign;
    double value = 0.0;
    double scale = 1.0;
};

struct ZeroVerdict {
    ZeroState state = ZeroState::Nonzero;
    std::vector<ProbePoint> points;    // recorded probes backing a probably-zero
    std::optional<ProbePoint> witness; // nonzero witness
    bool proved_by_clearing = false;   // zero only after multiplying out denominators

    bool proved() const { return state == ZeroState::ProvedZero; }
    bool zeroish() const { return state != ZeroState::Nonzero; }
};

struct ZeroOptions {
    std::uint64_t seed = kDefaultProbeSeed;
    int points = 8;
    int max_resamples = 64;
};

/// Multiply out every factor that appears with a negative rational exponent
/// part, so rational-function identities become polynomial ones. Multiplying
/// by the (nonzero) denominators preserves zeroness.
Expr clear_denominators(const Expr& e);

/// Three-way zero test: canonical-form proof (directly or after clearing
/// denominators), else numeric probing at assumption-respecting rational
/// points. Values <= 1e-9 * scale at every point give probably-zero; any
/// value > 1e-6 * scale gives a nonzero witness.
ZeroVerdict is_zero(const Expr& e, const ZeroOptions& opts = {});

} // namespace nsym
