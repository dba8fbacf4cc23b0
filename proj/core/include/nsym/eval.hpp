#pragma once

#include <map>

#include "nsym/expr.hpp"

namespace nsym {

/// Numeric bindings; keys are atoms or whole opaque applications (so T(t) and
/// T'(t) can be pinned to independent values).
using NumBindings = std::map<Expr, double, ExprLess>;

/// Double-precision evaluation with a deterministic order. Unbound atoms and
/// domain violations (ln of a non-positive value, division by zero) raise
/// EvalError.
double eval_num(const Expr& e, const NumBindings& bindings);

} // namespace nsym
