#pragma once

#include <map>
#include <string>

#include "nsym/expr.hpp"

namespace nsym {

/// Name resolution for the expression grammar. Identifiers must resolve to a
/// declared atom; `Name(args)` (with optional primes for single-argument
/// derivatives) is an opaque function application and needs no declaration.
struct ParserScope {
    std::map<std::string, Expr> atoms;
    bool allow_opaque = true;
};

/// Infix grammar: + - * / ^, exact rational literals p/q, sin cos exp ln sqrt,
/// opaque calls Name(args), Name'(t) primes, and diff(u, v, ...) evaluated at
/// parse time. Whitespace-insensitive; no floating-point literals.
Expr parse_expr(const std::string& text, const ParserScope& scope, int line = 1, int col0 = 1);

} // namespace nsym
