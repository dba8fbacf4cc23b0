#include "nsym/eval.hpp"

#include <cmath>

namespace nsym {

namespace {

double ipow(double b, int k) {
    const bool inv = k < 0;
    unsigned n = static_cast<unsigned>(inv ? -static_cast<long long>(k) : k);
    double r = 1.0;
    while (n) {
        if (n & 1u) r *= b;
        b *= b;
        n >>= 1u;
    }
    return inv ? 1.0 / r : r;
}

double eval_pow(double b, double x) {
    if (b == 0.0) {
        if (x > 0) return 0.0;
        throw EvalError("division by zero in power");
    }
    // Small integral exponents use binary powering, matching the compiled
    // evaluator bit for bit.
    if (x == std::floor(x) && std::fabs(x) <= 16.0) return ipow(b, static_cast<int>(x));
    if (b < 0.0) throw EvalError("fractional power of a negative value");
    return std::pow(b, x);
}

} // namespace

double eval_num(const Expr& e, const NumBindings& bindings) {
    switch (e.kind()) {
    case Kind::Num:
        return e.num().convert_to<double>();
    case Kind::Atom: {
        auto it = bindings.find(e);
        if (it == bindings.end()) throw EvalError("unbound atom: " + e.atom().name);
        return it->second;
    }
    case Kind::Opaque: {
        auto it = bindings.find(e);
        if (it == bindings.end()) throw EvalError("unbound opaque application: " + to_string(e));
        return it->second;
    }
    case Kind::Fun: {
        const double u = eval_num(e.kid(0), bindings);
        switch (e.fun()) {
        case FunKind::Sin: return std::sin(u);
        case FunKind::Cos: return std::cos(u);
        case FunKind::Exp: return std::exp(u);
        case FunKind::Ln:
            if (u <= 0.0) throw EvalError("ln of a non-positive value");
            return std::log(u);
        }
        throw EvalError("unknown function");
    }
    case Kind::Pow:
        return eval_pow(eval_num(e.kid(0), bindings), eval_num(e.kid(1), bindings));
    case Kind::Mul: {
        double r = 1.0;
        for (const auto& k : e.kids()) r *= eval_num(k, bindings);
        return r;
    }
    case Kind::Add: {
        double r = 0.0;
        for (const auto& k : e.kids()) r += eval_num(k, bindings);
        return r;
    }
    }
    throw EvalError("unreachable expression kind");
}

} // namespace nsym
