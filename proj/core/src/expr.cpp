#include "nsym/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <sstream>
#include <unordered_map>

namespace nsym {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

// Hard budget on distribution / sum-power expansion, in monomials.
constexpr std::size_t kExpansionBudget = 200000;

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

const Expr& zero_expr() {
    static const Expr z = Expr::raw(make_node(Node{Kind::Num, Rational(0), {}, {}, {}, {}, {}}));
    return z;
}
const Expr& one_expr() {
    static const Expr o = Expr::raw(make_node(Node{Kind::Num, Rational(1), {}, {}, {}, {}, {}}));
    return o;
}

int kind_rank(Kind k) {
    switch (k) {
    case Kind::Num: return 0;
    case Kind::Atom: return 1;
    case Kind::Opaque: return 2;
    case Kind::Fun: return 3;
    case Kind::Pow: return 4;
    case Kind::Mul: return 5;
    case Kind::Add: return 6;
    }
    return 7;
}

Int ipow_nonneg(Int base, unsigned long long e) {
    Int r = 1;
    while (e) {
        if (e & 1ull) r *= base;
        base *= base;
        e >>= 1ull;
    }
    return r;
}

Rational rational_ipow(const Rational& b, const Int& e) {
    if (e == 0) return Rational(1);
    const bool neg = e < 0;
    const Int mag = neg ? Int(-e) : e;
    if (mag > 4096) throw ExpansionLimitError("rational power exponent too large");
    const auto k = mag.convert_to<unsigned long long>();
    Int p = ipow_nonneg(numerator(b), k);
    Int q = ipow_nonneg(denominator(b), k);
    if (neg) {
        if (p == 0) throw MalformedError("division by zero: 0 raised to a negative power");
        std::swap(p, q);
    }
    return Rational(p, q);
}

// Exact integer k-th root, if it exists.
std::optional<Int> integer_root(const Int& v, unsigned k) {
    if (v < 0) return std::nullopt;
    if (v == 0 || v == 1 || k == 1) return v;
    Int lo = 1, hi = 1;
    while (ipow_nonneg(hi, k) < v) hi <<= 1;
    while (lo < hi) {
        Int mid = (lo + hi + 1) >> 1;
        if (ipow_nonneg(mid, k) <= v)
            lo = mid;
        else
            hi = mid - 1;
    }
    if (ipow_nonneg(lo, k) == v) return lo;
    return std::nullopt;
}

std::optional<Rational> rational_root(const Rational& v, unsigned k) {
    if (v <= 0) return std::nullopt;
    auto p = integer_root(numerator(v), k);
    if (!p) return std::nullopt;
    auto q = integer_root(denominator(v), k);
    if (!q) return std::nullopt;
    return Rational(*p, *q);
}

Expr build_product(const Rational& coeff, std::vector<Expr> factors);

} // namespace

Expr::Expr() : node_(zero_expr().node()) {}
Expr::Expr(long long v) : node_(v == 0 ? zero_expr().node() : make_node(Node{Kind::Num, Rational(v), {}, {}, {}, {}, {}})) {}
Expr::Expr(const Rational& v)
    : node_(v == 0 ? zero_expr().node() : make_node(Node{Kind::Num, v, {}, {}, {}, {}, {}})) {}

bool Expr::is_integer_literal() const {
    return kind() == Kind::Num && denominator(num()) == 1;
}

int compare(const Expr& a, const Expr& b) {
    if (a.same(b)) return 0;
    const int ra = kind_rank(a.kind()), rb = kind_rank(b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a.kind()) {
    case Kind::Num:
        return a.num() == b.num() ? 0 : (a.num() < b.num() ? -1 : 1);
    case Kind::Atom: {
        const auto ia = a.atom().id, ib = b.atom().id;
        return ia == ib ? 0 : (ia < ib ? -1 : 1);
    }
    case Kind::Opaque: {
        if (int c = a.opname().compare(b.opname()); c != 0) return c < 0 ? -1 : 1;
        if (a.nkids() != b.nkids()) return a.nkids() < b.nkids() ? -1 : 1;
        for (std::size_t i = 0; i < a.dmul().size(); ++i)
            if (a.dmul()[i] != b.dmul()[i]) return a.dmul()[i] < b.dmul()[i] ? -1 : 1;
        for (std::size_t i = 0; i < a.nkids(); ++i)
            if (int c = compare(a.kid(i), b.kid(i)); c != 0) return c;
        return 0;
    }
    case Kind::Fun:
        if (a.fun() != b.fun()) return static_cast<int>(a.fun()) < static_cast<int>(b.fun()) ? -1 : 1;
        return compare(a.kid(0), b.kid(0));
    default: {
        if (a.nkids() != b.nkids()) return a.nkids() < b.nkids() ? -1 : 1;
        for (std::size_t i = 0; i < a.nkids(); ++i)
            if (int c = compare(a.kid(i), b.kid(i)); c != 0) return c;
        return 0;
    }
    }
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

std::uint64_t hash_of(const Expr& e) {
    constexpr std::uint64_t prime = 1099511628211ull;
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&](std::uint64_t v) {
        h ^= v;
        h *= prime;
    };
    mix(static_cast<std::uint64_t>(e.kind()));
    switch (e.kind()) {
    case Kind::Num: {
        const std::string s = e.num().str();
        for (char c : s) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
        break;
    }
    case Kind::Atom:
        // by name, not id: probe seeds must not depend on interning order
        for (char c : e.atom().name) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
        break;
    case Kind::Opaque:
        for (char c : e.opname()) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
        for (auto d : e.dmul()) mix(d);
        for (const auto& k : e.kids()) mix(hash_of(k));
        break;
    case Kind::Fun:
        mix(static_cast<std::uint64_t>(e.fun()));
        mix(hash_of(e.kid(0)));
        break;
    default:
        for (const auto& k : e.kids()) mix(hash_of(k));
        break;
    }
    return h;
}

// --- constructors -----------------------------------------------------------

Expr num(const Rational& v) { return Expr(v); }

Expr num(long long p, long long q) {
    if (q == 0) throw MalformedError("rational literal with zero denominator");
    return Expr(Rational(p, q));
}

Expr make_atom(const AtomPtr& a) {
    if (!a) throw UsageError("null atom");
    return Expr::raw(make_node(Node{Kind::Atom, {}, a, {}, {}, {}, {}}));
}

std::pair<Expr, Expr> base_and_exponent(const Expr& f) {
    if (f.is(Kind::Pow)) return {f.kid(0), f.kid(1)};
    return {f, one_expr()};
}

std::pair<Rational, Expr> coefficient_split(const Expr& term) {
    if (term.is(Kind::Num)) return {term.num(), one_expr()};
    if (term.is(Kind::Mul) && term.kid(0).is(Kind::Num)) {
        const Rational c = term.kid(0).num();
        if (term.nkids() == 2) return {c, term.kid(1)};
        std::vector<Expr> rest(term.kids().begin() + 1, term.kids().end());
        Node n{Kind::Mul, {}, {}, {}, {}, {}, std::move(rest)};
        return {c, Expr::raw(make_node(std::move(n)))};
    }
    return {Rational(1), term};
}

std::vector<Expr> add_terms(const Expr& e) {
    if (e.is(Kind::Add)) return {e.kids().begin(), e.kids().end()};
    return {e};
}

std::vector<Expr> mul_factors(const Expr& e) {
    if (e.is(Kind::Mul)) return {e.kids().begin(), e.kids().end()};
    return {e};
}

Rational rational_part(const Expr& e) {
    if (e.is(Kind::Num)) return e.num();
    if (e.is(Kind::Add)) {
        for (const auto& t : e.kids())
            if (t.is(Kind::Num)) return t.num();
    }
    return Rational(0);
}

Expr add(std::vector<Expr> terms) {
    Rational constant(0);
    std::map<Expr, Rational, ExprLess> by_rest;
    std::vector<Expr> work = std::move(terms);
    while (!work.empty()) {
        Expr e = work.back();
        work.pop_back();
        if (e.is(Kind::Add)) {
            for (const auto& k : e.kids()) work.push_back(k);
            continue;
        }
        if (e.is(Kind::Num)) {
            constant += e.num();
            continue;
        }
        auto [c, rest] = coefficient_split(e);
        auto [it, fresh] = by_rest.emplace(rest, c);
        if (!fresh) it->second += c;
    }

    std::vector<Expr> out;
    out.reserve(by_rest.size() + 1);
    if (constant != 0) out.push_back(num(constant));
    for (const auto& [rest, c] : by_rest) {
        if (c == 0) continue;
        if (c == 1) {
            out.push_back(rest);
        } else if (rest.is(Kind::Mul)) {
            std::vector<Expr> kids;
            kids.reserve(rest.nkids() + 1);
            kids.push_back(num(c));
            kids.insert(kids.end(), rest.kids().begin(), rest.kids().end());
            out.push_back(Expr::raw(make_node(Node{Kind::Mul, {}, {}, {}, {}, {}, std::move(kids)})));
        } else {
            out.push_back(Expr::raw(make_node(Node{Kind::Mul, {}, {}, {}, {}, {}, {num(c), rest}})));
        }
    }
    if (out.empty()) return zero_expr();
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), ExprLess{});
    return Expr::raw(make_node(Node{Kind::Add, {}, {}, {}, {}, {}, std::move(out)}));
}

Expr mul(std::vector<Expr> factors) {
    Rational coeff(1);
    std::vector<Expr> flat; // non-numeric factors, nested products flattened
    {
        std::vector<Expr> work = std::move(factors);
        while (!work.empty()) {
            Expr e = work.back();
            work.pop_back();
            if (e.is(Kind::Num))
                coeff *= e.num();
            else if (e.is(Kind::Mul))
                for (const auto& k : e.kids()) work.push_back(k);
            else
                flat.push_back(e);
        }
    }
    if (coeff == 0) return zero_expr();

    // Merge factors by base and fold the exponent sums; pow() may hand back
    // rationals or distributed products, so iterate to a fixed point.
    // Positive integer powers of sums are intercepted here (never routed
    // through pow(), which would bounce back) and queued for distribution.
    std::vector<Expr> sums;
    for (int round = 0;; ++round) {
        if (round > 64) throw ExpansionLimitError("product folding did not settle");
        std::map<Expr, std::vector<Expr>, ExprLess> exps;
        for (const auto& f : flat) {
            auto [b, x] = base_and_exponent(f);
            exps[b].push_back(x);
        }
        flat.clear();
        bool again = false;
        for (auto& [b, xs] : exps) {
            Expr x = add(std::move(xs));
            if (x.is_zero_literal()) continue;
            if (b.is(Kind::Add) && x.is_integer_literal() && x.num() > 0) {
                const Rational& k = x.num();
                if (k > 64) throw ExpansionLimitError("sum raised to a very large power");
                for (Rational i = 0; i < k; ++i) sums.push_back(b);
                continue;
            }
            Expr f = pow(b, x);
            if (f.is(Kind::Num)) {
                coeff *= f.num();
            } else if (f.is(Kind::Mul)) {
                again = true;
                for (const auto& k : f.kids()) {
                    if (k.is(Kind::Num))
                        coeff *= k.num();
                    else
                        flat.push_back(k);
                }
            } else if (f.is(Kind::Add)) {
                sums.push_back(f);
            } else {
                flat.push_back(f);
            }
        }
        if (coeff == 0) return zero_expr();
        if (!again) break;
    }

    std::vector<Expr> atomic = std::move(flat);
    std::sort(atomic.begin(), atomic.end(), ExprLess{});

    if (sums.empty()) return build_product(coeff, std::move(atomic));

    // Distribute over the expanded sum factors.
    std::size_t budget = 1;
    for (const auto& s : sums) {
        budget *= s.nkids();
        if (budget > kExpansionBudget) throw ExpansionLimitError("product expansion exceeds term budget");
    }
    std::vector<Expr> terms{build_product(coeff, std::move(atomic))};
    for (const auto& s : sums) {
        std::vector<Expr> next;
        next.reserve(terms.size() * s.nkids());
        for (const auto& t : terms)
            for (const auto& a : s.kids()) next.push_back(mul({t, a}));
        terms = std::move(next);
    }
    return add(std::move(terms));
}

namespace {

Expr build_product(const Rational& coeff, std::vector<Expr> factors) {
    if (coeff == 0) return zero_expr();
    if (factors.empty()) return num(coeff);
    if (coeff == 1 && factors.size() == 1) return factors[0];
    std::vector<Expr> kids;
    kids.reserve(factors.size() + 1);
    if (coeff != 1) kids.push_back(num(coeff));
    kids.insert(kids.end(), factors.begin(), factors.end());
    return Expr::raw(make_node(Node{Kind::Mul, {}, {}, {}, {}, {}, std::move(kids)}));
}

bool is_positive_atom(const Expr& e) {
    return e.is(Kind::Atom) && e.atom().assume.positive;
}

} // namespace

Expr pow(const Expr& base, const Expr& exponent) {
    if (exponent.is_zero_literal()) return one_expr(); // 0^0 -> 1 by convention
    if (exponent.is_one_literal()) return base;

    if (base.is(Kind::Num)) {
        const Rational& bv = base.num();
        if (bv == 0) {
            if (exponent.is(Kind::Num) && exponent.num() < 0)
                throw MalformedError("division by zero: 0 raised to a negative power");
            return zero_expr();
        }
        if (bv == 1) return one_expr();
        if (exponent.is(Kind::Num)) {
            const Rational& ev = exponent.num();
            if (denominator(ev) == 1) return num(rational_ipow(bv, numerator(ev)));
            if (bv > 0) {
                const Int& q = denominator(ev);
                if (q <= 64) {
                    if (auto r = rational_root(bv, q.convert_to<unsigned>()))
                        return pow(num(*r), num(Rational(numerator(ev))));
                }
            }
        }
    }

    if (base.is(Kind::Pow)) {
        const bool int_exp = exponent.is_integer_literal();
        if (int_exp || is_positive_atom(base.kid(0)))
            return pow(base.kid(0), mul({base.kid(1), exponent}));
    }

    if (base.is(Kind::Mul) && exponent.is_integer_literal()) {
        std::vector<Expr> fs;
        fs.reserve(base.nkids());
        for (const auto& k : base.kids()) fs.push_back(pow(k, exponent));
        return mul(std::move(fs));
    }

    if (base.is(Kind::Add) && exponent.is_integer_literal() && exponent.num() < 0) {
        // Canonical scaling: pull the rational content out of the sum so
        // c*(A)^k and (c*A)^k normalize identically. The sign follows the
        // canonically-first term.
        using boost::multiprecision::gcd;
        using boost::multiprecision::lcm;
        Int pg = 0, ql = 1;
        for (const auto& t : base.kids()) {
            const Rational c = coefficient_split(t).first;
            pg = gcd(pg, numerator(c));
            ql = lcm(ql, denominator(c));
        }
        Rational content(pg, ql);
        if (coefficient_split(base.kid(0)).first < 0) content = -content;
        if (content != 1) {
            std::vector<Expr> scaled;
            scaled.reserve(base.nkids());
            const Expr inv = num(Rational(denominator(content), numerator(content)));
            for (const auto& t : base.kids()) scaled.push_back(mul({inv, t}));
            return mul({num(rational_ipow(content, numerator(exponent.num()))),
                        pow(add(std::move(scaled)), exponent)});
        }
    }

    if (base.is(Kind::Add) && exponent.is_integer_literal() && exponent.num() > 1) {
        const Int k = numerator(exponent.num());
        if (k > 64) throw ExpansionLimitError("sum raised to a very large power");
        double est = 1;
        for (Int i = 0; i < k; ++i) est *= static_cast<double>(base.nkids());
        if (est > static_cast<double>(kExpansionBudget))
            throw ExpansionLimitError("sum power expansion exceeds term budget");
        // Distribute term by term; the factors fed back into mul() are
        // individual addends, so this cannot recurse into this branch.
        std::vector<Expr> terms{one_expr()};
        for (Int i = 0; i < k; ++i) {
            std::vector<Expr> next;
            next.reserve(terms.size() * base.nkids());
            for (const auto& t : terms)
                for (const auto& a : base.kids()) next.push_back(mul({t, a}));
            terms = std::move(next);
        }
        return add(std::move(terms));
    }

    return Expr::raw(make_node(Node{Kind::Pow, {}, {}, {}, {}, {}, {base, exponent}}));
}

Expr fun(FunKind k, const Expr& arg) {
    if (arg.is(Kind::Num)) {
        const Rational& v = arg.num();
        switch (k) {
        case FunKind::Sin:
            if (v == 0) return zero_expr();
            break;
        case FunKind::Cos:
            if (v == 0) return one_expr();
            break;
        case FunKind::Exp:
            if (v == 0) return one_expr();
            break;
        case FunKind::Ln:
            if (v == 1) return zero_expr();
            break;
        }
    }
    Node n{Kind::Fun, {}, {}, {}, {}, k, {arg}};
    return Expr::raw(make_node(std::move(n)));
}

Expr opaque(const std::string& name, std::vector<Expr> args) {
    return opaque(name, std::move(args), std::vector<std::uint32_t>(args.size(), 0u));
}

Expr opaque(const std::string& name, std::vector<Expr> args, std::vector<std::uint32_t> dmul) {
    if (name.empty()) throw UsageError("opaque function needs a name");
    if (dmul.size() != args.size()) dmul.resize(args.size(), 0u);
    Node n{Kind::Opaque, {}, {}, name, std::move(dmul), {}, std::move(args)};
    return Expr::raw(make_node(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({Expr(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, Expr(-1))}); }
Expr operator-(const Expr& a) { return mul({Expr(-1), a}); }

// --- normalize / diff / substitute -------------------------------------------

Expr normalize(const Expr& e) {
    switch (e.kind()) {
    case Kind::Num:
    case Kind::Atom:
        return e;
    case Kind::Opaque: {
        std::vector<Expr> args;
        args.reserve(e.nkids());
        for (const auto& k : e.kids()) args.push_back(normalize(k));
        return opaque(e.opname(), std::move(args), {e.dmul().begin(), e.dmul().end()});
    }
    case Kind::Fun:
        return fun(e.fun(), normalize(e.kid(0)));
    case Kind::Pow:
        return pow(normalize(e.kid(0)), normalize(e.kid(1)));
    case Kind::Mul: {
        std::vector<Expr> kids;
        kids.reserve(e.nkids());
        for (const auto& k : e.kids()) kids.push_back(normalize(k));
        return mul(std::move(kids));
    }
    case Kind::Add: {
        std::vector<Expr> kids;
        kids.reserve(e.nkids());
        for (const auto& k : e.kids()) kids.push_back(normalize(k));
        return add(std::move(kids));
    }
    }
    return e;
}

Expr diff(const Expr& e, const Expr& v) {
    if (!v.is(Kind::Atom)) throw UsageError("diff: second argument must be an atom");
    switch (e.kind()) {
    case Kind::Num:
        return zero_expr();
    case Kind::Atom:
        return e.atom().id == v.atom().id ? one_expr() : zero_expr();
    case Kind::Opaque: {
        std::vector<Expr> parts;
        for (std::size_t i = 0; i < e.nkids(); ++i) {
            Expr da = diff(e.kid(i), v);
            if (da.is_zero_literal()) continue;
            std::vector<std::uint32_t> d(e.dmul().begin(), e.dmul().end());
            d[i] += 1;
            parts.push_back(mul({opaque(e.opname(), {e.kids().begin(), e.kids().end()}, std::move(d)), da}));
        }
        return add(std::move(parts));
    }
    case Kind::Fun: {
        const Expr& u = e.kid(0);
        Expr du = diff(u, v);
        if (du.is_zero_literal()) return zero_expr();
        switch (e.fun()) {
        case FunKind::Sin: return mul({fun(FunKind::Cos, u), du});
        case FunKind::Cos: return mul({Expr(-1), fun(FunKind::Sin, u), du});
        case FunKind::Exp: return mul({e, du});
        case FunKind::Ln: return mul({du, pow(u, Expr(-1))});
        }
        return zero_expr();
    }
    case Kind::Pow: {
        const Expr& b = e.kid(0);
        const Expr& x = e.kid(1);
        Expr db = diff(b, v);
        Expr dx = diff(x, v);
        if (dx.is_zero_literal()) {
            if (db.is_zero_literal()) return zero_expr();
            return mul({x, pow(b, add({x, Expr(-1)})), db});
        }
        if (db.is_zero_literal()) return mul({e, fun(FunKind::Ln, b), dx});
        return mul({e, add({mul({dx, fun(FunKind::Ln, b)}), mul({x, db, pow(b, Expr(-1))})})});
    }
    case Kind::Mul: {
        std::vector<Expr> parts;
        for (std::size_t i = 0; i < e.nkids(); ++i) {
            Expr di = diff(e.kid(i), v);
            if (di.is_zero_literal()) continue;
            std::vector<Expr> fs;
            fs.reserve(e.nkids());
            for (std::size_t j = 0; j < e.nkids(); ++j) fs.push_back(j == i ? di : e.kid(j));
            parts.push_back(mul(std::move(fs)));
        }
        return add(std::move(parts));
    }
    case Kind::Add: {
        std::vector<Expr> parts;
        parts.reserve(e.nkids());
        for (const auto& k : e.kids()) parts.push_back(diff(k, v));
        return add(std::move(parts));
    }
    }
    return zero_expr();
}

namespace {

Expr substitute_impl(const Expr& e, const std::map<Expr, Expr, ExprLess>& bindings,
                     std::unordered_map<const Node*, Expr>& memo) {
    switch (e.kind()) {
    case Kind::Num:
        return e;
    case Kind::Atom: {
        auto it = bindings.find(e);
        return it == bindings.end() ? e : it->second;
    }
    default:
        break;
    }
    if (auto it = memo.find(e.node().get()); it != memo.end()) return it->second;
    Expr result;
    switch (e.kind()) {
    case Kind::Opaque: {
        std::vector<Expr> args;
        args.reserve(e.nkids());
        for (const auto& k : e.kids()) args.push_back(substitute_impl(k, bindings, memo));
        result = opaque(e.opname(), std::move(args), {e.dmul().begin(), e.dmul().end()});
        break;
    }
    case Kind::Fun:
        result = fun(e.fun(), substitute_impl(e.kid(0), bindings, memo));
        break;
    case Kind::Pow:
        result = pow(substitute_impl(e.kid(0), bindings, memo), substitute_impl(e.kid(1), bindings, memo));
        break;
    case Kind::Mul:
    case Kind::Add: {
        std::vector<Expr> kids;
        kids.reserve(e.nkids());
        for (const auto& k : e.kids()) kids.push_back(substitute_impl(k, bindings, memo));
        result = e.kind() == Kind::Mul ? mul(std::move(kids)) : add(std::move(kids));
        break;
    }
    default:
        result = e;
        break;
    }
    memo.emplace(e.node().get(), result);
    return result;
}

} // namespace

Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& bindings) {
    for (const auto& [k, v] : bindings)
        if (!k.is(Kind::Atom)) throw UsageError("substitute: bindings must be keyed by atoms");
    std::unordered_map<const Node*, Expr> memo;
    return substitute_impl(e, bindings, memo);
}

Expr bind_opaque(const Expr& e, const std::string& name, const std::vector<Expr>& params,
                 const Expr& body) {
    switch (e.kind()) {
    case Kind::Num:
    case Kind::Atom:
        return e;
    case Kind::Opaque: {
        std::vector<Expr> args;
        args.reserve(e.nkids());
        for (const auto& k : e.kids()) args.push_back(bind_opaque(k, name, params, body));
        if (e.opname() != name)
            return opaque(e.opname(), std::move(args), {e.dmul().begin(), e.dmul().end()});
        if (args.size() != params.size())
            throw UsageError("bind_opaque: arity mismatch for " + name);
        Expr r = body;
        for (std::size_t i = 0; i < params.size(); ++i)
            for (std::uint32_t d = 0; d < e.dmul()[i]; ++d) r = diff(r, params[i]);
        std::map<Expr, Expr, ExprLess> sub;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!(params[i] == args[i])) sub.emplace(params[i], args[i]);
        }
        return sub.empty() ? r : substitute(r, sub);
    }
    case Kind::Fun:
        return fun(e.fun(), bind_opaque(e.kid(0), name, params, body));
    case Kind::Pow:
        return pow(bind_opaque(e.kid(0), name, params, body), bind_opaque(e.kid(1), name, params, body));
    case Kind::Mul:
    case Kind::Add: {
        std::vector<Expr> kids;
        kids.reserve(e.nkids());
        for (const auto& k : e.kids()) kids.push_back(bind_opaque(k, name, params, body));
        return e.kind() == Kind::Mul ? mul(std::move(kids)) : add(std::move(kids));
    }
    }
    return e;
}

// --- collect -----------------------------------------------------------------

bool Monomial::operator<(const Monomial& o) const {
    const std::size_t n = std::min(powers.size(), o.powers.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ia = powers[i].first.atom().id, ib = o.powers[i].first.atom().id;
        if (ia != ib) return ia < ib;
        if (powers[i].second != o.powers[i].second) return powers[i].second < o.powers[i].second;
    }
    return powers.size() < o.powers.size();
}

bool Monomial::operator==(const Monomial& o) const { return !(*this < o) && !(o < *this); }

int Monomial::degree_of(const Expr& atom) const {
    for (const auto& [a, d] : powers)
        if (a == atom) return d;
    return 0;
}

int Monomial::total_degree() const {
    int t = 0;
    for (const auto& [a, d] : powers) t += d;
    return t;
}

Expr Monomial::as_expr() const {
    std::vector<Expr> fs;
    fs.reserve(powers.size());
    for (const auto& [a, d] : powers) fs.push_back(pow(a, Expr(d)));
    return mul(std::move(fs));
}

namespace {

bool contains_any(const Expr& e, const std::map<std::uint64_t, Expr>& ids) {
    switch (e.kind()) {
    case Kind::Num:
        return false;
    case Kind::Atom:
        return ids.count(e.atom().id) > 0;
    default:
        for (const auto& k : e.kids())
            if (contains_any(k, ids)) return true;
        return false;
    }
}

} // namespace

std::map<Monomial, Expr> collect(const Expr& e, const std::vector<Expr>& indeterminates) {
    std::map<std::uint64_t, Expr> ids;
    for (const auto& a : indeterminates) {
        if (!a.is(Kind::Atom)) throw UsageError("collect: indeterminates must be atoms");
        ids.emplace(a.atom().id, a);
    }
    std::map<Monomial, std::vector<Expr>> pieces;
    for (const auto& term : add_terms(e)) {
        Monomial m;
        std::vector<Expr> coeff_factors;
        for (const auto& f : mul_factors(term)) {
            auto [b, x] = base_and_exponent(f);
            if (b.is(Kind::Atom) && ids.count(b.atom().id)) {
                if (!(x.is_integer_literal() && x.num() > 0))
                    throw SeparationError("non-polynomial power of indeterminate", to_string(f));
                m.powers.emplace_back(b, static_cast<int>(numerator(x.num()).convert_to<long long>()));
                continue;
            }
            if (contains_any(f, ids))
                throw SeparationError("indeterminate inside non-polynomial context", to_string(f));
            coeff_factors.push_back(f);
        }
        std::sort(m.powers.begin(), m.powers.end(),
                  [](const auto& a, const auto& b) { return a.first.atom().id < b.first.atom().id; });
        pieces[m].push_back(mul(std::move(coeff_factors)));
    }
    std::map<Monomial, Expr> out;
    for (auto& [m, parts] : pieces) {
        Expr c = add(std::move(parts));
        if (!c.is_zero_literal()) out.emplace(m, c);
    }
    return out;
}

// --- queries -----------------------------------------------------------------

bool contains_atom(const Expr& e, const Expr& atom) {
    if (e.is(Kind::Atom)) return e.atom().id == atom.atom().id;
    for (const auto& k : e.kids())
        if (contains_atom(k, atom)) return true;
    return false;
}

void atoms_of(const Expr& e, std::map<std::uint64_t, Expr>& out) {
    if (e.is(Kind::Atom)) {
        out.emplace(e.atom().id, e);
        return;
    }
    for (const auto& k : e.kids()) atoms_of(k, out);
}

std::vector<Expr> atoms_of(const Expr& e) {
    std::map<std::uint64_t, Expr> m;
    atoms_of(e, m);
    std::vector<Expr> v;
    v.reserve(m.size());
    for (const auto& [id, a] : m) v.push_back(a);
    return v;
}

namespace {

void opaque_nodes_impl(const Expr& e, std::map<Expr, bool, ExprLess>& seen) {
    if (e.is(Kind::Opaque)) seen.emplace(e, true);
    for (const auto& k : e.kids()) opaque_nodes_impl(k, seen);
}

} // namespace

std::vector<Expr> opaque_nodes_of(const Expr& e) {
    std::map<Expr, bool, ExprLess> seen;
    opaque_nodes_impl(e, seen);
    std::vector<Expr> v;
    v.reserve(seen.size());
    for (const auto& [n, _] : seen) v.push_back(n);
    return v;
}

// --- printing ----------------------------------------------------------------

namespace {

// Precedence contexts for parenthesization.
enum Prec { PrecAdd = 0, PrecMul = 1, PrecPowBase = 2, PrecExponent = 3 };

std::string print(const Expr& e, int prec);

std::string print_rational(const Rational& v) {
    if (denominator(v) == 1) return numerator(v).str();
    return numerator(v).str() + "/" + denominator(v).str();
}

std::string print_factor(const Expr& base, const Expr& expo) {
    if (expo.is_one_literal()) return print(base, PrecMul);
    return print(base, PrecPowBase) + "^" + print(expo, PrecExponent);
}

std::string print_product(const Rational& coeff, const std::vector<Expr>& factors) {
    std::vector<std::string> nums, dens;
    Rational c = coeff < 0 ? Rational(-coeff) : coeff;
    if (numerator(c) != 1 || factors.empty()) nums.push_back(numerator(c).str());
    if (denominator(c) != 1) dens.push_back(denominator(c).str());
    for (const auto& f : factors) {
        auto [b, x] = base_and_exponent(f);
        if (x.is(Kind::Num) && x.num() < 0) {
            Rational flipped = -x.num();
            dens.push_back(print_factor(b, num(flipped)));
        } else {
            nums.push_back(print_factor(b, x));
        }
    }
    std::string out = nums.empty() ? "1" : nums[0];
    for (std::size_t i = 1; i < nums.size(); ++i) out += "*" + nums[i];
    if (!dens.empty()) {
        if (dens.size() == 1)
            out += "/" + dens[0];
        else {
            out += "/(" + dens[0];
            for (std::size_t i = 1; i < dens.size(); ++i) out += "*" + dens[i];
            out += ")";
        }
    }
    if (coeff < 0) out = "-" + out;
    return out;
}

std::string print(const Expr& e, int prec) {
    switch (e.kind()) {
    case Kind::Num: {
        const bool needs_parens = (e.num() < 0 && prec >= PrecMul) ||
                                  (denominator(e.num()) != 1 && prec >= PrecPowBase);
        if (denominator(e.num()) != 1 && prec == PrecMul)
            return print_product(e.num(), {});
        std::string s = print_rational(e.num());
        return needs_parens ? "(" + s + ")" : s;
    }
    case Kind::Atom:
        return e.atom().name;
    case Kind::Opaque: {
        std::uint32_t total_d = 0;
        for (auto d : e.dmul()) total_d += d;
        std::string args;
        for (std::size_t i = 0; i < e.nkids(); ++i)
            args += (i ? ", " : "") + print(e.kid(i), PrecAdd);
        if (e.nkids() == 1) {
            std::string primes(e.dmul()[0], '\'');
            return e.opname() + primes + "(" + args + ")";
        }
        if (total_d == 0) return e.opname() + "(" + args + ")";
        bool atom_args = true;
        for (const auto& k : e.kids()) atom_args = atom_args && k.is(Kind::Atom);
        if (atom_args) {
            std::string out = "diff(" + e.opname() + "(" + args + ")";
            for (std::size_t i = 0; i < e.nkids(); ++i)
                for (std::uint32_t d = 0; d < e.dmul()[i]; ++d) out += ", " + e.kid(i).atom().name;
            return out + ")";
        }
        // Not representable in the input grammar; diagnostic form.
        std::string out = "D[";
        for (std::size_t i = 0; i < e.dmul().size(); ++i) out += (i ? "," : "") + std::to_string(e.dmul()[i]);
        return out + "]" + e.opname() + "(" + args + ")";
    }
    case Kind::Fun: {
        const char* name = "";
        switch (e.fun()) {
        case FunKind::Sin: name = "sin"; break;
        case FunKind::Cos: name = "cos"; break;
        case FunKind::Exp: name = "exp"; break;
        case FunKind::Ln: name = "ln"; break;
        }
        return std::string(name) + "(" + print(e.kid(0), PrecAdd) + ")";
    }
    case Kind::Pow: {
        // Negative numeric exponents read better as a quotient.
        const bool as_quotient = e.kid(1).is(Kind::Num) && e.kid(1).num() < 0;
        std::string s = as_quotient ? print_product(Rational(1), {e}) : print_factor(e.kid(0), e.kid(1));
        return prec >= PrecPowBase ? "(" + s + ")" : s;
    }
    case Kind::Mul: {
        auto [c, rest] = coefficient_split(e);
        std::string s = rest.is_one_literal() ? print_product(c, {}) : print_product(c, mul_factors(rest));
        return prec >= PrecPowBase || (prec >= PrecMul && !s.empty() && s[0] == '-') ? "(" + s + ")" : s;
    }
    case Kind::Add: {
        std::string out;
        for (std::size_t i = 0; i < e.nkids(); ++i) {
            const Expr& t = e.kid(i);
            auto [c, rest] = coefficient_split(t);
            if (i == 0) {
                out = print(t, PrecAdd);
            } else if (c < 0) {
                Expr flipped = mul({Expr(-1), t});
                out += " - " + print(flipped, PrecMul);
            } else {
                out += " + " + print(t, PrecMul);
            }
        }
        return prec >= PrecMul ? "(" + out + ")" : out;
    }
    }
    return "?";
}

} // namespace

std::string to_string(const Expr& e) { return print(e, PrecAdd); }

Expr opaques_to_atoms(const Expr& e, std::map<Expr, Expr, ExprLess>& mapping) {
    switch (e.kind()) {
    case Kind::Num:
    case Kind::Atom:
        return e;
    case Kind::Opaque: {
        auto it = mapping.find(e);
        if (it != mapping.end()) return it->second;
        static std::atomic<std::uint64_t> probe_seq{0};
        auto info = std::make_shared<AtomInfo>();
        info->id = (std::uint64_t{1} << 48) + probe_seq.fetch_add(1);
        info->name = "<" + to_string(e) + ">";
        info->assume.nonzero = true;
        Expr a = make_atom(info);
        mapping.emplace(e, a);
        return a;
    }
    case Kind::Fun:
        return fun(e.fun(), opaques_to_atoms(e.kid(0), mapping));
    case Kind::Pow:
        return pow(opaques_to_atoms(e.kid(0), mapping), opaques_to_atoms(e.kid(1), mapping));
    case Kind::Mul:
    case Kind::Add: {
        std::vector<Expr> kids;
        kids.reserve(e.nkids());
        for (const auto& k : e.kids()) kids.push_back(opaques_to_atoms(k, mapping));
        return e.kind() == Kind::Mul ? mul(std::move(kids)) : add(std::move(kids));
    }
    }
    return e;
}

} // namespace nsym
