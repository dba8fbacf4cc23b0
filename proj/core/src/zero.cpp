#include "nsym/zero.hpp"

#include <cmath>
#include <random>

#include "nsym/eval.hpp"

namespace nsym {

Expr clear_denominators(const Expr& e0) {
    Expr e = e0;
    for (int pass = 0; pass < 4; ++pass) {
        std::map<Expr, Rational, ExprLess> need;
        for (const auto& term : add_terms(e)) {
            for (const auto& f : mul_factors(term)) {
                auto [b, x] = base_and_exponent(f);
                if (b.is(Kind::Num)) continue;
                const Rational r = rational_part(x);
                if (r < 0) {
                    auto [it, fresh] = need.emplace(b, -r);
                    if (!fresh && it->second < -r) it->second = -r;
                }
            }
        }
        if (need.empty()) return e;
        // Multiply term by term with whole divisor factors, so b^k cancels
        // against b^-k in the exponent merge instead of being distributed.
        std::vector<Expr> divisors;
        for (const auto& [b, r] : need) {
            if (b.is(Kind::Add) && boost::multiprecision::denominator(r) == 1) {
                for (Rational i = 0; i < r; ++i) divisors.push_back(b);
            } else {
                divisors.push_back(pow(b, num(r)));
            }
        }
        std::vector<Expr> terms;
        for (const auto& t : add_terms(e)) {
            std::vector<Expr> fs{t};
            fs.insert(fs.end(), divisors.begin(), divisors.end());
            terms.push_back(mul(std::move(fs)));
        }
        e = add(std::move(terms));
    }
    return e;
}

namespace {

Rational sample_value(std::mt19937_64& rng, const Assumptions& assume) {
    std::uniform_int_distribution<int> numer(2, 64);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int attempt = 0; attempt < 256; ++attempt) {
        Rational v(numer(rng), 16);
        if (!assume.positive && coin(rng)) v = -v;
        bool ok = true;
        for (const auto& a : assume.avoid) {
            Rational d = v - a;
            if (d < 0) d = -d;
            if (d < Rational(1, 8)) {
                ok = false;
                break;
            }
        }
        if (ok) return v;
    }
    throw ProbeFailureError("could not sample a value satisfying the declared assumptions");
}

struct Probe {
    ProbePoint point;
    bool valid = false;
};

Probe try_probe(const Expr& skeleton, const std::vector<Expr>& targets,
                const std::map<Expr, Expr, ExprLess>& opaque_map, std::mt19937_64& rng) {
    Probe pr;
    NumBindings bind;
    static const Assumptions opaque_assume{true, false, {}};
    for (const auto& t : targets) {
        const Assumptions& assume = t.is(Kind::Atom) ? t.atom().assume : opaque_assume;
        Rational v = sample_value(rng, assume);
        pr.point.assign.push_back({t, v});
        const Expr& key = t.is(Kind::Opaque) ? opaque_map.at(t) : t;
        bind.emplace(key, v.convert_to<double>());
    }
    try {
        double total = 0.0, scale = 0.0;
        for (const auto& term : add_terms(skeleton)) {
            const double tv = eval_num(term, bind);
            if (!std::isfinite(tv)) return pr;
            total += tv;
            scale += std::fabs(tv);
        }
        if (!std::isfinite(total)) return pr;
        pr.point.value = total;
        pr.point.scale = std::max(1.0, scale);
        pr.valid = true;
    } catch (const EvalError&) {
        return pr; // singular point; caller resamples
    }
    return pr;
}

} // namespace

ZeroVerdict is_zero(const Expr& e, const ZeroOptions& opts) {
    ZeroVerdict out;
    if (e.is_zero_literal()) {
        out.state = ZeroState::ProvedZero;
        return out;
    }
    {
        Expr cleared = clear_denominators(e);
        if (cleared.is_zero_literal()) {
            out.state = ZeroState::ProvedZero;
            out.proved_by_clearing = true;
            return out;
        }
    }

    // Probe targets: every atom and every distinct opaque application.
    std::map<Expr, Expr, ExprLess> opaque_map;
    Expr skeleton = opaques_to_atoms(e, opaque_map);
    std::vector<Expr> targets = atoms_of(e);
    for (const auto& [op, a] : opaque_map) targets.push_back(op);

    std::mt19937_64 rng(opts.seed ^ hash_of(e));
    int resamples = 0;
    constexpr double kNonzeroFactor = 1e-6;
    constexpr double kZeroFactor = 1e-9;

    for (int i = 0; i < opts.points; ++i) {
        Probe pr;
        for (;;) {
            pr = try_probe(skeleton, targets, opaque_map, rng);
            if (pr.valid) {
                // Gray-zone values get a fresh point before they can poison the verdict.
                const double a = std::fabs(pr.point.value);
                if (a <= kZeroFactor * pr.point.scale || a > kNonzeroFactor * pr.point.scale) break;
            }
            if (++resamples > opts.max_resamples) {
                if (!pr.valid) throw ProbeFailureError("probing failed: no evaluable sample points");
                break; // persistent gray zone counts as a witness below
            }
        }
        const double a = std::fabs(pr.point.value);
        if (a > kZeroFactor * pr.point.scale) {
            out.state = ZeroState::Nonzero;
            out.witness = pr.point;
            return out;
        }
        out.points.push_back(pr.point);
    }
    out.state = ZeroState::ProbablyZero;
    return out;
}

} // namespace nsym
