#include "nsym/noether.hpp"

#include <algorithm>

namespace nsym {

namespace {

// Shared residual machinery for the free-lapse and fixed-lapse pipelines.
struct Frame {
    const Model& m;
    std::optional<Expr> fixed_N; // set => lapse frozen, no Ndot, no omega

    const VariableSpace& sp() const { return *m.space; }
    bool with_lapse() const { return !fixed_N.has_value(); }

    Expr L(int a) const {
        Expr l = lagrangian(m, a);
        if (fixed_N) {
            std::map<Expr, Expr, ExprLess> bind{{sp().lapse(), *fixed_N}};
            l = substitute(l, bind);
        }
        return l;
    }

    // Total time derivative of a configuration-space function.
    Expr Dt(const Expr& phi) const {
        std::vector<Expr> terms{diff(phi, sp().time())};
        for (int k = 0; k < sp().dim(); ++k)
            terms.push_back(mul({diff(phi, sp().coord(k)), sp().velocity(k)}));
        if (with_lapse())
            terms.push_back(mul({diff(phi, sp().lapse()), sp().lapse_velocity()}));
        return add(std::move(terms));
    }

    Expr apply_prolonged(const SymmetryComponents& X, const Expr& L) const {
        std::vector<Expr> terms;
        terms.push_back(mul({X.xi, diff(L, sp().time())}));
        for (int k = 0; k < sp().dim(); ++k)
            terms.push_back(mul({X.eta[k], diff(L, sp().coord(k))}));
        if (with_lapse()) terms.push_back(mul({X.omega, diff(L, sp().lapse())}));
        Expr dxi = Dt(X.xi);
        for (int i = 0; i < sp().dim(); ++i) {
            Expr coeff = Dt(X.eta[i]) - mul({sp().velocity(i), dxi});
            terms.push_back(mul({coeff, diff(L, sp().velocity(i))}));
        }
        return add(std::move(terms));
    }

    Expr residual(const CandidateSymmetry& c, int gamma) const {
        std::vector<Expr> terms;
        for (int b = 0; b <= 1; ++b) {
            const int a = gamma - b;
            if (!c.has_order(a)) continue;
            const SymmetryComponents& X = c.at(a);
            Expr Lb = L(b);
            terms.push_back(apply_prolonged(X, Lb));
            terms.push_back(mul({Lb, Dt(X.xi)}));
        }
        if (c.has_order(gamma)) terms.push_back(-Dt(c.at(gamma).f));
        return add(std::move(terms));
    }
};

void validate_candidate(const Model& m, const CandidateSymmetry& c, bool lapse_free) {
    const auto& sp = *m.space;
    for (int g = 0; g <= c.max_order(); ++g) {
        const auto& X = c.at(g);
        if (static_cast<int>(X.eta.size()) != sp.dim())
            throw UsageError("candidate " + c.name + ": eta arity " + std::to_string(X.eta.size()) +
                             " does not match n = " + std::to_string(sp.dim()));
        auto reject_velocities = [&](const Expr& e, const char* what) {
            if (sp.mentions_velocity(e))
                throw SeparationError("candidate " + c.name + " injects a velocity atom into " + what,
                                      to_string(e));
        };
        reject_velocities(X.xi, "xi");
        for (const auto& e : X.eta) reject_velocities(e, "eta");
        reject_velocities(X.omega, "omega");
        reject_velocities(X.f, "f");
        if (!lapse_free && !X.omega.is_zero_literal())
            throw UsageError("candidate " + c.name + " has a lapse component; fixed-lapse mode needs omega = 0");
    }
}

DeterminingSystem separate(const Frame& fr, const Expr& residual, int gamma) {
    const auto& sp = fr.sp();
    std::vector<Expr> inds = sp.velocities();
    if (fr.with_lapse()) inds.push_back(sp.lapse_velocity());

    DeterminingSystem out;
    out.gamma = gamma;
    out.total = residual;
    for (auto& [mono, coeff] : collect(residual, inds)) {
        DetEntry e;
        e.monomial = mono;
        e.residual = coeff;
        if (fr.with_lapse()) e.ndot_degree = mono.degree_of(sp.lapse_velocity());
        for (int i = 0; i < sp.dim(); ++i)
            for (int d = 0; d < mono.degree_of(sp.velocity(i)); ++d) e.xidx.push_back(i + 1);
        const int xdeg = static_cast<int>(e.xidx.size());
        if (e.ndot_degree == 1 && xdeg == 2)
            e.cls = MonomialClass::NdotXX;
        else if (e.ndot_degree == 0 && xdeg == 3)
            e.cls = MonomialClass::XXX;
        else if (e.ndot_degree == 1 && xdeg == 1)
            e.cls = MonomialClass::NdotX;
        else if (e.ndot_degree == 0 && xdeg == 2)
            e.cls = MonomialClass::XX;
        else if (e.ndot_degree == 0 && xdeg == 1)
            e.cls = MonomialClass::X;
        else if (e.ndot_degree == 1 && xdeg == 0)
            e.cls = MonomialClass::Ndot;
        else if (e.ndot_degree == 0 && xdeg == 0)
            e.cls = MonomialClass::One;
        else
            e.cls = MonomialClass::Other;
        out.entries.push_back(std::move(e));
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const DetEntry& a, const DetEntry& b) {
        if (a.cls != b.cls) return static_cast<int>(a.cls) < static_cast<int>(b.cls);
        if (a.ndot_degree != b.ndot_degree) return a.ndot_degree < b.ndot_degree;
        return a.xidx < b.xidx;
    });
    return out;
}

} // namespace

const char* monomial_class_name(MonomialClass c) {
    switch (c) {
    case MonomialClass::NdotXX: return "Ndot.x.x";
    case MonomialClass::XXX: return "x.x.x";
    case MonomialClass::NdotX: return "Ndot.x";
    case MonomialClass::XX: return "x.x";
    case MonomialClass::X: return "x";
    case MonomialClass::Ndot: return "Ndot";
    case MonomialClass::One: return "1";
    case MonomialClass::Other: return "other";
    }
    return "?";
}

SymmetryComponents zero_components(const Model& m) {
    SymmetryComponents z;
    z.eta.assign(m.space->dim(), Expr(0));
    return z;
}

CandidateSymmetry generic_candidate(const Model& m, int order) {
    const auto& sp = *m.space;
    std::vector<Expr> args{sp.time()};
    for (int i = 0; i < sp.dim(); ++i) args.push_back(sp.coord(i));
    args.push_back(sp.lapse());

    CandidateSymmetry c;
    c.name = "generic";
    for (int g = 0; g <= order; ++g) {
        SymmetryComponents X;
        const std::string suffix = std::to_string(g);
        X.xi = opaque("xi" + suffix, args);
        for (int i = 0; i < sp.dim(); ++i)
            X.eta.push_back(opaque("eta" + suffix + "_" + std::to_string(i + 1), args));
        X.omega = opaque("omega" + suffix, args);
        X.f = opaque("f" + suffix, args);
        c.orders.push_back(std::move(X));
    }
    return c;
}

std::vector<Expr> prolong(const Model& m, const Expr& xi, const std::vector<Expr>& eta) {
    Frame fr{m, std::nullopt};
    std::vector<Expr> out;
    Expr dxi = fr.Dt(xi);
    for (int i = 0; i < m.space->dim(); ++i)
        out.push_back(fr.Dt(eta[i]) - mul({m.space->velocity(i), dxi}));
    return out;
}

Expr noether_residual(const Model& m, const CandidateSymmetry& c, int gamma) {
    if (gamma > m.order) throw UsageError("residual order exceeds the model's truncation order");
    validate_candidate(m, c, true);
    Frame fr{m, std::nullopt};
    return fr.residual(c, gamma);
}

Expr noether_residual_tail(const Model& m, const CandidateSymmetry& c) {
    validate_candidate(m, c, true);
    Frame fr{m, std::nullopt};
    return fr.residual(c, m.order + 1);
}

Expr noether_residual_fixed_lapse(const Model& m, const CandidateSymmetry& c, int gamma,
                                  const Expr& N0) {
    if (gamma > m.order) throw UsageError("residual order exceeds the model's truncation order");
    validate_candidate(m, c, false);
    Frame fr{m, N0};
    return fr.residual(c, gamma);
}

DeterminingSystem determining_system(const Model& m, int gamma,
                                     const std::optional<CandidateSymmetry>& c,
                                     const ZeroOptions& opts) {
    if (is_zero(m.V0, opts).zeroish())
        throw UsageError("determining system requires V0 != 0");
    const CandidateSymmetry& cand = c ? *c : generic_candidate(m, m.order);
    Expr r = noether_residual(m, cand, gamma);
    Frame fr{m, std::nullopt};
    return separate(fr, r, gamma);
}

DeterminingSystem determining_system_fixed_lapse(const Model& m, int gamma,
                                                 const CandidateSymmetry& c, const Expr& N0) {
    Expr r = noether_residual_fixed_lapse(m, c, gamma, N0);
    Frame fr{m, N0};
    return separate(fr, r, gamma);
}

} // namespace nsym
