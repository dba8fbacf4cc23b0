#include "nsym/certify.hpp"

#include <algorithm>

namespace nsym {

namespace {

VerifyStatus combine(const std::vector<EntryVerdict>& entries) {
    VerifyStatus s = VerifyStatus::Pass;
    for (const auto& e : entries) {
        if (e.verdict.state == ZeroState::Nonzero) return VerifyStatus::Fail;
        if (e.verdict.state == ZeroState::ProbablyZero) s = VerifyStatus::PassProbabilistic;
    }
    return s;
}

VerificationReport run_verify(const Model& m, const CandidateSymmetry& c, const Expr* fixed_N,
                              const ZeroOptions& opts) {
    VerificationReport rep;
    rep.candidate = c.name;
    const int top = std::min(c.max_order(), m.order);
    for (int gamma = 0; gamma <= std::max(top, 0); ++gamma) {
        DeterminingSystem ds = fixed_N ? determining_system_fixed_lapse(m, gamma, c, *fixed_N)
                                       : determining_system(m, gamma, c, opts);
        bool failed_here = false;
        for (auto& entry : ds.entries) {
            EntryVerdict v;
            v.gamma = gamma;
            v.entry = entry;
            v.verdict = is_zero(entry.residual, opts);
            failed_here = failed_here || v.verdict.state == ZeroState::Nonzero;
            rep.entries.push_back(std::move(v));
        }
        rep.highest_order_checked = gamma;
        if (gamma == 0 && failed_here && gamma < std::max(top, 0)) {
            rep.aborted_sequential = true;
            break;
        }
    }
    rep.status = combine(rep.entries);
    return rep;
}

} // namespace

const char* verify_status_name(VerifyStatus s) {
    switch (s) {
    case VerifyStatus::Pass: return "pass";
    case VerifyStatus::PassProbabilistic: return "pass-probabilistic";
    case VerifyStatus::Fail: return "fail";
    }
    return "?";
}

VerificationReport verify(const Model& m, const CandidateSymmetry& c, const ZeroOptions& opts) {
    return run_verify(m, c, nullptr, opts);
}

VerificationReport verify_fixed_lapse(const Model& m, const CandidateSymmetry& c, const Expr& N0,
                                      const ZeroOptions& opts) {
    return run_verify(m, c, &N0, opts);
}

FirstIntegral first_integral(const Model& m, const CandidateSymmetry& c, int gamma,
                             MomentumConvention convention) {
    if (gamma > m.order) throw UsageError("integral order exceeds the model's truncation order");
    const auto& sp = *m.space;
    const Expr& N = sp.lapse();
    const Expr factor = convention == MomentumConvention::Exact ? Expr(1) / N : Expr(1) / (Expr(2) * N);

    auto momentum = [&](const MetricTable& M, int i) {
        std::vector<Expr> terms;
        for (int j = 0; j < sp.dim(); ++j) terms.push_back(mul({M.at(i, j), sp.velocity(j)}));
        return mul({factor, add(std::move(terms))});
    };

    std::vector<Expr> terms;
    if (c.has_order(gamma)) {
        const auto& X = c.at(gamma);
        terms.push_back(mul({X.xi, hamiltonian(m, 0)}));
        for (int i = 0; i < sp.dim(); ++i) terms.push_back(-mul({momentum(m.g, i), X.eta[i]}));
        terms.push_back(X.f);
    }
    if (c.has_order(gamma - 1)) {
        const auto& X = c.at(gamma - 1);
        terms.push_back(mul({X.xi, hamiltonian(m, 1)}));
        for (int i = 0; i < sp.dim(); ++i) terms.push_back(-mul({momentum(m.h, i), X.eta[i]}));
    }
    return FirstIntegral{gamma, add(std::move(terms))};
}

VelocityDivision divide_by_constraint(const Expr& R, const Expr& H, const std::vector<Expr>& vels) {
    auto exponents = [&](const Monomial& mo) {
        std::vector<int> e(vels.size(), 0);
        for (std::size_t i = 0; i < vels.size(); ++i) e[i] = mo.degree_of(vels[i]);
        return e;
    };
    // graded lexicographic comparison
    auto mono_less = [&](const Monomial& a, const Monomial& b) {
        if (a.total_degree() != b.total_degree()) return a.total_degree() < b.total_degree();
        return exponents(a) < exponents(b);
    };

    auto hmap = collect(H, vels);
    if (hmap.empty()) throw UsageError("constraint collapsed to zero; nothing to divide by");
    auto lead = hmap.begin();
    for (auto it = hmap.begin(); it != hmap.end(); ++it)
        if (mono_less(lead->first, it->first)) lead = it;
    const Monomial lt = lead->first;
    const Expr lc = lead->second;
    const auto lt_exp = exponents(lt);

    VelocityDivision out;
    out.quotient = Expr(0);
    Expr rem = R;
    for (int iter = 0; iter < 4096; ++iter) {
        auto rmap = collect(rem, vels);
        const Monomial* pick = nullptr;
        for (const auto& [mo, co] : rmap) {
            const auto e = exponents(mo);
            bool divisible = true;
            for (std::size_t i = 0; i < e.size(); ++i) divisible = divisible && e[i] >= lt_exp[i];
            if (!divisible) continue;
            if (!pick || mono_less(*pick, mo)) pick = &mo;
        }
        if (!pick) {
            out.remainder = rem;
            return out;
        }
        std::vector<Expr> qfactors{rmap.at(*pick) / lc};
        const auto e = exponents(*pick);
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > lt_exp[i]) qfactors.push_back(pow(vels[i], Expr(e[i] - lt_exp[i])));
        Expr qterm = mul(std::move(qfactors));
        out.quotient = out.quotient + qterm;
        rem = rem - qterm * H;
    }
    throw ExpansionLimitError("constraint division did not terminate");
}

namespace {

Expr onshell_time_derivative(const Model& m, const Expr& I, const std::vector<Expr>& accel) {
    const auto& sp = *m.space;
    std::vector<Expr> terms{diff(I, sp.time())};
    for (int k = 0; k < sp.dim(); ++k) {
        terms.push_back(mul({diff(I, sp.coord(k)), sp.velocity(k)}));
        terms.push_back(mul({diff(I, sp.velocity(k)), accel[k]}));
    }
    terms.push_back(mul({diff(I, sp.lapse()), sp.lapse_velocity()}));
    return add(std::move(terms));
}

} // namespace

WeakCertificate weak_certificate(const Model& m, const FirstIntegral& I, const ZeroOptions& opts) {
    const std::vector<Expr> A0 = accel_solve(m, false, opts).accel;
    Expr R = onshell_time_derivative(m, I.expr, A0);
    VelocityDivision d = divide_by_constraint(R, constraint(m), m.space->velocities());
    WeakCertificate cert;
    cert.gamma = I.gamma;
    cert.lambda = d.quotient;
    cert.remainder = d.remainder;
    cert.remainder_verdict = is_zero(d.remainder, opts);
    return cert;
}

std::vector<WeakCertificate> weak_certificate_chain(const Model& m, const CandidateSymmetry& c,
                                                    const ZeroOptions& opts) {
    const int top = std::min(c.max_order(), m.order);
    const auto As = accel_orders(m, top, opts);
    const Expr H0 = constraint(m);
    const Expr H1 = constraint_order1(m);
    const auto& sp = *m.space;

    std::vector<FirstIntegral> Is;
    for (int g = 0; g <= top; ++g) Is.push_back(first_integral(m, c, g));

    std::vector<WeakCertificate> out;
    for (int g = 0; g <= top; ++g) {
        Expr R = onshell_time_derivative(m, Is[g].expr, As[0]);
        for (int j = 0; j < g; ++j)
            for (int k = 0; k < sp.dim(); ++k)
                R = R + diff(Is[j].expr, sp.velocity(k)) * As[g - j][k];
        if (g >= 1) R = R - out[g - 1].lambda * H1;
        VelocityDivision d = divide_by_constraint(R, H0, sp.velocities());
        WeakCertificate cert;
        cert.gamma = g;
        cert.lambda = d.quotient;
        cert.remainder = d.remainder;
        cert.remainder_verdict = is_zero(d.remainder, opts);
        out.push_back(std::move(cert));
    }
    return out;
}

} // namespace nsym
