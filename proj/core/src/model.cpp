#include "nsym/model.hpp"

namespace nsym {

namespace {

const MetricTable& metric_of(const Model& m, int a) {
    if (a == 0) return m.g;
    if (a == 1) return m.h;
    throw UsageError("order index must be 0 or 1");
}

const Expr& potential_of(const Model& m, int a) {
    if (a == 0) return m.V0;
    if (a == 1) return m.V1;
    throw UsageError("order index must be 0 or 1");
}

Expr kinetic_quadratic(const Model& m, const MetricTable& M) {
    const auto& sp = *m.space;
    std::vector<Expr> terms;
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            if (M.at(i, j).is_zero_literal()) continue;
            terms.push_back(mul({M.at(i, j), sp.velocity(i), sp.velocity(j)}));
        }
    return add(std::move(terms));
}

void check_entry_atoms(const Model& m, const Expr& e, const char* what) {
    const auto& sp = *m.space;
    for (const auto& a : atoms_of(e)) {
        bool ok = false;
        for (const auto& c : sp.coords()) ok = ok || a == c;
        for (const auto& [n, p] : sp.params()) ok = ok || a == p;
        if (!ok)
            throw UsageError(std::string(what) + " may depend on coordinates and parameters only; found " +
                             a.atom().name);
    }
}

} // namespace

Model make_model(SpacePtr space, MetricTable g, MetricTable h, Expr V0, Expr V1, int order,
                 const ZeroOptions& opts) {
    if (!space) throw UsageError("model needs a variable space");
    if (!space->has_lapse()) throw UsageError("model needs a lapse degree of freedom");
    if (order < 1) throw UsageError("perturbation order must be >= 1");
    if (g.dim() != space->dim() || h.dim() != space->dim())
        throw UsageError("metric dimension does not match the coordinate count");
    Model m{std::move(space), std::move(g), std::move(h), std::move(V0), std::move(V1), order};
    for (int i = 0; i < m.space->dim(); ++i)
        for (int j = i; j < m.space->dim(); ++j) {
            check_entry_atoms(m, m.g.at(i, j), "metric g");
            check_entry_atoms(m, m.h.at(i, j), "metric h");
        }
    check_entry_atoms(m, m.V0, "potential V0");
    check_entry_atoms(m, m.V1, "potential V1");
    if (is_zero(metric_determinant(m.g), opts).zeroish())
        throw SingularMetricError("kinetic metric g is singular");
    return m;
}

Expr lagrangian(const Model& m, int a) {
    const Expr& N = m.space->lapse();
    return kinetic_quadratic(m, metric_of(m, a)) / (Expr(2) * N) - N * potential_of(m, a);
}

Expr hamiltonian(const Model& m, int a) {
    const Expr& N = m.space->lapse();
    return kinetic_quadratic(m, metric_of(m, a)) / (Expr(2) * N) + N * potential_of(m, a);
}

Expr constraint(const Model& m) {
    const Expr& N = m.space->lapse();
    return kinetic_quadratic(m, m.g) / (Expr(2) * N * N) + m.V0;
}

Expr constraint_order1(const Model& m) {
    const Expr& N = m.space->lapse();
    return kinetic_quadratic(m, m.h) / (Expr(2) * N * N) + m.V1;
}

std::vector<Expr> el_residual(const Model& m, int a, const std::vector<Expr>& accel_atoms) {
    // N * E_i(L_a) = M_ij xdd^j + M_ij,k xd^k xd^j - 1/2 M_jk,i xd^j xd^k
    //               - (Ndot/N) M_ij xd^j + N^2 V_a,i
    const auto& sp = *m.space;
    const MetricTable& M = metric_of(m, a);
    const Expr& V = potential_of(m, a);
    const Expr& N = sp.lapse();
    const Expr& Nd = sp.lapse_velocity();
    std::vector<Expr> out;
    for (int i = 0; i < sp.dim(); ++i) {
        std::vector<Expr> terms;
        for (int j = 0; j < sp.dim(); ++j) {
            terms.push_back(mul({M.at(i, j), accel_atoms[j]}));
            for (int k = 0; k < sp.dim(); ++k) {
                terms.push_back(mul({diff(M.at(i, j), sp.coord(k)), sp.velocity(k), sp.velocity(j)}));
                terms.push_back(mul({num(-1, 2), diff(M.at(j, k), sp.coord(i)), sp.velocity(j), sp.velocity(k)}));
            }
            terms.push_back(-mul({Nd, M.at(i, j), sp.velocity(j)}) / N);
        }
        terms.push_back(N * N * diff(V, sp.coord(i)));
        out.push_back(add(std::move(terms)));
    }
    return out;
}

EulerLagrangeSystem accel_solve(const Model& m, bool with_first_order_correction,
                                const ZeroOptions& opts) {
    const auto& sp = *m.space;
    const int n = sp.dim();
    const Expr& N = sp.lapse();
    const Expr& Nd = sp.lapse_velocity();

    ChristoffelTable Gamma = christoffel(m.g, sp.coords(), opts);
    MetricTable ginv = inverse_metric(m.g, opts);

    EulerLagrangeSystem sys;
    for (int k = 0; k < n; ++k) {
        std::vector<Expr> terms;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                terms.push_back(-mul({Gamma.at(k, i, j), sp.velocity(i), sp.velocity(j)}));
        terms.push_back(Nd * sp.velocity(k) / N);
        for (int i = 0; i < n; ++i)
            terms.push_back(-mul({N, N, ginv.at(k, i), diff(m.V0, sp.coord(i))}));
        sys.accel.push_back(add(std::move(terms)));
    }

    if (with_first_order_correction) {
        // g A1 + h A0 + (h-terms) = 0 with
        // (h-terms)_i = h_ij,k xd^k xd^j - 1/2 h_jk,i xd^j xd^k - (Ndot/N) h_ij xd^j + N^2 V1,i.
        for (int k = 0; k < n; ++k) {
            std::vector<Expr> terms;
            for (int i = 0; i < n; ++i) {
                std::vector<Expr> hi;
                for (int j = 0; j < n; ++j) {
                    for (int l = 0; l < n; ++l) {
                        hi.push_back(mul({diff(m.h.at(i, j), sp.coord(l)), sp.velocity(l), sp.velocity(j)}));
                        hi.push_back(mul({num(-1, 2), diff(m.h.at(j, l), sp.coord(i)), sp.velocity(j), sp.velocity(l)}));
                    }
                    hi.push_back(-mul({Nd, m.h.at(i, j), sp.velocity(j)}) / N);
                    hi.push_back(mul({m.h.at(i, j), sys.accel[j]}));
                }
                hi.push_back(N * N * diff(m.V1, sp.coord(i)));
                terms.push_back(-mul({ginv.at(k, i), add(std::move(hi))}));
            }
            sys.accel_correction.push_back(add(std::move(terms)));
        }
    }
    return sys;
}

std::vector<std::vector<Expr>> accel_orders(const Model& m, int up_to, const ZeroOptions& opts) {
    std::vector<std::vector<Expr>> out;
    EulerLagrangeSystem sys = accel_solve(m, up_to >= 1, opts);
    out.push_back(sys.accel);
    if (up_to >= 1) out.push_back(sys.accel_correction);
    if (up_to >= 2) {
        MetricTable ginv = inverse_metric(m.g, opts);
        const int n = m.space->dim();
        for (int gamma = 2; gamma <= up_to; ++gamma) {
            std::vector<Expr> next;
            for (int k = 0; k < n; ++k) {
                std::vector<Expr> terms;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        terms.push_back(-mul({ginv.at(k, i), m.h.at(i, j), out[gamma - 1][j]}));
                next.push_back(add(std::move(terms)));
            }
            out.push_back(std::move(next));
        }
    }
    return out;
}

} // namespace nsym
