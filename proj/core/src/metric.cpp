#include "nsym/metric.hpp"

namespace nsym {

namespace {

Expr det_recursive(const MetricTable& g, std::vector<int> rows, std::vector<int> cols) {
    const std::size_t n = rows.size();
    if (n == 1) return g.at(rows[0], cols[0]);
    std::vector<Expr> terms;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<int> sub_rows(rows.begin() + 1, rows.end());
        std::vector<int> sub_cols;
        for (std::size_t j = 0; j < n; ++j)
            if (j != c) sub_cols.push_back(cols[j]);
        Expr minor = det_recursive(g, sub_rows, sub_cols);
        Expr piece = mul({g.at(rows[0], cols[c]), minor});
        terms.push_back(c % 2 == 0 ? piece : -piece);
    }
    return add(std::move(terms));
}

} // namespace

Expr metric_determinant(const MetricTable& g) {
    std::vector<int> all(g.dim());
    for (int i = 0; i < g.dim(); ++i) all[i] = i;
    return det_recursive(g, all, all);
}

MetricTable inverse_metric(const MetricTable& g, const ZeroOptions& opts) {
    const int n = g.dim();
    Expr det = metric_determinant(g);
    if (is_zero(det, opts).zeroish())
        throw SingularMetricError("metric has identically-zero determinant");
    MetricTable inv(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            // cofactor C_ji / det (adjugate transposes, but g is symmetric)
            std::vector<int> rows, cols;
            for (int r = 0; r < n; ++r)
                if (r != j) rows.push_back(r);
            for (int c = 0; c < n; ++c)
                if (c != i) cols.push_back(c);
            Expr minor = n == 1 ? Expr(1) : det_recursive(g, rows, cols);
            Expr cof = (i + j) % 2 == 0 ? minor : -minor;
            inv.set(i, j, cof / det);
        }
    }
    return inv;
}

ChristoffelTable christoffel(const MetricTable& g, const std::vector<Expr>& coords,
                             const ZeroOptions& opts) {
    const int n = g.dim();
    MetricTable ginv = inverse_metric(g, opts);
    ChristoffelTable out;
    out.n = n;
    out.gamma.assign(static_cast<std::size_t>(n) * n * n, Expr(0));
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                std::vector<Expr> terms;
                for (int l = 0; l < n; ++l) {
                    Expr s = diff(g.at(l, i), coords[j]) + diff(g.at(l, j), coords[i]) -
                             diff(g.at(i, j), coords[l]);
                    terms.push_back(mul({ginv.at(k, l), s}));
                }
                out.gamma[(static_cast<std::size_t>(k) * n + i) * n + j] = num(1, 2) * add(std::move(terms));
            }
        }
    }
    return out;
}

MetricTable lie_derivative_metric(const SpatialVectorField& eta, const MetricTable& g,
                                  const std::vector<Expr>& coords) {
    const int n = g.dim();
    MetricTable out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            std::vector<Expr> terms;
            for (int k = 0; k < n; ++k) {
                terms.push_back(mul({eta.components[k], diff(g.at(i, j), coords[k])}));
                terms.push_back(mul({g.at(k, j), diff(eta.components[k], coords[i])}));
                terms.push_back(mul({g.at(i, k), diff(eta.components[k], coords[j])}));
            }
            out.set(i, j, add(std::move(terms)));
        }
    }
    return out;
}

std::optional<ConformalFactor> conformal_factor(const SpatialVectorField& eta, const MetricTable& g,
                                                const std::vector<Expr>& coords,
                                                const ZeroOptions& opts) {
    const int n = g.dim();
    MetricTable lie = lie_derivative_metric(eta, g, coords);

    int ri = -1, rj = -1;
    for (int i = 0; i < n && ri < 0; ++i)
        for (int j = 0; j < n; ++j)
            if (!g.at(i, j).is_zero_literal()) {
                ri = i;
                rj = j;
                break;
            }
    if (ri < 0) return std::nullopt; // zero metric has no meaningful factor

    ConformalFactor out;
    out.psi = lie.at(ri, rj) / g.at(ri, rj);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Expr residual;
            if (g.at(i, j).is_zero_literal())
                residual = lie.at(i, j);
            else
                residual = lie.at(i, j) * g.at(ri, rj) - lie.at(ri, rj) * g.at(i, j);
            ZeroVerdict v = is_zero(residual, opts);
            if (v.state == ZeroState::Nonzero) return std::nullopt;
            if (v.state == ZeroState::ProbablyZero) out.probabilistic = true;
        }
    }
    return out;
}

} // namespace nsym
