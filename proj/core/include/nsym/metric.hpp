#pragma once

#include <optional>
#include <vector>

#include "nsym/expr.hpp"
#include "nsym/zero.hpp"

namespace nsym {

/// Symmetric table of expressions over the coordinates. Setting (i,j) also
/// sets (j,i), so symmetry holds by construction.
class MetricTable {
public:
    MetricTable() = default;
    explicit MetricTable(int n) : n_(n), entries_(static_cast<std::size_t>(n) * n, Expr(0)) {}

    int dim() const { return n_; }
    const Expr& at(int i, int j) const { return entries_.at(idx(i, j)); }
    void set(int i, int j, const Expr& e) {
        entries_.at(idx(i, j)) = e;
        entries_.at(idx(j, i)) = e;
    }

    bool is_zero_table() const {
        for (const auto& e : entries_)
            if (!e.is_zero_literal()) return false;
        return true;
    }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
    int n_ = 0;
    std::vector<Expr> entries_;
};

struct SpatialVectorField {
    std::vector<Expr> components;
    int dim() const { return static_cast<int>(components.size()); }
};

struct ChristoffelTable {
    int n = 0;
    std::vector<Expr> gamma; // [k][i][j], symmetric in (i,j)
    const Expr& at(int k, int i, int j) const {
        return gamma.at((static_cast<std::size_t>(k) * n + i) * n + j);
    }
};

Expr metric_determinant(const MetricTable& g);

/// Exact inverse via adjugate over determinant. Rejects identically singular
/// metrics (proved or probably zero determinant).
MetricTable inverse_metric(const MetricTable& g, const ZeroOptions& opts = {});

/// Gamma^k_ij = 1/2 g^{kl} (g_{li,j} + g_{lj,i} - g_{ij,l}).
ChristoffelTable christoffel(const MetricTable& g, const std::vector<Expr>& coords,
                             const ZeroOptions& opts = {});

/// (L_eta g)_ij = eta^k g_ij,k + g_kj eta^k,i + g_ik eta^k,j.
MetricTable lie_derivative_metric(const SpatialVectorField& eta, const MetricTable& g,
                                  const std::vector<Expr>& coords);

struct ConformalFactor {
    Expr psi;
    bool probabilistic = false; // some agreement checks were only probably-zero
};

/// psi with L_eta g = psi * g, when all entrywise ratios agree; nullopt when
/// the Lie derivative is not proportional to g.
std::optional<ConformalFactor> conformal_factor(const SpatialVectorField& eta, const MetricTable& g,
                                                const std::vector<Expr>& coords,
                                                const ZeroOptions& opts = {});

} // namespace nsym
