#pragma once

#include <optional>
#include <string>

#include "nsym/model.hpp"

namespace nsym {

/// One perturbative order of a point-symmetry candidate:
/// X = xi d_t + eta^i d_i + omega d_N with boundary function f.
struct SymmetryComponents {
    Expr xi;
    std::vector<Expr> eta;
    Expr omega;
    Expr f;
};

struct CandidateSymmetry {
    std::string name;
    std::vector<SymmetryComponents> orders; // indexed by gamma = 0..max_order

    int max_order() const { return static_cast<int>(orders.size()) - 1; }
    const SymmetryComponents& at(int gamma) const { return orders.at(gamma); }
    bool has_order(int gamma) const { return gamma >= 0 && gamma <= max_order(); }
};

/// All-zero components of the right arity.
SymmetryComponents zero_components(const Model& m);

/// Generic candidate of opaque functions xi_g(t,x,N), eta_g^i(t,x,N),
/// omega_g(t,x,N), f_g(t,x,N), one tuple per order; the determining system
/// itself then forces the argument restrictions.
CandidateSymmetry generic_candidate(const Model& m, int order);

/// Coefficient of d/d(xd^i) in the first prolongation:
/// Dt(eta^i) - xd^i Dt(xi), with Dt = d_t + xd^k d_k + Ndot d_N.
std::vector<Expr> prolong(const Model& m, const Expr& xi, const std::vector<Expr>& eta);

/// Coefficient of eps^gamma in the expanded Noether condition
/// (sum_A eps^A X_A^[1])(L0 + eps L1) + (L0 + eps L1) d/dt(sum_A eps^A xi_A)
///  - d/dt(sum_g eps^g f_g).
Expr noether_residual(const Model& m, const CandidateSymmetry& c, int gamma);

/// The discarded tier one past the truncation order (diagnostics only).
Expr noether_residual_tail(const Model& m, const CandidateSymmetry& c);

/// Same residual with the lapse frozen to the constant N0: N is removed from
/// the variable space, so there are no Ndot terms and omega must vanish.
Expr noether_residual_fixed_lapse(const Model& m, const CandidateSymmetry& c, int gamma,
                                  const Expr& N0);

enum class MonomialClass { NdotXX, XXX, NdotX, XX, X, Ndot, One, Other };
const char* monomial_class_name(MonomialClass c);

struct DetEntry {
    MonomialClass cls = MonomialClass::One;
    std::vector<int> xidx;  // 1-based coordinate indices of the xd factors
    int ndot_degree = 0;
    Monomial monomial;
    Expr residual;
};

/// Per-order determining system: residual equations keyed by velocity
/// monomial class. Reconstruction (sum monomial * residual) equals `total`.
struct DeterminingSystem {
    int gamma = 0;
    std::vector<DetEntry> entries;
    Expr total;
};

/// Separate the order-gamma Noether residual by monomials in {xd^i, Ndot}.
/// With no candidate given, the generic candidate is used.
DeterminingSystem determining_system(const Model& m, int gamma,
                                     const std::optional<CandidateSymmetry>& c = std::nullopt,
                                     const ZeroOptions& opts = {});

DeterminingSystem determining_system_fixed_lapse(const Model& m, int gamma,
                                                 const CandidateSymmetry& c, const Expr& N0);

} // namespace nsym
