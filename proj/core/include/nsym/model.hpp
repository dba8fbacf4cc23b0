#pragma once

#include "nsym/metric.hpp"
#include "nsym/space.hpp"
#include "nsym/zero.hpp"

namespace nsym {

/// A perturbed singular model: L = L0 + eps*L1 with
///   L0 = 1/(2N) g_ij xd^i xd^j - N V0,   L1 = 1/(2N) h_ij xd^i xd^j - N V1.
/// The kinetic metric g must be invertible; h and V1 may vanish.
struct Model {
    SpacePtr space;
    MetricTable g;
    MetricTable h;
    Expr V0;
    Expr V1;
    int order = 1; // perturbation truncation order
};

/// Validates and assembles a model: g invertible (probed), entries over the
/// coordinates/parameters only, order >= 1.
Model make_model(SpacePtr space, MetricTable g, MetricTable h, Expr V0, Expr V1, int order = 1,
                 const ZeroOptions& opts = {});

Expr lagrangian(const Model& m, int a);
Expr hamiltonian(const Model& m, int a);

/// The constraint H = 1/(2N^2) g_ij xd^i xd^j + V0 ( = -dL0/dN ).
Expr constraint(const Model& m);

/// First-order companion 1/(2N^2) h_ij xd^i xd^j + V1 ( = -dL1/dN ).
Expr constraint_order1(const Model& m);

struct EulerLagrangeSystem {
    std::vector<Expr> accel;            // exact xdd^k over (t, x, xd, N, Ndot)
    std::vector<Expr> accel_correction; // first-order correction, when requested
};

/// Solves the Euler-Lagrange system for the accelerations. The exact part is
/// xdd^k = -Gamma^k_ij xd^i xd^j + (Ndot/N) xd^k - N^2 g^{ik} V0,i; the
/// optional correction comes from direct variation of L0 + eps L1.
EulerLagrangeSystem accel_solve(const Model& m, bool with_first_order_correction = false,
                                const ZeroOptions& opts = {});

/// Acceleration coefficients A_0..A_up_to of the eps-expanded flow:
/// A_0 exact, g A_1 + h A_0 + (h-terms) = 0, and g A_k + h A_{k-1} = 0 beyond.
std::vector<std::vector<Expr>> accel_orders(const Model& m, int up_to, const ZeroOptions& opts = {});

/// Euler-Lagrange residual N * E_i(L_a) with explicit acceleration atoms, for
/// round-trip checks: substituting the solved accelerations makes it vanish.
std::vector<Expr> el_residual(const Model& m, int a, const std::vector<Expr>& accel_atoms);

} // namespace nsym
