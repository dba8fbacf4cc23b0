#pragma once

#include "nsym/noether.hpp"

namespace nsym {

enum class VerifyStatus { Pass, PassProbabilistic, Fail };
const char* verify_status_name(VerifyStatus s);

struct EntryVerdict {
    int gamma = 0;
    DetEntry entry;
    ZeroVerdict verdict;
};

struct VerificationReport {
    std::string candidate;
    VerifyStatus status = VerifyStatus::Pass;
    std::vector<EntryVerdict> entries;
    int highest_order_checked = -1;
    bool aborted_sequential = false; // exact order failed; higher orders skipped
};

/// Adjudicate a candidate against the per-order determining systems,
/// sequentially (exact order first, early abort on its failure).
VerificationReport verify(const Model& m, const CandidateSymmetry& c, const ZeroOptions& opts = {});

/// Same pipeline with the lapse frozen to the constant N0. The candidate must
/// carry no omega components.
VerificationReport verify_fixed_lapse(const Model& m, const CandidateSymmetry& c, const Expr& N0,
                                      const ZeroOptions& opts = {});

/// Momentum factor used in the integral. Exact is dL/dxd = (1/N) M_ij xd^j;
/// HalfOverN is the (1/2N) variant kept only as an erratum regression.
enum class MomentumConvention { Exact, HalfOverN };

struct FirstIntegral {
    int gamma = 0;
    Expr expr;
};

/// I_gamma = xi_gamma H0 + xi_{gamma-1} H1 - p0_i eta_gamma^i
///           - p1_i eta_{gamma-1}^i + f_gamma.
FirstIntegral first_integral(const Model& m, const CandidateSymmetry& c, int gamma,
                             MomentumConvention convention = MomentumConvention::Exact);

struct WeakCertificate {
    int gamma = 0;
    Expr lambda;    // multiplier against the constraint H ( = -dL0/dN form negated)
    Expr remainder; // anything the division could not absorb
    ZeroVerdict remainder_verdict;

    bool valid() const { return remainder_verdict.zeroish(); }
};

/// Factor the on-shell time derivative of I against the constraint:
/// D_t I|EL = lambda * H + remainder, identically in Ndot. Uses the exact
/// Euler-Lagrange flow; suitable for order-0 integrals.
WeakCertificate weak_certificate(const Model& m, const FirstIntegral& I, const ZeroOptions& opts = {});

/// Order-consistent certificates for every order of the candidate: the
/// eps^gamma coefficient of D_t(sum I) along the eps-expanded flow equals
/// lambda_gamma H0 + lambda_{gamma-1} H1.
std::vector<WeakCertificate> weak_certificate_chain(const Model& m, const CandidateSymmetry& c,
                                                    const ZeroOptions& opts = {});

/// Single-divisor polynomial division over the velocity atoms (graded-lex
/// leading term); R = quotient * H + remainder.
struct VelocityDivision {
    Expr quotient;
    Expr remainder;
};
VelocityDivision divide_by_constraint(const Expr& R, const Expr& H, const std::vector<Expr>& vels);

} // namespace nsym
