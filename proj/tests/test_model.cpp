#include <doctest.h>

#include "nsym/model.hpp"
#include "test_util.hpp"

using namespace nsym;
using nsym_test::load_case;
using nsym_test::proved;

namespace {

struct Case {
    ModelDocument doc;
    Model m;
    explicit Case(const std::string& stem) : doc(load_case(stem)), m(build_model(doc)) {}

    const VariableSpace& sp() const { return *m.space; }
    Expr x() const { return sp().coord(0); }
    Expr xd() const { return sp().velocity(0); }
    Expr N() const { return sp().lapse(); }
    Expr Nd() const { return sp().lapse_velocity(); }
};

} // namespace

TEST_CASE("lagrangians reproduce the case data") {
    Case A("case_a");
    Expr L0 = lagrangian(A.m, 0);
    CHECK(proved(L0 - (A.xd() * A.xd() / (Expr(2) * A.N()) - A.N() / Expr(2) * A.x() * A.x())));
    CHECK(!contains_atom(L0, A.Nd()));

    Case B("case_b");
    Expr v1 = B.sp().param("v1");
    CHECK(proved(lagrangian(B.m, 1) - B.N() * v1 / (B.x() * B.x())));

    // all-zero first-order data gives the zero Lagrangian
    VariableSpace sp("t", {{"q", {}}}, std::string("N"), {});
    auto spp = std::make_shared<VariableSpace>(sp);
    MetricTable g(1), h(1);
    g.set(0, 0, Expr(1));
    Model trivial = make_model(spp, g, h, Expr(0), Expr(0));
    CHECK(lagrangian(trivial, 1) == Expr(0));
}

TEST_CASE("hamiltonians and the Legendre identity") {
    Case A("case_a");
    CHECK(proved(hamiltonian(A.m, 0) -
                 (A.xd() * A.xd() / (Expr(2) * A.N()) + A.N() / Expr(2) * A.x() * A.x())));

    Case B("case_b");
    Expr v1 = B.sp().param("v1");
    CHECK(proved(hamiltonian(B.m, 1) + B.N() * v1 / (B.x() * B.x())));

    // H_a = xd dL_a/dxd - L_a
    for (const char* stem : {"case_a", "case_b", "case_c", "case_d"}) {
        Case C(stem);
        for (int a = 0; a <= 1; ++a) {
            Expr L = lagrangian(C.m, a);
            Expr legendre = C.xd() * diff(L, C.xd()) - L;
            CHECK(proved(hamiltonian(C.m, a) - legendre));
        }
    }
}

TEST_CASE("constraint equals -dL0/dN") {
    Case A("case_a");
    CHECK(proved(constraint(A.m) -
                 (A.xd() * A.xd() / (Expr(2) * A.N() * A.N()) + A.x() * A.x() / Expr(2))));

    Case D("case_d");
    CHECK(proved(constraint(D.m) - (D.xd() * D.xd() / (Expr(2) * D.N() * D.N()) -
                                    D.x() * D.x() * D.x() / Expr(3))));

    for (const char* stem : {"case_a", "case_b", "case_c", "case_d"}) {
        Case C(stem);
        CHECK(proved(diff(lagrangian(C.m, 0), C.N()) + constraint(C.m)));
        CHECK(proved(diff(lagrangian(C.m, 1), C.N()) + constraint_order1(C.m)));
    }
}

TEST_CASE("accel_solve matches the hand-solved flows") {
    Case A("case_a");
    Expr acc_a = accel_solve(A.m).accel[0];
    CHECK(proved(acc_a - (A.Nd() / A.N() * A.xd() - A.N() * A.N() * A.x())));

    Case D("case_d");
    Expr acc_d = accel_solve(D.m).accel[0];
    CHECK(proved(acc_d - (D.Nd() / D.N() * D.xd() + D.N() * D.N() * D.x() * D.x())));

    Case B("case_b");
    Expr Lam = B.sp().param("Lambda");
    Expr acc_b = accel_solve(B.m).accel[0];
    Expr expect = -B.xd() * B.xd() / (Expr(2) * B.x()) + B.Nd() / B.N() * B.xd() +
                  Lam * B.N() * B.N() * B.x();
    CHECK(proved(acc_b - expect));
}

TEST_CASE("euler-lagrange round trip, exact and first order") {
    for (const char* stem : {"case_a", "case_b", "case_c", "case_d"}) {
        Case C(stem);
        const auto& sp = C.sp();
        std::vector<Expr> acc_atoms;
        for (int i = 0; i < sp.dim(); ++i)
            acc_atoms.push_back(make_atom(intern_atom(std::string(stem) + "_acc" + std::to_string(i))));

        EulerLagrangeSystem sys = accel_solve(C.m, true);
        std::vector<Expr> E0 = el_residual(C.m, 0, acc_atoms);
        std::vector<Expr> E1 = el_residual(C.m, 1, acc_atoms);

        for (int k = 0; k < sp.dim(); ++k) {
            std::map<Expr, Expr, ExprLess> exact{{acc_atoms[k], sys.accel[k]}};
            CHECK(proved(substitute(E0[k], exact)));

            // order-1 coefficient: E_k(L1)|A0 + (1/N) g A1 must vanish
            std::vector<Expr> terms{substitute(E1[k], exact)};
            for (int l = 0; l < sp.dim(); ++l)
                terms.push_back(C.m.g.at(k, l) * sys.accel_correction[l]);
            CHECK(proved(add(std::move(terms))));
        }
    }
}

TEST_CASE("model validation") {
    auto spp = std::make_shared<VariableSpace>("t", std::vector<ParamSpec>{{"q", {}}},
                                               std::string("N"), std::vector<ParamSpec>{});
    MetricTable g(1), h(1);
    g.set(0, 0, Expr(1));
    CHECK_THROWS_AS((void)make_model(spp, g, h, Expr(0), Expr(0), 0), UsageError);

    MetricTable zero(1);
    CHECK_THROWS_AS((void)make_model(spp, zero, h, Expr(0), Expr(0)), SingularMetricError);

    // metric entries must not mention velocities or the lapse
    MetricTable bad(1);
    bad.set(0, 0, spp->lapse());
    CHECK_THROWS_AS((void)make_model(spp, bad, h, Expr(0), Expr(0)), UsageError);
}
