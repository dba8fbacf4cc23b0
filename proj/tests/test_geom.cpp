#include <doctest.h>

#include "nsym/metric.hpp"
#include "nsym/space.hpp"
#include "test_util.hpp"

using namespace nsym;
using nsym_test::proved;

namespace {

struct OneDim {
    VariableSpace sp{"t", {{"x", Assumptions{true, true, {}}}}, std::string("N"), {}};
    Expr x = sp.coord(0);

    MetricTable metric(const Expr& g11) const {
        MetricTable m(1);
        m.set(0, 0, g11);
        return m;
    }
};

struct TwoDim {
    VariableSpace sp{"t",
                     {{"a", Assumptions{true, true, {}}}, {"b", Assumptions{true, true, {}}}},
                     std::string("N"),
                     {}};
    Expr a = sp.coord(0);
    Expr b = sp.coord(1);
};

bool tables_equal(const MetricTable& lhs, const MetricTable& rhs) {
    if (lhs.dim() != rhs.dim()) return false;
    for (int i = 0; i < lhs.dim(); ++i)
        for (int j = 0; j < lhs.dim(); ++j)
            if (!proved(lhs.at(i, j) - rhs.at(i, j))) return false;
    return true;
}

} // namespace

TEST_CASE("inverse metric: scalar, identity, diagonal") {
    OneDim F;
    CHECK(inverse_metric(F.metric(Expr(6) * F.x)).at(0, 0) == Expr(1) / (Expr(6) * F.x));
    CHECK(inverse_metric(F.metric(Expr(1))).at(0, 0) == Expr(1));

    TwoDim G;
    MetricTable diag(2);
    diag.set(0, 0, Expr(1));
    diag.set(1, 1, G.a * G.a);
    MetricTable inv = inverse_metric(diag);
    CHECK(inv.at(0, 0) == Expr(1));
    CHECK(proved(inv.at(1, 1) - Expr(1) / (G.a * G.a)));
    CHECK(inv.at(0, 1) == Expr(0));

    // g * g^{-1} = identity entrywise
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            std::vector<Expr> s;
            for (int k = 0; k < 2; ++k) s.push_back(diag.at(i, k) * inv.at(k, j));
            CHECK(proved(add(std::move(s)) - (i == j ? Expr(1) : Expr(0))));
        }

    CHECK_THROWS_AS((void)inverse_metric(F.metric(F.x - F.x)), SingularMetricError);
    CHECK_THROWS_AS((void)inverse_metric(F.metric(Expr(0))), SingularMetricError);
}

TEST_CASE("inverse is an involution") {
    OneDim F;
    nsym_test::ExprGen gen({F.x}, 11, false);
    for (int i = 0; i < 10; ++i) {
        Expr entry = gen(2) + Expr(5); // keep it away from identically zero
        MetricTable g = F.metric(entry);
        if (is_zero(metric_determinant(g)).zeroish()) continue;
        CHECK(tables_equal(inverse_metric(inverse_metric(g)), g));
    }
}

TEST_CASE("christoffel: flat, 6x oracle, polar oracle") {
    OneDim F;
    CHECK(christoffel(F.metric(Expr(1)), F.sp.coords()).at(0, 0, 0) == Expr(0));

    // hand evaluation of 1/2 g^{kl}(g_{li,j}+g_{lj,i}-g_{ij,l}) for g = 6x
    ChristoffelTable c = christoffel(F.metric(Expr(6) * F.x), F.sp.coords());
    CHECK(proved(c.at(0, 0, 0) - Expr(1) / (Expr(2) * F.x)));

    // polar-style metric diag(1, a^2)
    TwoDim G;
    MetricTable polar(2);
    polar.set(0, 0, Expr(1));
    polar.set(1, 1, G.a * G.a);
    ChristoffelTable p = christoffel(polar, G.sp.coords());
    CHECK(proved(p.at(1, 0, 1) - Expr(1) / G.a)); // Gamma^b_ab = 1/a
    CHECK(p.at(1, 1, 0) == p.at(1, 0, 1));        // symmetric lower indices
    CHECK(proved(p.at(0, 1, 1) + G.a));           // Gamma^a_bb = -a
    CHECK(p.at(0, 0, 0) == Expr(0));
    CHECK(p.at(0, 0, 1) == Expr(0));
    CHECK(p.at(1, 1, 1) == Expr(0));
}

TEST_CASE("metric compatibility and scale invariance") {
    TwoDim G;
    MetricTable g(2);
    g.set(0, 0, Expr(1) + G.b * G.b);
    g.set(0, 1, G.a * G.b);
    g.set(1, 1, Expr(2) + G.a * G.a);
    ChristoffelTable c = christoffel(g, G.sp.coords());

    // g_{ij,k} - Gamma^l_{ik} g_{lj} - Gamma^l_{jk} g_{il} = 0
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                std::vector<Expr> terms{diff(g.at(i, j), G.sp.coord(k))};
                for (int l = 0; l < 2; ++l) {
                    terms.push_back(-c.at(l, i, k) * g.at(l, j));
                    terms.push_back(-c.at(l, j, k) * g.at(i, l));
                }
                CHECK(proved(add(std::move(terms))));
            }

    MetricTable g7(2);
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) g7.set(i, j, Expr(7) * g.at(i, j));
    ChristoffelTable c7 = christoffel(g7, G.sp.coords());
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(proved(c7.at(k, i, j) - c.at(k, i, j)));
}

TEST_CASE("lie derivative of a metric") {
    OneDim F;
    MetricTable flat = F.metric(Expr(1));

    CHECK(lie_derivative_metric({{Expr(0)}}, flat, F.sp.coords()).at(0, 0) == Expr(0));
    CHECK(proved(lie_derivative_metric({{Expr(1) / F.x}}, flat, F.sp.coords()).at(0, 0) +
                 Expr(2) / (F.x * F.x)));

    MetricTable sixx = F.metric(Expr(6) * F.x);
    CHECK(proved(lie_derivative_metric({{Expr(1) / (F.x * F.x)}}, sixx, F.sp.coords()).at(0, 0) +
                 Expr(18) / (F.x * F.x)));
}

TEST_CASE("lie derivative is linear and Leibniz over scalar multiples") {
    OneDim F;
    nsym_test::ExprGen gen({F.x}, 321, false);
    MetricTable g = F.metric(Expr(3) + F.x * F.x);
    for (int i = 0; i < 12; ++i) {
        Expr e1 = gen(2), e2 = gen(2), f = gen(2);
        SpatialVectorField eta1{{e1}}, eta2{{e2}}, sum{{e1 + e2}};
        Expr lhs = lie_derivative_metric(sum, g, F.sp.coords()).at(0, 0);
        Expr rhs = lie_derivative_metric(eta1, g, F.sp.coords()).at(0, 0) +
                   lie_derivative_metric(eta2, g, F.sp.coords()).at(0, 0);
        CHECK(proved(lhs - rhs));

        // L_eta(f*g) = (eta . grad f) g + f L_eta g
        MetricTable fg = F.metric(f * g.at(0, 0));
        Expr left = lie_derivative_metric(eta1, fg, F.sp.coords()).at(0, 0);
        Expr right = e1 * diff(f, F.x) * g.at(0, 0) +
                     f * lie_derivative_metric(eta1, g, F.sp.coords()).at(0, 0);
        CHECK(proved(left - right));
    }
}

TEST_CASE("conformal factor extraction") {
    OneDim F;
    MetricTable flat = F.metric(Expr(1));

    auto homothety = conformal_factor({{F.x}}, flat, F.sp.coords());
    REQUIRE(homothety.has_value());
    CHECK(proved(homothety->psi - Expr(2)));

    auto inv = conformal_factor({{Expr(1) / F.x}}, flat, F.sp.coords());
    REQUIRE(inv.has_value());
    CHECK(proved(inv->psi + Expr(2) / (F.x * F.x)));

    // n = 2 counterexample: L_eta g = diag(2, 0) is not proportional to g
    TwoDim G;
    MetricTable id2(2);
    id2.set(0, 0, Expr(1));
    id2.set(1, 1, Expr(1));
    auto none = conformal_factor({{G.a, Expr(0)}}, id2, G.sp.coords());
    CHECK(!none.has_value());
}
