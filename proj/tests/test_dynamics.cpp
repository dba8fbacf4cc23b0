#include <doctest.h>

#include <cmath>

#include "nsym/certify.hpp"
#include "nsym/dynamics.hpp"
#include "nsym/eval.hpp"
#include "test_util.hpp"

using namespace nsym;
using nsym_test::load_case;

namespace {

struct Case {
    ModelDocument doc;
    Model m;
    explicit Case(const std::string& stem)
        : doc(load_case(stem)),
          m(doc.simulate ? ground_model(build_model(doc), doc.simulate->param_values)
                         : build_model(doc)) {}

    const VariableSpace& sp() const { return *m.space; }
};

Model free_particle() {
    auto spp = std::make_shared<VariableSpace>("t", std::vector<ParamSpec>{{"q", {}}},
                                               std::string("N"), std::vector<ParamSpec>{});
    MetricTable g(1), h(1);
    g.set(0, 0, Expr(1));
    return make_model(spp, g, h, Expr(0), Expr(0));
}

Expr bound_integral(const Case& C, const std::string& cand_name, const Expr& T_value) {
    const CandidateSymmetry* c = C.doc.find_candidate(cand_name);
    REQUIRE(c != nullptr);
    std::map<Expr, Expr, ExprLess> pb;
    for (const auto& [name, p] : C.sp().params())
        pb.emplace(p, num(C.doc.simulate->param_values.at(name)));
    CandidateSymmetry gc;
    gc.name = c->name;
    for (const auto& X : c->orders) {
        SymmetryComponents Y{substitute(X.xi, pb), {}, substitute(X.omega, pb), substitute(X.f, pb)};
        for (const auto& e : X.eta) Y.eta.push_back(substitute(e, pb));
        gc.orders.push_back(std::move(Y));
    }
    Expr I = first_integral(C.m, gc, 0).expr;
    return bind_opaque(I, "T", {C.sp().time()}, T_value);
}

} // namespace

TEST_CASE("compiled evaluators match eval_num") {
    Case A("case_a");
    const auto& sp = A.sp();
    Expr x = sp.coord(0), xd = sp.velocity(0), N = sp.lapse();

    Evaluator sq = compile(x * x, {x});
    CHECK(sq(std::vector<double>{3.0}) == doctest::Approx(9.0));

    Evaluator H = compile(constraint(A.m), {x, xd, N});
    CHECK(H(std::vector<double>{0.0, std::sqrt(2.0), 1.0}) == doctest::Approx(1.0));

    nsym_test::ExprGen gen({x, xd, N}, 13579);
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> point(0.2, 2.1);
    int checked = 0;
    for (int i = 0; i < 160 && checked < 100; ++i) {
        Expr e = gen(4);
        Evaluator ev = compile(e, {x, xd, N});
        const double xv = point(rng), xdv = point(rng), nv = point(rng);
        try {
            const double direct = eval_num(e, {{x, xv}, {xd, xdv}, {N, nv}});
            const double compiled = ev(std::vector<double>{xv, xdv, nv});
            if (!std::isfinite(direct) || std::fabs(direct) > 1e12) continue;
            const double scale = std::max(1.0, std::fabs(direct));
            CHECK(std::fabs(direct - compiled) <= 4e-15 * scale);
            ++checked;
        } catch (const EvalError&) {
            continue;
        }
    }
    CHECK(checked == 100);

    CHECK_THROWS_AS((void)compile(x * N, {x}), UsageError);
    CHECK_THROWS_AS((void)compile(opaque("T", {x}), {x}), UsageError);
}

TEST_CASE("gauge choices") {
    Case A("case_a");
    Expr t = A.sp().time();
    GaugeChoice g = make_gauge(Expr(1) + t / Expr(2), t);
    CHECK(g.Ndot == num(1, 2));
    CHECK_THROWS_AS((void)make_gauge(A.sp().coord(0), t), UsageError);
}

TEST_CASE("project_constraint: roots, signs, infeasible data") {
    Case D("case_d");
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    CHECK(ps.v[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(std::fabs(ps.constraint_value) <= 1e-12);

    ProjectedState neg = project_constraint(D.m, {1.0}, {0.0}, 0, -1, 1.0);
    CHECK(neg.v[0] == doctest::Approx(-std::sqrt(2.0 / 3.0)).epsilon(1e-12));

    Case B("case_b");
    Model bm = ground_model(B.m, {{"Lambda", Rational(3)}, {"v1", Rational(1)}});
    ProjectedState bs = project_constraint(bm, {1.0}, {0.0}, 0, +1, 1.0);
    CHECK(bs.v[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    // case A: positive-definite kinetic term with positive potential
    Case A("case_a");
    try {
        (void)project_constraint(A.m, {1.0}, {0.0}, 0, +1, 1.0);
        CHECK(false);
    } catch (const InfeasibleDataError& e) {
        CHECK(std::string(e.what()).find("discriminant") != std::string::npos);
    }
}

TEST_CASE("free particle moves on straight lines") {
    Model m = free_particle();
    GaugeChoice g = make_gauge(Expr(1), m.space->time());
    Trajectory tr = integrate(m, g, {0.25}, {0.5}, 0.0, 2.0, 1e-3);
    REQUIRE(!tr.blew_up);
    for (long r = 0; r < tr.samples; r += 100) {
        const double t = tr.at(r, 0);
        CHECK(std::fabs(tr.at(r, 1) - (0.25 + 0.5 * t)) <= 1e-10);
    }
}

TEST_CASE("case A off-constraint run is harmonic motion") {
    Case A("case_a");
    GaugeChoice g = make_gauge(Expr(1), A.sp().time());
    Trajectory tr = integrate(A.m, g, {1.0}, {0.0}, 0.0, 1.0, 1e-3);
    REQUIRE(!tr.blew_up);
    for (long r = 0; r < tr.samples; r += 50) {
        const double t = tr.at(r, 0);
        CHECK(std::fabs(tr.at(r, 1) - std::cos(t)) <= 1e-6);
    }
}

TEST_CASE("case D on-constraint run preserves the constraint") {
    Case D("case_d");
    GaugeChoice g = make_gauge(Expr(1), D.sp().time());
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    Trajectory tr = integrate(D.m, g, ps.exact, 0.0, 0.5, 1e-4);
    REQUIRE(!tr.blew_up);
    CHECK(tr.max_abs_constraint <= 1e-7);
}

TEST_CASE("case D blows up in finite time and is flagged") {
    Case D("case_d");
    GaugeChoice g = make_gauge(Expr(1), D.sp().time());
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    Trajectory tr = integrate(D.m, g, ps.exact, 0.0, 3.0, 1e-4);
    CHECK(tr.blew_up);
    CHECK(tr.samples < 30001);
    CHECK(tr.samples > 0);
}

TEST_CASE("RK4 order on the case A closed form") {
    Case A("case_a");
    GaugeChoice g = make_gauge(Expr(1), A.sp().time());
    auto global_error = [&](double h) {
        Trajectory tr = integrate(A.m, g, {1.0}, {0.0}, 0.0, 1.0, h);
        double worst = 0.0;
        for (long r = 0; r < tr.samples; ++r)
            worst = std::max(worst, std::fabs(tr.at(r, 1) - std::cos(tr.at(r, 0))));
        return worst;
    };
    const double e1 = global_error(0.02);
    const double e2 = global_error(0.01);
    CHECK(e1 / e2 >= std::pow(2.0, 3.8));
}

TEST_CASE("constraint drift shrinks at fourth order when the step halves") {
    Case D("case_d");
    GaugeChoice g = make_gauge(Expr(1), D.sp().time());
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    Trajectory coarse = integrate(D.m, g, ps.exact, 0.0, 0.5, 1e-4);
    Trajectory fine = integrate(D.m, g, ps.exact, 0.0, 0.5, 5e-5);
    CHECK(coarse.max_abs_constraint / fine.max_abs_constraint >= std::pow(2.0, 3.8));
}

TEST_CASE("gauge robustness: drift bound holds for N(t) = 1 + t/2") {
    Case D("case_d");
    Expr t = D.sp().time();
    GaugeChoice g = make_gauge(Expr(1) + t / Expr(2), t);
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    Expr I = bound_integral(D, "XDi", Expr(1));
    MonitorSpec ms{"XDi", 0, I, std::nullopt};
    Trajectory tr = integrate(D.m, g, ps.exact, 0.0, 0.5, 1e-4, {ms});
    REQUIRE(!tr.blew_up);
    DriftStats st = drift(tr, 0);
    CHECK(st.max_constraint <= 1e-7);
    CHECK(st.max_drift <= 1e-7 * std::max(1.0, std::fabs(st.initial_value)));
}

TEST_CASE("monitored drift and certificate gap") {
    // constant integral: zero drift up to rounding
    Case D("case_d");
    GaugeChoice g = make_gauge(Expr(1), D.sp().time());
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    MonitorSpec konst{"const", 0, Expr(3), std::nullopt};
    Trajectory tr = integrate(D.m, g, ps.exact, 0.0, 0.25, 1e-3, {konst});
    CHECK(drift(tr, 0).max_drift <= 1e-15);

    // case A off-constraint: dI/dt tracks lambda * H pointwise
    Case A("case_a");
    GaugeChoice ga = make_gauge(Expr(1), A.sp().time());
    Expr I = bound_integral(A, "XAi", Expr(0));
    FirstIntegral If{0, I};
    WeakCertificate cert = weak_certificate(A.m, If);
    REQUIRE(cert.remainder_verdict.proved());
    MonitorSpec ms{"XAi", 0, I, cert.lambda * constraint(A.m)};
    Trajectory tra = integrate(A.m, ga, {1.0}, {0.0}, 0.0, 1.0, 1e-3, {ms});
    DriftStats st = drift(tra, 0);
    REQUIRE(st.max_certificate_gap.has_value());
    CHECK(*st.max_certificate_gap <= 1e-5);
}

TEST_CASE("gauge must not vanish inside the window") {
    Case A("case_a");
    Expr t = A.sp().time();
    GaugeChoice g = make_gauge(t - Expr(1), t); // zero at t = 1
    CHECK_THROWS_AS((void)integrate(A.m, g, {1.0}, {0.0}, 0.0, 2.0, 1e-2), UsageError);
}

TEST_CASE("trajectory export carries the expected header") {
    Case D("case_d");
    GaugeChoice g = make_gauge(Expr(1), D.sp().time());
    ProjectedState ps = project_constraint(D.m, {1.0}, {0.0}, 0, +1, 1.0);
    MonitorSpec ms{"XDi", 0, bound_integral(D, "XDi", Expr(1)), std::nullopt};
    Trajectory tr = integrate(D.m, g, ps.exact, 0.0, 0.01, 1e-3, {ms});
    std::string csv = tr.to_csv();
    CHECK(csv.rfind("t,x,xdot,N,Ndot,H,I_XDi_0\n", 0) == 0);
    // one header plus one line per sample
    long lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == tr.samples + 1);
}
