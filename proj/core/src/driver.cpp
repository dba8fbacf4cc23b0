#include "nsym/driver.hpp"

#include <json.hpp>
#include <sstream>

#include "nsym/dynamics.hpp"
#include "nsym/report.hpp"

namespace nsym::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json verdict_json(const ZeroVerdict& v) {
    ordered_json j;
    j["state"] = zero_state_name(v.state);
    if (v.witness) {
        j["witness"] = render_assignments(*v.witness);
        j["witness_value"] = v.witness->value;
    } else {
        j["witness"] = nullptr;
    }
    if (v.state == ZeroState::ProbablyZero) {
        ordered_json pts = ordered_json::array();
        for (const auto& p : v.points) pts.push_back(render_assignments(p));
        j["points"] = pts;
    }
    return j;
}

ordered_json entry_json(const EntryVerdict& e) {
    ordered_json j;
    j["gamma"] = e.gamma;
    j["class"] = monomial_class_name(e.entry.cls);
    j["indices"] = e.entry.xidx;
    j["monomial"] = to_string(e.entry.monomial.as_expr());
    j["residual"] = to_string(e.entry.residual);
    j["verdict"] = verdict_json(e.verdict);
    return j;
}

std::vector<const CandidateSymmetry*> selected_candidates(const ModelDocument& doc,
                                                          const RunOptions& opts) {
    std::vector<const CandidateSymmetry*> out;
    if (opts.candidate) {
        const CandidateSymmetry* c = doc.find_candidate(*opts.candidate);
        if (!c) throw UsageError("no candidate named '" + *opts.candidate + "' in the document");
        out.push_back(c);
    } else {
        for (const auto& c : doc.candidates) out.push_back(&c);
    }
    return out;
}

CandidateSymmetry ground_candidate(const CandidateSymmetry& c,
                                   const std::map<Expr, Expr, ExprLess>& bind) {
    CandidateSymmetry out;
    out.name = c.name;
    for (const auto& X : c.orders) {
        SymmetryComponents Y;
        Y.xi = substitute(X.xi, bind);
        for (const auto& e : X.eta) Y.eta.push_back(substitute(e, bind));
        Y.omega = substitute(X.omega, bind);
        Y.f = substitute(X.f, bind);
        out.orders.push_back(std::move(Y));
    }
    return out;
}

ordered_json report_header(const ModelDocument& doc, const RunOptions& opts) {
    ordered_json j;
    j["schema"] = "nsym-report/1";
    j["command"] = opts.command;
    j["model"] = doc.name;
    j["order"] = doc.order;
    j["seed"] = opts.seed;
    if (opts.fixed_lapse)
        j["fixed_lapse"] = opts.fixed_lapse->str();
    else
        j["fixed_lapse"] = nullptr;
    return j;
}

RunResult cmd_verify(const ModelDocument& doc, const RunOptions& opts) {
    Model m = build_model(doc);
    ZeroOptions zopts;
    zopts.seed = opts.seed;

    ordered_json j = report_header(doc, opts);
    std::ostringstream text;
    text << "nsym verify - model " << doc.name << " (seed " << opts.seed;
    if (opts.fixed_lapse) text << ", fixed lapse " << opts.fixed_lapse->str();
    text << ")\n";

    bool any_fail = false, any_prob = false;
    ordered_json results = ordered_json::array();
    for (const CandidateSymmetry* c : selected_candidates(doc, opts)) {
        ordered_json cj;
        cj["candidate"] = c->name;
        try {
            VerificationReport rep = opts.fixed_lapse
                                         ? verify_fixed_lapse(m, *c, num(*opts.fixed_lapse), zopts)
                                         : verify(m, *c, zopts);
            cj["status"] = verify_status_name(rep.status);
            cj["highest_order_checked"] = rep.highest_order_checked;
            cj["aborted_sequential"] = rep.aborted_sequential;
            ordered_json entries = ordered_json::array();
            for (const auto& e : rep.entries) entries.push_back(entry_json(e));
            cj["entries"] = entries;

            any_fail = any_fail || rep.status == VerifyStatus::Fail;
            any_prob = any_prob || rep.status == VerifyStatus::PassProbabilistic;
            text << "  candidate " << c->name << ": " << verify_status_name(rep.status) << "\n";
            for (const auto& e : rep.entries) {
                if (e.verdict.state == ZeroState::ProvedZero) continue;
                text << "    [gamma " << e.gamma << "] class " << monomial_class_name(e.entry.cls) << " "
                     << to_string(e.entry.monomial.as_expr()) << ": " << zero_state_name(e.verdict.state);
                if (e.verdict.witness)
                    text << "; witness " << render_assignments(*e.verdict.witness) << " -> "
                         << e.verdict.witness->value << "; residual = " << to_string(e.entry.residual);
                text << "\n";
            }
        } catch (const Error& err) {
            cj["status"] = "rejected";
            cj["diagnosis"] = err.what();
            any_fail = true;
            text << "  candidate " << c->name << ": rejected (" << err.what() << ")\n";
        }
        results.push_back(std::move(cj));
    }
    j["results"] = results;
    const std::string overall = any_fail ? "fail" : (any_prob ? "pass-probabilistic" : "pass");
    j["overall"] = overall;
    text << "overall: " << overall << "\n";

    RunResult out;
    out.exit_code = any_fail ? 1 : 0;
    out.human_text = text.str();
    out.machine_json = j.dump(2) + "\n";
    return out;
}

RunResult cmd_derive(const ModelDocument& doc, const RunOptions& opts) {
    Model m = build_model(doc);
    ZeroOptions zopts;
    zopts.seed = opts.seed;

    ordered_json j = report_header(doc, opts);
    std::ostringstream text;
    text << "nsym derive - model " << doc.name << "\n";

    const int top = opts.order ? *opts.order : m.order;
    if (top > m.order) throw UsageError("--order exceeds the model's truncation order");

    std::optional<CandidateSymmetry> cand;
    if (opts.candidate) {
        const CandidateSymmetry* c = doc.find_candidate(*opts.candidate);
        if (!c) throw UsageError("no candidate named '" + *opts.candidate + "' in the document");
        cand = *c;
    }

    ordered_json systems = ordered_json::array();
    for (int gamma = 0; gamma <= top; ++gamma) {
        DeterminingSystem ds = determining_system(m, gamma, cand, zopts);
        ordered_json sj;
        sj["gamma"] = gamma;
        ordered_json entries = ordered_json::array();
        text << "  epsilon^" << gamma << " determining system (" << ds.entries.size() << " classes):\n";
        for (const auto& e : ds.entries) {
            ordered_json ej;
            ej["class"] = monomial_class_name(e.cls);
            ej["indices"] = e.xidx;
            ej["monomial"] = to_string(e.monomial.as_expr());
            ej["residual"] = to_string(e.residual);
            entries.push_back(std::move(ej));
            text << "    (" << monomial_class_name(e.cls) << ") " << to_string(e.monomial.as_expr())
                 << ": " << to_string(e.residual) << " = 0\n";
        }
        sj["entries"] = entries;
        systems.push_back(std::move(sj));
    }
    if (opts.dump_truncated) {
        const CandidateSymmetry& c = cand ? *cand : generic_candidate(m, m.order);
        Expr tail = noether_residual_tail(m, c);
        j["truncated_tail"] = to_string(tail);
        text << "  discarded epsilon^" << (m.order + 1) << " tail: " << to_string(tail) << "\n";
    }
    j["systems"] = systems;
    j["overall"] = "pass";

    RunResult out;
    out.human_text = text.str();
    out.machine_json = j.dump(2) + "\n";
    return out;
}

RunResult cmd_integral(const ModelDocument& doc, const RunOptions& opts) {
    Model m = build_model(doc);
    ZeroOptions zopts;
    zopts.seed = opts.seed;

    ordered_json j = report_header(doc, opts);
    std::ostringstream text;
    text << "nsym integral - model " << doc.name << "\n";

    bool any_invalid = false;
    ordered_json results = ordered_json::array();
    for (const CandidateSymmetry* c : selected_candidates(doc, opts)) {
        ordered_json cj;
        cj["candidate"] = c->name;
        text << "  candidate " << c->name << ":\n";
        try {
            std::vector<WeakCertificate> chain = weak_certificate_chain(m, *c, zopts);
            ordered_json orders = ordered_json::array();
            for (const auto& cert : chain) {
                FirstIntegral I = first_integral(m, *c, cert.gamma);
                ordered_json oj;
                oj["gamma"] = cert.gamma;
                oj["integral"] = to_string(I.expr);
                ordered_json certj;
                certj["lambda"] = to_string(cert.lambda);
                certj["lambda_dldn"] = to_string(-cert.lambda); // against dL/dN = -H
                certj["remainder"] = to_string(cert.remainder);
                certj["remainder_verdict"] = verdict_json(cert.remainder_verdict);
                certj["valid"] = cert.valid();
                oj["certificate"] = certj;
                orders.push_back(std::move(oj));
                any_invalid = any_invalid || !cert.valid();
                text << "    I_" << cert.gamma << " = " << to_string(I.expr) << "\n";
                text << "      certificate: lambda = " << to_string(cert.lambda) << "; remainder "
                     << zero_state_name(cert.remainder_verdict.state)
                     << (cert.valid() ? " (valid)" : " (INVALID)") << "\n";
            }
            cj["orders"] = orders;
        } catch (const Error& err) {
            cj["status"] = "rejected";
            cj["diagnosis"] = err.what();
            any_invalid = true;
            text << "    rejected (" << err.what() << ")\n";
        }
        results.push_back(std::move(cj));
    }
    j["results"] = results;
    j["overall"] = any_invalid ? "fail" : "pass";
    text << "overall: " << (any_invalid ? "fail" : "pass") << "\n";

    RunResult out;
    out.exit_code = any_invalid ? 1 : 0;
    out.human_text = text.str();
    out.machine_json = j.dump(2) + "\n";
    return out;
}

RunResult cmd_simulate(const ModelDocument& doc, const RunOptions& opts) {
    if (!doc.simulate) throw UsageError("document has no simulate section");
    const SimulateSpec& sim = *doc.simulate;
    Model m = build_model(doc);
    Model gm = ground_model(m, sim.param_values);
    const auto& sp = *gm.space;
    ZeroOptions zopts;
    zopts.seed = opts.seed;

    std::map<Expr, Expr, ExprLess> param_bind;
    for (const auto& [name, p] : sp.params()) param_bind.emplace(p, num(sim.param_values.at(name)));

    GaugeChoice gauge = make_gauge(sim.gauge, sp.time());
    const std::vector<Expr> t_only{sp.time()};
    Evaluator Nval = compile(gauge.N, t_only);
    const double t0 = sim.t0.convert_to<double>();
    const double t1 = sim.t1.convert_to<double>();
    const double step = sim.step.convert_to<double>();

    std::vector<double> x0(sp.dim(), 0.0), v0(sp.dim(), 0.0);
    std::vector<bool> have_x(sp.dim(), false);
    for (const auto& [i, v] : sim.x_init) {
        x0[i - 1] = v.convert_to<double>();
        have_x[i - 1] = true;
    }
    for (int i = 0; i < sp.dim(); ++i)
        if (!have_x[i]) throw UsageError("simulate: x[" + std::to_string(i + 1) + "] is not set");
    for (const auto& [i, v] : sim.xdot_init) v0[i - 1] = v.convert_to<double>();

    double projected_H = 0.0;
    InitialState ic = initial_state(x0, v0);
    if (sim.pivot > 0) {
        const double tarr[1] = {t0};
        ProjectedState ps = project_constraint(gm, x0, v0, sim.pivot - 1, sim.sign,
                                               Nval(std::span<const double>(tarr, 1)));
        ic = ps.exact;
        projected_H = ps.constraint_value;
    }

    // Monitors: per candidate, every available order; certificates only for
    // the exact order (the trajectory follows the exact flow).
    std::vector<MonitorSpec> monitors;
    for (const auto& name : sim.monitors) {
        const CandidateSymmetry* c = doc.find_candidate(name);
        if (!c) throw UsageError("simulate monitors unknown candidate '" + name + "'");
        CandidateSymmetry gc = ground_candidate(*c, param_bind);
        std::vector<WeakCertificate> chain;
        for (int g = 0; g <= std::min(gc.max_order(), gm.order); ++g) {
            FirstIntegral I = first_integral(gm, gc, g);
            Expr expr = I.expr;
            for (const auto& [oname, body] : sim.binds) expr = bind_opaque(expr, oname, t_only, body);
            if (!opaque_nodes_of(expr).empty())
                throw UsageError("monitor " + name + " still contains an opaque function; add a bind line");
            MonitorSpec ms;
            ms.name = name;
            ms.gamma = g;
            ms.integral = expr;
            if (g == 0) {
                FirstIntegral Ib{0, expr};
                WeakCertificate cert = weak_certificate(gm, Ib, zopts);
                if (cert.valid()) ms.certificate = cert.lambda * constraint(gm);
            }
            monitors.push_back(std::move(ms));
        }
    }

    Trajectory traj = integrate(gm, gauge, ic, t0, t1, step, monitors);

    ordered_json j = report_header(doc, opts);
    std::ostringstream text;
    text << "nsym simulate - model " << doc.name << "\n";
    text << "  gauge N(t) = " << to_string(gauge.N) << ", window [" << sim.t0.str() << ", "
         << sim.t1.str() << "], step " << sim.step.str() << " (" << traj.samples << " samples)\n";
    if (sim.pivot > 0)
        text << "  projected initial data: pivot xdot[" << sim.pivot << "], |H(0)| = " << std::abs(projected_H)
             << "\n";

    j["gauge"] = to_string(gauge.N);
    j["t0"] = sim.t0.str();
    j["t1"] = sim.t1.str();
    j["step"] = sim.step.str();
    j["samples"] = traj.samples;
    j["blow_up"] = traj.blew_up;

    bool violated = traj.blew_up;
    const double maxH = traj.max_abs_constraint;
    j["max_abs_constraint"] = maxH;
    text << "  max |H| = " << maxH << (traj.blew_up ? "  [trajectory truncated: blow-up]" : "") << "\n";
    if (sim.tol_constraint && maxH > sim.tol_constraint->convert_to<double>()) violated = true;

    ordered_json monj = ordered_json::array();
    for (std::size_t i = 0; i < traj.monitors.size(); ++i) {
        DriftStats st = drift(traj, i);
        ordered_json mj;
        mj["name"] = traj.monitors[i].name;
        mj["gamma"] = traj.monitors[i].gamma;
        mj["initial"] = st.initial_value;
        mj["max_drift"] = st.max_drift;
        text << "  monitor " << traj.monitors[i].name << " order " << traj.monitors[i].gamma << ": I(0) = "
             << st.initial_value << ", max drift = " << st.max_drift;
        if (st.max_certificate_gap) {
            mj["max_certificate_gap"] = *st.max_certificate_gap;
            text << ", max |dI/dt - lambda*H| = " << *st.max_certificate_gap;
        }
        text << "\n";
        if (traj.monitors[i].gamma == 0) {
            const double drift_scale = std::max(1.0, std::fabs(st.initial_value));
            if (sim.tol_drift && st.max_drift > sim.tol_drift->convert_to<double>() * drift_scale)
                violated = true;
            if (sim.tol_certificate && st.max_certificate_gap &&
                *st.max_certificate_gap > sim.tol_certificate->convert_to<double>())
                violated = true;
        }
        monj.push_back(std::move(mj));
    }
    j["monitors"] = monj;
    j["trajectory_file"] = "trajectory.csv";
    j["overall"] = violated ? "fail" : "pass";
    text << "status: " << (violated ? "fail" : "pass") << "\n";

    RunResult out;
    out.exit_code = violated ? 1 : 0;
    out.human_text = text.str();
    out.machine_json = j.dump(2) + "\n";
    out.artifacts.emplace_back("trajectory.csv", traj.to_csv());
    return out;
}

} // namespace

RunResult run_command(const ModelDocument& doc, const RunOptions& opts) {
    if (opts.command == "verify") return cmd_verify(doc, opts);
    if (opts.command == "derive") return cmd_derive(doc, opts);
    if (opts.command == "integral") return cmd_integral(doc, opts);
    if (opts.command == "simulate") return cmd_simulate(doc, opts);
    throw UsageError("unknown command '" + opts.command + "'");
}

} // namespace nsym::cli
