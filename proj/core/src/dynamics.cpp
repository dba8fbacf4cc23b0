#include "nsym/dynamics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace nsym {

namespace {

template <class T>
T pow_int(T b, int k) {
    bool inv = k < 0;
    unsigned n = static_cast<unsigned>(inv ? -static_cast<long long>(k) : k);
    T r = 1;
    while (n) {
        if (n & 1u) r *= b;
        b *= b;
        n >>= 1u;
    }
    return inv ? T(1) / r : r;
}

} // namespace

template <class T>
T Evaluator::run(std::span<const T> slots, const std::vector<T>& consts) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    std::vector<T> stack;
    stack.reserve(16);
    for (const auto& in : prog_) {
        switch (in.op) {
        case Op::Const:
            stack.push_back(consts[static_cast<std::size_t>(in.arg)]);
            break;
        case Op::Slot:
            stack.push_back(slots[static_cast<std::size_t>(in.arg)]);
            break;
        case Op::Add: {
            const std::size_t base = stack.size() - static_cast<std::size_t>(in.arg);
            T acc = 0;
            for (std::size_t i = base; i < stack.size(); ++i) acc += stack[i];
            stack.resize(base);
            stack.push_back(acc);
            break;
        }
        case Op::Mul: {
            const std::size_t base = stack.size() - static_cast<std::size_t>(in.arg);
            T acc = 1;
            for (std::size_t i = base; i < stack.size(); ++i) acc *= stack[i];
            stack.resize(base);
            stack.push_back(acc);
            break;
        }
        case Op::Pow: {
            T e = stack.back();
            stack.pop_back();
            T b = stack.back();
            stack.pop_back();
            stack.push_back(pow(b, e));
            break;
        }
        case Op::PowInt: {
            T b = stack.back();
            stack.pop_back();
            stack.push_back(pow_int(b, in.arg));
            break;
        }
        case Op::Sin:
            stack.back() = sin(stack.back());
            break;
        case Op::Cos:
            stack.back() = cos(stack.back());
            break;
        case Op::Exp:
            stack.back() = exp(stack.back());
            break;
        case Op::Ln:
            stack.back() = log(stack.back());
            break;
        }
    }
    return stack.back();
}

double Evaluator::operator()(std::span<const double> slots) const { return run(slots, consts_d_); }
QuadReal Evaluator::eval_quad(std::span<const QuadReal> slots) const { return run(slots, consts_q_); }

Evaluator compile(const Expr& e, const std::vector<Expr>& layout) {
    Evaluator ev;
    ev.nslots_ = static_cast<int>(layout.size());

    auto slot_of = [&](const Expr& a) -> int {
        for (std::size_t i = 0; i < layout.size(); ++i)
            if (layout[i] == a) return static_cast<int>(i);
        return -1;
    };

    auto emit = [&](auto&& self, const Expr& x) -> void {
        switch (x.kind()) {
        case Kind::Num: {
            const int idx = static_cast<int>(ev.consts_d_.size());
            ev.consts_d_.push_back(x.num().convert_to<double>());
            ev.consts_q_.push_back(x.num().convert_to<QuadReal>());
            ev.prog_.push_back({Evaluator::Op::Const, idx});
            return;
        }
        case Kind::Atom: {
            int s = slot_of(x);
            if (s < 0) throw UsageError("compile: atom not in layout: " + x.atom().name);
            ev.prog_.push_back({Evaluator::Op::Slot, s});
            return;
        }
        case Kind::Opaque:
            throw UsageError("compile: unbound opaque function " + x.opname());
        case Kind::Fun: {
            self(self, x.kid(0));
            Evaluator::Op op = Evaluator::Op::Sin;
            switch (x.fun()) {
            case FunKind::Sin: op = Evaluator::Op::Sin; break;
            case FunKind::Cos: op = Evaluator::Op::Cos; break;
            case FunKind::Exp: op = Evaluator::Op::Exp; break;
            case FunKind::Ln: op = Evaluator::Op::Ln; break;
            }
            ev.prog_.push_back({op, 0});
            return;
        }
        case Kind::Pow: {
            const Expr& b = x.kid(0);
            const Expr& xp = x.kid(1);
            if (xp.is_integer_literal()) {
                const auto k = boost::multiprecision::numerator(xp.num());
                if (k >= -16 && k <= 16) {
                    self(self, b);
                    ev.prog_.push_back({Evaluator::Op::PowInt, k.convert_to<int>()});
                    return;
                }
            }
            self(self, b);
            self(self, xp);
            ev.prog_.push_back({Evaluator::Op::Pow, 0});
            return;
        }
        case Kind::Mul:
        case Kind::Add: {
            for (const auto& k : x.kids()) self(self, k);
            ev.prog_.push_back({x.kind() == Kind::Mul ? Evaluator::Op::Mul : Evaluator::Op::Add,
                                static_cast<int>(x.nkids())});
            return;
        }
        }
    };
    emit(emit, e);
    return ev;
}

GaugeChoice make_gauge(const Expr& N_of_t, const Expr& t_atom) {
    for (const auto& a : atoms_of(N_of_t))
        if (!(a == t_atom)) throw UsageError("gauge N(t) may depend on t only; found " + a.atom().name);
    return GaugeChoice{N_of_t, diff(N_of_t, t_atom)};
}

namespace {

std::vector<Expr> trajectory_layout(const Model& m) {
    const auto& sp = *m.space;
    std::vector<Expr> layout{sp.time()};
    for (int i = 0; i < sp.dim(); ++i) layout.push_back(sp.coord(i));
    for (int i = 0; i < sp.dim(); ++i) layout.push_back(sp.velocity(i));
    layout.push_back(sp.lapse());
    layout.push_back(sp.lapse_velocity());
    return layout;
}

} // namespace

InitialState initial_state(const std::vector<double>& x, const std::vector<double>& v) {
    InitialState s;
    for (double xv : x) s.x.emplace_back(xv);
    for (double vv : v) s.v.emplace_back(vv);
    return s;
}

Trajectory integrate(const Model& m, const GaugeChoice& gauge, std::vector<double> x0,
                     std::vector<double> v0, double t0, double t1, double step,
                     const std::vector<MonitorSpec>& monitors) {
    return integrate(m, gauge, initial_state(x0, v0), t0, t1, step, monitors);
}

Trajectory integrate(const Model& m, const GaugeChoice& gauge, const InitialState& ic, double t0,
                     double t1, double step, const std::vector<MonitorSpec>& monitors) {
    const auto& sp = *m.space;
    const int n = sp.dim();
    if (step <= 0) throw UsageError("integration step must be positive");
    if (static_cast<int>(ic.x.size()) != n || static_cast<int>(ic.v.size()) != n)
        throw UsageError("initial data arity does not match the coordinate count");

    const std::vector<Expr> layout = trajectory_layout(m);
    std::vector<Evaluator> accel;
    for (const auto& a : accel_solve(m, false).accel) accel.push_back(compile(a, layout));
    Evaluator Hval = compile(constraint(m), layout);
    Evaluator gaugeN = compile(gauge.N, {sp.time()});
    Evaluator gaugeNd = compile(gauge.Ndot, {sp.time()});

    struct CompiledMonitor {
        Evaluator value;
        std::optional<Evaluator> cert;
    };
    std::vector<CompiledMonitor> cm;
    for (const auto& mo : monitors) {
        CompiledMonitor c{compile(mo.integral, layout), std::nullopt};
        if (mo.certificate) c.cert = compile(*mo.certificate, layout);
        cm.push_back(std::move(c));
    }

    const long nsteps = std::lround((t1 - t0) / step);
    if (nsteps < 1) throw UsageError("empty integration window");

    // Gauge sanity across the window.
    for (long k = 0; k <= nsteps; ++k) {
        const long double tk = static_cast<long double>(t0) + static_cast<long double>(k) * step;
        const double nv = gaugeN(std::to_array<double>({static_cast<double>(tk)}));
        if (!std::isfinite(nv) || std::fabs(nv) < 1e-12)
            throw UsageError("gauge N(t) vanishes inside the integration window");
    }

    Trajectory traj;
    traj.step = step;
    traj.columns.push_back("t");
    for (int i = 0; i < n; ++i) traj.columns.push_back(sp.coord(i).atom().name);
    traj.first_xdot = static_cast<int>(traj.columns.size());
    for (int i = 0; i < n; ++i) traj.columns.push_back(sp.velocity(i).atom().name);
    traj.col_N = static_cast<int>(traj.columns.size());
    traj.columns.push_back(sp.lapse().atom().name);
    traj.columns.push_back(sp.lapse_velocity().atom().name);
    traj.col_H = static_cast<int>(traj.columns.size());
    traj.columns.push_back("H");
    for (const auto& mo : monitors) {
        Trajectory::MonitorCols mc;
        mc.name = mo.name;
        mc.gamma = mo.gamma;
        mc.value_col = static_cast<int>(traj.columns.size());
        traj.columns.push_back("I_" + mo.name + "_" + std::to_string(mo.gamma));
        if (mo.certificate) {
            mc.certificate_col = static_cast<int>(traj.columns.size());
            traj.columns.push_back("lamH_" + mo.name + "_" + std::to_string(mo.gamma));
        }
        traj.monitors.push_back(std::move(mc));
    }

    using R = QuadReal;
    std::vector<R> y(2 * n);
    for (int i = 0; i < n; ++i) y[i] = ic.x[i];
    for (int i = 0; i < n; ++i) y[n + i] = ic.v[i];

    std::vector<R> slots(layout.size());
    auto fill_slots = [&](const R& t, const std::vector<R>& state) {
        slots[0] = t;
        for (int i = 0; i < n; ++i) slots[1 + i] = state[i];
        for (int i = 0; i < n; ++i) slots[1 + n + i] = state[n + i];
        const R tarr[1] = {t};
        slots[1 + 2 * n] = gaugeN.eval_quad(std::span<const R>(tarr, 1));
        slots[2 + 2 * n] = gaugeNd.eval_quad(std::span<const R>(tarr, 1));
    };
    auto deriv = [&](const R& t, const std::vector<R>& state, std::vector<R>& dy) -> bool {
        fill_slots(t, state);
        for (int i = 0; i < n; ++i) dy[i] = state[n + i];
        for (int i = 0; i < n; ++i) {
            dy[n + i] = accel[i].eval_quad(slots);
            if (!std::isfinite(dy[n + i].convert_to<double>())) return false;
        }
        return true;
    };

    // Drift and constraint maxima accumulate at integrator precision; the
    // exported columns are double.
    R max_H = 0;
    std::vector<R> mon_initial(cm.size(), R(0)), mon_drift(cm.size(), R(0));
    auto qabs = [](const R& v) { return v < 0 ? R(-v) : v; };
    auto record = [&](const R& t, const std::vector<R>& state) -> bool {
        fill_slots(t, state);
        std::vector<double> row;
        row.reserve(traj.columns.size());
        for (const auto& s : slots) row.push_back(s.convert_to<double>());
        const R Hq = Hval.eval_quad(slots);
        row.push_back(Hq.convert_to<double>());
        std::vector<R> mon_now(cm.size(), R(0));
        for (std::size_t i = 0; i < cm.size(); ++i) {
            mon_now[i] = cm[i].value.eval_quad(slots);
            row.push_back(mon_now[i].convert_to<double>());
            if (cm[i].cert) row.push_back(cm[i].cert->eval_quad(slots).convert_to<double>());
        }
        for (double v : row)
            if (!std::isfinite(v)) return false;
        if (qabs(Hq) > max_H) max_H = qabs(Hq);
        for (std::size_t i = 0; i < cm.size(); ++i) {
            if (traj.samples == 0) {
                mon_initial[i] = mon_now[i];
                traj.monitors[i].initial_value = mon_now[i].convert_to<double>();
            }
            const R d = qabs(mon_now[i] - mon_initial[i]);
            if (d > mon_drift[i]) mon_drift[i] = d;
        }
        traj.data.insert(traj.data.end(), row.begin(), row.end());
        ++traj.samples;
        return true;
    };

    std::vector<R> k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);
    if (!record(t0, y)) {
        traj.blew_up = true;
        return traj;
    }
    for (long s = 0; s < nsteps; ++s) {
        const R t = static_cast<R>(t0) + static_cast<R>(s) * static_cast<R>(step);
        const R hstep = static_cast<R>(step);
        bool ok = deriv(t, y, k1);
        for (int i = 0; ok && i < 2 * n; ++i) tmp[i] = y[i] + hstep / 2 * k1[i];
        ok = ok && deriv(t + hstep / 2, tmp, k2);
        for (int i = 0; ok && i < 2 * n; ++i) tmp[i] = y[i] + hstep / 2 * k2[i];
        ok = ok && deriv(t + hstep / 2, tmp, k3);
        for (int i = 0; ok && i < 2 * n; ++i) tmp[i] = y[i] + hstep * k3[i];
        ok = ok && deriv(t + hstep, tmp, k4);
        if (ok) {
            for (int i = 0; i < 2 * n; ++i)
                y[i] += hstep / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            ok = record(t + hstep, y);
        }
        if (!ok) {
            traj.blew_up = true;
            break;
        }
    }
    traj.max_abs_constraint = max_H.convert_to<double>();
    for (std::size_t i = 0; i < cm.size(); ++i)
        traj.monitors[i].max_drift = mon_drift[i].convert_to<double>();
    return traj;
}

ProjectedState project_constraint(const Model& m, const std::vector<double>& x,
                                  const std::vector<double>& v_partial, int pivot, int sign,
                                  double N0) {
    using std::sqrt;
    using R = QuadReal;
    const auto& sp = *m.space;
    const int n = sp.dim();
    if (pivot < 0 || pivot >= n) throw UsageError("pivot velocity index out of range");

    const std::vector<Expr> layout = trajectory_layout(m);
    Evaluator Hval = compile(constraint(m), layout);
    std::vector<R> slots(layout.size(), R(0));
    for (int i = 0; i < n; ++i) slots[1 + i] = x[i];
    for (int i = 0; i < n; ++i) slots[1 + n + i] = v_partial[i];
    slots[1 + 2 * n] = N0;

    auto H_at = [&](const R& v) {
        slots[1 + n + pivot] = v;
        return Hval.eval_quad(slots);
    };
    // H is quadratic in the pivot velocity: A v^2 + B v + C.
    const R C = H_at(R(0));
    const R Hp = H_at(R(1)), Hm = H_at(R(-1));
    const R A = (Hp + Hm) / 2 - C;
    const R B = (Hp - Hm) / 2;

    R root;
    if (A == 0) {
        if (B == 0) throw InfeasibleDataError("constraint does not involve the pivot velocity");
        root = -C / B;
    } else {
        const R disc = B * B - 4 * A * C;
        if (disc < 0)
            throw InfeasibleDataError("no real root: discriminant = " +
                                      std::to_string(disc.convert_to<double>()));
        root = (-B + (sign >= 0 ? 1 : -1) * sqrt(disc)) / (2 * A);
    }

    ProjectedState out;
    out.x = x;
    out.v = v_partial;
    out.v[pivot] = root.convert_to<double>();
    out.constraint_value = H_at(root).convert_to<double>();
    out.exact = initial_state(x, v_partial);
    out.exact.v[pivot] = root;
    return out;
}

DriftStats drift(const Trajectory& traj, std::size_t monitor_index) {
    if (monitor_index >= traj.monitors.size()) throw UsageError("monitor index out of range");
    const auto& mc = traj.monitors[monitor_index];
    DriftStats st;
    if (traj.samples == 0) return st;
    st.initial_value = mc.initial_value;
    st.max_drift = mc.max_drift;
    st.max_constraint = traj.max_abs_constraint;
    if (mc.certificate_col >= 0 && traj.samples >= 3) {
        double gap = 0.0;
        for (long r = 1; r + 1 < traj.samples; ++r) {
            const double didt =
                (traj.at(r + 1, mc.value_col) - traj.at(r - 1, mc.value_col)) / (2.0 * traj.step);
            gap = std::max(gap, std::fabs(didt - traj.at(r, mc.certificate_col)));
        }
        st.max_certificate_gap = gap;
    }
    return st;
}

std::string Trajectory::to_csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
    char buf[64];
    for (long r = 0; r < samples; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", at(r, static_cast<int>(c)));
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace nsym
