#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <span>
#include <string>

#include "nsym/model.hpp"

namespace nsym {

/// Scalar used inside the integrator. Conservation-drift measurements have to
/// resolve O(step^4) truncation well below the double rounding floor, so the
/// stepping runs in quad precision; samples are stored as double.
using QuadReal = boost::multiprecision::cpp_bin_float_quad;

/// Expression compiled to a postfix program over a fixed atom layout.
/// Evaluation is deterministic and matches eval_num to rounding.
class Evaluator {
public:
    double operator()(std::span<const double> slots) const;
    QuadReal eval_quad(std::span<const QuadReal> slots) const;

    int arity() const { return nslots_; }

private:
    friend Evaluator compile(const Expr&, const std::vector<Expr>&);

    enum class Op : std::uint8_t { Const, Slot, Add, Mul, Pow, PowInt, Sin, Cos, Exp, Ln };
    struct Instr {
        Op op;
        int arg = 0; // slot index / arity / small exponent / constant index
    };
    template <class T>
    T run(std::span<const T> slots, const std::vector<T>& consts) const;

    std::vector<Instr> prog_;
    std::vector<double> consts_d_;
    std::vector<QuadReal> consts_q_;
    int nslots_ = 0;
};

/// Compile over an ordered atom layout. Every atom of e must be in the
/// layout; opaque applications must have been bound away beforehand.
Evaluator compile(const Expr& e, const std::vector<Expr>& layout);

/// Lapse gauge N(t); the derivative is taken symbolically.
struct GaugeChoice {
    Expr N;
    Expr Ndot;
};
GaugeChoice make_gauge(const Expr& N_of_t, const Expr& t_atom);

/// A quantity tracked along a trajectory; `certificate` (optional) is the
/// lambda * H product from a weak certificate, recorded per sample.
struct MonitorSpec {
    std::string name;
    int gamma = 0;
    Expr integral;
    std::optional<Expr> certificate;
};

struct Trajectory {
    std::vector<std::string> columns;
    long samples = 0;
    double step = 0.0;
    std::vector<double> data; // row-major
    bool blew_up = false;

    struct MonitorCols {
        std::string name;
        int gamma = 0;
        int value_col = -1;
        int certificate_col = -1;
        double initial_value = 0.0;
        double max_drift = 0.0; // accumulated at integrator precision
    };
    std::vector<MonitorCols> monitors;
    int col_t = 0, col_N = -1, col_H = -1;
    int first_x = 1, first_xdot = -1;
    double max_abs_constraint = 0.0; // accumulated at integrator precision

    double at(long row, int col) const { return data[static_cast<std::size_t>(row) * columns.size() + col]; }
    double time_of(long row) const { return at(row, col_t); }

    /// Delimiter-separated export, one row per sample, with a header row.
    std::string to_csv() const;
};

/// Full-precision initial data for the integrator.
struct InitialState {
    std::vector<QuadReal> x;
    std::vector<QuadReal> v;
};
InitialState initial_state(const std::vector<double>& x, const std::vector<double>& v);

/// Classical fixed-step RK4 on (x, xd); N and Ndot are injected from the
/// gauge at every stage. Model expressions must be parameter-free. A
/// non-finite state truncates the trajectory and sets the blow-up flag.
Trajectory integrate(const Model& m, const GaugeChoice& gauge, const InitialState& ic, double t0,
                     double t1, double step, const std::vector<MonitorSpec>& monitors = {});
Trajectory integrate(const Model& m, const GaugeChoice& gauge, std::vector<double> x0,
                     std::vector<double> v0, double t0, double t1, double step,
                     const std::vector<MonitorSpec>& monitors = {});

struct ProjectedState {
    std::vector<double> x;
    std::vector<double> v;
    double constraint_value = 0.0;
    InitialState exact; // quad-precision root, for drift measurements
};

/// Complete initial data on the constraint surface by solving the quadratic
/// for the pivot velocity; `sign` picks the root branch.
ProjectedState project_constraint(const Model& m, const std::vector<double>& x,
                                  const std::vector<double>& v_partial, int pivot, int sign,
                                  double N0);

struct DriftStats {
    double initial_value = 0.0;
    double max_drift = 0.0;          // max |I(t) - I(0)|
    double max_constraint = 0.0;     // max |H(t)|
    std::optional<double> max_certificate_gap; // max |dI/dt - lambda*H| (interior points)
};

/// Conservation drift of a monitored integral; the derivative is measured by
/// central differences on interior grid points.
DriftStats drift(const Trajectory& traj, std::size_t monitor_index);

} // namespace nsym
