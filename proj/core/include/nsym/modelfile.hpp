#pragma once

#include <optional>
#include <string>

#include "nsym/certify.hpp"
#include "nsym/model.hpp"

namespace nsym {

/// Simulation request bundled with a model file.
struct SimulateSpec {
    Expr gauge;                       // N as an expression of t
    Rational t0 = 0, t1 = 1, step = Rational(1, 1000);
    std::vector<std::pair<int, Rational>> x_init;    // 1-based coordinate index
    std::vector<std::pair<int, Rational>> xdot_init; // explicit velocities (pivot wins)
    int pivot = 0;                                   // 1-based; 0 = no constraint projection
    int sign = +1;
    std::vector<std::string> monitors; // candidate names
    std::map<std::string, Rational> param_values;
    std::map<std::string, Expr> binds; // opaque name -> expression of t
    std::optional<Rational> tol_constraint, tol_drift, tol_certificate;
};

/// Parsed model-definition document: variable space, metrics, potentials,
/// candidate generators, and an optional simulate section.
struct ModelDocument {
    std::string name = "model";
    int order = 1;

    std::string time_name = "t";
    std::vector<ParamSpec> coord_decls;
    std::string lapse_name = "N";
    std::vector<ParamSpec> param_decls;

    SpacePtr space;
    MetricTable g, h;
    Expr V0, V1;
    std::vector<CandidateSymmetry> candidates;
    std::optional<SimulateSpec> simulate;

    const CandidateSymmetry* find_candidate(const std::string& n) const;
};

/// Parse a document; diagnostics carry line/column and the offending token.
ModelDocument parse_model(const std::string& text);

/// Canonical rendering; parse(render(parse(text))) yields an identical
/// document.
std::string render_model(const ModelDocument& doc);

/// Assemble the validated Model (probes g for invertibility).
Model build_model(const ModelDocument& doc, const ZeroOptions& opts = {});

/// Substitute exact numeric parameter values into every model expression;
/// required before compiling for the numeric backend.
Model ground_model(const Model& m, const std::map<std::string, Rational>& param_values);

} // namespace nsym
