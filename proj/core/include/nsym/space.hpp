#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsym/expr.hpp"

namespace nsym {

/// Mint a fresh interned atom. Ids are a process-wide counter, so declaration
/// order is the canonical sort order.
AtomPtr intern_atom(const std::string& name, Assumptions assume = {});

struct ParamSpec {
    std::string name;
    Assumptions assume;
};

/// The configuration space of a model: time, coordinates with their paired
/// velocities, an optional lapse degree of freedom, and constant parameters.
class VariableSpace {
public:
    VariableSpace(const std::string& time_name, const std::vector<ParamSpec>& coords,
                  const std::optional<std::string>& lapse_name, const std::vector<ParamSpec>& params);

    int dim() const { return static_cast<int>(coords_.size()); }
    bool has_lapse() const { return lapse_.has_value(); }

    const Expr& time() const { return time_; }
    const Expr& coord(int i) const { return coords_.at(i); }
    const Expr& velocity(int i) const { return velocities_.at(i); }
    const Expr& lapse() const;
    const Expr& lapse_velocity() const;
    Expr param(const std::string& name) const;

    const std::vector<Expr>& coords() const { return coords_; }
    const std::vector<Expr>& velocities() const { return velocities_; }
    const std::vector<std::pair<std::string, Expr>>& params() const { return params_; }

    /// Velocities in collection order: coordinate velocities, then the lapse
    /// velocity when present.
    std::vector<Expr> all_velocities() const;

    /// Name -> atom map for the expression parser.
    std::map<std::string, Expr> symbol_scope() const;

    /// True if e mentions any velocity atom.
    bool mentions_velocity(const Expr& e) const;

private:
    Expr time_;
    std::vector<Expr> coords_;
    std::vector<Expr> velocities_;
    std::optional<Expr> lapse_;
    std::optional<Expr> lapse_velocity_;
    std::vector<std::pair<std::string, Expr>> params_;
};

using SpacePtr = std::shared_ptr<const VariableSpace>;

} // namespace nsym
