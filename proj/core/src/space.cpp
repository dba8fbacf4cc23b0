#include "nsym/space.hpp"

#include <atomic>
#include <set>

namespace nsym {

AtomPtr intern_atom(const std::string& name, Assumptions assume) {
    static std::atomic<std::uint64_t> next_id{1};
    auto info = std::make_shared<AtomInfo>();
    info->id = next_id.fetch_add(1);
    info->name = name;
    info->assume = std::move(assume);
    return info;
}

VariableSpace::VariableSpace(const std::string& time_name, const std::vector<ParamSpec>& coords,
                             const std::optional<std::string>& lapse_name,
                             const std::vector<ParamSpec>& params) {
    if (coords.empty()) throw UsageError("variable space needs at least one coordinate");
    std::set<std::string> names;
    auto claim = [&](const std::string& n) {
        if (n.empty()) throw UsageError("empty variable name");
        if (!names.insert(n).second) throw UsageError("duplicate variable name: " + n);
    };

    claim(time_name);
    time_ = make_atom(intern_atom(time_name));
    for (const auto& c : coords) {
        claim(c.name);
        coords_.push_back(make_atom(intern_atom(c.name, c.assume)));
    }
    for (const auto& c : coords) {
        const std::string vn = c.name + "dot";
        claim(vn);
        velocities_.push_back(make_atom(intern_atom(vn)));
    }
    if (lapse_name) {
        claim(*lapse_name);
        Assumptions lapse_assume;
        lapse_assume.nonzero = true;
        lapse_ = make_atom(intern_atom(*lapse_name, lapse_assume));
        const std::string vn = *lapse_name + "dot";
        claim(vn);
        lapse_velocity_ = make_atom(intern_atom(vn));
    }
    for (const auto& p : params) {
        claim(p.name);
        params_.emplace_back(p.name, make_atom(intern_atom(p.name, p.assume)));
    }
}

const Expr& VariableSpace::lapse() const {
    if (!lapse_) throw UsageError("variable space has no lapse");
    return *lapse_;
}

const Expr& VariableSpace::lapse_velocity() const {
    if (!lapse_velocity_) throw UsageError("variable space has no lapse");
    return *lapse_velocity_;
}

Expr VariableSpace::param(const std::string& name) const {
    for (const auto& [n, a] : params_)
        if (n == name) return a;
    throw UsageError("unknown parameter: " + name);
}

std::vector<Expr> VariableSpace::all_velocities() const {
    std::vector<Expr> v = velocities_;
    if (lapse_velocity_) v.push_back(*lapse_velocity_);
    return v;
}

std::map<std::string, Expr> VariableSpace::symbol_scope() const {
    std::map<std::string, Expr> scope;
    scope.emplace(time_.atom().name, time_);
    for (const auto& c : coords_) scope.emplace(c.atom().name, c);
    for (const auto& v : velocities_) scope.emplace(v.atom().name, v);
    if (lapse_) {
        scope.emplace(lapse_->atom().name, *lapse_);
        scope.emplace(lapse_velocity_->atom().name, *lapse_velocity_);
    }
    for (const auto& [n, a] : params_) scope.emplace(n, a);
    return scope;
}

bool VariableSpace::mentions_velocity(const Expr& e) const {
    for (const auto& v : velocities_)
        if (contains_atom(e, v)) return true;
    if (lapse_velocity_ && contains_atom(e, *lapse_velocity_)) return true;
    return false;
}

} // namespace nsym
