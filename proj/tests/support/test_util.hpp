#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nsym/certify.hpp"
#include "nsym/modelfile.hpp"
#include "nsym/parse.hpp"

namespace nsym_test {

using namespace nsym;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string case_path(const std::string& stem) {
    return std::string(NSYM_CASES_DIR) + "/" + stem + ".model";
}

inline ModelDocument load_case(const std::string& stem) {
    return parse_model(read_file(case_path(stem)));
}

inline bool proved(const Expr& e) { return is_zero(e).proved(); }
inline bool zeroish(const Expr& e) { return is_zero(e).zeroish(); }
inline bool definitely_nonzero(const Expr& e) { return is_zero(e).state == ZeroState::Nonzero; }

/// Replace every opaque application with a fresh atom and hand back the atoms
/// standing in for derivatives of `name`; differentiating the skeleton with
/// respect to those atoms probes dependence on the function's values.
inline Expr freeze_opaque(const Expr& e, const std::string& name, std::vector<Expr>& out_atoms) {
    std::map<Expr, Expr, ExprLess> mapping;
    Expr skeleton = opaques_to_atoms(e, mapping);
    for (const auto& [op, atom] : mapping)
        if (op.opname() == name) out_atoms.push_back(atom);
    return skeleton;
}

/// Depth-bounded random expression generator over the given atoms. Produces
/// polynomials mixed with sin/cos/exp and a guarded ln, all with small exact
/// rational coefficients.
class ExprGen {
public:
    ExprGen(std::vector<Expr> atoms, std::uint64_t seed, bool transcendental = true)
        : atoms_(std::move(atoms)), rng_(seed), transcendental_(transcendental) {}

    Expr operator()(int depth = 3) { return gen(depth); }

private:
    Expr gen(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : (transcendental_ ? 6 : 4));
        switch (pick(rng_)) {
        case 0:
            return small_rational();
        case 1:
            return atom();
        case 2:
            return gen(depth - 1) + gen(depth - 1);
        case 3:
            return gen(depth - 1) * gen(depth - 1);
        case 4: {
            std::uniform_int_distribution<int> e(-2, 3);
            return pow(atom(), Expr(e(rng_)));
        }
        case 5: {
            std::uniform_int_distribution<int> which(0, 2);
            Expr u = gen(depth - 1);
            switch (which(rng_)) {
            case 0: return sin(u);
            case 1: return cos(u);
            default: return exp(small_rational() * atom());
            }
        }
        default:
            // ln of something strictly positive
            return ln(Expr(1) + pow(atom(), Expr(2)));
        }
    }

    Expr atom() {
        std::uniform_int_distribution<std::size_t> pick(0, atoms_.size() - 1);
        return atoms_[pick(rng_)];
    }

    Expr small_rational() {
        std::uniform_int_distribution<int> p(-6, 6), q(1, 4);
        return num(p(rng_), q(rng_));
    }

    std::vector<Expr> atoms_;
    std::mt19937_64 rng_;
    bool transcendental_;
};

} // namespace nsym_test
