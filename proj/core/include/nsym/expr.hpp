#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsym/error.hpp"

namespace nsym {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class Kind : std::uint8_t { Num, Atom, Opaque, Fun, Pow, Mul, Add };
enum class FunKind : std::uint8_t { Sin, Cos, Exp, Ln };

/// Declared facts about an atom; numeric probing samples accordingly.
struct Assumptions {
    bool nonzero = false;
    bool positive = false;
    std::vector<Rational> avoid; // values the atom must stay away from
};

/// Interned symbol. The id is a process-wide creation index and fixes the
/// canonical ordering of atoms ("declaration order").
struct AtomInfo {
    std::uint64_t id;
    std::string name;
    Assumptions assume;
};
using AtomPtr = std::shared_ptr<const AtomInfo>;

class Expr;
struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind;
    Rational num;                     // Num
    AtomPtr atom;                     // Atom
    std::string opname;               // Opaque
    std::vector<std::uint32_t> dmul;  // Opaque: per-argument derivative order
    FunKind fun = FunKind::Sin;       // Fun
    std::vector<Expr> kids;           // Opaque args | Fun arg | Pow {base,exp} | Mul | Add
};

/// Immutable handle to a canonically normalized expression tree. All builders
/// below return normal forms, so two ring-equal inputs (up to rational
/// arithmetic, power laws, distribution) compare equal structurally.
class Expr {
public:
    Expr(); // rational zero
    Expr(long long v);
    Expr(const Rational& v);

    Kind kind() const { return node_->kind; }
    bool is(Kind k) const { return node_->kind == k; }

    const Rational& num() const { return node_->num; }
    const AtomInfo& atom() const { return *node_->atom; }
    const AtomPtr& atom_ptr() const { return node_->atom; }
    const std::string& opname() const { return node_->opname; }
    std::span<const std::uint32_t> dmul() const { return node_->dmul; }
    FunKind fun() const { return node_->fun; }
    std::span<const Expr> kids() const { return node_->kids; }
    const Expr& kid(std::size_t i) const { return node_->kids[i]; }
    std::size_t nkids() const { return node_->kids.size(); }

    bool is_zero_literal() const { return kind() == Kind::Num && num() == 0; }
    bool is_one_literal() const { return kind() == Kind::Num && num() == 1; }
    bool is_integer_literal() const;

    bool same(const Expr& o) const { return node_ == o.node_; } // pointer identity

    const NodePtr& node() const { return node_; }
    static Expr raw(NodePtr n) { return Expr(std::move(n)); } // trusted, already canonical

private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

/// Deterministic total order; drives canonical sorting of sums/products.
int compare(const Expr& a, const Expr& b);
bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

std::uint64_t hash_of(const Expr& e);

// --- constructors -----------------------------------------------------------

Expr num(const Rational& v);
Expr num(long long p, long long q);
Expr make_atom(const AtomPtr& a);
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Expr& exponent);
Expr fun(FunKind k, const Expr& arg);
Expr opaque(const std::string& name, std::vector<Expr> args);
Expr opaque(const std::string& name, std::vector<Expr> args, std::vector<std::uint32_t> dmul);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

inline Expr sin(const Expr& u) { return fun(FunKind::Sin, u); }
inline Expr cos(const Expr& u) { return fun(FunKind::Cos, u); }
inline Expr exp(const Expr& u) { return fun(FunKind::Exp, u); }
inline Expr ln(const Expr& u) { return fun(FunKind::Ln, u); }
inline Expr sqrt(const Expr& u) { return pow(u, num(1, 2)); }

// --- core operations ---------------------------------------------------------

/// Rebuilds bottom-up through the canonical constructors. Idempotent; the
/// builders already normalize, so this is mostly useful for foreign trees
/// and for stating the idempotence property.
Expr normalize(const Expr& e);

/// Exact partial derivative with respect to a declared atom.
Expr diff(const Expr& e, const Expr& atom);

/// Simultaneous substitution atom -> expression, then normalization.
Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& bindings);

/// Replace every application of the opaque function `name` (including its
/// recorded derivatives) by the corresponding derivative of `body`, which is
/// expressed in the formal parameters `params`. Arguments must be exactly the
/// parameter atoms.
Expr bind_opaque(const Expr& e, const std::string& name, const std::vector<Expr>& params,
                 const Expr& body);

/// Monomial in a fixed list of indeterminate atoms: sorted (atom, degree).
struct Monomial {
    std::vector<std::pair<Expr, int>> powers;

    bool operator<(const Monomial& o) const;
    bool operator==(const Monomial& o) const;
    int degree_of(const Expr& atom) const;
    int total_degree() const;
    Expr as_expr() const;
};

/// Coefficient collection over the given indeterminates. The input must be
/// polynomial in them; anything else (indeterminate inside a function call,
/// an exponent, a denominator) raises SeparationError naming the subtree.
std::map<Monomial, Expr> collect(const Expr& e, const std::vector<Expr>& indeterminates);

// --- queries ----------------------------------------------------------------

bool contains_atom(const Expr& e, const Expr& atom);
void atoms_of(const Expr& e, std::map<std::uint64_t, Expr>& out);
std::vector<Expr> atoms_of(const Expr& e);

/// Structural views of the canonical form.
std::vector<Expr> add_terms(const Expr& e);   // e as a list of additive terms
std::vector<Expr> mul_factors(const Expr& e); // term as a list of factors
std::pair<Expr, Expr> base_and_exponent(const Expr& factor);
std::pair<Rational, Expr> coefficient_split(const Expr& term); // rational coefficient, rest
Rational rational_part(const Expr& e); // rational summand of an exponent expression

/// Distinct opaque applications (name, args, derivative index) in e.
std::vector<Expr> opaque_nodes_of(const Expr& e);

/// Replace each distinct opaque application with a fresh plain atom; used by
/// numeric probing, which treats T(t), T'(t), ... as independent samples.
Expr opaques_to_atoms(const Expr& e, std::map<Expr, Expr, ExprLess>& mapping);

std::string to_string(const Expr& e);

} // namespace nsym
