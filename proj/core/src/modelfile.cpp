#include "nsym/modelfile.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <tuple>

#include "nsym/parse.hpp"

namespace nsym {

namespace {

struct Line {
    int number = 0;
    std::string text; // comment-stripped, trimmed
};

std::vector<Line> split_lines(const std::string& text) {
    std::vector<Line> out;
    std::istringstream is(text);
    std::string raw;
    int n = 0;
    while (std::getline(is, raw)) {
        ++n;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const auto a = raw.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        const auto b = raw.find_last_not_of(" \t\r");
        out.push_back({n, raw.substr(a, b - a + 1)});
    }
    return out;
}

[[noreturn]] void fail(const Line& ln, const std::string& msg) { throw ParseError(ln.number, 1, msg); }

bool is_ident(const std::string& s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

// "key = value" split at the first '='.
bool key_value(const std::string& s, std::string& key, std::string& value) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) return false;
    auto trim = [](std::string t) {
        const auto a = t.find_first_not_of(" \t");
        if (a == std::string::npos) return std::string();
        const auto b = t.find_last_not_of(" \t");
        return t.substr(a, b - a + 1);
    };
    key = trim(s.substr(0, eq));
    value = trim(s.substr(eq + 1));
    return true;
}

Rational parse_rational_value(const Line& ln, const std::string& text) {
    ParserScope scope; // numbers only
    scope.allow_opaque = false;
    Expr e;
    try {
        e = parse_expr(text, scope, ln.number, 1);
    } catch (const ParseError& pe) {
        throw;
    }
    if (!e.is(Kind::Num)) fail(ln, "expected an exact rational value, got '" + text + "'");
    return e.num();
}

ParamSpec parse_param_spec(const Line& ln, const std::vector<std::string>& words, std::size_t from) {
    ParamSpec p;
    p.name = words.at(from);
    if (!is_ident(p.name)) fail(ln, "invalid name '" + p.name + "'");
    for (std::size_t i = from + 1; i < words.size(); ++i) {
        if (words[i] == "nonzero")
            p.assume.nonzero = true;
        else if (words[i] == "positive")
            p.assume.positive = true;
        else if (words[i] == "avoid") {
            if (++i >= words.size()) fail(ln, "avoid needs a rational value");
            p.assume.avoid.push_back(parse_rational_value(ln, words[i]));
        } else
            fail(ln, "unknown assumption flag '" + words[i] + "'");
    }
    return p;
}

// [i,j] or name[i,j] / name[i]
bool parse_indices(const std::string& s, std::string& stem, std::vector<int>& idx) {
    const auto lb = s.find('[');
    if (lb == std::string::npos || s.back() != ']') return false;
    stem = s.substr(0, lb);
    std::string inner = s.substr(lb + 1, s.size() - lb - 2);
    std::istringstream is(inner);
    std::string piece;
    while (std::getline(is, piece, ',')) {
        try {
            idx.push_back(std::stoi(piece));
        } catch (...) {
            return false;
        }
    }
    return !idx.empty();
}

class DocumentParser {
public:
    explicit DocumentParser(const std::string& text) : lines_(split_lines(text)) {}

    ModelDocument run() {
        while (pos_ < lines_.size()) top_level(next());
        if (!doc_.space) throw ParseError(1, 1, "document has no space section");
        finalize_metrics();
        return std::move(doc_);
    }

private:
    const Line& next() { return lines_[pos_++]; }
    const Line& peek() const { return lines_[pos_]; }
    bool done() const { return pos_ >= lines_.size(); }

    ParserScope scope() const {
        if (!doc_.space) throw ParseError(lines_[pos_ - 1].number, 1, "space section must come before expressions");
        return ParserScope{doc_.space->symbol_scope(), true};
    }

    Expr expr_of(const Line& ln, const std::string& text) { return parse_expr(text, scope(), ln.number, 1); }

    void require_open(const Line& ln, const std::vector<std::string>& words, std::size_t nwords) {
        if (words.size() != nwords + 1 || words.back() != "{")
            fail(ln, "expected '" + words[0] + " ... {'");
    }

    void top_level(const Line& ln) {
        auto words = split_ws(ln.text);
        if (words.empty()) return;
        const std::string& head = words[0];
        if (head == "model") {
            require_open(ln, words, 1);
            model_section();
        } else if (head == "space") {
            require_open(ln, words, 1);
            space_section();
        } else if (head == "metric") {
            if (words.size() != 3 || words[2] != "{") fail(ln, "expected 'metric g {' or 'metric h {'");
            if (words[1] != "g" && words[1] != "h") fail(ln, "unknown metric '" + words[1] + "'");
            metric_section(words[1] == "g");
        } else if (head == "potential") {
            std::string key, value;
            if (!key_value(ln.text, key, value)) fail(ln, "expected 'potential V0 = <expr>'");
            auto kw = split_ws(key);
            if (kw.size() != 2 || (kw[1] != "V0" && kw[1] != "V1")) fail(ln, "unknown potential '" + key + "'");
            Expr e = expr_of(ln, value);
            check_space_expr(ln, e, "potential");
            (kw[1] == "V0" ? doc_.V0 : doc_.V1) = e;
        } else if (head == "candidate") {
            if (words.size() != 3 || words[2] != "{") fail(ln, "expected 'candidate NAME {'");
            if (!is_ident(words[1])) fail(ln, "invalid candidate name '" + words[1] + "'");
            for (const auto& c : doc_.candidates)
                if (c.name == words[1]) fail(ln, "duplicate candidate '" + words[1] + "'");
            candidate_section(words[1]);
        } else if (head == "simulate") {
            require_open(ln, words, 1);
            simulate_section();
        } else {
            fail(ln, "unknown section '" + head + "'");
        }
    }

    void model_section() {
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") return;
            std::string key, value;
            if (!key_value(ln.text, key, value)) fail(ln, "expected 'key = value'");
            if (key == "name") {
                doc_.name = value;
            } else if (key == "order") {
                doc_.order = static_cast<int>(parse_rational_value(ln, value).convert_to<long long>());
                if (doc_.order < 1) fail(ln, "order must be >= 1");
            } else {
                fail(ln, "unknown model key '" + key + "'");
            }
        }
        throw ParseError(lines_.back().number, 1, "unterminated model section");
    }

    void space_section() {
        bool have_time = false, have_lapse = false;
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") {
                if (doc_.coord_decls.empty()) fail(ln, "space needs at least one coordinate");
                if (!have_time) doc_.time_name = "t";
                if (!have_lapse) doc_.lapse_name = "N";
                doc_.space = std::make_shared<VariableSpace>(doc_.time_name, doc_.coord_decls,
                                                             doc_.lapse_name, doc_.param_decls);
                return;
            }
            auto words = split_ws(ln.text);
            std::string key, value;
            if (key_value(ln.text, key, value)) {
                if (key == "time") {
                    doc_.time_name = value;
                    have_time = true;
                } else if (key == "lapse") {
                    doc_.lapse_name = value;
                    have_lapse = true;
                } else {
                    fail(ln, "unknown space key '" + key + "'");
                }
                if (!is_ident(value)) fail(ln, "invalid name '" + value + "'");
            } else if (words[0] == "coord") {
                if (words.size() < 2) fail(ln, "coord needs a name");
                doc_.coord_decls.push_back(parse_param_spec(ln, words, 1));
            } else if (words[0] == "param") {
                if (words.size() < 2) fail(ln, "param needs a name");
                doc_.param_decls.push_back(parse_param_spec(ln, words, 1));
            } else {
                fail(ln, "unknown space entry '" + words[0] + "'");
            }
        }
        throw ParseError(lines_.back().number, 1, "unterminated space section");
    }

    void metric_section(bool is_g) {
        auto& pending = is_g ? pending_g_ : pending_h_;
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") return;
            std::string key, value;
            if (!key_value(ln.text, key, value)) fail(ln, "expected '[i,j] = <expr>'");
            std::string stem;
            std::vector<int> idx;
            if (!parse_indices(key, stem, idx) || idx.size() != 2)
                fail(ln, "metric entries are keyed '[i,j]'");
            if (!stem.empty() && stem != (is_g ? "g" : "h")) fail(ln, "wrong metric stem '" + stem + "'");
            const int n = doc_.space ? doc_.space->dim() : 0;
            if (!doc_.space) fail(ln, "space section must come before metrics");
            if (idx[0] < 1 || idx[0] > n || idx[1] < 1 || idx[1] > n)
                fail(ln, "metric index out of range for n = " + std::to_string(n));
            Expr e = expr_of(ln, value);
            check_space_expr(ln, e, "metric entry");
            pending.push_back({ln.number, idx[0] - 1, idx[1] - 1, e});
        }
        throw ParseError(lines_.back().number, 1, "unterminated metric section");
    }

    void candidate_section(const std::string& name) {
        CandidateSymmetry cand;
        cand.name = name;
        const int n = doc_.space ? doc_.space->dim() : 1;
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") {
                if (cand.orders.empty()) fail(ln, "candidate '" + name + "' has no order blocks");
                doc_.candidates.push_back(std::move(cand));
                return;
            }
            auto words = split_ws(ln.text);
            if (words.size() == 3 && words[0] == "order" && words[2] == "{") {
                int gamma = -1;
                try {
                    gamma = std::stoi(words[1]);
                } catch (...) {
                    fail(ln, "order needs an integer");
                }
                if (gamma < 0 || gamma > doc_.order)
                    fail(ln, "candidate order " + std::to_string(gamma) + " exceeds the model order " +
                                 std::to_string(doc_.order));
                while (static_cast<int>(cand.orders.size()) <= gamma) {
                    SymmetryComponents z;
                    z.eta.assign(n, Expr(0));
                    cand.orders.push_back(std::move(z));
                }
                order_block(cand.orders[gamma]);
            } else {
                fail(ln, "expected 'order K {' inside candidate '" + name + "'");
            }
        }
        throw ParseError(lines_.back().number, 1, "unterminated candidate section");
    }

    void order_block(SymmetryComponents& X) {
        const int n = doc_.space->dim();
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") return;
            std::string key, value;
            if (!key_value(ln.text, key, value)) fail(ln, "expected 'key = <expr>'");
            Expr e = expr_of(ln, value);
            check_candidate_expr(ln, e);
            std::string stem;
            std::vector<int> idx;
            if (key == "xi") {
                X.xi = e;
            } else if (key == "omega") {
                X.omega = e;
            } else if (key == "f") {
                X.f = e;
            } else if (parse_indices(key, stem, idx) && stem == "eta" && idx.size() == 1) {
                if (idx[0] < 1 || idx[0] > n)
                    fail(ln, "eta arity mismatch: component " + std::to_string(idx[0]) +
                                 " given while the space has n = " + std::to_string(n) +
                                 " coordinate(s)");
                X.eta[idx[0] - 1] = e;
            } else {
                fail(ln, "unknown candidate key '" + key + "'");
            }
        }
        throw ParseError(lines_.back().number, 1, "unterminated order block");
    }

    void simulate_section() {
        SimulateSpec sim;
        sim.gauge = Expr(1);
        bool have_gauge = false;
        while (!done()) {
            const Line& ln = next();
            if (ln.text == "}") {
                if (!have_gauge) sim.gauge = Expr(1);
                doc_.simulate = std::move(sim);
                return;
            }
            auto words = split_ws(ln.text);
            std::string key, value;
            if (!key_value(ln.text, key, value)) fail(ln, "expected 'key = value'");
            auto kw = split_ws(key);
            if (key == "gauge") {
                ParserScope sc;
                sc.atoms.emplace(doc_.time_name, doc_.space->time());
                sc.allow_opaque = false;
                sim.gauge = parse_expr(value, sc, ln.number, 1);
                have_gauge = true;
            } else if (key == "t0") {
                sim.t0 = parse_rational_value(ln, value);
            } else if (key == "t1") {
                sim.t1 = parse_rational_value(ln, value);
            } else if (key == "step") {
                sim.step = parse_rational_value(ln, value);
            } else if (key == "pivot") {
                sim.pivot = static_cast<int>(parse_rational_value(ln, value).convert_to<long long>());
            } else if (key == "sign") {
                if (value == "+")
                    sim.sign = +1;
                else if (value == "-")
                    sim.sign = -1;
                else
                    fail(ln, "sign must be '+' or '-'");
            } else if (key == "monitor") {
                sim.monitors.push_back(value);
            } else if (key == "tol_constraint") {
                sim.tol_constraint = parse_rational_value(ln, value);
            } else if (key == "tol_drift") {
                sim.tol_drift = parse_rational_value(ln, value);
            } else if (key == "tol_certificate") {
                sim.tol_certificate = parse_rational_value(ln, value);
            } else if (kw.size() == 2 && kw[0] == "param") {
                sim.param_values[kw[1]] = parse_rational_value(ln, value);
            } else if (kw.size() == 2 && kw[0] == "bind") {
                ParserScope sc;
                sc.atoms.emplace(doc_.time_name, doc_.space->time());
                sc.allow_opaque = false;
                sim.binds[kw[1]] = parse_expr(value, sc, ln.number, 1);
            } else {
                std::string stem;
                std::vector<int> idx;
                if (parse_indices(key, stem, idx) && idx.size() == 1 && (stem == "x" || stem == "xdot")) {
                    if (idx[0] < 1 || idx[0] > doc_.space->dim()) fail(ln, "index out of range in '" + key + "'");
                    auto& list = stem == "x" ? sim.x_init : sim.xdot_init;
                    list.emplace_back(idx[0], parse_rational_value(ln, value));
                } else {
                    fail(ln, "unknown simulate key '" + key + "'");
                }
            }
        }
        throw ParseError(lines_.back().number, 1, "unterminated simulate section");
    }

    void check_space_expr(const Line& ln, const Expr& e, const char* what) {
        for (const auto& a : atoms_of(e)) {
            bool ok = false;
            for (const auto& c : doc_.space->coords()) ok = ok || a == c;
            for (const auto& [n, p] : doc_.space->params()) ok = ok || a == p;
            if (!ok)
                fail(ln, std::string(what) + " may depend on coordinates and parameters only; found '" +
                             a.atom().name + "'");
        }
    }

    void check_candidate_expr(const Line& ln, const Expr& e) {
        if (doc_.space->mentions_velocity(e))
            fail(ln, "candidate components must not contain velocity atoms");
    }

    void finalize_metrics() {
        const int n = doc_.space->dim();
        doc_.g = MetricTable(n);
        doc_.h = MetricTable(n);
        auto place = [&](int which, MetricTable& M, const PendingEntry& p) {
            const auto key = std::make_tuple(which, std::min(p.i, p.j), std::max(p.i, p.j));
            if (seen_.count(key) && !(M.at(p.i, p.j) == p.e))
                throw ParseError(p.line, 1, "asymmetric metric entry: [" + std::to_string(p.i + 1) + "," +
                                                std::to_string(p.j + 1) + "] conflicts with its mirror");
            M.set(p.i, p.j, p.e);
            seen_.insert(key);
        };
        for (const auto& p : pending_g_) place(0, doc_.g, p);
        for (const auto& p : pending_h_) place(1, doc_.h, p);
    }

    struct PendingEntry {
        int line;
        int i, j;
        Expr e;
    };

    std::vector<Line> lines_;
    std::size_t pos_ = 0;
    ModelDocument doc_;
    std::vector<PendingEntry> pending_g_, pending_h_;
    std::set<std::tuple<int, int, int>> seen_;
};

} // namespace

const CandidateSymmetry* ModelDocument::find_candidate(const std::string& n) const {
    for (const auto& c : candidates)
        if (c.name == n) return &c;
    return nullptr;
}

ModelDocument parse_model(const std::string& text) { return DocumentParser(text).run(); }

namespace {

std::string rat_str(const Rational& r) { return to_string(num(r)); }

} // namespace

std::string render_model(const ModelDocument& doc) {
    std::ostringstream os;
    os << "model {\n  name = " << doc.name << "\n  order = " << doc.order << "\n}\n\n";
    os << "space {\n  time = " << doc.time_name << "\n";
    for (const auto& c : doc.coord_decls) {
        os << "  coord " << c.name;
        if (c.assume.nonzero) os << " nonzero";
        if (c.assume.positive) os << " positive";
        for (const auto& r : c.assume.avoid) os << " avoid " << rat_str(r);
        os << "\n";
    }
    os << "  lapse = " << doc.lapse_name << "\n";
    for (const auto& p : doc.param_decls) {
        os << "  param " << p.name;
        if (p.assume.nonzero) os << " nonzero";
        if (p.assume.positive) os << " positive";
        for (const auto& r : p.assume.avoid) os << " avoid " << rat_str(r);
        os << "\n";
    }
    os << "}\n\n";

    auto metric_block = [&](const char* name, const MetricTable& M) {
        os << "metric " << name << " {\n";
        for (int i = 0; i < M.dim(); ++i)
            for (int j = i; j < M.dim(); ++j)
                if (!M.at(i, j).is_zero_literal())
                    os << "  [" << i + 1 << "," << j + 1 << "] = " << to_string(M.at(i, j)) << "\n";
        os << "}\n";
    };
    metric_block("g", doc.g);
    metric_block("h", doc.h);
    os << "\npotential V0 = " << to_string(doc.V0) << "\n";
    os << "potential V1 = " << to_string(doc.V1) << "\n";

    for (const auto& c : doc.candidates) {
        os << "\ncandidate " << c.name << " {\n";
        for (int g = 0; g <= c.max_order(); ++g) {
            const auto& X = c.at(g);
            os << "  order " << g << " {\n";
            os << "    xi = " << to_string(X.xi) << "\n";
            for (std::size_t i = 0; i < X.eta.size(); ++i)
                os << "    eta[" << i + 1 << "] = " << to_string(X.eta[i]) << "\n";
            os << "    omega = " << to_string(X.omega) << "\n";
            os << "    f = " << to_string(X.f) << "\n";
            os << "  }\n";
        }
        os << "}\n";
    }

    if (doc.simulate) {
        const auto& s = *doc.simulate;
        os << "\nsimulate {\n";
        os << "  gauge = " << to_string(s.gauge) << "\n";
        os << "  t0 = " << rat_str(s.t0) << "\n  t1 = " << rat_str(s.t1) << "\n  step = " << rat_str(s.step)
           << "\n";
        for (const auto& [i, v] : s.x_init) os << "  x[" << i << "] = " << rat_str(v) << "\n";
        for (const auto& [i, v] : s.xdot_init) os << "  xdot[" << i << "] = " << rat_str(v) << "\n";
        os << "  pivot = " << s.pivot << "\n  sign = " << (s.sign >= 0 ? "+" : "-") << "\n";
        for (const auto& m : s.monitors) os << "  monitor = " << m << "\n";
        for (const auto& [k, v] : s.param_values) os << "  param " << k << " = " << rat_str(v) << "\n";
        for (const auto& [k, v] : s.binds) os << "  bind " << k << " = " << to_string(v) << "\n";
        if (s.tol_constraint) os << "  tol_constraint = " << rat_str(*s.tol_constraint) << "\n";
        if (s.tol_drift) os << "  tol_drift = " << rat_str(*s.tol_drift) << "\n";
        if (s.tol_certificate) os << "  tol_certificate = " << rat_str(*s.tol_certificate) << "\n";
        os << "}\n";
    }
    return os.str();
}

Model build_model(const ModelDocument& doc, const ZeroOptions& opts) {
    return make_model(doc.space, doc.g, doc.h, doc.V0, doc.V1, doc.order, opts);
}

Model ground_model(const Model& m, const std::map<std::string, Rational>& param_values) {
    std::map<Expr, Expr, ExprLess> bind;
    for (const auto& [name, p] : m.space->params()) {
        auto it = param_values.find(name);
        if (it == param_values.end())
            throw UsageError("simulate needs a numeric value for parameter '" + name + "'");
        bind.emplace(p, num(it->second));
    }
    Model out = m;
    MetricTable g(m.space->dim()), h(m.space->dim());
    for (int i = 0; i < m.space->dim(); ++i)
        for (int j = i; j < m.space->dim(); ++j) {
            g.set(i, j, substitute(m.g.at(i, j), bind));
            h.set(i, j, substitute(m.h.at(i, j), bind));
        }
    out.g = g;
    out.h = h;
    out.V0 = substitute(m.V0, bind);
    out.V1 = substitute(m.V1, bind);
    return out;
}

} // namespace nsym
