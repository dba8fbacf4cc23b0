#include "nsym/parse.hpp"

#include <cctype>

namespace nsym {

namespace {

class ExprParser {
public:
    ExprParser(const std::string& text, const ParserScope& scope, int line, int col0)
        : text_(text), scope_(scope), line_(line), col0_(col0) {}

    Expr run() {
        skip_ws();
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(line_, col0_ + static_cast<int>(pos_), msg);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr parse_sum() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+'))
                e = e + parse_term();
            else if (eat('-'))
                e = e - parse_term();
            else
                return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (eat('*'))
                e = e * parse_unary();
            else if (eat('/'))
                e = e / parse_unary();
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (eat('-')) return -parse_unary();
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (eat('^')) return pow(base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
            if (text_[pos_] == '.' ||
                (pos_ + 1 < text_.size() &&
                 (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '-' ||
                  text_[pos_ + 1] == '+')))
                fail("floating-point literals are not allowed; write an exact rational p/q");
        }
        return num(Rational(Int(text_.substr(start, pos_ - start))));
    }

    std::string parse_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    Expr parse_identifier() {
        const std::size_t name_pos = pos_;
        std::string name = parse_name();
        std::uint32_t primes = 0;
        while (pos_ < text_.size() && text_[pos_] == '\'') {
            ++primes;
            ++pos_;
        }
        const bool has_call = peek() == '(';

        if (!has_call) {
            if (primes > 0) fail("primes are only valid on a function application");
            auto it = scope_.atoms.find(name);
            if (it == scope_.atoms.end()) fail("undeclared atom '" + name + "'");
            return it->second;
        }

        if (primes == 0) {
            if (name == "sin" || name == "cos" || name == "exp" || name == "ln" || name == "sqrt")
                return parse_builtin(name);
            if (name == "diff") return parse_diff();
        }

        if (!scope_.allow_opaque) {
            pos_ = name_pos;
            fail("function application '" + name + "' is not allowed here");
        }
        if (scope_.atoms.count(name)) fail("'" + name + "' is an atom, not a function");
        eat('(');
        std::vector<Expr> args;
        if (!eat(')')) {
            do {
                args.push_back(parse_sum());
            } while (eat(','));
            if (!eat(')')) fail("expected ')' in call to '" + name + "'");
        }
        if (args.empty()) fail("opaque call '" + name + "' needs at least one argument");
        if (primes > 0 && args.size() != 1) fail("primes need a single-argument function");
        std::vector<std::uint32_t> dmul(args.size(), 0u);
        if (primes > 0) dmul[0] = primes;
        return opaque(name, std::move(args), std::move(dmul));
    }

    Expr parse_builtin(const std::string& name) {
        eat('(');
        Expr u = parse_sum();
        if (!eat(')')) fail("expected ')' in call to '" + name + "'");
        if (name == "sin") return sin(u);
        if (name == "cos") return cos(u);
        if (name == "exp") return exp(u);
        if (name == "ln") return ln(u);
        return sqrt(u);
    }

    Expr parse_diff() {
        eat('(');
        Expr u = parse_sum();
        if (!eat(',')) fail("diff(u, v, ...) needs at least one differentiation atom");
        do {
            skip_ws();
            std::string vn = parse_name();
            auto it = scope_.atoms.find(vn);
            if (it == scope_.atoms.end()) fail("undeclared atom '" + vn + "' in diff()");
            u = diff(u, it->second);
        } while (eat(','));
        if (!eat(')')) fail("expected ')' in diff()");
        return u;
    }

    const std::string& text_;
    const ParserScope& scope_;
    int line_;
    int col0_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse_expr(const std::string& text, const ParserScope& scope, int line, int col0) {
    return ExprParser(text, scope, line, col0).run();
}

} // namespace nsym
