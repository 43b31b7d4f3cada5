#include "gridmdp/expr.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace gridmdp {

namespace {

/* Grammar (EBNF in docs/config-format.md):
 *
 *   expr    := cmp
 *   cmp     := sum { ("<"|"<="|">"|">="|"=="|"!=") sum }         left-assoc
 *   sum     := term { ("+"|"-") term }                           left-assoc
 *   term    := unary { ("*"|"/") unary }                         left-assoc
 *   unary   := "-" unary | power
 *   power   := primary [ "^" unary ]                             right-assoc
 *   primary := number | ident | ident "(" expr {"," expr} ")" | "(" expr ")"
 *
 * "^" binds tightest, then unary minus, then "*"/"/", then "+"/"-", then
 * comparisons. Constants are substituted as literals while parsing.
 */

struct FnInfo {
    const char* name;
    Expr::Op op;
    int arity;
};

constexpr FnInfo kFunctions[] = {
    {"sin", Expr::Op::sin, 1},   {"cos", Expr::Op::cos, 1},   {"tan", Expr::Op::tan, 1},
    {"asin", Expr::Op::asin, 1}, {"acos", Expr::Op::acos, 1}, {"atan", Expr::Op::atan, 1},
    {"exp", Expr::Op::exp, 1},   {"ln", Expr::Op::ln, 1},     {"sqrt", Expr::Op::sqrt, 1},
    {"abs", Expr::Op::abs, 1},   {"min", Expr::Op::min, 2},   {"max", Expr::Op::max, 2},
    {"ite", Expr::Op::ite, 3},
};

class Parser {
public:
    Parser(std::string_view text, const Dims& dims, const std::map<std::string, double>& constants)
        : text_(text), dims_(dims), constants_(constants) {}

    void run_into(std::vector<Expr::Node>& nodes, std::int32_t& root) {
        nodes_ = &nodes;
        if (text_.find_first_not_of(" \t\r\n") == std::string_view::npos)
            fail("empty expression");
        root = parse_expr(0);
        skip_ws();
        if (pos_ < text_.size())
            fail(std::string("unexpected trailing input '") + text_[pos_] + "'");
    }

private:
    std::string_view text_;
    Dims dims_;
    const std::map<std::string, double>& constants_;
    std::vector<Expr::Node>* nodes_ = nullptr;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream os;
        os << "expression error at " << line_ << ":" << col_ << ": " << msg;
        throw ParseError(os.str(), line_, col_);
    }

    void advance() {
        if (text_[pos_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
        ++pos_;
    }
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\r' || text_[pos_] == '\n'))
            advance();
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) { advance(); return true; }
        return false;
    }

    std::int32_t add_node(Expr::Node nd) {
        nodes_->push_back(nd);
        return static_cast<std::int32_t>(nodes_->size() - 1);
    }
    std::int32_t add_literal(double v) {
        Expr::Node nd;
        nd.op = Expr::Op::literal;
        nd.value = v;
        return add_node(nd);
    }
    std::int32_t add_binary(Expr::Op op, std::int32_t a, std::int32_t b) {
        Expr::Node nd;
        nd.op = op;
        nd.kid[0] = a;
        nd.kid[1] = b;
        return add_node(nd);
    }

    std::int32_t parse_expr(int depth) {
        if (depth > 200) fail("expression nested too deeply");
        std::int32_t lhs = parse_sum(depth + 1);
        for (;;) {
            skip_ws();
            Expr::Op op;
            if (match("<=")) op = Expr::Op::le;
            else if (match(">=")) op = Expr::Op::ge;
            else if (match("==")) op = Expr::Op::eq;
            else if (match("!=")) op = Expr::Op::ne;
            else if (peek() == '<') { advance(); op = Expr::Op::lt; }
            else if (peek() == '>') { advance(); op = Expr::Op::gt; }
            else break;
            lhs = add_binary(op, lhs, parse_sum(depth + 1));
        }
        return lhs;
    }

    bool match(const char* two) {
        skip_ws();
        if (pos_ + 1 < text_.size() && text_[pos_] == two[0] && text_[pos_ + 1] == two[1]) {
            advance();
            advance();
            return true;
        }
        return false;
    }

    std::int32_t parse_sum(int depth) {
        if (depth > 200) fail("expression nested too deeply");
        std::int32_t lhs = parse_term(depth + 1);
        for (;;) {
            const char c = peek();
            if (c != '+' && c != '-') break;
            advance();
            lhs = add_binary(c == '+' ? Expr::Op::add : Expr::Op::sub, lhs, parse_term(depth + 1));
        }
        return lhs;
    }

    std::int32_t parse_term(int depth) {
        if (depth > 200) fail("expression nested too deeply");
        std::int32_t lhs = parse_unary(depth + 1);
        for (;;) {
            const char c = peek();
            if (c != '*' && c != '/') break;
            advance();
            lhs = add_binary(c == '*' ? Expr::Op::mul : Expr::Op::div, lhs, parse_unary(depth + 1));
        }
        return lhs;
    }

    std::int32_t parse_unary(int depth) {
        if (depth > 200) fail("expression nested too deeply");
        if (peek() == '-') {
            advance();
            const std::int32_t child = parse_unary(depth + 1);
            // fold -literal so "-3.5" and "(-3.5)" parse identically
            if ((*nodes_)[static_cast<std::size_t>(child)].op == Expr::Op::literal) {
                (*nodes_)[static_cast<std::size_t>(child)].value =
                    -(*nodes_)[static_cast<std::size_t>(child)].value;
                return child;
            }
            Expr::Node nd;
            nd.op = Expr::Op::neg;
            nd.kid[0] = child;
            return add_node(nd);
        }
        return parse_power(depth + 1);
    }

    std::int32_t parse_power(int depth) {
        std::int32_t base = parse_primary(depth + 1);
        if (peek() == '^') {
            advance();
            return add_binary(Expr::Op::pow, base, parse_unary(depth + 1));
        }
        return base;
    }

    std::int32_t parse_primary(int depth) {
        const char c = peek();
        if (c == '(') {
            advance();
            std::int32_t inner = parse_expr(depth + 1);
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (c == '.' || (c >= '0' && c <= '9')) return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident(depth);
        if (c == '\0') fail("unexpected end of expression");
        fail(std::string("unexpected character '") + c + "'");
    }

    std::int32_t parse_number() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            advance();
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            int sline = line_, scol = col_;
            advance();
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    advance();
            } else { // not an exponent after all
                pos_ = save;
                line_ = sline;
                col_ = scol;
            }
        }
        const std::string tok(text_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) fail("malformed number '" + tok + "'");
        return add_literal(v);
    }

    std::int32_t parse_ident(int depth) {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            advance();
        const std::string name(text_.substr(start, pos_ - start));

        if (peek() == '(') {
            for (const auto& fn : kFunctions) {
                if (name == fn.name) return parse_call(fn, depth);
            }
            fail("unknown function '" + name + "'");
        }

        // x#/u#/w# variables
        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u' || name[0] == 'w')) {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) { digits = false; break; }
            if (digits) {
                const int idx = std::atoi(name.c_str() + 1);
                VarClass cls;
                int limit;
                const char* what;
                if (name[0] == 'x') { cls = VarClass::state; limit = dims_.n; what = "state"; }
                else if (name[0] == 'u') { cls = VarClass::input; limit = dims_.m; what = "input"; }
                else { cls = VarClass::disturbance; limit = dims_.p; what = "disturbance"; }
                if (idx >= limit) {
                    std::ostringstream os;
                    os << what << " variable " << name << " out of range (dimension " << limit << ")";
                    fail(os.str());
                }
                Expr::Node nd;
                nd.op = Expr::Op::variable;
                nd.var_class = cls;
                nd.var_index = idx;
                return add_node(nd);
            }
        }

        if (auto it = constants_.find(name); it != constants_.end())
            return add_literal(it->second);
        fail("unknown identifier '" + name + "'");
    }

    std::int32_t parse_call(const FnInfo& fn, int depth) {
        consume('(');
        std::int32_t args[3] = {-1, -1, -1};
        for (int i = 0; i < fn.arity; ++i) {
            if (i > 0 && !consume(',')) fail(std::string("expected ',' in call to ") + fn.name);
            args[i] = parse_expr(depth + 1);
        }
        if (!consume(')')) fail(std::string("expected ')' closing call to ") + fn.name);
        Expr::Node nd;
        nd.op = fn.op;
        nd.kid[0] = args[0];
        nd.kid[1] = args[1];
        nd.kid[2] = args[2];
        return add_node(nd);
    }
};

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void print_node(const Expr& e, std::int32_t id, std::ostream& os, int parent_prec);

// Precedence levels: cmp=1, sum=2, term=3, unary=4, pow=5, atom=6.
int node_prec(Expr::Op op) {
    switch (op) {
        case Expr::Op::lt: case Expr::Op::le: case Expr::Op::gt:
        case Expr::Op::ge: case Expr::Op::eq: case Expr::Op::ne: return 1;
        case Expr::Op::add: case Expr::Op::sub: return 2;
        case Expr::Op::mul: case Expr::Op::div: return 3;
        case Expr::Op::neg: return 4;
        case Expr::Op::pow: return 5;
        default: return 6;
    }
}

const char* op_token(Expr::Op op) {
    switch (op) {
        case Expr::Op::add: return " + ";
        case Expr::Op::sub: return " - ";
        case Expr::Op::mul: return "*";
        case Expr::Op::div: return "/";
        case Expr::Op::pow: return "^";
        case Expr::Op::lt: return " < ";
        case Expr::Op::le: return " <= ";
        case Expr::Op::gt: return " > ";
        case Expr::Op::ge: return " >= ";
        case Expr::Op::eq: return " == ";
        case Expr::Op::ne: return " != ";
        default: return "?";
    }
}

const char* fn_name(Expr::Op op) {
    for (const auto& fn : kFunctions)
        if (fn.op == op) return fn.name;
    return "?";
}

void print_node(const Expr& e, std::int32_t id, std::ostream& os, int parent_prec) {
    const Expr::Node& nd = e.nodes()[static_cast<std::size_t>(id)];
    const int prec = node_prec(nd.op);
    switch (nd.op) {
        case Expr::Op::literal: {
            const bool wrap = nd.value < 0.0 || std::signbit(nd.value);
            if (wrap) os << '(';
            os << format_double(nd.value);
            if (wrap) os << ')';
            return;
        }
        case Expr::Op::variable: {
            const char c = nd.var_class == VarClass::state ? 'x'
                         : nd.var_class == VarClass::input ? 'u' : 'w';
            os << c << nd.var_index;
            return;
        }
        case Expr::Op::neg: {
            const bool wrap = prec < parent_prec;
            if (wrap) os << '(';
            os << '-';
            print_node(e, nd.kid[0], os, prec);
            if (wrap) os << ')';
            return;
        }
        case Expr::Op::sin: case Expr::Op::cos: case Expr::Op::tan:
        case Expr::Op::asin: case Expr::Op::acos: case Expr::Op::atan:
        case Expr::Op::exp: case Expr::Op::ln: case Expr::Op::sqrt:
        case Expr::Op::abs: case Expr::Op::min: case Expr::Op::max:
        case Expr::Op::ite: {
            os << fn_name(nd.op) << '(';
            print_node(e, nd.kid[0], os, 0);
            for (int i = 1; i < 3 && nd.kid[i] >= 0; ++i) {
                os << ", ";
                print_node(e, nd.kid[i], os, 0);
            }
            os << ')';
            return;
        }
        default: { // binary operators
            const bool wrap = prec < parent_prec;
            if (wrap) os << '(';
            // Left-assoc ops reparse correctly with an equal-precedence left
            // child; right children need parens at equal precedence. "^" is
            // the mirror image: its base must be a primary, its exponent a unary.
            if (nd.op == Expr::Op::pow) {
                print_node(e, nd.kid[0], os, prec + 1);
                os << op_token(nd.op);
                print_node(e, nd.kid[1], os, 4);
            } else {
                print_node(e, nd.kid[0], os, prec);
                os << op_token(nd.op);
                print_node(e, nd.kid[1], os, prec + 1);
            }
            if (wrap) os << ')';
            return;
        }
    }
}

std::string subexpr_string(const Expr& e, std::int32_t id) {
    std::ostringstream os;
    print_node(e, id, os, 0);
    return os.str();
}

[[noreturn]] void domain_fail(const Expr& e, std::int32_t id, const char* what) {
    throw DomainError(std::string(what) + " in subexpression '" + subexpr_string(e, id) + "'");
}

double eval_node(const Expr& e, std::int32_t id, const double* x, const double* u, const double* w) {
    const Expr::Node& nd = e.nodes()[static_cast<std::size_t>(id)];
    switch (nd.op) {
        case Expr::Op::literal: return nd.value;
        case Expr::Op::variable:
            switch (nd.var_class) {
                case VarClass::state: return x[nd.var_index];
                case VarClass::input: return u[nd.var_index];
                default: return w[nd.var_index];
            }
        case Expr::Op::add: return eval_node(e, nd.kid[0], x, u, w) + eval_node(e, nd.kid[1], x, u, w);
        case Expr::Op::sub: return eval_node(e, nd.kid[0], x, u, w) - eval_node(e, nd.kid[1], x, u, w);
        case Expr::Op::mul: return eval_node(e, nd.kid[0], x, u, w) * eval_node(e, nd.kid[1], x, u, w);
        case Expr::Op::div: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            const double b = eval_node(e, nd.kid[1], x, u, w);
            if (b == 0.0) domain_fail(e, id, "division by zero");
            return a / b;
        }
        case Expr::Op::pow: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            const double b = eval_node(e, nd.kid[1], x, u, w);
            if (a < 0.0 && b != std::floor(b)) domain_fail(e, id, "non-integer power of a negative base");
            if (a == 0.0 && b < 0.0) domain_fail(e, id, "division by zero");
            return std::pow(a, b);
        }
        case Expr::Op::lt: return eval_node(e, nd.kid[0], x, u, w) < eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::le: return eval_node(e, nd.kid[0], x, u, w) <= eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::gt: return eval_node(e, nd.kid[0], x, u, w) > eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::ge: return eval_node(e, nd.kid[0], x, u, w) >= eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::eq: return eval_node(e, nd.kid[0], x, u, w) == eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::ne: return eval_node(e, nd.kid[0], x, u, w) != eval_node(e, nd.kid[1], x, u, w) ? 1.0 : 0.0;
        case Expr::Op::neg: return -eval_node(e, nd.kid[0], x, u, w);
        case Expr::Op::sin: return std::sin(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::cos: return std::cos(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::tan: return std::tan(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::asin: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            if (a < -1.0 || a > 1.0) domain_fail(e, id, "asin argument outside [-1, 1]");
            return std::asin(a);
        }
        case Expr::Op::acos: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            if (a < -1.0 || a > 1.0) domain_fail(e, id, "acos argument outside [-1, 1]");
            return std::acos(a);
        }
        case Expr::Op::atan: return std::atan(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::exp: return std::exp(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::ln: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            if (a <= 0.0) domain_fail(e, id, "ln of a non-positive value");
            return std::log(a);
        }
        case Expr::Op::sqrt: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            if (a < 0.0) domain_fail(e, id, "sqrt of a negative value");
            return std::sqrt(a);
        }
        case Expr::Op::abs: return std::fabs(eval_node(e, nd.kid[0], x, u, w));
        case Expr::Op::min: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            const double b = eval_node(e, nd.kid[1], x, u, w);
            return std::fmin(a, b);
        }
        case Expr::Op::max: {
            const double a = eval_node(e, nd.kid[0], x, u, w);
            const double b = eval_node(e, nd.kid[1], x, u, w);
            return std::fmax(a, b);
        }
        case Expr::Op::ite:
            return eval_node(e, nd.kid[0], x, u, w) != 0.0
                       ? eval_node(e, nd.kid[1], x, u, w)
                       : eval_node(e, nd.kid[2], x, u, w);
    }
    assert(false);
    return 0.0;
}

} // namespace

Expr parse_expression(std::string_view text, const Dims& dims,
                      const std::map<std::string, double>& constants) {
    Parser p(text, dims, constants);
    Expr e;
    e.dims_ = dims;
    p.run_into(e.nodes_, e.root_);
    return e;
}

double eval(const Expr& e, const double* x, const double* u, const double* w) {
    return eval_node(e, e.root(), x, u, w);
}

double eval(const Expr& e, const Vector& x, const Vector& u, const Vector& w) {
    if (x.size() != e.dims().n || u.size() != e.dims().m || w.size() != e.dims().p)
        throw ConfigError("eval: vector lengths do not match the declared dimensions");
    return eval_node(e, e.root(), x.data(), u.data(), w.data());
}

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print_node(e, e.root(), os, 0);
    return os.str();
}

namespace {
bool nodes_equal(const Expr& a, std::int32_t ia, const Expr& b, std::int32_t ib) {
    if ((ia < 0) != (ib < 0)) return false;
    if (ia < 0) return true;
    const Expr::Node& na = a.nodes()[static_cast<std::size_t>(ia)];
    const Expr::Node& nb = b.nodes()[static_cast<std::size_t>(ib)];
    if (na.op != nb.op) return false;
    if (na.op == Expr::Op::literal)
        return na.value == nb.value || (std::isnan(na.value) && std::isnan(nb.value));
    if (na.op == Expr::Op::variable)
        return na.var_class == nb.var_class && na.var_index == nb.var_index;
    for (int i = 0; i < 3; ++i)
        if (!nodes_equal(a, na.kid[i], b, nb.kid[i])) return false;
    return true;
}
} // namespace

bool structurally_equal(const Expr& a, const Expr& b) {
    return nodes_equal(a, a.root(), b, b.root());
}

std::int32_t ExprBuilder::literal(double v) {
    Expr::Node nd;
    nd.op = Expr::Op::literal;
    nd.value = v;
    e_.nodes_.push_back(nd);
    return static_cast<std::int32_t>(e_.nodes_.size() - 1);
}

std::int32_t ExprBuilder::variable(VarClass c, int idx) {
    Expr::Node nd;
    nd.op = Expr::Op::variable;
    nd.var_class = c;
    nd.var_index = idx;
    e_.nodes_.push_back(nd);
    return static_cast<std::int32_t>(e_.nodes_.size() - 1);
}

std::int32_t ExprBuilder::apply(Expr::Op op, std::int32_t a, std::int32_t b, std::int32_t c) {
    Expr::Node nd;
    nd.op = op;
    nd.kid[0] = a;
    nd.kid[1] = b;
    nd.kid[2] = c;
    e_.nodes_.push_back(nd);
    return static_cast<std::int32_t>(e_.nodes_.size() - 1);
}

Expr ExprBuilder::take(std::int32_t root) {
    e_.root_ = root;
    return std::move(e_);
}

} // namespace gridmdp
