#include "contactdyn/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

namespace contactdyn::expr {

namespace {

ExprPtr make(Kind k, double v, std::string name, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->value = v;
    e->name = std::move(name);
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}

bool is_unary(Kind k) {
    switch (k) {
        case Kind::Neg:
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Tan:
        case Kind::Exp:
        case Kind::Ln:
        case Kind::Sqrt:
            return true;
        default:
            return false;
    }
}

}  // namespace

ExprPtr constant(double v) { return make(Kind::Constant, v, {}, nullptr, nullptr); }

ExprPtr variable(const std::string& name) { return make(Kind::Variable, 0.0, name, nullptr, nullptr); }

ExprPtr unary(Kind k, ExprPtr a) { return make(k, 0.0, {}, std::move(a), nullptr); }

ExprPtr binary(Kind k, ExprPtr a, ExprPtr b) { return make(k, 0.0, {}, std::move(a), std::move(b)); }

ExprPtr neg(ExprPtr a) { return unary(Kind::Neg, std::move(a)); }
ExprPtr add(ExprPtr a, ExprPtr b) { return binary(Kind::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(Kind::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(Kind::Mul, std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return binary(Kind::Div, std::move(a), std::move(b)); }
ExprPtr pow(ExprPtr a, ExprPtr b) { return binary(Kind::Pow, std::move(a), std::move(b)); }
ExprPtr pow(ExprPtr a, double e) { return pow(std::move(a), constant(e)); }
ExprPtr sin(ExprPtr a) { return unary(Kind::Sin, std::move(a)); }
ExprPtr cos(ExprPtr a) { return unary(Kind::Cos, std::move(a)); }
ExprPtr tan(ExprPtr a) { return unary(Kind::Tan, std::move(a)); }
ExprPtr exp(ExprPtr a) { return unary(Kind::Exp, std::move(a)); }
ExprPtr ln(ExprPtr a) { return unary(Kind::Ln, std::move(a)); }
ExprPtr sqrt(ExprPtr a) { return unary(Kind::Sqrt, std::move(a)); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Lexer {
    const std::string& text;
    size_t pos = 0;

    explicit Lexer(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool accept(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            throw ParseError(std::string("expected ") + what, pos);
        ++pos;
    }
};

ExprPtr parse_additive(Lexer& lx);

ExprPtr parse_number(Lexer& lx) {
    size_t start = lx.pos;
    size_t i = lx.pos;
    while (i < lx.text.size() && std::isdigit(static_cast<unsigned char>(lx.text[i]))) ++i;
    if (i < lx.text.size() && lx.text[i] == '.') {
        ++i;
        while (i < lx.text.size() && std::isdigit(static_cast<unsigned char>(lx.text[i]))) ++i;
    }
    if (i < lx.text.size() && (lx.text[i] == 'e' || lx.text[i] == 'E')) {
        size_t j = i + 1;
        if (j < lx.text.size() && (lx.text[j] == '+' || lx.text[j] == '-')) ++j;
        if (j < lx.text.size() && std::isdigit(static_cast<unsigned char>(lx.text[j]))) {
            ++j;
            while (j < lx.text.size() && std::isdigit(static_cast<unsigned char>(lx.text[j]))) ++j;
            i = j;
        }
    }
    double v = 0;
    try {
        v = std::stod(lx.text.substr(start, i - start));
    } catch (const std::exception&) {
        throw ParseError("malformed number", start);
    }
    if (!std::isfinite(v)) throw ParseError("number out of range", start);
    lx.pos = i;
    return constant(v);
}

ExprPtr parse_atom(Lexer& lx) {
    lx.skip_ws();
    if (lx.pos >= lx.text.size()) throw ParseError("unexpected end of input", lx.pos);
    char c = lx.text[lx.pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number(lx);
    if (c == '(') {
        ++lx.pos;
        ExprPtr e = parse_additive(lx);
        lx.expect(')', "')'");
        return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = lx.pos;
        size_t i = lx.pos;
        while (i < lx.text.size() &&
               (std::isalnum(static_cast<unsigned char>(lx.text[i])) || lx.text[i] == '_'))
            ++i;
        std::string id = lx.text.substr(start, i - start);
        lx.pos = i;
        lx.skip_ws();
        if (lx.pos < lx.text.size() && lx.text[lx.pos] == '(') {
            Kind k;
            if (id == "sin") k = Kind::Sin;
            else if (id == "cos") k = Kind::Cos;
            else if (id == "tan") k = Kind::Tan;
            else if (id == "exp") k = Kind::Exp;
            else if (id == "ln") k = Kind::Ln;
            else if (id == "sqrt") k = Kind::Sqrt;
            else throw ParseError("unknown function '" + id + "'", start);
            ++lx.pos;
            ExprPtr arg = parse_additive(lx);
            lx.expect(')', "')'");
            return unary(k, arg);
        }
        return variable(id);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", lx.pos);
}

ExprPtr parse_unary(Lexer& lx);

ExprPtr parse_power(Lexer& lx) {
    ExprPtr base = parse_atom(lx);
    if (lx.accept('^')) {
        ExprPtr e = parse_unary(lx);  // right associative, exponent may be signed
        return pow(base, e);
    }
    return base;
}

ExprPtr parse_unary(Lexer& lx) {
    if (lx.accept('-')) return neg(parse_unary(lx));
    if (lx.accept('+')) return parse_unary(lx);
    return parse_power(lx);
}

ExprPtr parse_multiplicative(Lexer& lx) {
    ExprPtr e = parse_unary(lx);
    for (;;) {
        if (lx.accept('*')) e = mul(e, parse_unary(lx));
        else if (lx.accept('/')) e = div(e, parse_unary(lx));
        else return e;
    }
}

ExprPtr parse_additive(Lexer& lx) {
    ExprPtr e = parse_multiplicative(lx);
    for (;;) {
        if (lx.accept('+')) e = add(e, parse_multiplicative(lx));
        else if (lx.accept('-')) e = sub(e, parse_multiplicative(lx));
        else return e;
    }
}

}  // namespace

ExprPtr parse(const std::string& text) {
    Lexer lx(text);
    if (lx.eof()) throw ParseError("empty expression", 0);
    ExprPtr e = parse_additive(lx);
    lx.skip_ws();
    if (lx.pos < lx.text.size())
        throw ParseError(std::string("unexpected character '") + lx.text[lx.pos] + "'", lx.pos);
    return e;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (v == static_cast<long long>(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

int precedence(const ExprPtr& e) {
    switch (e->kind) {
        case Kind::Add:
        case Kind::Sub:
            return 1;
        case Kind::Mul:
        case Kind::Div:
            return 2;
        case Kind::Neg:
            return 3;
        case Kind::Pow:
            return 4;
        default:
            return 5;
    }
}

bool prints_negative(const ExprPtr& e) {
    return e->kind == Kind::Neg || (e->kind == Kind::Constant && e->value < 0);
}

void print_rec(const ExprPtr& e, std::string& out);

void print_child(const ExprPtr& c, int min_prec, std::string& out, bool guard_negative = false) {
    bool parens = precedence(c) < min_prec || (guard_negative && prints_negative(c));
    if (parens) out += '(';
    print_rec(c, out);
    if (parens) out += ')';
}

void print_rec(const ExprPtr& e, std::string& out) {
    switch (e->kind) {
        case Kind::Constant:
            out += format_double(e->value);
            return;
        case Kind::Variable:
            out += e->name;
            return;
        case Kind::Neg:
            out += '-';
            print_child(e->lhs, 3, out);
            return;
        case Kind::Sin: out += "sin("; break;
        case Kind::Cos: out += "cos("; break;
        case Kind::Tan: out += "tan("; break;
        case Kind::Exp: out += "exp("; break;
        case Kind::Ln: out += "ln("; break;
        case Kind::Sqrt: out += "sqrt("; break;
        case Kind::Add:
            print_child(e->lhs, 1, out);
            out += " + ";
            print_child(e->rhs, 2, out, true);
            return;
        case Kind::Sub:
            print_child(e->lhs, 1, out);
            out += " - ";
            print_child(e->rhs, 2, out, true);
            return;
        case Kind::Mul:
            print_child(e->lhs, 2, out);
            out += '*';
            print_child(e->rhs, 3, out, true);
            return;
        case Kind::Div:
            print_child(e->lhs, 2, out);
            out += '/';
            print_child(e->rhs, 3, out, true);
            return;
        case Kind::Pow:
            print_child(e->lhs, 5, out);
            out += '^';
            print_child(e->rhs, 3, out);
            return;
    }
    print_rec(e->lhs, out);
    out += ')';
}

}  // namespace

std::string print(const ExprPtr& e) {
    std::string out;
    print_rec(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

bool integral_value(double v) { return std::floor(v) == v && std::fabs(v) < 1e9; }

double eval_rec(const ExprPtr& e, const EvalContext& ctx) {
    switch (e->kind) {
        case Kind::Constant:
            return e->value;
        case Kind::Variable: {
            auto it = ctx.find(e->name);
            if (it == ctx.end()) throw EvalError("unbound variable '" + e->name + "'");
            return it->second;
        }
        case Kind::Neg:
            return -eval_rec(e->lhs, ctx);
        case Kind::Sin:
            return std::sin(eval_rec(e->lhs, ctx));
        case Kind::Cos:
            return std::cos(eval_rec(e->lhs, ctx));
        case Kind::Tan: {
            double v = std::tan(eval_rec(e->lhs, ctx));
            if (!std::isfinite(v)) throw EvalError("tan at a pole", print(e));
            return v;
        }
        case Kind::Exp: {
            double v = std::exp(eval_rec(e->lhs, ctx));
            if (!std::isfinite(v)) throw EvalError("exp overflow", print(e));
            return v;
        }
        case Kind::Ln: {
            double a = eval_rec(e->lhs, ctx);
            if (a <= 0.0) throw EvalError("log of a nonpositive value", print(e));
            return std::log(a);
        }
        case Kind::Sqrt: {
            double a = eval_rec(e->lhs, ctx);
            if (a < 0.0) throw EvalError("sqrt of a negative value", print(e));
            return std::sqrt(a);
        }
        case Kind::Add:
            return eval_rec(e->lhs, ctx) + eval_rec(e->rhs, ctx);
        case Kind::Sub:
            return eval_rec(e->lhs, ctx) - eval_rec(e->rhs, ctx);
        case Kind::Mul:
            return eval_rec(e->lhs, ctx) * eval_rec(e->rhs, ctx);
        case Kind::Div: {
            double b = eval_rec(e->rhs, ctx);
            if (b == 0.0) throw EvalError("division by zero", print(e));
            double v = eval_rec(e->lhs, ctx) / b;
            if (!std::isfinite(v)) throw EvalError("non-finite quotient", print(e));
            return v;
        }
        case Kind::Pow: {
            double a = eval_rec(e->lhs, ctx);
            double b = eval_rec(e->rhs, ctx);
            if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power", print(e));
            if (a < 0.0 && !integral_value(b))
                throw EvalError("negative base with non-integer exponent", print(e));
            double v = std::pow(a, b);
            if (!std::isfinite(v)) throw EvalError("pow overflow", print(e));
            return v;
        }
    }
    throw EvalError("corrupt expression node");
}

}  // namespace

double evaluate(const ExprPtr& e, const EvalContext& ctx) { return eval_rec(e, ctx); }

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

// light folding used only to keep derivative trees small before the final simplify
ExprPtr m_add(ExprPtr a, ExprPtr b) {
    if (is_constant(a, 0)) return b;
    if (is_constant(b, 0)) return a;
    return add(std::move(a), std::move(b));
}
ExprPtr m_sub(ExprPtr a, ExprPtr b) {
    if (is_constant(b, 0)) return a;
    if (is_constant(a, 0)) return neg(std::move(b));
    return sub(std::move(a), std::move(b));
}
ExprPtr m_mul(ExprPtr a, ExprPtr b) {
    if (is_constant(a, 0) || is_constant(b, 0)) return constant(0);
    if (is_constant(a, 1)) return b;
    if (is_constant(b, 1)) return a;
    return mul(std::move(a), std::move(b));
}
ExprPtr m_div(ExprPtr a, ExprPtr b) {
    if (is_constant(a, 0)) return constant(0);
    if (is_constant(b, 1)) return a;
    return div(std::move(a), std::move(b));
}

ExprPtr diff_rec(const ExprPtr& e, const std::string& var) {
    switch (e->kind) {
        case Kind::Constant:
            return constant(0);
        case Kind::Variable:
            return constant(e->name == var ? 1 : 0);
        case Kind::Neg:
            return neg(diff_rec(e->lhs, var));
        case Kind::Sin:
            return m_mul(cos(e->lhs), diff_rec(e->lhs, var));
        case Kind::Cos:
            return neg(m_mul(sin(e->lhs), diff_rec(e->lhs, var)));
        case Kind::Tan:
            return m_div(diff_rec(e->lhs, var), pow(cos(e->lhs), 2.0));
        case Kind::Exp:
            return m_mul(exp(e->lhs), diff_rec(e->lhs, var));
        case Kind::Ln:
            return m_div(diff_rec(e->lhs, var), e->lhs);
        case Kind::Sqrt:
            return m_div(diff_rec(e->lhs, var), m_mul(constant(2), sqrt(e->lhs)));
        case Kind::Add:
            return m_add(diff_rec(e->lhs, var), diff_rec(e->rhs, var));
        case Kind::Sub:
            return m_sub(diff_rec(e->lhs, var), diff_rec(e->rhs, var));
        case Kind::Mul:
            return m_add(m_mul(diff_rec(e->lhs, var), e->rhs),
                         m_mul(e->lhs, diff_rec(e->rhs, var)));
        case Kind::Div:
            return m_div(m_sub(m_mul(diff_rec(e->lhs, var), e->rhs),
                               m_mul(e->lhs, diff_rec(e->rhs, var))),
                         pow(e->rhs, 2.0));
        case Kind::Pow: {
            if (e->rhs->kind == Kind::Constant) {
                double c = e->rhs->value;
                if (c == 0.0) return constant(0);
                return m_mul(m_mul(constant(c), pow(e->lhs, c - 1.0)), diff_rec(e->lhs, var));
            }
            // u^v -> u^v * (v' ln u + v u'/u)
            ExprPtr u = e->lhs, v = e->rhs;
            ExprPtr term = m_add(m_mul(diff_rec(v, var), ln(u)),
                                 m_mul(v, m_div(diff_rec(u, var), u)));
            return m_mul(pow(u, v), term);
        }
    }
    return constant(0);
}

}  // namespace

ExprPtr differentiate(const ExprPtr& e, const std::string& var) {
    return simplify(diff_rec(e, var));
}

// ---------------------------------------------------------------------------
// Structural helpers
// ---------------------------------------------------------------------------

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::Constant:
            return a->value == b->value;
        case Kind::Variable:
            return a->name == b->name;
        default:
            if (is_unary(a->kind)) return structurally_equal(a->lhs, b->lhs);
            return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    }
}

bool is_constant(const ExprPtr& e, double v) {
    return e && e->kind == Kind::Constant && e->value == v;
}

std::set<std::string> free_variables(const ExprPtr& e) {
    std::set<std::string> out;
    std::vector<const Expr*> stack{e.get()};
    while (!stack.empty()) {
        const Expr* n = stack.back();
        stack.pop_back();
        if (!n) continue;
        if (n->kind == Kind::Variable) out.insert(n->name);
        if (n->lhs) stack.push_back(n->lhs.get());
        if (n->rhs) stack.push_back(n->rhs.get());
    }
    return out;
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& bindings) {
    std::function<ExprPtr(const ExprPtr&)> rec = [&](const ExprPtr& n) -> ExprPtr {
        switch (n->kind) {
            case Kind::Constant:
                return n;
            case Kind::Variable: {
                auto it = bindings.find(n->name);
                return it != bindings.end() ? it->second : n;
            }
            default:
                if (is_unary(n->kind)) return unary(n->kind, rec(n->lhs));
                return binary(n->kind, rec(n->lhs), rec(n->rhs));
        }
    };
    return simplify(rec(e));
}

// ---------------------------------------------------------------------------
// Simplification: flatten/collect canonical pass
// ---------------------------------------------------------------------------

namespace {

struct Factor {
    ExprPtr base;
    long long exp;
};

struct Product {
    double coeff = 1.0;
    std::map<std::string, Factor> factors;  // key = print(base)
    bool opaque = false;                    // division by a literal zero etc.
};

ExprPtr simplify_rec(const ExprPtr& e);

void collect_factors(const ExprPtr& e, long long sign, Product& p) {
    switch (e->kind) {
        case Kind::Constant: {
            if (sign > 0) {
                p.coeff *= e->value;
            } else {
                if (e->value == 0.0) {
                    p.opaque = true;
                    return;
                }
                p.coeff /= e->value;
            }
            return;
        }
        case Kind::Neg:
            p.coeff = -p.coeff;
            collect_factors(e->lhs, sign, p);
            return;
        case Kind::Mul:
            collect_factors(e->lhs, sign, p);
            collect_factors(e->rhs, sign, p);
            return;
        case Kind::Div:
            collect_factors(e->lhs, sign, p);
            collect_factors(e->rhs, -sign, p);
            return;
        case Kind::Pow:
            if (e->rhs->kind == Kind::Constant && integral_value(e->rhs->value) &&
                std::fabs(e->rhs->value) <= 64) {
                long long n = static_cast<long long>(e->rhs->value);
                if (n == 0) return;  // x^0 -> 1
                // distribute integer powers over the base's own factors
                Product inner;
                collect_factors(e->lhs, 1, inner);
                if (inner.opaque) break;
                double c = std::pow(inner.coeff, static_cast<double>(n));
                if (sign > 0) p.coeff *= c;
                else {
                    if (c == 0.0) {
                        p.opaque = true;
                        return;
                    }
                    p.coeff /= c;
                }
                for (auto& [key, f] : inner.factors) {
                    auto it = p.factors.find(key);
                    long long add_exp = f.exp * n * sign;
                    if (it == p.factors.end()) p.factors[key] = {f.base, add_exp};
                    else it->second.exp += add_exp;
                }
                return;
            }
            break;
        default:
            break;
    }
    std::string key = print(e);
    auto it = p.factors.find(key);
    if (it == p.factors.end()) p.factors[key] = {e, sign};
    else it->second.exp += sign;
}

ExprPtr rebuild_product(Product& p) {
    if (p.coeff == 0.0) return constant(0);
    std::vector<ExprPtr> num, den;
    for (auto& [key, f] : p.factors) {
        if (f.exp == 0) continue;
        long long a = std::llabs(f.exp);
        ExprPtr piece = (a == 1) ? f.base : pow(f.base, static_cast<double>(a));
        (f.exp > 0 ? num : den).push_back(piece);
    }
    double c = p.coeff;
    bool negative = std::signbit(c) && c != 0.0;
    double ac = std::fabs(c);
    ExprPtr n;
    if (num.empty() || ac != 1.0) n = constant(ac);
    for (auto& piece : num) n = n ? mul(n, piece) : piece;
    ExprPtr result = n;
    if (!den.empty()) {
        ExprPtr d = den.front();
        for (size_t i = 1; i < den.size(); ++i) d = mul(d, den[i]);
        result = div(result, d);
    }
    if (negative) result = neg(result);
    return result;
}

struct TermBag {
    double constant_acc = 0.0;
    std::map<std::string, std::pair<double, ExprPtr>> terms;  // key -> (coeff, term)
};

// splits a canonical product into (coefficient,残 term); term==nullptr for pure constants
std::pair<double, ExprPtr> split_coeff(const ExprPtr& e) {
    if (e->kind == Kind::Constant) return {e->value, nullptr};
    if (e->kind == Kind::Neg) {
        auto [c, t] = split_coeff(e->lhs);
        return {-c, t};
    }
    if (e->kind == Kind::Mul && e->lhs->kind == Kind::Constant) return {e->lhs->value, e->rhs};
    if (e->kind == Kind::Div) {
        auto [c, t] = split_coeff(e->lhs);
        if (t == nullptr) {
            if (c == 1.0) return {1.0, e};
            return {c, div(constant(1), e->rhs)};
        }
        return {c, div(t, e->rhs)};
    }
    return {1.0, e};
}

void collect_terms(const ExprPtr& e, double sign, TermBag& bag) {
    switch (e->kind) {
        case Kind::Add:
            collect_terms(e->lhs, sign, bag);
            collect_terms(e->rhs, sign, bag);
            return;
        case Kind::Sub:
            collect_terms(e->lhs, sign, bag);
            collect_terms(e->rhs, -sign, bag);
            return;
        case Kind::Neg:
            collect_terms(e->lhs, -sign, bag);
            return;
        case Kind::Constant:
            bag.constant_acc += sign * e->value;
            return;
        default: {
            auto [c, t] = split_coeff(e);
            if (t == nullptr) {
                bag.constant_acc += sign * c;
                return;
            }
            std::string key = print(t);
            auto it = bag.terms.find(key);
            if (it == bag.terms.end()) bag.terms[key] = {sign * c, t};
            else it->second.first += sign * c;
        }
    }
}

ExprPtr rebuild_sum(TermBag& bag) {
    ExprPtr out;
    auto append = [&](double c, const ExprPtr& t) {
        if (c == 0.0) return;
        bool negative = c < 0.0;
        double a = std::fabs(c);
        ExprPtr piece;
        if (a == 1.0) piece = t;
        else if (t->kind == Kind::Div && is_constant(t->lhs, 1))
            piece = div(constant(a), t->rhs);  // keep c/X shape stable under re-simplify
        else piece = mul(constant(a), t);
        if (!out) out = negative ? neg(piece) : piece;
        else out = negative ? sub(out, piece) : add(out, piece);
    };
    for (auto& [key, ct] : bag.terms) append(ct.first, ct.second);
    double c = bag.constant_acc;
    if (c != 0.0 || !out) {
        if (!out) out = constant(c);
        else if (c > 0) out = add(out, constant(c));
        else out = sub(out, constant(-c));
    }
    return out;
}

ExprPtr fold_unary(Kind k, const ExprPtr& child) {
    if (child->kind == Kind::Constant) {
        EvalContext empty;
        try {
            return constant(evaluate(unary(k, child), empty));
        } catch (const EvalError&) {
            // keep symbolic; evaluation will report the violation
        }
    }
    if (k == Kind::Neg) {
        if (child->kind == Kind::Neg) return child->lhs;
        TermBag bag;
        collect_terms(neg(child), 1.0, bag);
        return rebuild_sum(bag);
    }
    return unary(k, child);
}

ExprPtr simplify_rec(const ExprPtr& e) {
    switch (e->kind) {
        case Kind::Constant:
        case Kind::Variable:
            return e;
        case Kind::Neg: {
            return fold_unary(Kind::Neg, simplify_rec(e->lhs));
        }
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Tan:
        case Kind::Exp:
        case Kind::Ln:
        case Kind::Sqrt:
            return fold_unary(e->kind, simplify_rec(e->lhs));
        case Kind::Add:
        case Kind::Sub: {
            ExprPtr a = simplify_rec(e->lhs);
            ExprPtr b = simplify_rec(e->rhs);
            TermBag bag;
            collect_terms(a, 1.0, bag);
            collect_terms(b, e->kind == Kind::Add ? 1.0 : -1.0, bag);
            return rebuild_sum(bag);
        }
        case Kind::Mul:
        case Kind::Div: {
            ExprPtr a = simplify_rec(e->lhs);
            ExprPtr b = simplify_rec(e->rhs);
            Product p;
            collect_factors(a, 1, p);
            if (!p.opaque) collect_factors(b, e->kind == Kind::Mul ? 1 : -1, p);
            if (p.opaque) return binary(e->kind, a, b);
            return rebuild_product(p);
        }
        case Kind::Pow: {
            ExprPtr base = simplify_rec(e->lhs);
            ExprPtr ex = simplify_rec(e->rhs);
            if (ex->kind == Kind::Constant) {
                if (ex->value == 0.0) return constant(1);
                if (ex->value == 1.0) return base;
                if (base->kind == Kind::Constant && integral_value(ex->value)) {
                    double v = std::pow(base->value, ex->value);
                    if (std::isfinite(v)) return constant(v);
                }
                if (integral_value(ex->value) && std::fabs(ex->value) <= 64) {
                    Product p;
                    collect_factors(pow(base, ex), 1, p);
                    if (!p.opaque) return rebuild_product(p);
                }
            }
            if (is_constant(base, 1)) return constant(1);
            return pow(base, ex);
        }
    }
    return e;
}

}  // namespace

ExprPtr simplify(const ExprPtr& e) { return simplify_rec(e); }

// ---------------------------------------------------------------------------
// Sampling, equivalence, affine solving
// ---------------------------------------------------------------------------

Interval SampleDomain::interval_for(const std::string& var) const {
    auto it = intervals.find(var);
    return it != intervals.end() ? it->second : fallback;
}

SampleDomain SampleDomain::with_guard(ExprPtr g, double min_abs) const {
    SampleDomain d = *this;
    d.guards.push_back(std::move(g));
    d.guard_min = min_abs;
    return d;
}

SampleDomain SampleDomain::with_interval(const std::string& var, double lo, double hi) const {
    SampleDomain d = *this;
    d.intervals[var] = {lo, hi};
    return d;
}

namespace {

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
    // fixed mapping keeps samples identical across platforms
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

}  // namespace

std::vector<EvalContext> sample_points(const std::vector<std::string>& vars,
                                       const SampleDomain& d,
                                       const std::vector<ExprPtr>& must_eval) {
    std::mt19937_64 rng(d.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<EvalContext> pts;
    pts.reserve(d.samples);
    for (int i = 0; i < d.samples; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt <= d.retries && !ok; ++attempt) {
            EvalContext ctx;
            for (const auto& v : vars) {
                Interval iv = d.interval_for(v);
                ctx[v] = draw_uniform(rng, iv.lo, iv.hi);
            }
            try {
                bool guarded = true;
                for (const auto& g : d.guards) {
                    if (std::fabs(evaluate(g, ctx)) < d.guard_min) {
                        guarded = false;
                        break;
                    }
                }
                if (!guarded) continue;
                for (const auto& m : must_eval) (void)evaluate(m, ctx);
                pts.push_back(std::move(ctx));
                ok = true;
            } catch (const EvalError&) {
                // rejected, resample
            }
        }
        if (!ok)
            throw SampleError("fewer than " + std::to_string(d.samples) +
                              " valid sample points found");
    }
    return pts;
}

namespace {

std::vector<std::string> union_vars(const ExprPtr& a, const ExprPtr& b,
                                    const SampleDomain& d) {
    std::set<std::string> s = free_variables(a);
    if (b) {
        auto sb = free_variables(b);
        s.insert(sb.begin(), sb.end());
    }
    for (const auto& g : d.guards) {
        auto sg = free_variables(g);
        s.insert(sg.begin(), sg.end());
    }
    return {s.begin(), s.end()};
}

}  // namespace

bool equivalent_on_domain(const ExprPtr& a, const ExprPtr& b, const SampleDomain& d) {
    auto vars = union_vars(a, b, d);
    auto pts = sample_points(vars, d, {a, b});
    for (const auto& ctx : pts) {
        double va = evaluate(a, ctx);
        double vb = evaluate(b, ctx);
        if (std::fabs(va - vb) > d.tol * (1.0 + std::fabs(va) + std::fabs(vb))) return false;
    }
    return true;
}

bool is_zero_on(const ExprPtr& e, const SampleDomain& d) {
    return equivalent_on_domain(e, constant(0), d);
}

double max_abs_on(const ExprPtr& e, const SampleDomain& d) {
    auto vars = union_vars(e, nullptr, d);
    auto pts = sample_points(vars, d, {e});
    double m = 0.0;
    for (const auto& ctx : pts) m = std::max(m, std::fabs(evaluate(e, ctx)));
    return m;
}

std::optional<ExprPtr> solve_affine(const ExprPtr& e, const std::string& var,
                                    const SampleDomain& d) {
    auto vars = free_variables(e);
    if (!vars.count(var)) return std::nullopt;
    ExprPtr a = differentiate(e, var);
    ExprPtr curvature = differentiate(a, var);
    try {
        if (!is_zero_on(curvature, d)) return std::nullopt;
        auto sample_vars = union_vars(e, a, d);
        auto pts = sample_points(sample_vars, d, {e, a});
        for (const auto& ctx : pts)
            if (std::fabs(evaluate(a, ctx)) <= d.tol) return std::nullopt;
    } catch (const SampleError&) {
        return std::nullopt;
    }
    ExprPtr b = substitute(e, {{var, constant(0)}});
    return simplify(div(neg(b), a));
}

}  // namespace contactdyn::expr
