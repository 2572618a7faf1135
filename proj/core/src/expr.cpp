#include "spraymet/expr.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "spraymet/error.hpp"

namespace spraymet {

namespace detail {

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    Var var = Var::x1;
    Rational exponent{};
    // Children start out null; a default Expr would recurse into the shared
    // zero constant while that constant is being built.
    Expr a{std::shared_ptr<const Node>{}};
    Expr b{std::shared_ptr<const Node>{}};
    std::size_t hash = 0;
    std::uint8_t arity = 0;
};

}  // namespace detail

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t double_hash(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    return std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(v));
}

}  // namespace

struct ExprFactory {
    static Expr make(detail::Node n) {
        std::size_t h = std::hash<int>{}(static_cast<int>(n.op));
        switch (n.op) {
        case Op::Const: h = mix(h, double_hash(n.value)); break;
        case Op::Variable: h = mix(h, static_cast<std::size_t>(n.var)); break;
        case Op::Pow:
            h = mix(h, std::hash<std::int64_t>{}(n.exponent.num));
            h = mix(h, std::hash<std::int64_t>{}(n.exponent.den));
            h = mix(h, n.a.hash());
            break;
        default:
            h = mix(h, n.a.hash());
            if (n.arity == 2) h = mix(h, n.b.hash());
        }
        n.hash = h;
        return Expr(std::make_shared<const detail::Node>(std::move(n)));
    }

    static Expr leaf_const(double v) {
        detail::Node n;
        n.op = Op::Const;
        n.value = v;
        return make(std::move(n));
    }

    static Expr unary(Op op, Expr a) {
        detail::Node n;
        n.op = op;
        n.a = std::move(a);
        n.arity = 1;
        return make(std::move(n));
    }

    static Expr binary(Op op, Expr a, Expr b) {
        detail::Node n;
        n.op = op;
        n.a = std::move(a);
        n.b = std::move(b);
        n.arity = 2;
        return make(std::move(n));
    }
};

// ---------------------------------------------------------------------------
// Basic types

std::string_view var_name(Var v) noexcept {
    switch (v) {
    case Var::x1: return "x1";
    case Var::x2: return "x2";
    case Var::y1: return "y1";
    case Var::y2: return "y2";
    }
    return "?";
}

double Point::fiber_norm() const noexcept { return std::hypot(c[2], c[3]); }

std::ostream& operator<<(std::ostream& os, const Point& p) {
    return os << '(' << p.c[0] << ", " << p.c[1] << ", " << p.c[2] << ", " << p.c[3] << ')';
}

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw DomainError("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    num = g ? n / g : 0;
    den = g ? d / g : 1;
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}

// ---------------------------------------------------------------------------
// Expr accessors

namespace {
const Expr& zero_expr() {
    static const Expr z = ExprFactory::leaf_const(0.0);
    return z;
}
}  // namespace

Expr::Expr() : node_(zero_expr().node_) {}

Expr Expr::constant(double v) {
    if (v == 0.0) return zero_expr();
    return ExprFactory::leaf_const(v);
}

Expr Expr::variable(Var v) {
    static const std::array<Expr, 4> vars = [] {
        std::array<Expr, 4> out;
        for (Var w : kAllVars) {
            detail::Node n;
            n.op = Op::Variable;
            n.var = w;
            out[static_cast<std::size_t>(w)] = ExprFactory::make(std::move(n));
        }
        return out;
    }();
    return vars[static_cast<std::size_t>(v)];
}

Op Expr::op() const noexcept { return node_->op; }

double Expr::constant_value() const {
    assert(node_->op == Op::Const);
    return node_->value;
}

Var Expr::variable_id() const {
    assert(node_->op == Op::Variable);
    return node_->var;
}

Rational Expr::exponent() const {
    assert(node_->op == Op::Pow);
    return node_->exponent;
}

std::size_t Expr::arity() const noexcept { return node_->arity; }

const Expr& Expr::child(std::size_t i) const {
    assert(i < node_->arity);
    return i == 0 ? node_->a : node_->b;
}

bool Expr::is_constant(double v) const noexcept { return node_->op == Op::Const && node_->value == v; }

std::size_t Expr::hash() const noexcept { return node_->hash; }

std::size_t Expr::dag_size() const {
    std::vector<const detail::Node*> stack{node_.get()};
    std::unordered_map<const detail::Node*, bool> seen;
    std::size_t count = 0;
    while (!stack.empty()) {
        const detail::Node* n = stack.back();
        stack.pop_back();
        if (!seen.emplace(n, true).second) continue;
        ++count;
        if (n->arity >= 1) stack.push_back(n->a.node());
        if (n->arity == 2) stack.push_back(n->b.node());
    }
    return count;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    const detail::Node* x = a.node();
    const detail::Node* y = b.node();
    if (x == y) return true;
    if (x->hash != y->hash || x->op != y->op || x->arity != y->arity) return false;
    switch (x->op) {
    case Op::Const: return x->value == y->value;
    case Op::Variable: return x->var == y->var;
    case Op::Pow:
        if (!(x->exponent == y->exponent)) return false;
        break;
    default: break;
    }
    if (x->arity >= 1 && !structurally_equal(x->a, y->a)) return false;
    if (x->arity == 2 && !structurally_equal(x->b, y->b)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Raw builders

namespace raw {
Expr constant(double v) { return ExprFactory::leaf_const(v); }
Expr variable(Var v) { return Expr::variable(v); }
Expr add(Expr a, Expr b) { return ExprFactory::binary(Op::Add, std::move(a), std::move(b)); }
Expr mul(Expr a, Expr b) { return ExprFactory::binary(Op::Mul, std::move(a), std::move(b)); }
Expr div(Expr a, Expr b) { return ExprFactory::binary(Op::Div, std::move(a), std::move(b)); }
Expr neg(Expr a) { return ExprFactory::unary(Op::Neg, std::move(a)); }
Expr sqrt(Expr a) { return ExprFactory::unary(Op::Sqrt, std::move(a)); }
Expr abs(Expr a) { return ExprFactory::unary(Op::Abs, std::move(a)); }
Expr pow(Expr base, Rational exponent) {
    detail::Node n;
    n.op = Op::Pow;
    n.a = std::move(base);
    n.exponent = exponent;
    n.arity = 1;
    return ExprFactory::make(std::move(n));
}
}  // namespace raw

// ---------------------------------------------------------------------------
// Smart constructors

namespace {

bool pow_defined(double base, Rational r) {
    if (base == 0.0 && r.num < 0) return false;
    if (base < 0.0 && !r.is_integer() && r.den % 2 == 0) return false;
    return true;
}

double pow_value(double base, Rational r) {
    if (r.is_integer()) {
        if (r.num == 2) return base * base;
        return std::pow(base, static_cast<double>(r.num));
    }
    if (r.num == 1 && r.den == 2) return std::sqrt(base);
    if (base < 0.0) {
        const double mag = std::pow(-base, r.value());
        return (r.num % 2 != 0) ? -mag : mag;
    }
    return std::pow(base, r.value());
}

}  // namespace

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.constant_value());
    if (a.op() == Op::Neg) return a.child(0);
    return raw::neg(a);
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() + b.constant_value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (b.op() == Op::Neg && structurally_equal(b.child(0), a)) return Expr{};
    if (a.op() == Op::Neg && structurally_equal(a.child(0), b)) return Expr{};
    if (b.is_constant() && b.constant_value() < 0.0) return raw::add(a, raw::neg(Expr::constant(-b.constant_value())));
    return raw::add(a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (structurally_equal(a, b)) return Expr{};
    return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() * b.constant_value());
    if (a.is_zero() || b.is_zero()) return Expr{};
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return -b;
    if (b.is_constant(-1.0)) return -a;
    if (a.op() == Op::Neg && b.op() == Op::Neg) return a.child(0) * b.child(0);
    if (a.op() == Op::Neg) return -(a.child(0) * b);
    if (b.op() == Op::Neg) return -(a * b.child(0));
    if (a.is_constant() && b.op() == Op::Mul && b.child(0).is_constant())
        return Expr::constant(a.constant_value() * b.child(0).constant_value()) * b.child(1);
    if (b.is_constant()) return b * a;
    return raw::mul(a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_constant(1.0)) return a;
    if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
        return Expr::constant(a.constant_value() / b.constant_value());
    if (a.is_zero() && !b.is_zero()) return Expr{};
    if (b.is_constant(-1.0)) return -a;
    if (a.op() == Op::Neg) return -(a.child(0) / b);
    if (b.op() == Op::Neg) return -(a / b.child(0));
    return raw::div(a, b);
}

Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

Expr pow(const Expr& base, Rational exponent) {
    if (exponent.num == 0) return Expr::constant(1.0);
    if (exponent == Rational(1)) return base;
    if (base.is_constant() && pow_defined(base.constant_value(), exponent))
        return Expr::constant(pow_value(base.constant_value(), exponent));
    return raw::pow(base, exponent);
}

Expr sqrt(const Expr& e) {
    if (e.is_constant() && e.constant_value() >= 0.0) return Expr::constant(std::sqrt(e.constant_value()));
    return raw::sqrt(e);
}

Expr abs(const Expr& e) {
    if (e.is_constant()) return Expr::constant(std::fabs(e.constant_value()));
    if (e.op() == Op::Abs) return e;
    if (e.op() == Op::Neg) return abs(e.child(0));
    return raw::abs(e);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecUnary = 3;
constexpr int kPrecAtom = 5;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_rational(Rational r) {
    if (r.is_integer() && r.num >= 0) return std::to_string(r.num);
    std::string s = "(" + std::to_string(r.num);
    if (!r.is_integer()) s += "/" + std::to_string(r.den);
    return s + ")";
}

int precedence(const Expr& e) {
    switch (e.op()) {
    case Op::Add: return kPrecAdd;
    case Op::Mul:
    case Op::Div: return kPrecMul;
    case Op::Neg: return kPrecUnary;
    case Op::Pow: return 4;
    default: return kPrecAtom;
    }
}

void print(const Expr& e, int min_prec, std::string& out);

void print_paren(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += '(';
        print(e, 0, out);
        out += ')';
    } else {
        print(e, min_prec, out);
    }
}

void print(const Expr& e, int min_prec, std::string& out) {
    (void)min_prec;
    switch (e.op()) {
    case Op::Const: {
        const double v = e.constant_value();
        if (v < 0.0 || std::signbit(v)) {
            out += "(-" + format_double(-v) + ")";
        } else {
            out += format_double(v);
        }
        return;
    }
    case Op::Variable: out += var_name(e.variable_id()); return;
    case Op::Add: {
        print_paren(e.child(0), kPrecAdd, out);
        const Expr& rhs = e.child(1);
        if (rhs.op() == Op::Neg) {
            out += " - ";
            print_paren(rhs.child(0), kPrecMul, out);
        } else {
            out += " + ";
            print_paren(rhs, kPrecMul, out);
        }
        return;
    }
    case Op::Mul:
    case Op::Div:
        print_paren(e.child(0), kPrecMul, out);
        out += e.op() == Op::Mul ? "*" : "/";
        print_paren(e.child(1), kPrecUnary, out);
        return;
    case Op::Neg:
        out += '-';
        print_paren(e.child(0), kPrecUnary, out);
        return;
    case Op::Pow: {
        const Expr& base = e.child(0);
        const bool atomic = base.op() == Op::Variable || base.op() == Op::Sqrt || base.op() == Op::Abs ||
                            (base.op() == Op::Const && base.constant_value() >= 0.0);
        if (atomic) {
            print(base, kPrecAtom, out);
        } else {
            out += '(';
            print(base, 0, out);
            out += ')';
        }
        out += '^';
        out += format_rational(e.exponent());
        return;
    }
    case Op::Sqrt:
    case Op::Abs:
        out += e.op() == Op::Sqrt ? "sqrt(" : "abs(";
        print(e.child(0), 0, out);
        out += ')';
        return;
    }
}

}  // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print(e, 0, out);
    return out;
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError(std::string("syntax error: unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    [[noreturn]] void fail(const std::string& what) {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("syntax error: unexpected end of input", pos_);
        throw ParseError("syntax error: " + what, pos_);
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = raw::add(lhs, term());
            } else if (accept('-')) {
                lhs = raw::add(lhs, raw::neg(term()));
            } else {
                return lhs;
            }
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = raw::mul(lhs, unary());
            } else if (accept('/')) {
                lhs = raw::div(lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    Expr unary() {
        if (accept('-')) return raw::neg(unary());
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) return raw::pow(base, exponent());
        return base;
    }

    std::int64_t integer() {
        skip_ws();
        const std::size_t start = pos_;
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (ec != std::errc{} || ptr == src_.data() + start) fail("expected integer");
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        return v;
    }

    Rational exponent() {
        skip_ws();
        const std::size_t start = pos_;
        if (accept('(')) {
            const bool negative = accept('-');
            std::int64_t num = integer();
            std::int64_t den = 1;
            if (accept('/')) {
                den = integer();
                if (den == 0) throw ParseError("syntax error: zero denominator in exponent", start);
            }
            expect(')');
            return Rational(negative ? -num : num, den);
        }
        const bool negative = accept('-');
        const std::int64_t num = integer();
        return Rational(negative ? -num : num);
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = expr();
            expect(')');
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return identifier();
        fail(std::string("unexpected '") + c + "'");
    }

    Expr number() {
        const std::size_t start = pos_;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (ec != std::errc{}) throw ParseError("syntax error: malformed number", start);
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        return raw::constant(v);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view id = src_.substr(start, pos_ - start);
        for (Var v : kAllVars) {
            if (id == var_name(v)) return raw::variable(v);
        }
        if (id == "sqrt" || id == "abs") {
            expect('(');
            Expr arg = expr();
            expect(')');
            return id == "sqrt" ? raw::sqrt(arg) : raw::abs(arg);
        }
        throw ParseError("unknown identifier '" + std::string(id) + "'", start);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source) { return Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Differentiation

namespace {

class Differentiator {
public:
    explicit Differentiator(Var v) : var_(v) {}

    Expr diff(const Expr& e) {
        if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        Expr d = compute(e);
        memo_.emplace(e.node(), d);
        return d;
    }

private:
    Expr compute(const Expr& e) {
        switch (e.op()) {
        case Op::Const: return Expr{};
        case Op::Variable: return Expr::constant(e.variable_id() == var_ ? 1.0 : 0.0);
        case Op::Add: return diff(e.child(0)) + diff(e.child(1));
        case Op::Neg: return -diff(e.child(0));
        case Op::Mul: {
            const Expr& u = e.child(0);
            const Expr& w = e.child(1);
            return diff(u) * w + u * diff(w);
        }
        case Op::Div: {
            const Expr& u = e.child(0);
            const Expr& w = e.child(1);
            const Expr du = diff(u);
            const Expr dw = diff(w);
            if (dw.is_zero()) return du / w;
            if (du.is_zero()) return -(u * dw / pow(w, Rational(2)));
            return (du * w - u * dw) / pow(w, Rational(2));
        }
        case Op::Pow: {
            const Expr& u = e.child(0);
            const Expr du = diff(u);
            if (du.is_zero()) return Expr{};
            const Rational r = e.exponent();
            return Expr::constant(r.value()) * pow(u, r - Rational(1)) * du;
        }
        case Op::Sqrt: {
            const Expr du = diff(e.child(0));
            if (du.is_zero()) return Expr{};
            return du / (Expr::constant(2.0) * e);
        }
        case Op::Abs: {
            const Expr& u = e.child(0);
            const Expr du = diff(u);
            if (du.is_zero()) return Expr{};
            return (u / e) * du;
        }
        }
        return Expr{};
    }

    Var var_;
    std::unordered_map<const detail::Node*, Expr> memo_;
};

}  // namespace

Expr partial(const Expr& e, Var v) { return Differentiator(v).diff(e); }

Expr directional(const Expr& e, std::span<const Expr, 4> coeffs) {
    Expr sum;
    for (Var v : kAllVars) {
        const Expr& c = coeffs[static_cast<std::size_t>(v)];
        if (c.is_zero()) continue;
        sum = sum + c * partial(e, v);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

class Simplifier {
public:
    Expr run(const Expr& e) {
        if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        Expr s = rebuild(e);
        memo_.emplace(e.node(), s);
        return s;
    }

    std::vector<Expr> provisos;

private:
    Expr rebuild(const Expr& e) {
        switch (e.op()) {
        case Op::Const:
        case Op::Variable: return e;
        case Op::Add: return run(e.child(0)) + run(e.child(1));
        case Op::Mul: return run(e.child(0)) * run(e.child(1));
        case Op::Div: {
            Expr num = run(e.child(0));
            Expr den = run(e.child(1));
            if (!den.is_constant() && structurally_equal(num, den)) {
                add_proviso(den);
                return Expr::constant(1.0);
            }
            return num / den;
        }
        case Op::Neg: return -run(e.child(0));
        case Op::Pow: return pow(run(e.child(0)), e.exponent());
        case Op::Sqrt: return sqrt(run(e.child(0)));
        case Op::Abs: return abs(run(e.child(0)));
        }
        return e;
    }

    void add_proviso(const Expr& d) {
        for (const Expr& p : provisos) {
            if (structurally_equal(p, d)) return;
        }
        provisos.push_back(d);
    }

    std::unordered_map<const detail::Node*, Expr> memo_;
};

}  // namespace

Simplified simplify(const Expr& e) {
    Simplifier s;
    Expr out = s.run(e);
    return Simplified{std::move(out), std::move(s.provisos)};
}

// ---------------------------------------------------------------------------
// Compiled evaluation

namespace {

struct InstrKey {
    Op op;
    std::uint64_t value_bits;
    std::uint8_t var;
    std::int64_t num;
    std::int64_t den;
    std::uint32_t a;
    std::uint32_t b;

    bool operator==(const InstrKey&) const = default;
};

struct InstrKeyHash {
    std::size_t operator()(const InstrKey& k) const noexcept {
        std::size_t h = static_cast<std::size_t>(k.op);
        h = mix(h, k.value_bits);
        h = mix(h, k.var);
        h = mix(h, static_cast<std::size_t>(k.num));
        h = mix(h, static_cast<std::size_t>(k.den));
        h = mix(h, k.a);
        h = mix(h, k.b);
        return h;
    }
};

enum class Failure : std::uint8_t { None, DivisionByZero, NegativeRadicand, PowDomain, NonFinite };

const char* failure_text(Failure f) {
    switch (f) {
    case Failure::DivisionByZero: return "division by zero";
    case Failure::NegativeRadicand: return "negative argument of sqrt";
    case Failure::PowDomain: return "power outside its domain";
    case Failure::NonFinite: return "non-finite value";
    case Failure::None: break;
    }
    return "evaluation failure";
}

std::string abbreviated(const Expr& e) {
    std::string s = to_string(e);
    constexpr std::size_t kMax = 240;
    if (s.size() > kMax) s = s.substr(0, kMax) + "...";
    return s;
}

}  // namespace

CompiledExprs::CompiledExprs(std::initializer_list<Expr> roots)
    : CompiledExprs(std::span<const Expr>(roots.begin(), roots.size())) {}

CompiledExprs::CompiledExprs(std::span<const Expr> roots) {
    std::unordered_map<const detail::Node*, std::uint32_t> by_ptr;
    std::unordered_map<InstrKey, std::uint32_t, InstrKeyHash> by_key;

    // Iterative post-order so that deep trees cannot exhaust the stack.
    struct Frame {
        Expr expr;
        bool expanded;
    };
    auto compile_root = [&](const Expr& root) -> std::uint32_t {
        std::vector<Frame> stack{{root, false}};
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            const detail::Node* n = f.expr.node();
            if (by_ptr.count(n)) continue;
            if (!f.expanded) {
                stack.push_back({f.expr, true});
                if (n->arity == 2) stack.push_back({n->b, false});
                if (n->arity >= 1) stack.push_back({n->a, false});
                continue;
            }
            InstrKey key{n->op, 0, 0, 0, 1, 0, 0};
            if (n->op == Op::Const) key.value_bits = std::bit_cast<std::uint64_t>(n->value);
            if (n->op == Op::Variable) key.var = static_cast<std::uint8_t>(n->var);
            if (n->op == Op::Pow) {
                key.num = n->exponent.num;
                key.den = n->exponent.den;
            }
            if (n->op == Op::Variable) key.a = static_cast<std::uint32_t>(n->var);
            if (n->arity >= 1) key.a = by_ptr.at(n->a.node());
            if (n->arity == 2) key.b = by_ptr.at(n->b.node());
            auto [it, inserted] = by_key.emplace(key, static_cast<std::uint32_t>(code_.size()));
            if (inserted) {
                Instr ins;
                ins.op = n->op;
                ins.a = key.a;
                ins.b = key.b;
                ins.value = n->value;
                ins.exponent = n->exponent;
                ins.origin = f.expr;
                code_.push_back(ins);
            }
            by_ptr.emplace(n, it->second);
        }
        return by_ptr.at(root.node());
    };

    outputs_.reserve(roots.size());
    for (const Expr& r : roots) outputs_.push_back(compile_root(r));
}

bool CompiledExprs::run(const Point& p, std::vector<double>& regs, std::size_t& failed_at) const noexcept {
    regs.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& ins = code_[i];
        double r = 0.0;
        Failure fail = Failure::None;
        switch (ins.op) {
        case Op::Const: r = ins.value; break;
        case Op::Variable: r = p.c[ins.a]; break;
        case Op::Add: r = regs[ins.a] + regs[ins.b]; break;
        case Op::Mul: r = regs[ins.a] * regs[ins.b]; break;
        case Op::Div:
            if (regs[ins.b] == 0.0) {
                fail = Failure::DivisionByZero;
            } else {
                r = regs[ins.a] / regs[ins.b];
            }
            break;
        case Op::Neg: r = -regs[ins.a]; break;
        case Op::Pow:
            if (!pow_defined(regs[ins.a], ins.exponent)) {
                fail = regs[ins.a] == 0.0 ? Failure::DivisionByZero : Failure::PowDomain;
            } else {
                r = pow_value(regs[ins.a], ins.exponent);
            }
            break;
        case Op::Sqrt:
            if (regs[ins.a] < 0.0) {
                fail = Failure::NegativeRadicand;
            } else {
                r = std::sqrt(regs[ins.a]);
            }
            break;
        case Op::Abs: r = std::fabs(regs[ins.a]); break;
        }
        if (fail == Failure::None && !std::isfinite(r)) fail = Failure::NonFinite;
        if (fail != Failure::None) {
            failed_at = i;
            regs[0] = static_cast<double>(static_cast<int>(fail));
            return false;
        }
        regs[i] = r;
    }
    return true;
}

void CompiledExprs::evaluate(const Point& p, std::span<double> out) const {
    std::vector<double> regs;
    std::size_t failed_at = 0;
    if (!run(p, regs, failed_at)) {
        const auto fail = static_cast<Failure>(static_cast<int>(regs[0]));
        throw EvaluationError(failure_text(fail), abbreviated(code_[failed_at].origin));
    }
    for (std::size_t i = 0; i < outputs_.size() && i < out.size(); ++i) out[i] = regs[outputs_[i]];
}

std::vector<double> CompiledExprs::evaluate(const Point& p) const {
    std::vector<double> out(outputs_.size());
    evaluate(p, out);
    return out;
}

bool CompiledExprs::try_evaluate(const Point& p, std::span<double> out) const noexcept {
    std::vector<double> regs;
    std::size_t failed_at = 0;
    if (!run(p, regs, failed_at)) return false;
    for (std::size_t i = 0; i < outputs_.size() && i < out.size(); ++i) out[i] = regs[outputs_[i]];
    return true;
}

double evaluate(const Expr& e, const Point& p) {
    CompiledExprs c{e};
    double v = 0.0;
    c.evaluate(p, std::span<double>(&v, 1));
    return v;
}

// ---------------------------------------------------------------------------
// Homogeneity

HomogeneityResult homogeneity_degree_check(const Expr& e, Rational k, std::span<const Point> samples, double tol) {
    const CompiledExprs prog{e, partial(e, Var::y1), partial(e, Var::y2)};
    HomogeneityResult res;
    std::array<double, 3> v{};
    for (const Point& p : samples) {
        prog.evaluate(p, v);
        const double ke = k.value() * v[0];
        const double r = std::fabs(p.y1() * v[1] + p.y2() * v[2] - ke) / (1.0 + std::fabs(ke));
        if (r > res.max_residual || (res.max_residual == 0.0 && &p == samples.data())) {
            res.max_residual = std::max(res.max_residual, r);
            res.worst = p;
        }
    }
    res.ok = res.max_residual <= tol;
    return res;
}

}  // namespace spraymet
