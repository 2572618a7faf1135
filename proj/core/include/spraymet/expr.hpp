#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spraymet {

/// Induced coordinates on the slit tangent bundle of a surface.
enum class Var : std::uint8_t { x1 = 0, x2 = 1, y1 = 2, y2 = 3 };

inline constexpr std::array<Var, 4> kAllVars{Var::x1, Var::x2, Var::y1, Var::y2};
inline constexpr std::array<Var, 2> kFiberVars{Var::y1, Var::y2};

std::string_view var_name(Var v) noexcept;

/// A point (x1, x2, y1, y2) of T_0 M.
struct Point {
    std::array<double, 4> c{};

    constexpr Point() = default;
    constexpr Point(double x1, double x2, double y1, double y2) : c{x1, x2, y1, y2} {}

    constexpr double x1() const noexcept { return c[0]; }
    constexpr double x2() const noexcept { return c[1]; }
    constexpr double y1() const noexcept { return c[2]; }
    constexpr double y2() const noexcept { return c[3]; }
    constexpr double operator[](std::size_t i) const noexcept { return c[i]; }
    constexpr double& operator[](std::size_t i) noexcept { return c[i]; }
    constexpr double operator[](Var v) const noexcept { return c[static_cast<std::size_t>(v)]; }

    double fiber_norm() const noexcept;

    friend constexpr bool operator==(const Point&, const Point&) = default;
};

std::ostream& operator<<(std::ostream& os, const Point& p);

/// Normalized rational number, den > 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    bool is_integer() const noexcept { return den == 1; }
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational operator-(const Rational& a, const Rational& b);

enum class Op : std::uint8_t { Const, Variable, Add, Mul, Div, Neg, Pow, Sqrt, Abs };

class Expr;

namespace detail {
struct Node;
}

/// Immutable symbolic expression over x1, x2, y1, y2. Copies share the
/// underlying tree, so an Expr is cheap to pass by value and safe to read
/// from several threads.
class Expr {
public:
    /// The constant 0.
    Expr();

    static Expr constant(double v);
    static Expr variable(Var v);

    Op op() const noexcept;
    double constant_value() const;  // Op::Const only
    Var variable_id() const;        // Op::Variable only
    Rational exponent() const;      // Op::Pow only
    std::size_t arity() const noexcept;
    const Expr& child(std::size_t i) const;

    bool is_constant() const noexcept { return op() == Op::Const; }
    bool is_constant(double v) const noexcept;
    bool is_zero() const noexcept { return is_constant(0.0); }

    /// Structural hash, cached at construction.
    std::size_t hash() const noexcept;
    /// Number of nodes counting shared subtrees once.
    std::size_t dag_size() const;

    const detail::Node* node() const noexcept { return node_.get(); }

    friend bool structurally_equal(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    friend struct ExprFactory;
    friend struct detail::Node;

    std::shared_ptr<const detail::Node> node_;
};

bool structurally_equal(const Expr& a, const Expr& b);

// Smart constructors. They fold constants and apply the 0/1 identities, so
// derived expressions stay small.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator/(const Expr& a, double b);
Expr operator/(double a, const Expr& b);
Expr pow(const Expr& base, Rational exponent);
Expr sqrt(const Expr& e);
Expr abs(const Expr& e);

/// Builders that construct exactly the requested node. Used by the parser so
/// that parse trees reflect the source text.
namespace raw {
Expr constant(double v);
Expr variable(Var v);
Expr add(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr base, Rational exponent);
Expr sqrt(Expr a);
Expr abs(Expr a);
}  // namespace raw

// Parsing and printing -------------------------------------------------------

/// Grammar (see docs/grammar.md):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ['^' exponent]
///   exponent:= ['-'] INT | '(' ['-'] INT ['/' INT] ')'
///   primary := NUMBER | VAR | ('sqrt' | 'abs') '(' expr ')' | '(' expr ')'
Expr parse_expr(std::string_view source);

/// Canonical textual form; parse(to_string(e)) evaluates identically to e
/// and is structurally equal to e whenever e came from the parser.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

// Calculus -------------------------------------------------------------------

/// Exact symbolic partial derivative. d|u| is emitted as u/|u| * du, so the
/// kink of abs surfaces as a division by zero at evaluation time.
Expr partial(const Expr& e, Var v);

/// Directional derivative sum_a coeffs[a] * d e / d var_a.
Expr directional(const Expr& e, std::span<const Expr, 4> coeffs);

struct Simplified {
    Expr expr;
    /// Subexpressions assumed nonzero by cancellations such as u/u -> 1.
    std::vector<Expr> nonzero_provisos;
};

/// Value-preserving rewrite: constant folding, 0/1 identities, u - u -> 0 and
/// u/u -> 1 for syntactically identical operands. Best effort beyond that.
Simplified simplify(const Expr& e);

// Evaluation -------------------------------------------------------------------

/// A set of expressions flattened into a straight-line program with common
/// subexpressions merged. Immutable after construction; evaluation is
/// reentrant.
class CompiledExprs {
public:
    CompiledExprs() = default;
    explicit CompiledExprs(std::span<const Expr> roots);
    CompiledExprs(std::initializer_list<Expr> roots);

    std::size_t num_outputs() const noexcept { return outputs_.size(); }
    std::size_t num_instructions() const noexcept { return code_.size(); }

    /// Writes one value per root into `out`. Throws EvaluationError on a
    /// degenerate denominator, negative radicand or non-finite value.
    void evaluate(const Point& p, std::span<double> out) const;
    std::vector<double> evaluate(const Point& p) const;

    /// Same as evaluate but reports failure instead of throwing.
    bool try_evaluate(const Point& p, std::span<double> out) const noexcept;

private:
    struct Instr {
        Op op;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        double value = 0.0;
        Rational exponent;
        Expr origin;
    };

    bool run(const Point& p, std::vector<double>& regs, std::size_t& failed_at) const noexcept;

    std::vector<Instr> code_;
    std::vector<std::uint32_t> outputs_;
};

double evaluate(const Expr& e, const Point& p);

// Homogeneity ----------------------------------------------------------------

struct HomogeneityResult {
    bool ok = false;
    double max_residual = 0.0;
    Point worst{};
};

/// Sampled Euler test y1 de/dy1 + y2 de/dy2 = k e. The residual at a point is
/// |y . d_y e - k e| / (1 + |k e|). Throws EvaluationError at a singular
/// sample.
HomogeneityResult homogeneity_degree_check(const Expr& e, Rational k, std::span<const Point> samples,
                                           double tol);

}  // namespace spraymet
