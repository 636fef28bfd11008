#ifndef CONTACTDYN_EXPR_HPP
#define CONTACTDYN_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace contactdyn::expr {

enum class Kind {
    Constant,
    Variable,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree node. Construct through the factory
/// functions below; nodes are shared and safe to use concurrently.
struct Expr {
    Kind kind;
    double value = 0.0;  // Constant
    std::string name;    // Variable
    ExprPtr lhs, rhs;    // children (unary ops use lhs only)
};

ExprPtr constant(double v);
ExprPtr variable(const std::string& name);
ExprPtr unary(Kind k, ExprPtr a);
ExprPtr binary(Kind k, ExprPtr a, ExprPtr b);

ExprPtr neg(ExprPtr a);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, double e);
ExprPtr sin(ExprPtr a);
ExprPtr cos(ExprPtr a);
ExprPtr tan(ExprPtr a);
ExprPtr exp(ExprPtr a);
ExprPtr ln(ExprPtr a);
ExprPtr sqrt(ExprPtr a);

inline ExprPtr operator-(ExprPtr a) { return neg(std::move(a)); }
inline ExprPtr operator+(ExprPtr a, ExprPtr b) { return add(std::move(a), std::move(b)); }
inline ExprPtr operator-(ExprPtr a, ExprPtr b) { return sub(std::move(a), std::move(b)); }
inline ExprPtr operator*(ExprPtr a, ExprPtr b) { return mul(std::move(a), std::move(b)); }
inline ExprPtr operator/(ExprPtr a, ExprPtr b) { return div(std::move(a), std::move(b)); }
inline ExprPtr operator+(ExprPtr a, double b) { return add(std::move(a), constant(b)); }
inline ExprPtr operator-(ExprPtr a, double b) { return sub(std::move(a), constant(b)); }
inline ExprPtr operator*(double a, ExprPtr b) { return mul(constant(a), std::move(b)); }
inline ExprPtr operator*(ExprPtr a, double b) { return mul(std::move(a), constant(b)); }
inline ExprPtr operator/(ExprPtr a, double b) { return div(std::move(a), constant(b)); }
inline ExprPtr operator/(double a, ExprPtr b) { return div(constant(a), std::move(b)); }

struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

/// Infix grammar with precedence pow > unary minus > mul/div > add/sub,
/// parentheses and function calls sin(x), cos(x), tan(x), exp(x), ln(x), sqrt(x).
ExprPtr parse(const std::string& text);

/// Emits the same grammar parse() accepts; parse(print(e)) is equivalent to e.
std::string print(const ExprPtr& e);

std::string format_double(double v);

using EvalContext = std::map<std::string, double>;

struct EvalError : std::runtime_error {
    std::string detail;  // printed offending subexpression, when known
    explicit EvalError(const std::string& msg, std::string det = "")
        : std::runtime_error(det.empty() ? msg : msg + " in `" + det + "`"),
          detail(std::move(det)) {}
};

/// IEEE double evaluation. Unbound variables and domain violations
/// (log of a nonpositive value, division by zero, sqrt of a negative,
/// non-finite results) raise EvalError instead of producing NaN/inf.
double evaluate(const ExprPtr& e, const EvalContext& ctx);

ExprPtr differentiate(const ExprPtr& e, const std::string& var);

/// Best-effort structural simplification: constant folding, 0/1 identities,
/// flattening of sums/products, like-term and like-factor collection.
/// Idempotent and semantics-preserving on the evaluable domain.
ExprPtr simplify(const ExprPtr& e);

/// Simultaneous substitution; right-hand sides are not re-substituted.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& bindings);

std::set<std::string> free_variables(const ExprPtr& e);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

bool is_constant(const ExprPtr& e, double v);

struct Interval {
    double lo = -2.0;
    double hi = 2.0;
};

/// Randomized sampling domain for equivalence testing. Points that trigger
/// domain violations, or where some guard expression has magnitude below
/// guard_min, are rejected and resampled up to `retries` times each.
struct SampleDomain {
    std::map<std::string, Interval> intervals;
    Interval fallback{-2.0, 2.0};
    int samples = 32;
    double tol = 1e-9;
    std::uint64_t seed = 0;
    int retries = 100;
    std::vector<ExprPtr> guards;
    double guard_min = 1e-6;

    Interval interval_for(const std::string& var) const;
    SampleDomain with_guard(ExprPtr g, double min_abs) const;
    SampleDomain with_interval(const std::string& var, double lo, double hi) const;
};

struct SampleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Draws valid evaluation points for `vars`: every expression in `must_eval`
/// evaluates and all guards clear guard_min. Throws SampleError when fewer
/// than d.samples valid points can be found.
std::vector<EvalContext> sample_points(const std::vector<std::string>& vars,
                                       const SampleDomain& d,
                                       const std::vector<ExprPtr>& must_eval);

/// True iff |a-b| <= tol*(1+|a|+|b|) at all sampled points.
bool equivalent_on_domain(const ExprPtr& a, const ExprPtr& b, const SampleDomain& d);

bool is_zero_on(const ExprPtr& e, const SampleDomain& d);

/// Max |e| over the sample points (for residual reporting).
double max_abs_on(const ExprPtr& e, const SampleDomain& d);

/// If e is affine in `var` on d and its var-coefficient vanishes at no sampled
/// point, returns the solution of e = 0 for var. Absent otherwise.
std::optional<ExprPtr> solve_affine(const ExprPtr& e, const std::string& var,
                                    const SampleDomain& d);

}  // namespace contactdyn::expr

#endif
