#pragma once

#include "gridmdp/common.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gridmdp {

/// Variable classes of the dynamics language: state x#, input u#, disturbance w#.
enum class VarClass : std::uint8_t { state, input, disturbance };

/// Declared dimensions (n states, m inputs, p disturbances) an expression may reference.
struct Dims {
    int n = 0;
    int m = 0;
    int p = 0;
};

/// Immutable arithmetic expression over x0..x{n-1}, u0..u{m-1}, w0..w{p-1}.
///
/// Nodes live in a flat pool; evaluation is reentrant and safe to call from
/// many threads at once. Comparisons yield exactly 1.0/0.0 and ite evaluates
/// only the selected branch. Domain errors (division by zero, ln of a
/// non-positive value, sqrt of a negative value, non-integer power of a
/// negative base, |asin/acos argument| > 1) throw DomainError naming the
/// offending subexpression.
class Expr {
public:
    enum class Op : std::uint8_t {
        add, sub, mul, div, pow,
        lt, le, gt, ge, eq, ne,
        neg,
        sin, cos, tan, asin, acos, atan, exp, ln, sqrt, abs,
        min, max, ite,
        literal, variable
    };

    struct Node {
        Op op = Op::literal;
        double value = 0.0;          // literal payload
        VarClass var_class = VarClass::state;
        int var_index = 0;           // variable payload
        std::int32_t kid[3] = {-1, -1, -1};
    };

    const std::vector<Node>& nodes() const { return nodes_; }
    std::int32_t root() const { return root_; }
    const Dims& dims() const { return dims_; }

    friend Expr parse_expression(std::string_view, const Dims&,
                                 const std::map<std::string, double>&);
    friend class ExprBuilder;

private:
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
    Dims dims_;
};

/// Parses `text` against the declared dimensions, substituting named constants
/// at parse time. Throws ParseError with line/column on syntax errors, unknown
/// identifiers, or variable indices outside the declared dimensions.
Expr parse_expression(std::string_view text, const Dims& dims,
                      const std::map<std::string, double>& constants = {});

/// Evaluates with IEEE double arithmetic. Vector lengths must equal the
/// declared dimensions.
double eval(const Expr& e, const Vector& x, const Vector& u, const Vector& w);

/// Hot-path overload; pointers may be null only when the matching dimension is 0.
double eval(const Expr& e, const double* x, const double* u, const double* w);

/// Precedence-aware rendering that re-parses to a structurally identical tree.
std::string to_string(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Test support: assembles expressions directly from nodes.
class ExprBuilder {
public:
    explicit ExprBuilder(const Dims& dims) { e_.dims_ = dims; }
    std::int32_t literal(double v);
    std::int32_t variable(VarClass c, int idx);
    std::int32_t apply(Expr::Op op, std::int32_t a, std::int32_t b = -1, std::int32_t c = -1);
    bool is_literal(std::int32_t id) const {
        return e_.nodes_[static_cast<std::size_t>(id)].op == Expr::Op::literal;
    }
    Expr take(std::int32_t root);

private:
    Expr e_;
};

} // namespace gridmdp
