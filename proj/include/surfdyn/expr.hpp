#ifndef SURFDYN_EXPR_HPP
#define SURFDYN_EXPR_HPP

#include <array>
#include <memory>
#include <string>

namespace surfdyn {

/** Variables available to Hamiltonian expressions: r2 = x^2 + y^2 on disk
    charts, (s, t) on annulus charts, and the loop time. */
enum class ExprVar : int { R2 = 0, S = 1, T = 2, Time = 3 };

/** A parsed arithmetic expression over +, -, *, /, ^, sin, cos, exp and the
    variables above, with exact symbolic differentiation. Immutable; cheap to
    copy (shared AST). */
class Expr {
public:
    Expr(); ///< the constant 0

    /// throws PreconditionError on syntax errors or unknown identifiers
    static Expr parse(const std::string& source);
    static Expr constant(double v);

    double eval(const std::array<double, 4>& vars) const;
    Expr diff(ExprVar v) const;
    bool uses(ExprVar v) const;
    std::string to_string() const;

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> root);
    std::shared_ptr<const Node> root_;
};

} // namespace surfdyn

#endif
