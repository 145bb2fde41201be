#include "surfdyn/expr.hpp"
#include "surfdyn/types.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace surfdyn {

enum class NodeKind { Const, Var, Neg, Sin, Cos, Exp, Add, Sub, Mul, Div, Pow };

struct Expr::Node {
    NodeKind kind;
    double value = 0.0; // Const
    ExprVar var = ExprVar::R2;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Const;
    n->value = v;
    return n;
}

NodePtr make_var(ExprVar v)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Var;
    n->var = v;
    return n;
}

NodePtr make_unary(NodeKind k, NodePtr a)
{
    if (a->kind == NodeKind::Const) {
        switch (k) {
        case NodeKind::Neg: return make_const(-a->value);
        case NodeKind::Sin: return make_const(std::sin(a->value));
        case NodeKind::Cos: return make_const(std::cos(a->value));
        case NodeKind::Exp: return make_const(std::exp(a->value));
        default: break;
        }
    }
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->kind == NodeKind::Const && n->value == v; }

NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b)
{
    if (a->kind == NodeKind::Const && b->kind == NodeKind::Const) {
        switch (k) {
        case NodeKind::Add: return make_const(a->value + b->value);
        case NodeKind::Sub: return make_const(a->value - b->value);
        case NodeKind::Mul: return make_const(a->value * b->value);
        case NodeKind::Div: return make_const(a->value / b->value);
        case NodeKind::Pow: return make_const(std::pow(a->value, b->value));
        default: break;
        }
    }
    // light pruning keeps differentiated trees small
    if (k == NodeKind::Add) {
        if (is_const(a, 0)) return b;
        if (is_const(b, 0)) return a;
    }
    if (k == NodeKind::Sub && is_const(b, 0))
        return a;
    if (k == NodeKind::Mul) {
        if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
        if (is_const(a, 1)) return b;
        if (is_const(b, 1)) return a;
    }
    if (k == NodeKind::Div && is_const(a, 0))
        return make_const(0);
    if (k == NodeKind::Pow) {
        if (is_const(b, 1)) return a;
        if (is_const(b, 0)) return make_const(1);
    }
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

double eval_node(const Expr::Node* n, const std::array<double, 4>& vars)
{
    switch (n->kind) {
    case NodeKind::Const: return n->value;
    case NodeKind::Var: return vars[static_cast<size_t>(n->var)];
    case NodeKind::Neg: return -eval_node(n->a.get(), vars);
    case NodeKind::Sin: return std::sin(eval_node(n->a.get(), vars));
    case NodeKind::Cos: return std::cos(eval_node(n->a.get(), vars));
    case NodeKind::Exp: return std::exp(eval_node(n->a.get(), vars));
    case NodeKind::Add: return eval_node(n->a.get(), vars) + eval_node(n->b.get(), vars);
    case NodeKind::Sub: return eval_node(n->a.get(), vars) - eval_node(n->b.get(), vars);
    case NodeKind::Mul: return eval_node(n->a.get(), vars) * eval_node(n->b.get(), vars);
    case NodeKind::Div: return eval_node(n->a.get(), vars) / eval_node(n->b.get(), vars);
    case NodeKind::Pow: return std::pow(eval_node(n->a.get(), vars), eval_node(n->b.get(), vars));
    }
    return 0.0;
}

NodePtr diff_node(const NodePtr& n, ExprVar v)
{
    switch (n->kind) {
    case NodeKind::Const: return make_const(0);
    case NodeKind::Var: return make_const(n->var == v ? 1.0 : 0.0);
    case NodeKind::Neg: return make_unary(NodeKind::Neg, diff_node(n->a, v));
    case NodeKind::Sin: return make_binary(NodeKind::Mul, make_unary(NodeKind::Cos, n->a), diff_node(n->a, v));
    case NodeKind::Cos:
        return make_binary(NodeKind::Mul,
                           make_unary(NodeKind::Neg, make_unary(NodeKind::Sin, n->a)),
                           diff_node(n->a, v));
    case NodeKind::Exp: return make_binary(NodeKind::Mul, make_unary(NodeKind::Exp, n->a), diff_node(n->a, v));
    case NodeKind::Add: return make_binary(NodeKind::Add, diff_node(n->a, v), diff_node(n->b, v));
    case NodeKind::Sub: return make_binary(NodeKind::Sub, diff_node(n->a, v), diff_node(n->b, v));
    case NodeKind::Mul:
        return make_binary(NodeKind::Add, make_binary(NodeKind::Mul, diff_node(n->a, v), n->b),
                           make_binary(NodeKind::Mul, n->a, diff_node(n->b, v)));
    case NodeKind::Div:
        return make_binary(
            NodeKind::Div,
            make_binary(NodeKind::Sub, make_binary(NodeKind::Mul, diff_node(n->a, v), n->b),
                        make_binary(NodeKind::Mul, n->a, diff_node(n->b, v))),
            make_binary(NodeKind::Mul, n->b, n->b));
    case NodeKind::Pow: {
        if (n->b->kind != NodeKind::Const)
            throw PreconditionError("expr: only constant exponents can be differentiated");
        double c = n->b->value;
        return make_binary(NodeKind::Mul, make_const(c),
                           make_binary(NodeKind::Mul,
                                       make_binary(NodeKind::Pow, n->a, make_const(c - 1.0)),
                                       diff_node(n->a, v)));
    }
    }
    return make_const(0);
}

bool uses_node(const Expr::Node* n, ExprVar v)
{
    switch (n->kind) {
    case NodeKind::Const: return false;
    case NodeKind::Var: return n->var == v;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp: return uses_node(n->a.get(), v);
    default: return uses_node(n->a.get(), v) || uses_node(n->b.get(), v);
    }
}

void print_node(const Expr::Node* n, std::ostream& os)
{
    switch (n->kind) {
    case NodeKind::Const: os << n->value; return;
    case NodeKind::Var:
        switch (n->var) {
        case ExprVar::R2: os << "r2"; return;
        case ExprVar::S: os << "s"; return;
        case ExprVar::T: os << "t"; return;
        case ExprVar::Time: os << "time"; return;
        }
        return;
    case NodeKind::Neg: os << "(-"; print_node(n->a.get(), os); os << ")"; return;
    case NodeKind::Sin: os << "sin("; print_node(n->a.get(), os); os << ")"; return;
    case NodeKind::Cos: os << "cos("; print_node(n->a.get(), os); os << ")"; return;
    case NodeKind::Exp: os << "exp("; print_node(n->a.get(), os); os << ")"; return;
    default: {
        const char* op = n->kind == NodeKind::Add   ? "+"
                         : n->kind == NodeKind::Sub ? "-"
                         : n->kind == NodeKind::Mul ? "*"
                         : n->kind == NodeKind::Div ? "/"
                                                    : "^";
        os << "(";
        print_node(n->a.get(), os);
        os << op;
        print_node(n->b.get(), os);
        os << ")";
        return;
    }
    }
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    NodePtr run()
    {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("trailing input");
        return e;
    }

private:
    const std::string& src_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg)
    {
        std::ostringstream os;
        os << "expr: " << msg << " at offset " << pos_ << " in '" << src_ << "'";
        throw PreconditionError(os.str());
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            pos_++;
    }

    bool eat(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            pos_++;
            return true;
        }
        return false;
    }

    char peek()
    {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr expr()
    {
        NodePtr e = term();
        for (;;) {
            if (eat('+'))
                e = make_binary(NodeKind::Add, e, term());
            else if (eat('-'))
                e = make_binary(NodeKind::Sub, e, term());
            else
                return e;
        }
    }

    NodePtr term()
    {
        NodePtr e = factor();
        for (;;) {
            if (eat('*'))
                e = make_binary(NodeKind::Mul, e, factor());
            else if (eat('/'))
                e = make_binary(NodeKind::Div, e, factor());
            else
                return e;
        }
    }

    NodePtr factor()
    {
        NodePtr base = unary();
        if (eat('^'))
            return make_binary(NodeKind::Pow, base, factor()); // right associative
        return base;
    }

    NodePtr unary()
    {
        if (eat('-'))
            return make_unary(NodeKind::Neg, unary());
        return atom();
    }

    NodePtr atom()
    {
        skip_ws();
        if (eat('(')) {
            NodePtr e = expr();
            if (!eat(')'))
                fail("expected ')'");
            return e;
        }
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t end = 0;
            double v = std::stod(src_.substr(pos_), &end);
            pos_ += end;
            return make_const(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                pos_++;
            std::string ident = src_.substr(start, pos_ - start);
            if (ident == "sin" || ident == "cos" || ident == "exp") {
                if (!eat('('))
                    fail("expected '(' after function name");
                NodePtr arg = expr();
                if (!eat(')'))
                    fail("expected ')'");
                NodeKind k = ident == "sin" ? NodeKind::Sin
                             : ident == "cos" ? NodeKind::Cos
                                              : NodeKind::Exp;
                return make_unary(k, arg);
            }
            if (ident == "r2") return make_var(ExprVar::R2);
            if (ident == "s") return make_var(ExprVar::S);
            if (ident == "t") return make_var(ExprVar::T);
            if (ident == "time") return make_var(ExprVar::Time);
            if (ident == "pi") return make_const(M_PI);
            fail("unknown identifier '" + ident + "'");
        }
        fail("unexpected character");
    }
};

} // namespace

Expr::Expr() : root_(make_const(0)) {}
Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expr Expr::parse(const std::string& source) { return Expr(Parser(source).run()); }
Expr Expr::constant(double v) { return Expr(make_const(v)); }

double Expr::eval(const std::array<double, 4>& vars) const { return eval_node(root_.get(), vars); }
Expr Expr::diff(ExprVar v) const { return Expr(diff_node(root_, v)); }
bool Expr::uses(ExprVar v) const { return uses_node(root_.get(), v); }

std::string Expr::to_string() const
{
    std::ostringstream os;
    print_node(root_.get(), os);
    return os.str();
}

} // namespace surfdyn
