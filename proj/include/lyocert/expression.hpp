#ifndef LYOCERT_EXPRESSION_HPP
#define LYOCERT_EXPRESSION_HPP

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lyocert::expr {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column);
    int line, column;
};

// Parsed arithmetic expression over t, x1..xn, d1..dm (or a single variable
// in scalar mode). Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('-')? atom ('^' atom)?
//   atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
// with func in {sin, cos, exp, log, abs, sqrt, min, max, tanh}. Constant
// subexpressions are folded at parse time; unknown identifiers are rejected.
class Expression {
public:
    Expression() = default;
    double eval(double t, std::span<const double> x, std::span<const double> d) const;
    double eval_scalar(double r) const;  // scalar mode: the single variable
    const std::string& source() const;
    bool valid() const { return node_ != nullptr; }

    struct Node;

private:
    Expression(std::shared_ptr<const Node> node, std::string src);
    std::shared_ptr<const Node> node_;
    std::string source_;

    friend Expression parse_rhs(const std::string&, int, int);
    friend Expression parse_scalar(const std::string&, const std::string&);
};

// One right-hand-side coordinate over t, x1..xn, d1..dm.
Expression parse_rhs(const std::string& source, int dimension, int disturbance_dim);

// Single-variable expression (default variable name "r").
Expression parse_scalar(const std::string& source, const std::string& var = "r");

}  // namespace lyocert::expr

#endif
