#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ulamcert/interval.hpp"
#include "ulamcert/jet.hpp"

namespace ulamcert {

// Arithmetic expressions in the single variable x.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ('^' atom)?
//   atom   := number | 'x' | '(' expr ')' | 'abs' '(' expr ')' | '-' atom
//
// Numbers are decimal or integer literals; rationals are written p/q and
// parse as exact integer division.  Pow exponents must fold to a rational
// constant.

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { constant, var, neg, add, sub, mul, div, abs, pow };

    Kind kind;
    Interval value;          // constant: enclosure of the literal
    std::string lexeme;      // constant: original spelling (kept for unparse)
    ExprPtr a, b;            // operands
    long long pow_p = 0;     // pow: exponent p/q, q > 0, gcd-reduced
    long long pow_q = 1;
};

ExprPtr parse_expr(const std::string& text); // throws ParseError
std::string to_string(const ExprPtr& e);

Interval eval_interval(const ExprPtr& e, const Interval& x);
Jet2 eval_jet(const ExprPtr& e, const Interval& x, JetMode mode = JetMode::hull);

// Exact rational value of a constant-foldable subexpression, if any
// (integers, decimals, their ratios and negations).
std::optional<std::pair<long long, long long>> fold_rational(const ExprPtr& e);

} // namespace ulamcert
