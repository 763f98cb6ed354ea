#pragma once

// Minimal arithmetic expressions over named coordinates: + - * / ^, unary
// minus, exp, log, sin, cos, numeric literals.  Parsed once into a pooled
// tree; evaluation walks the pool, and symbolic differentiation (with
// constant folding) supplies closed-form gradients for scenario-defined
// scalar fields.

#include <memory>
#include <string>
#include <vector>

#include "tempo/errors.hpp"
#include "tempo/geometry.hpp"
#include "tempo/types.hpp"

namespace tempo::expr {

class Expression {
 public:
  // Throws ParseError (with byte offset) on malformed input or identifiers
  // not in `variables`.
  static Expression parse(const std::string& text,
                          const std::vector<std::string>& variables);

  double evaluate(const Vec& values) const;
  // d(this)/d(variable index), constant-folded.
  Expression derivative(int variable) const;

  int num_variables() const { return num_vars_; }
  const std::string& text() const { return text_; }

  // Scalar field backed by this expression and its symbolic gradient.
  geometry::ScalarField as_field(const std::string& label = "") const;

 private:
  enum class Op : unsigned char {
    Num, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos
  };
  struct Node {
    Op op;
    int a = -1;      // left child / unary operand
    int b = -1;      // right child
    double value = 0.0;  // Num payload or Var index
  };
  struct Pool {
    std::vector<Node> nodes;
  };

  Expression(std::shared_ptr<const Pool> pool, int root, int num_vars,
             std::string text);

  std::shared_ptr<const Pool> pool_;
  int root_;
  int num_vars_;
  std::string text_;

  class Parser;
  class Builder;
};

}  // namespace tempo::expr
