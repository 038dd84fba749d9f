#pragma once

#include "vsrd/femcore.hpp"

#include <stdexcept>
#include <string>

namespace vsrd {

class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& message, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Compiles an expression in x and y: numbers, x, y, pi, + - * / ^,
/// parentheses, unary minus and sin, cos, exp, sqrt. The middle dot and the
/// Unicode minus sign are accepted as * and -.
ScalarField parse_expression(const std::string& text);

}  // namespace vsrd
