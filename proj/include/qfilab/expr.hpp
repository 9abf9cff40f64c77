#pragma once
// Arithmetic expressions for user-defined fields.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: exp ln log sin cos tan sqrt. Names resolve to coordinates,
// then to the derived radius r (when x and y are coordinates), then to
// parameters. Evaluation goes through the dual backend, so parsed fields
// carry exact derivatives up to third order.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qfilab/field.hpp"

namespace qfi {

using Params = std::map<std::string, double>;

struct ExprNode;

class Expr {
 public:
  static Expr parse(std::string_view src, const std::vector<std::string>& coordinates, const Params& params = {});

  template <FieldScalar T>
  T eval(std::span<const T> q) const;

  const std::string& source() const { return source_; }

 private:
  std::shared_ptr<const ExprNode> root_;
  std::string source_;
};

/// A field of the given coordinates.
ScalarField parse_field(std::string_view src, const std::vector<std::string>& coordinates, const Params& params = {},
                        Domain domain = {});

/// Coordinates of a plane field (x, y) or a one-variable function (s).
inline const std::vector<std::string>& plane_coordinates() {
  static const std::vector<std::string> c{"x", "y"};
  return c;
}
inline const std::vector<std::string>& line_coordinates() {
  static const std::vector<std::string> c{"s"};
  return c;
}

}  // namespace qfi
