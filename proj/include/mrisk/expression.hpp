#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mrisk/model.hpp"

namespace mrisk {

struct ExprNode;

/// Arithmetic over market coordinates along one tree path.
///
///   S          coordinate at the current node
///   S[k]       coordinate at time k on the path (0 <= k <= t)
///   t          current time
///   + - * /  < <= > >= == !=  && || !  if(c, a, b)  min  max  abs
///
/// Literals are exact ("0.1" is 1/10).  Comparisons and logic yield 0 or 1.
class Expression {
 public:
  Expression() = default;

  /// InputError with the column of the first problem; every identifier must
  /// be in `symbols` (plus t).
  static Expression parse(const std::string& text, const std::vector<std::string>& symbols);

  /// InputError on division by zero or an out-of-range S[k].
  Rational evaluate(const PathView& path) const;

  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

 private:
  std::string text_;
  std::vector<std::string> symbols_;
  std::shared_ptr<const ExprNode> root_;
};

}  // namespace mrisk
