#include "mrisk/expression.hpp"

#include <algorithm>
#include <cctype>

#include "mrisk/error.hpp"
#include "mrisk/scalar.hpp"

namespace mrisk {

enum class Op {
  Number, Symbol, Time, Indexed, Neg, Not,
  Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or,
  If, Min, Max, Abs
};

struct ExprNode {
  Op op = Op::Number;
  Rational value;
  int symbol = -1;
  int column = 0;
  std::vector<std::shared_ptr<const ExprNode>> args;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make(Op op, int column, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->column = column;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& symbols)
      : s_(text), symbols_(symbols) {}

  NodePtr run() {
    NodePtr e = parse_or();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  const std::string& s_;
  const std::vector<std::string>& symbols_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("expression '" + s_ + "', column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(const char* tok) {
    skip();
    size_t len = std::char_traits<char>::length(tok);
    if (s_.compare(pos_, len, tok) != 0) return false;
    // "<" must not swallow the first half of "<=", and so on.
    if (len == 1 && pos_ + 1 < s_.size() && s_[pos_ + 1] == '=' &&
        (tok[0] == '<' || tok[0] == '>' || tok[0] == '!' || tok[0] == '=')) {
      return false;
    }
    pos_ += len;
    return true;
  }

  void expect(const char* tok) {
    if (!accept(tok)) fail(std::string("expected '") + tok + "'");
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    for (;;) {
      int col = static_cast<int>(pos_);
      if (accept("||")) lhs = make(Op::Or, col, {lhs, parse_and()});
      else return lhs;
    }
  }

  NodePtr parse_and() {
    NodePtr lhs = parse_not();
    for (;;) {
      int col = static_cast<int>(pos_);
      if (accept("&&")) lhs = make(Op::And, col, {lhs, parse_not()});
      else return lhs;
    }
  }

  NodePtr parse_not() {
    int col = static_cast<int>(pos_);
    if (accept("!")) return make(Op::Not, col, {parse_not()});
    return parse_cmp();
  }

  NodePtr parse_cmp() {
    NodePtr lhs = parse_add();
    static const std::pair<const char*, Op> ops[] = {{"<=", Op::Le}, {">=", Op::Ge},
                                                     {"==", Op::Eq}, {"!=", Op::Ne},
                                                     {"<", Op::Lt},  {">", Op::Gt}};
    int col = static_cast<int>(pos_);
    for (const auto& [tok, op] : ops)
      if (accept(tok)) return make(op, col, {lhs, parse_add()});
    return lhs;
  }

  NodePtr parse_add() {
    NodePtr lhs = parse_mul();
    for (;;) {
      int col = static_cast<int>(pos_);
      if (accept("+")) lhs = make(Op::Add, col, {lhs, parse_mul()});
      else if (accept("-")) lhs = make(Op::Sub, col, {lhs, parse_mul()});
      else return lhs;
    }
  }

  NodePtr parse_mul() {
    NodePtr lhs = parse_unary();
    for (;;) {
      int col = static_cast<int>(pos_);
      if (accept("*")) lhs = make(Op::Mul, col, {lhs, parse_unary()});
      else if (accept("/")) lhs = make(Op::Div, col, {lhs, parse_unary()});
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    int col = static_cast<int>(pos_);
    if (accept("-")) return make(Op::Neg, col, {parse_unary()});
    if (accept("+")) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const int col = static_cast<int>(pos_);
    char c = s_[pos_];
    if (accept("(")) {
      NodePtr e = parse_or();
      expect(")");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
        ++pos_;
      }
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Number;
      n->column = col;
      try {
        n->value = parse_rational(s_.substr(start, pos_ - start));
      } catch (const InputError&) {
        pos_ = start;
        fail("malformed number");
      }
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      std::string name = s_.substr(start, pos_ - start);
      if (accept("(")) return parse_call(name, col);
      if (name == "t") return make(Op::Time, col);
      if (name == "true" || name == "false") {
        auto n = std::make_shared<ExprNode>();
        n->value = name == "true" ? 1 : 0;
        n->column = col;
        return n;
      }
      auto it = std::find(symbols_.begin(), symbols_.end(), name);
      if (it == symbols_.end()) {
        pos_ = start;
        fail("unknown symbol '" + name + "'");
      }
      auto n = std::make_shared<ExprNode>();
      n->symbol = static_cast<int>(it - symbols_.begin());
      n->column = col;
      if (accept("[")) {
        n->op = Op::Indexed;
        n->args.push_back(parse_or());
        expect("]");
      } else {
        n->op = Op::Symbol;
      }
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_call(const std::string& name, int col) {
    std::vector<NodePtr> args;
    if (!accept(")")) {
      do args.push_back(parse_or());
      while (accept(","));
      expect(")");
    }
    auto arity = [&](size_t lo, size_t hi) {
      if (args.size() < lo || args.size() > hi) fail("wrong number of arguments to " + name);
    };
    if (name == "if") {
      arity(3, 3);
      return make(Op::If, col, std::move(args));
    }
    if (name == "min" || name == "max") {
      arity(1, 64);
      return make(name == "min" ? Op::Min : Op::Max, col, std::move(args));
    }
    if (name == "abs") {
      arity(1, 1);
      return make(Op::Abs, col, std::move(args));
    }
    fail("unknown function '" + name + "'");
  }
};

Rational truth(bool b) { return b ? Rational(1) : Rational(0); }

Rational eval(const ExprNode& n, const PathView& path, const std::vector<int>& coord,
              const std::string& text) {
  auto arg = [&](size_t i) { return eval(*n.args[i], path, coord, text); };
  auto fail = [&](const std::string& what) -> Rational {
    throw InputError("expression '" + text + "', column " + std::to_string(n.column + 1) + ": " +
                     what + " at node " + path.tree->path_id(path.node));
  };
  switch (n.op) {
    case Op::Number: return n.value;
    case Op::Time: return Rational(path.time());
    case Op::Symbol: return path.value(coord[n.symbol]);
    case Op::Indexed: {
      Rational k = arg(0);
      if (k.get_den() != 1 || sgn(k) < 0 || k > path.time()) {
        return fail("index " + k.get_str() + " outside 0.." + std::to_string(path.time()));
      }
      return path.value(coord[n.symbol], static_cast<int>(k.get_num().get_si()));
    }
    case Op::Neg: return -arg(0);
    case Op::Not: return truth(sgn(arg(0)) == 0);
    case Op::Add: return arg(0) + arg(1);
    case Op::Sub: return arg(0) - arg(1);
    case Op::Mul: return arg(0) * arg(1);
    case Op::Div: {
      Rational d = arg(1);
      if (sgn(d) == 0) return fail("division by zero");
      return arg(0) / d;
    }
    case Op::Lt: return truth(arg(0) < arg(1));
    case Op::Le: return truth(arg(0) <= arg(1));
    case Op::Gt: return truth(arg(0) > arg(1));
    case Op::Ge: return truth(arg(0) >= arg(1));
    case Op::Eq: return truth(arg(0) == arg(1));
    case Op::Ne: return truth(arg(0) != arg(1));
    case Op::And: return truth(sgn(arg(0)) != 0 && sgn(arg(1)) != 0);
    case Op::Or: return truth(sgn(arg(0)) != 0 || sgn(arg(1)) != 0);
    case Op::If: return sgn(arg(0)) != 0 ? arg(1) : arg(2);
    case Op::Min:
    case Op::Max: {
      Rational best = arg(0);
      for (size_t i = 1; i < n.args.size(); ++i) {
        Rational x = arg(i);
        if (n.op == Op::Min ? x < best : x > best) best = x;
      }
      return best;
    }
    case Op::Abs: return abs(arg(0));
  }
  return fail("bad node");
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& symbols) {
  Expression e;
  e.text_ = text;
  e.symbols_ = symbols;
  e.root_ = Parser(text, symbols).run();
  return e;
}

Rational Expression::evaluate(const PathView& path) const {
  if (!root_) throw InputError("empty expression");
  std::vector<int> coord;
  for (const auto& name : symbols_) {
    int i = path.tree->coordinate_index(name);
    if (i < 0) throw InputError("expression '" + text_ + "': market has no coordinate " + name);
    coord.push_back(i);
  }
  return eval(*root_, path, coord, text_);
}

}  // namespace mrisk
