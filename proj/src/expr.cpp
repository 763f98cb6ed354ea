#include "tempo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>

namespace tempo::expr {

Expression::Expression(std::shared_ptr<const Pool> pool, int root, int num_vars,
                       std::string text)
    : pool_(std::move(pool)), root_(root), num_vars_(num_vars),
      text_(std::move(text)) {}

// Appends nodes to a mutable pool with local constant folding and identity
// pruning, so derivatives stay small.
class Expression::Builder {
 public:
  explicit Builder(Pool& pool) : pool_(pool) {}

  int num(double v) {
    pool_.nodes.push_back({Op::Num, -1, -1, v});
    return last();
  }
  int var(int index) {
    pool_.nodes.push_back({Op::Var, -1, -1, static_cast<double>(index)});
    return last();
  }
  int unary(Op op, int a) {
    if (is_num(a)) return num(eval_unary(op, value(a)));
    if (op == Op::Neg && node(a).op == Op::Neg) return node(a).a;
    pool_.nodes.push_back({op, a, -1, 0.0});
    return last();
  }
  int binary(Op op, int a, int b) {
    if (is_num(a) && is_num(b)) return num(eval_binary(op, value(a), value(b)));
    switch (op) {
      case Op::Add:
        if (is_zero(a)) return b;
        if (is_zero(b)) return a;
        break;
      case Op::Sub:
        if (is_zero(b)) return a;
        if (is_zero(a)) return unary(Op::Neg, b);
        break;
      case Op::Mul:
        if (is_zero(a) || is_zero(b)) return num(0.0);
        if (is_one(a)) return b;
        if (is_one(b)) return a;
        break;
      case Op::Div:
        if (is_zero(a)) return num(0.0);
        if (is_one(b)) return a;
        break;
      case Op::Pow:
        if (is_one(b)) return a;
        if (is_zero(b)) return num(1.0);
        break;
      default:
        break;
    }
    pool_.nodes.push_back({op, a, b, 0.0});
    return last();
  }

  const Node& node(int i) const { return pool_.nodes[i]; }
  bool is_num(int i) const { return node(i).op == Op::Num; }
  double value(int i) const { return node(i).value; }
  bool is_zero(int i) const { return is_num(i) && value(i) == 0.0; }
  bool is_one(int i) const { return is_num(i) && value(i) == 1.0; }

  static double eval_unary(Op op, double a) {
    switch (op) {
      case Op::Neg: return -a;
      case Op::Exp: return std::exp(a);
      case Op::Log: return std::log(a);
      case Op::Sin: return std::sin(a);
      case Op::Cos: return std::cos(a);
      default: return a;
    }
  }
  static double eval_binary(Op op, double a, double b) {
    switch (op) {
      case Op::Add: return a + b;
      case Op::Sub: return a - b;
      case Op::Mul: return a * b;
      case Op::Div: return a / b;
      case Op::Pow: return std::pow(a, b);
      default: return 0.0;
    }
  }

 private:
  int last() const { return static_cast<int>(pool_.nodes.size()) - 1; }
  Pool& pool_;
};

// expr   := term (('+'|'-') term)*
// term   := factor (('*'|'/') factor)*
// factor := ('-'|'+') factor | power
// power  := atom ('^' factor)?          (right-associative)
// atom   := number | ident | ident '(' expr ')' | '(' expr ')'
class Expression::Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& variables,
         Builder& builder)
      : text_(text), variables_(variables), builder_(builder) {}

  int parse() {
    const int root = expression();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input", pos_);
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int expression() {
    int lhs = term();
    for (;;) {
      if (consume('+')) lhs = builder_.binary(Op::Add, lhs, term());
      else if (consume('-')) lhs = builder_.binary(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  int term() {
    int lhs = factor();
    for (;;) {
      if (consume('*')) lhs = builder_.binary(Op::Mul, lhs, factor());
      else if (consume('/')) lhs = builder_.binary(Op::Div, lhs, factor());
      else return lhs;
    }
  }

  int factor() {
    if (consume('-')) return builder_.unary(Op::Neg, factor());
    if (consume('+')) return factor();
    return power();
  }

  int power() {
    const int base = atom();
    if (consume('^')) return builder_.binary(Op::Pow, base, factor());
    return base;
  }

  int atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (consume('(')) {
      const int inner = expression();
      if (!consume(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return builder_.num(v);
  }

  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "exp" || name == "log" || name == "sin" || name == "cos") {
      if (!consume('(')) throw ParseError("expected '(' after " + name, pos_);
      const int arg = expression();
      if (!consume(')')) throw ParseError("expected ')'", pos_);
      const Op op = name == "exp" ? Op::Exp
                  : name == "log" ? Op::Log
                  : name == "sin" ? Op::Sin
                                  : Op::Cos;
      return builder_.unary(op, arg);
    }
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i] == name) return builder_.var(static_cast<int>(i));
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  const std::string& text_;
  const std::vector<std::string>& variables_;
  Builder& builder_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text,
                             const std::vector<std::string>& variables) {
  auto pool = std::make_shared<Pool>();
  Builder builder(*pool);
  Parser parser(text, variables, builder);
  const int root = parser.parse();
  return Expression(std::move(pool), root, static_cast<int>(variables.size()), text);
}

double Expression::evaluate(const Vec& values) const {
  if (static_cast<int>(values.size()) != num_vars_)
    throw DimensionMismatch("expression over " + std::to_string(num_vars_) +
                            " variables evaluated with " +
                            std::to_string(values.size()));
  const auto& nodes = pool_->nodes;
  std::vector<double> out(nodes.size());
  // Children always precede parents in the pool, so one forward sweep works;
  // only the subtree under root_ matters but evaluating spares nodes is
  // harmless and keeps the walk branch-free.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    switch (n.op) {
      case Op::Num: out[i] = n.value; break;
      case Op::Var: out[i] = values[static_cast<int>(n.value)]; break;
      case Op::Neg: out[i] = -out[n.a]; break;
      case Op::Exp: out[i] = std::exp(out[n.a]); break;
      case Op::Log: out[i] = std::log(out[n.a]); break;
      case Op::Sin: out[i] = std::sin(out[n.a]); break;
      case Op::Cos: out[i] = std::cos(out[n.a]); break;
      case Op::Add: out[i] = out[n.a] + out[n.b]; break;
      case Op::Sub: out[i] = out[n.a] - out[n.b]; break;
      case Op::Mul: out[i] = out[n.a] * out[n.b]; break;
      case Op::Div: out[i] = out[n.a] / out[n.b]; break;
      case Op::Pow: out[i] = std::pow(out[n.a], out[n.b]); break;
    }
  }
  return out[root_];
}

Expression Expression::derivative(int variable) const {
  auto pool = std::make_shared<Pool>();
  Builder b(*pool);
  const auto& src = pool_->nodes;
  // copied[i] / derived[i]: node i of the source pool rebuilt in the new
  // pool, and its derivative, respectively.
  std::vector<int> copied(src.size(), -1), derived(src.size(), -1);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Node& n = src[i];
    const int ca = n.a >= 0 ? copied[n.a] : -1;
    const int cb = n.b >= 0 ? copied[n.b] : -1;
    const int da = n.a >= 0 ? derived[n.a] : -1;
    const int db = n.b >= 0 ? derived[n.b] : -1;
    switch (n.op) {
      case Op::Num:
        copied[i] = b.num(n.value);
        derived[i] = b.num(0.0);
        break;
      case Op::Var:
        copied[i] = b.var(static_cast<int>(n.value));
        derived[i] = b.num(n.value == variable ? 1.0 : 0.0);
        break;
      case Op::Neg:
        copied[i] = b.unary(Op::Neg, ca);
        derived[i] = b.unary(Op::Neg, da);
        break;
      case Op::Exp:
        copied[i] = b.unary(Op::Exp, ca);
        derived[i] = b.binary(Op::Mul, copied[i], da);
        break;
      case Op::Log:
        copied[i] = b.unary(Op::Log, ca);
        derived[i] = b.binary(Op::Div, da, ca);
        break;
      case Op::Sin:
        copied[i] = b.unary(Op::Sin, ca);
        derived[i] = b.binary(Op::Mul, b.unary(Op::Cos, ca), da);
        break;
      case Op::Cos:
        copied[i] = b.unary(Op::Cos, ca);
        derived[i] = b.unary(Op::Neg, b.binary(Op::Mul, b.unary(Op::Sin, ca), da));
        break;
      case Op::Add:
        copied[i] = b.binary(Op::Add, ca, cb);
        derived[i] = b.binary(Op::Add, da, db);
        break;
      case Op::Sub:
        copied[i] = b.binary(Op::Sub, ca, cb);
        derived[i] = b.binary(Op::Sub, da, db);
        break;
      case Op::Mul:
        copied[i] = b.binary(Op::Mul, ca, cb);
        derived[i] = b.binary(Op::Add, b.binary(Op::Mul, da, cb),
                              b.binary(Op::Mul, ca, db));
        break;
      case Op::Div:
        copied[i] = b.binary(Op::Div, ca, cb);
        // (u/v)' = u'/v - u v'/v^2
        derived[i] = b.binary(
            Op::Sub, b.binary(Op::Div, da, cb),
            b.binary(Op::Div, b.binary(Op::Mul, ca, db),
                     b.binary(Op::Mul, cb, cb)));
        break;
      case Op::Pow: {
        copied[i] = b.binary(Op::Pow, ca, cb);
        if (b.is_num(cb)) {
          // (u^c)' = c u^(c-1) u'
          const int c1 = b.num(b.value(cb) - 1.0);
          derived[i] = b.binary(
              Op::Mul, b.num(b.value(cb)),
              b.binary(Op::Mul, b.binary(Op::Pow, ca, c1), da));
        } else if (b.is_num(ca)) {
          // (c^v)' = c^v log(c) v'
          derived[i] = b.binary(
              Op::Mul, copied[i],
              b.binary(Op::Mul, b.num(std::log(b.value(ca))), db));
        } else {
          // (u^v)' = u^v (v' log u + v u'/u)
          derived[i] = b.binary(
              Op::Mul, copied[i],
              b.binary(Op::Add, b.binary(Op::Mul, db, b.unary(Op::Log, ca)),
                       b.binary(Op::Div, b.binary(Op::Mul, cb, da), ca)));
        }
        break;
      }
    }
  }
  return Expression(std::move(pool), derived[root_], num_vars_,
                    "d(" + text_ + ")/d" + std::to_string(variable));
}

geometry::ScalarField Expression::as_field(const std::string& label) const {
  Expression self = *this;
  std::vector<Expression> partials;
  partials.reserve(num_vars_);
  for (int i = 0; i < num_vars_; ++i) partials.push_back(derivative(i));
  auto eval = [self](const Vec& x) { return self.evaluate(x); };
  auto grad = [partials](const Vec& x) {
    Vec g(partials.size());
    for (std::size_t i = 0; i < partials.size(); ++i)
      g[static_cast<int>(i)] = partials[i].evaluate(x);
    return g;
  };
  return geometry::ScalarField(std::move(eval), std::move(grad),
                               label.empty() ? text_ : label);
}

}  // namespace tempo::expr
