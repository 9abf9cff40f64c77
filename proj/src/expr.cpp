#include "qfilab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace qfi {

struct ExprNode {
  enum class Kind { number, coordinate, radius, neg, add, sub, mul, div, pow, call };
  enum class Fn { exp, log, sin, cos, tan, sqrt };
  Kind kind = Kind::number;
  double value = 0.0;
  int slot = 0;
  Fn fn = Fn::exp;
  std::shared_ptr<const ExprNode> a, b;
};

namespace {

using Node = std::shared_ptr<const ExprNode>;

Node make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& coords, const Params& params)
      : src_(src), coords_(coords), params_(params) {}

  Node parse() {
    auto n = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, what + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(src_) + "'");
  }
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Node binary(ExprNode::Kind k, Node a, Node b) {
    ExprNode n;
    n.kind = k;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
  }

  Node expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = binary(ExprNode::Kind::add, n, term());
      else if (accept('-')) n = binary(ExprNode::Kind::sub, n, term());
      else return n;
    }
  }
  Node term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = binary(ExprNode::Kind::mul, n, unary());
      else if (accept('/')) n = binary(ExprNode::Kind::div, n, unary());
      else return n;
    }
  }
  Node unary() {
    if (accept('-')) {
      ExprNode n;
      n.kind = ExprNode::Kind::neg;
      n.a = unary();
      return make(std::move(n));
    }
    if (accept('+')) return unary();
    return power();
  }
  Node power() {
    auto base = atom();
    if (accept('^')) return binary(ExprNode::Kind::pow, base, unary());
    return base;
  }
  Node atom() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(src_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      ExprNode n;
      n.value = v;
      return make(std::move(n));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string name(src_.substr(start, pos_ - start));
      if (accept('(')) {
        static const std::map<std::string, ExprNode::Fn> fns{
            {"exp", ExprNode::Fn::exp}, {"ln", ExprNode::Fn::log},  {"log", ExprNode::Fn::log},
            {"sin", ExprNode::Fn::sin}, {"cos", ExprNode::Fn::cos}, {"tan", ExprNode::Fn::tan},
            {"sqrt", ExprNode::Fn::sqrt}};
        const auto it = fns.find(name);
        if (it == fns.end()) fail("unknown function '" + name + "'");
        ExprNode n;
        n.kind = ExprNode::Kind::call;
        n.fn = it->second;
        n.a = expr();
        expect(')');
        return make(std::move(n));
      }
      return variable(name);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  Node variable(const std::string& name) {
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i] == name) {
        ExprNode n;
        n.kind = ExprNode::Kind::coordinate;
        n.slot = static_cast<int>(i);
        return make(std::move(n));
      }
    if (name == "r" && coords_.size() >= 2 && coords_[0] == "x" && coords_[1] == "y") {
      ExprNode n;
      n.kind = ExprNode::Kind::radius;
      n.slot = static_cast<int>(coords_.size());
      return make(std::move(n));
    }
    if (const auto it = params_.find(name); it != params_.end()) {
      ExprNode n;
      n.value = it->second;
      return make(std::move(n));
    }
    if (name == "pi") {
      ExprNode n;
      n.value = std::acos(-1.0);
      return make(std::move(n));
    }
    fail("unknown name '" + name + "'");
  }

  std::string_view src_;
  const std::vector<std::string>& coords_;
  const Params& params_;
  std::size_t pos_ = 0;
};

template <class T>
T eval_node(const ExprNode& n, std::span<const T> q) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::number: return T(n.value);
    case K::coordinate: return q[static_cast<std::size_t>(n.slot)];
    case K::radius: {
      T s(0.0);
      for (int i = 0; i < n.slot; ++i) s += q[i] * q[i];
      return sqrt(s);
    }
    case K::neg: return -eval_node(*n.a, q);
    case K::add: return eval_node(*n.a, q) + eval_node(*n.b, q);
    case K::sub: return eval_node(*n.a, q) - eval_node(*n.b, q);
    case K::mul: return eval_node(*n.a, q) * eval_node(*n.b, q);
    case K::div: return eval_node(*n.a, q) / eval_node(*n.b, q);
    case K::pow: {
      const T base = eval_node(*n.a, q);
      if (n.b->kind == K::number) {
        const double p = n.b->value;
        if (p == std::round(p) && std::abs(p) <= 64) return powi(base, static_cast<int>(p));
        return pow(base, p);
      }
      return exp(eval_node(*n.b, q) * log(base));
    }
    case K::call: {
      const T x = eval_node(*n.a, q);
      switch (n.fn) {
        case ExprNode::Fn::exp: return exp(x);
        case ExprNode::Fn::log: return log(x);
        case ExprNode::Fn::sin: return sin(x);
        case ExprNode::Fn::cos: return cos(x);
        case ExprNode::Fn::tan: return tan(x);
        case ExprNode::Fn::sqrt: return sqrt(x);
      }
    }
  }
  return T(0.0);
}

}  // namespace

Expr Expr::parse(std::string_view src, const std::vector<std::string>& coordinates, const Params& params) {
  Expr e;
  e.root_ = Parser(src, coordinates, params).parse();
  e.source_ = std::string(src);
  return e;
}

template <FieldScalar T>
T Expr::eval(std::span<const T> q) const {
  return eval_node<T>(*root_, q);
}

template double Expr::eval<double>(std::span<const double>) const;
template Dual1 Expr::eval<Dual1>(std::span<const Dual1>) const;
template Dual2 Expr::eval<Dual2>(std::span<const Dual2>) const;
template Dual3 Expr::eval<Dual3>(std::span<const Dual3>) const;

ScalarField parse_field(std::string_view src, const std::vector<std::string>& coordinates, const Params& params,
                        Domain domain) {
  const auto e = Expr::parse(src, coordinates, params);
  return make_field(static_cast<int>(coordinates.size()),
                    [e](auto q) { return e.eval<scalar_of<decltype(q)>>(q); }, std::move(domain));
}

}  // namespace qfi
