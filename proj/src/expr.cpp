#include "contrastgeo/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace contrastgeo::expr {

ParseError::ParseError(const std::string& msg, std::size_t offset, int line, int column)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "syntax error at offset " << offset << " (line " << line << ", column " << column << "): " << msg;
        return os.str();
      }()),
      offset_(offset),
      line_(line),
      column_(column) {}

namespace {

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

struct FunctionName {
  std::string_view name;
  Op op;
};

constexpr FunctionName kFunctions[] = {
    {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"sqrt", Op::Sqrt}};

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  NodePtr run() {
    NodePtr e = expression();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }

  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, at, line, col);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    while (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < src_.size() && src_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      std::size_t digits = pos_;
      while (digits < src_.size() && std::isdigit(static_cast<unsigned char>(src_[digits]))) ++digits;
      if (digits == pos_) fail("exponent must be an integer literal");
      if (digits < src_.size() && (src_[digits] == '.' || src_[digits] == 'e' || src_[digits] == 'E'))
        fail_at(start, "exponent must be an integer literal");
      int value = 0;
      auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + digits, value);
      if (ec != std::errc() || value > 64) fail_at(start, "exponent out of range");
      pos_ = digits;
      auto n = std::make_shared<Node>();
      n->op = Op::Pow;
      n->exponent = negative ? -value : value;
      n->lhs = base;
      base = n;
    }
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("expected operand before end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("expected operand, found '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.')) ++end;
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp_end = end + 1;
      if (exp_end < src_.size() && (src_[exp_end] == '+' || src_[exp_end] == '-')) ++exp_end;
      const std::size_t digits = exp_end;
      while (exp_end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp_end]))) ++exp_end;
      if (exp_end > digits) end = exp_end;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, value);
    if (ec != std::errc() || ptr != src_.data() + end || !std::isfinite(value)) fail_at(start, "malformed number");
    pos_ = end;
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->value = value;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    for (const auto& f : kFunctions) {
      if (name == f.name) {
        if (!accept('(')) fail("expected '(' after " + std::string(name));
        NodePtr arg = expression();
        expect(')');
        return make(f.op, arg);
      }
    }

    if ((name[0] == 'x' || name[0] == 'y') && name.size() > 1) {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && ptr == name.data() + name.size() && name[1] != '0') {
        if (idx < 1 || idx > dim_)
          fail_at(start, "variable " + std::string(name) + " out of range for dimension " + std::to_string(dim_));
        auto n = std::make_shared<Node>();
        n->op = Op::Variable;
        n->index = (name[0] == 'x' ? 0 : dim_) + idx - 1;
        return n;
      }
    }
    fail_at(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
};

const char* function_name(Op op) {
  for (const auto& f : kFunctions)
    if (f.op == op) return f.name.data();
  return "?";
}

template <class T>
T apply_function(Op op, const T& a) {
  using std::cos, std::exp, std::log, std::sin, std::sqrt;
  switch (op) {
    case Op::Exp:
      return exp(a);
    case Op::Log:
      return log(a);
    case Op::Sin:
      return sin(a);
    case Op::Cos:
      return cos(a);
    case Op::Sqrt:
      return sqrt(a);
    default:
      throw std::logic_error("not a function node");
  }
}

Jet3 walk_jet(const Node& n, std::span<const Jet3> in) {
  switch (n.op) {
    case Op::Constant:
      return Jet3(n.value);
    case Op::Variable:
      return in[n.index];
    case Op::Add:
      return walk_jet(*n.lhs, in) + walk_jet(*n.rhs, in);
    case Op::Sub:
      return walk_jet(*n.lhs, in) - walk_jet(*n.rhs, in);
    case Op::Mul:
      return walk_jet(*n.lhs, in) * walk_jet(*n.rhs, in);
    case Op::Div:
      return walk_jet(*n.lhs, in) / walk_jet(*n.rhs, in);
    case Op::Pow:
      return pow(walk_jet(*n.lhs, in), n.exponent);
    case Op::Neg:
      return -walk_jet(*n.lhs, in);
    default:
      return apply_function(n.op, walk_jet(*n.lhs, in));
  }
}

double walk_plain(const Node& n, std::span<const double> in) {
  auto finite = [](double v, const char* prim) {
    if (!std::isfinite(v)) throw EvaluationError(prim, "non-finite intermediate value");
    return v;
  };
  switch (n.op) {
    case Op::Constant:
      return n.value;
    case Op::Variable:
      return in[n.index];
    case Op::Add:
      return finite(walk_plain(*n.lhs, in) + walk_plain(*n.rhs, in), "add");
    case Op::Sub:
      return finite(walk_plain(*n.lhs, in) - walk_plain(*n.rhs, in), "sub");
    case Op::Mul:
      return finite(walk_plain(*n.lhs, in) * walk_plain(*n.rhs, in), "mul");
    case Op::Div: {
      const double num = walk_plain(*n.lhs, in);
      const double den = walk_plain(*n.rhs, in);
      if (den == 0.0) throw EvaluationError("div", "division by zero");
      return finite(num / den, "div");
    }
    case Op::Pow: {
      const double b = walk_plain(*n.lhs, in);
      if (n.exponent < 0 && b == 0.0) throw EvaluationError("pow", "zero base with negative exponent");
      return finite(std::pow(b, n.exponent), "pow");
    }
    case Op::Neg:
      return -walk_plain(*n.lhs, in);
    case Op::Log: {
      const double a = walk_plain(*n.lhs, in);
      if (!(a > 0.0)) throw EvaluationError("log", "argument must be positive");
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = walk_plain(*n.lhs, in);
      if (!(a > 0.0)) throw EvaluationError("sqrt", "argument must be positive");
      return std::sqrt(a);
    }
    default:
      return finite(apply_function(n.op, walk_plain(*n.lhs, in)), function_name(n.op));
  }
}

void print_node(const Node& n, int dim, std::string& out) {
  auto binary = [&](const char* sym) {
    out += '(';
    print_node(*n.lhs, dim, out);
    out += sym;
    print_node(*n.rhs, dim, out);
    out += ')';
  };
  switch (n.op) {
    case Op::Constant: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      break;
    }
    case Op::Variable:
      out += n.index < dim ? 'x' : 'y';
      out += std::to_string(n.index % dim + 1);
      break;
    case Op::Add:
      binary(" + ");
      break;
    case Op::Sub:
      binary(" - ");
      break;
    case Op::Mul:
      binary(" * ");
      break;
    case Op::Div:
      binary(" / ");
      break;
    case Op::Pow:
      out += '(';
      print_node(*n.lhs, dim, out);
      out += '^';
      out += std::to_string(n.exponent);
      out += ')';
      break;
    case Op::Neg:
      out += "(-";
      print_node(*n.lhs, dim, out);
      out += ')';
      break;
    default:
      out += function_name(n.op);
      out += '(';
      print_node(*n.lhs, dim, out);
      out += ')';
      break;
  }
}

}  // namespace

bool same_tree(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Constant:
      return a.value == b.value;
    case Op::Variable:
      return a.index == b.index;
    case Op::Pow:
      return a.exponent == b.exponent && same_tree(*a.lhs, *b.lhs);
    default:
      if (!same_tree(*a.lhs, *b.lhs)) return false;
      if (a.rhs || b.rhs) return a.rhs && b.rhs && same_tree(*a.rhs, *b.rhs);
      return true;
  }
}

bool operator==(const Ast& a, const Ast& b) { return a.dim_ == b.dim_ && same_tree(*a.root_, *b.root_); }

Ast parse(std::string_view src, int dim) {
  if (dim < 1) throw std::invalid_argument("expression dimension must be positive");
  bool blank = true;
  for (char c : src) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) throw ParseError("empty expression", 0, 1, 1);
  return Ast(Parser(src, dim).run(), dim);
}

std::string print(const Ast& ast) {
  std::string out;
  print_node(ast.root(), ast.dim(), out);
  return out;
}

Jet3 eval_jet(const Ast& ast, std::span<const Jet3> inputs) {
  if (inputs.size() != static_cast<std::size_t>(2 * ast.dim()))
    throw std::invalid_argument("eval_jet: expected " + std::to_string(2 * ast.dim()) + " inputs");
  return walk_jet(ast.root(), inputs);
}

double eval(const Ast& ast, std::span<const double> inputs) {
  if (inputs.size() != static_cast<std::size_t>(2 * ast.dim()))
    throw std::invalid_argument("eval: expected " + std::to_string(2 * ast.dim()) + " inputs");
  return walk_plain(ast.root(), inputs);
}

SmoothFn to_smooth_fn(const Ast& ast) {
  return SmoothFn(2 * ast.dim(), [ast](std::span<const Jet3> x) { return eval_jet(ast, x); });
}

}  // namespace contrastgeo::expr
