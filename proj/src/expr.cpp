#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace srkit {

int op_arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
  }
  return "?";
}

bool op_commutative(Op op) { return op == Op::Add || op == Op::Mul; }

std::optional<Op> op_from_name(std::string_view name) {
  for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Neg, Op::Sqrt, Op::Abs})
    if (name == op_name(op)) return op;
  return std::nullopt;
}

double apply_op(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return std::fabs(b) < kDivEps ? 1.0 : a / b;
    case Op::Neg: return -a;
    case Op::Sqrt: return std::sqrt(std::fabs(a));
    case Op::Abs: return std::fabs(a);
  }
  return 0.0;
}

std::size_t ExprTree::subtree_end(std::size_t i) const {
  std::size_t need = 1;
  std::size_t j = i;
  while (need > 0) {
    const Node& n = nodes.at(j);
    need += (n.kind == Node::Kind::Func ? std::size_t(op_arity(n.op)) : 0u);
    --need;
    ++j;
  }
  return j;
}

int ExprTree::depth() const {
  // Depth = max edges from root to a leaf.
  struct Walker {
    const std::vector<Node>& nodes;
    std::pair<int, std::size_t> walk(std::size_t i) const {
      const Node& n = nodes[i];
      if (n.kind != Node::Kind::Func) return {0, i + 1};
      int best = 0;
      std::size_t j = i + 1;
      for (int c = 0; c < op_arity(n.op); ++c) {
        auto [d, nj] = walk(j);
        best = std::max(best, d);
        j = nj;
      }
      return {best + 1, j};
    }
  };
  if (nodes.empty()) return -1;
  return Walker{nodes}.walk(0).first;
}

bool ExprTree::contains_var(std::int32_t v) const {
  for (const Node& n : nodes)
    if (n.kind == Node::Kind::Var && n.var == v) return true;
  return false;
}

std::vector<std::int32_t> ExprTree::vars_used() const {
  std::vector<std::int32_t> out;
  for (const Node& n : nodes) {
    if (n.kind != Node::Kind::Var) continue;
    bool seen = false;
    for (auto v : out) seen = seen || v == n.var;
    if (!seen) out.push_back(n.var);
  }
  return out;
}

FunctionSet FunctionSet::standard() {
  return FunctionSet{{Op::Add, Op::Sub, Op::Mul, Op::Div}};
}

FunctionSet FunctionSet::from_names(const std::vector<std::string>& names) {
  FunctionSet fs;
  for (const auto& s : names) {
    auto op = op_from_name(s);
    if (!op) throw std::invalid_argument("unknown function name: " + s);
    fs.ops.push_back(*op);
  }
  if (fs.ops.empty()) throw std::invalid_argument("function set must not be empty");
  return fs;
}

std::vector<Op> FunctionSet::with_arity(int arity) const {
  std::vector<Op> out;
  for (Op op : ops)
    if (op_arity(op) == arity) out.push_back(op);
  return out;
}

bool FunctionSet::has(Op op) const {
  for (Op o : ops)
    if (o == op) return true;
  return false;
}

LeafSampler LeafSampler::uniform(std::size_t n_features) {
  LeafSampler s;
  s.weights.assign(n_features + 1, 1.0);
  return s;
}

Node LeafSampler::draw(Rng& g) const {
  std::size_t slot = weighted_index(g, weights);
  if (slot + 1 == weights.size()) return Node::constant(srkit::uniform(g, erc_lo, erc_hi));
  return Node::variable(std::int32_t(slot));
}

static void full_tree_rec(Rng& g, int depth, const FunctionSet& fs, const LeafSampler& leaves,
                          std::vector<Node>& out) {
  if (depth == 0) {
    out.push_back(leaves.draw(g));
    return;
  }
  Op op = fs.ops[uniform_index(g, fs.ops.size())];
  out.push_back(Node::func(op));
  for (int c = 0; c < op_arity(op); ++c) full_tree_rec(g, depth - 1, fs, leaves, out);
}

ExprTree random_full_tree(Rng& g, int depth, const FunctionSet& fs, const LeafSampler& leaves) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  ExprTree t;
  full_tree_rec(g, depth, fs, leaves, t.nodes);
  return t;
}

MutationResult point_mutate(Rng& g, const ExprTree& t, const FunctionSet& fs, const LeafSampler& leaves) {
  MutationResult r{t, 0};
  if (t.empty()) return r;
  std::size_t i = uniform_index(g, t.size());
  r.index = i;
  Node& n = r.tree.nodes[i];
  if (n.kind == Node::Kind::Func) {
    auto pool = fs.with_arity(op_arity(n.op));
    if (!pool.empty()) n.op = pool[uniform_index(g, pool.size())];
  } else {
    n = leaves.draw(g);
  }
  return r;
}

std::pair<ExprTree, ExprTree> subtree_crossover(Rng& g, const ExprTree& a, const ExprTree& b) {
  std::size_t i = uniform_index(g, a.size());
  std::size_t j = uniform_index(g, b.size());
  std::size_t ie = a.subtree_end(i);
  std::size_t je = b.subtree_end(j);
  ExprTree c1, c2;
  c1.nodes.reserve(a.size() - (ie - i) + (je - j));
  c1.nodes.insert(c1.nodes.end(), a.nodes.begin(), a.nodes.begin() + i);
  c1.nodes.insert(c1.nodes.end(), b.nodes.begin() + j, b.nodes.begin() + je);
  c1.nodes.insert(c1.nodes.end(), a.nodes.begin() + ie, a.nodes.end());
  c2.nodes.reserve(b.size() - (je - j) + (ie - i));
  c2.nodes.insert(c2.nodes.end(), b.nodes.begin(), b.nodes.begin() + j);
  c2.nodes.insert(c2.nodes.end(), a.nodes.begin() + i, a.nodes.begin() + ie);
  c2.nodes.insert(c2.nodes.end(), b.nodes.begin() + je, b.nodes.end());
  return {std::move(c1), std::move(c2)};
}

Evaluator::Evaluator(const Matrix& X, std::vector<std::size_t> rows)
    : X_(X), rows_(std::move(rows)) {}

std::size_t Evaluator::eval_rec(const ExprTree& t, std::size_t idx, std::size_t depth,
                                std::vector<double>& out) {
  const Node& n = t.nodes[idx];
  const std::size_t nr = rows_.size();
  out.resize(nr);
  if (n.kind == Node::Kind::Const) {
    for (std::size_t r = 0; r < nr; ++r) out[r] = n.value;
    return idx + 1;
  }
  if (n.kind == Node::Kind::Var) {
    for (std::size_t r = 0; r < nr; ++r) out[r] = X_.at(rows_[r], std::size_t(n.var));
    return idx + 1;
  }
  std::size_t next = eval_rec(t, idx + 1, depth + 1, out);
  if (op_arity(n.op) == 1) {
    switch (n.op) {
      case Op::Neg:
        for (auto& v : out) v = -v;
        break;
      case Op::Sqrt:
        for (auto& v : out) v = std::sqrt(std::fabs(v));
        break;
      default:
        for (auto& v : out) v = std::fabs(v);
        break;
    }
    return next;
  }
  std::vector<double>& rhs = bufs_[depth];
  next = eval_rec(t, next, depth + 1, rhs);
  switch (n.op) {
    case Op::Add:
      for (std::size_t r = 0; r < nr; ++r) out[r] += rhs[r];
      break;
    case Op::Sub:
      for (std::size_t r = 0; r < nr; ++r) out[r] -= rhs[r];
      break;
    case Op::Mul:
      for (std::size_t r = 0; r < nr; ++r) out[r] *= rhs[r];
      break;
    default:
      for (std::size_t r = 0; r < nr; ++r)
        out[r] = std::fabs(rhs[r]) < kDivEps ? 1.0 : out[r] / rhs[r];
      break;
  }
  return next;
}

void Evaluator::run(const ExprTree& t, std::vector<double>& out) {
  if (t.empty()) throw std::invalid_argument("cannot evaluate empty tree");
  // Buffers must exist before recursion starts: growing bufs_ mid-walk would
  // invalidate the references held by callers up the stack.
  std::size_t need = std::size_t(t.depth()) + 1;
  if (bufs_.size() < need) bufs_.resize(need);
  eval_rec(t, 0, 0, out);
}

std::vector<double> evaluate(const ExprTree& t, const Matrix& X, const std::vector<std::size_t>& rows) {
  Evaluator ev(X, rows);
  std::vector<double> out;
  ev.run(t, out);
  return out;
}

static std::size_t eval_row_rec(const ExprTree& t, std::size_t idx, const double* row, double& out) {
  const Node& n = t.nodes[idx];
  if (n.kind == Node::Kind::Const) {
    out = n.value;
    return idx + 1;
  }
  if (n.kind == Node::Kind::Var) {
    out = row[n.var];
    return idx + 1;
  }
  double a = 0, b = 0;
  std::size_t next = eval_row_rec(t, idx + 1, row, a);
  if (op_arity(n.op) == 2) next = eval_row_rec(t, next, row, b);
  out = apply_op(n.op, a, b);
  return next;
}

double evaluate_row(const ExprTree& t, const double* row) {
  double out = 0;
  eval_row_rec(t, 0, row, out);
  return out;
}

// ---------------------------------------------------------------------------
// infix printing / parsing

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

int op_precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 3;
  }
}

std::string var_name(std::int32_t v, const std::vector<std::string>& names) {
  if (v >= 0 && std::size_t(v) < names.size()) return names[v];
  return "x" + std::to_string(v + 1);
}

struct InfixPrinter {
  const ExprTree& t;
  const std::vector<std::string>& names;

  std::pair<std::string, std::size_t> walk(std::size_t i, int parent_prec, bool rhs) const {
    const Node& n = t.nodes[i];
    if (n.kind == Node::Kind::Const) {
      std::string s = format_number(n.value);
      if (n.value < 0 && parent_prec > 0) s = "(" + s + ")";
      return {s, i + 1};
    }
    if (n.kind == Node::Kind::Var) return {var_name(n.var, names), i + 1};
    if (op_arity(n.op) == 1) {
      auto [inner, next] = walk(i + 1, 0, false);
      if (n.op == Op::Neg) return {"-(" + inner + ")", next};
      return {std::string(op_name(n.op)) + "(" + inner + ")", next};
    }
    int prec = op_precedence(n.op);
    auto [lhs, mid] = walk(i + 1, prec, false);
    auto [rhs_s, next] = walk(mid, prec, true);
    const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
    std::string s = lhs + sym + rhs_s;
    bool need_parens = prec < parent_prec || (prec == parent_prec && rhs);
    if (need_parens) s = "(" + s + ")";
    return {s, next};
  }
};

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  const std::vector<std::string>& names;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("parse error at position " + std::to_string(pos) + ": " + what);
  }

  void expr(std::vector<Node>& out) {
    std::vector<Node> lhs;
    term(lhs);
    for (;;) {
      skip_ws();
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        char c = text[pos++];
        std::vector<Node> rhs;
        term(rhs);
        std::vector<Node> merged;
        merged.push_back(Node::func(c == '+' ? Op::Add : Op::Sub));
        merged.insert(merged.end(), lhs.begin(), lhs.end());
        merged.insert(merged.end(), rhs.begin(), rhs.end());
        lhs = std::move(merged);
      } else {
        break;
      }
    }
    out.insert(out.end(), lhs.begin(), lhs.end());
  }

  void term(std::vector<Node>& out) {
    std::vector<Node> lhs;
    unary(lhs);
    for (;;) {
      skip_ws();
      if (pos < text.size() && (text[pos] == '*' || text[pos] == '/')) {
        char c = text[pos++];
        std::vector<Node> rhs;
        unary(rhs);
        std::vector<Node> merged;
        merged.push_back(Node::func(c == '*' ? Op::Mul : Op::Div));
        merged.insert(merged.end(), lhs.begin(), lhs.end());
        merged.insert(merged.end(), rhs.begin(), rhs.end());
        lhs = std::move(merged);
      } else {
        break;
      }
    }
    out.insert(out.end(), lhs.begin(), lhs.end());
  }

  void unary(std::vector<Node>& out) {
    skip_ws();
    if (pos < text.size() && text[pos] == '-') {
      ++pos;
      std::vector<Node> inner;
      unary(inner);
      if (inner.size() == 1 && inner[0].kind == Node::Kind::Const) {
        inner[0].value = -inner[0].value;
        out.insert(out.end(), inner.begin(), inner.end());
        return;
      }
      // Unary minus lowers to (-1)*expr so downstream code only sees the
      // binary set plus optional unary functions.
      out.push_back(Node::func(Op::Mul));
      out.push_back(Node::constant(-1.0));
      out.insert(out.end(), inner.begin(), inner.end());
      return;
    }
    primary(out);
  }

  void primary(std::vector<Node>& out) {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      expr(out);
      if (!eat(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
              text[pos] == 'e' || text[pos] == 'E' ||
              ((text[pos] == '+' || text[pos] == '-') && (text[pos - 1] == 'e' || text[pos - 1] == 'E'))))
        ++pos;
      try {
        out.push_back(Node::constant(std::stod(std::string(text.substr(start, pos - start)))));
      } catch (const std::exception&) {
        fail("bad numeric literal");
      }
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
        ++pos;
      std::string ident(text.substr(start, pos - start));
      skip_ws();
      if (pos < text.size() && text[pos] == '(') {
        auto op = op_from_name(ident);
        if (!op || op_arity(*op) != 1) fail("unknown function '" + ident + "'");
        ++pos;
        out.push_back(Node::func(*op));
        expr(out);
        if (!eat(')')) fail("expected ')'");
        return;
      }
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == ident) {
          out.push_back(Node::variable(std::int32_t(i)));
          return;
        }
      }
      fail("unknown identifier '" + ident + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

std::string to_infix(const ExprTree& t, const std::vector<std::string>& names) {
  if (t.empty()) return "";
  return InfixPrinter{t, names}.walk(0, 0, false).first;
}

ExprTree parse_infix(const std::string& text, const std::vector<std::string>& names) {
  Parser p{text, 0, names};
  ExprTree t;
  p.expr(t.nodes);
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  if (t.empty()) p.fail("empty expression");
  return t;
}

}  // namespace srkit
