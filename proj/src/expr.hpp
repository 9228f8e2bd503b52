#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace srkit {

enum class Op : std::uint8_t { Add, Sub, Mul, Div, Neg, Sqrt, Abs };

int op_arity(Op op);
const char* op_name(Op op);
bool op_commutative(Op op);
std::optional<Op> op_from_name(std::string_view name);

// Division guard: denominators smaller than this in magnitude make the node
// evaluate to 1.0 for that row.
constexpr double kDivEps = 1e-6;

// Applies one operator with the protected semantics used everywhere
// (evaluation, constant folding, brute-force oracles).
double apply_op(Op op, double a, double b = 0.0);

struct Node {
  enum class Kind : std::uint8_t { Func, Var, Const };
  Kind kind = Kind::Const;
  Op op = Op::Add;
  std::int32_t var = -1;
  double value = 0.0;

  static Node func(Op o) { Node n; n.kind = Kind::Func; n.op = o; return n; }
  static Node variable(std::int32_t i) { Node n; n.kind = Kind::Var; n.var = i; return n; }
  static Node constant(double v) { Node n; n.kind = Kind::Const; n.value = v; return n; }
  bool operator==(const Node&) const = default;
};

// Expression tree stored as a prefix-order node vector.
struct ExprTree {
  std::vector<Node> nodes;

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  // Index one past the end of the subtree rooted at i.
  std::size_t subtree_end(std::size_t i) const;
  int depth() const;
  bool contains_var(std::int32_t v) const;
  std::vector<std::int32_t> vars_used() const;
  bool operator==(const ExprTree&) const = default;
};

struct FunctionSet {
  std::vector<Op> ops;

  static FunctionSet standard();  // add, sub, mul, div
  static FunctionSet from_names(const std::vector<std::string>& names);
  std::vector<Op> with_arity(int arity) const;
  bool has(Op op) const;
};

// Leaf distribution over features plus one trailing slot for a random constant.
struct LeafSampler {
  std::vector<double> weights;  // size = n_features + 1, last entry = constant
  double erc_lo = -5.0;
  double erc_hi = 5.0;

  static LeafSampler uniform(std::size_t n_features);
  Node draw(Rng& g) const;
  std::size_t n_features() const { return weights.size() - 1; }
};

// Full initialization: every leaf sits at exactly `depth` edges from the root.
ExprTree random_full_tree(Rng& g, int depth, const FunctionSet& fs, const LeafSampler& leaves);

struct MutationResult {
  ExprTree tree;
  std::size_t index;  // node position that was redrawn
};

// Redraws one uniformly chosen node: operators resample within the same arity,
// leaves redraw from the leaf distribution.
MutationResult point_mutate(Rng& g, const ExprTree& t, const FunctionSet& fs, const LeafSampler& leaves);

// Swaps uniformly chosen subtrees; total node count is conserved.
std::pair<ExprTree, ExprTree> subtree_crossover(Rng& g, const ExprTree& a, const ExprTree& b);

// Vectorised evaluator with reusable per-depth buffers so hot loops do not
// allocate per call.
class Evaluator {
 public:
  Evaluator(const Matrix& X, std::vector<std::size_t> rows);
  const std::vector<std::size_t>& rows() const { return rows_; }
  // out is resized to rows().size().
  void run(const ExprTree& t, std::vector<double>& out);

 private:
  const Matrix& X_;
  std::vector<std::size_t> rows_;
  std::vector<std::vector<double>> bufs_;
  std::size_t eval_rec(const ExprTree& t, std::size_t idx, std::size_t depth, std::vector<double>& out);
};

std::vector<double> evaluate(const ExprTree& t, const Matrix& X, const std::vector<std::size_t>& rows);
double evaluate_row(const ExprTree& t, const double* row);

// Infix rendering with minimal parentheses; names may be empty, in which case
// features print as x1, x2, ... (1-based to match generated CSV headers).
std::string to_infix(const ExprTree& t, const std::vector<std::string>& names = {});

// Parses "+ - * /", unary minus, parentheses, numeric literals, feature names
// and unary function calls (sqrt, abs). Throws std::invalid_argument on bad
// input or unknown identifiers.
ExprTree parse_infix(const std::string& text, const std::vector<std::string>& names);

// Canonical string key. Exact mode folds constants (rounded to three decimals
// in the key), flattens and sorts commutative chains, merges nested ratios and
// orients subtraction signs. Structure mode additionally masks constants so
// trees differing only in fitted coefficients collide.
std::string canonical_key(const ExprTree& t, bool structure_only = false);

}  // namespace srkit
