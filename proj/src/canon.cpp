#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expr.hpp"

// Canonical keys work on a sum/ratio normal form: subtraction becomes signed
// sum terms, nested division merges into a single numerator/denominator pair,
// constant subexpressions fold (with protected semantics), identical sum
// terms fold into one scaled term (t + t == 2*t holds bit-exactly), and
// commutative chains print sorted. No algebraic simplification happens beyond
// that, so e.g. x/x is kept verbatim: cancelling it would change
// protected-division behaviour near zero, and t - t is never cancelled.

namespace srkit {
namespace {

struct CNode {
  enum class K { Const, Var, Sum, Ratio, Prim };
  K k = K::Const;
  double cval = 0.0;             // Const
  std::int32_t var = -1;         // Var
  std::vector<CNode> terms;      // Sum (>= 2 entries) or Prim child (1 entry)
  double coeff = 1.0;            // Ratio
  std::vector<CNode> num, den;   // Ratio factors: Var, Sum or Prim only
  Op prim = Op::Sqrt;

  static CNode constant(double v) {
    CNode c;
    c.k = K::Const;
    c.cval = v == 0.0 ? 0.0 : v;  // collapse -0.0
    return c;
  }
};

bool is_negative_head(const CNode& c) {
  if (c.k == CNode::K::Const) return c.cval < 0.0;
  if (c.k == CNode::K::Ratio) return c.coeff < 0.0;
  return false;
}

CNode negate(CNode c) {
  switch (c.k) {
    case CNode::K::Const:
      return CNode::constant(-c.cval);
    case CNode::K::Ratio:
      c.coeff = -c.coeff;
      return c;
    case CNode::K::Sum:
      for (auto& t : c.terms) t = negate(std::move(t));
      return c;
    default: {
      CNode r;
      r.k = CNode::K::Ratio;
      r.coeff = -1.0;
      r.num.push_back(std::move(c));
      return r;
    }
  }
}

// Unwraps trivial ratios so wrappers do not accumulate.
CNode simplify_ratio(CNode r) {
  if (r.k != CNode::K::Ratio) return r;
  if (r.coeff == 0.0) return CNode::constant(0.0);
  if (r.num.empty() && r.den.empty()) return CNode::constant(r.coeff);
  if (r.coeff == 1.0 && r.den.empty() && r.num.size() == 1) return std::move(r.num[0]);
  return r;
}

struct RatioParts {
  double coeff = 1.0;
  std::vector<CNode> num, den;
};

RatioParts as_ratio(CNode c) {
  RatioParts p;
  switch (c.k) {
    case CNode::K::Const:
      p.coeff = c.cval;
      break;
    case CNode::K::Ratio:
      p.coeff = c.coeff;
      p.num = std::move(c.num);
      p.den = std::move(c.den);
      break;
    default:
      p.num.push_back(std::move(c));
      break;
  }
  return p;
}

std::string exact_key(const CNode& c);  // full signed render, defined with Renderer

CNode make_sum(std::vector<CNode> raw_terms) {
  std::vector<CNode> terms;
  double const_acc = 0.0;
  bool has_const = false;
  for (auto& t : raw_terms) {
    if (t.k == CNode::K::Sum) {
      for (auto& inner : t.terms) {
        if (inner.k == CNode::K::Const) {
          const_acc += inner.cval;
          has_const = true;
        } else {
          terms.push_back(std::move(inner));
        }
      }
    } else if (t.k == CNode::K::Const) {
      const_acc += t.cval;
      has_const = true;
    } else {
      terms.push_back(std::move(t));
    }
  }
  if (terms.size() > 1) {
    std::vector<CNode> folded;
    std::vector<std::string> keys;
    std::vector<std::size_t> mult;
    for (auto& t : terms) {
      std::string k = exact_key(t);
      auto it = std::find(keys.begin(), keys.end(), k);
      if (it == keys.end()) {
        keys.push_back(std::move(k));
        folded.push_back(std::move(t));
        mult.push_back(1);
      } else {
        ++mult[std::size_t(it - keys.begin())];
      }
    }
    for (std::size_t i = 0; i < folded.size(); ++i) {
      if (mult[i] < 2) continue;
      RatioParts p = as_ratio(std::move(folded[i]));
      CNode r;
      r.k = CNode::K::Ratio;
      r.coeff = p.coeff * double(mult[i]);
      r.num = std::move(p.num);
      r.den = std::move(p.den);
      folded[i] = simplify_ratio(std::move(r));
    }
    terms = std::move(folded);
  }
  if (has_const && const_acc != 0.0) terms.push_back(CNode::constant(const_acc));
  if (terms.empty()) return CNode::constant(has_const ? const_acc : 0.0);
  if (terms.size() == 1) return std::move(terms[0]);
  CNode s;
  s.k = CNode::K::Sum;
  s.terms = std::move(terms);
  return s;
}

CNode build(const ExprTree& t, std::size_t idx, std::size_t& next);

CNode build_binary(Op op, CNode a, CNode b) {
  switch (op) {
    case Op::Add: {
      std::vector<CNode> ts;
      ts.push_back(std::move(a));
      ts.push_back(std::move(b));
      return make_sum(std::move(ts));
    }
    case Op::Sub: {
      std::vector<CNode> ts;
      ts.push_back(std::move(a));
      ts.push_back(negate(std::move(b)));
      return make_sum(std::move(ts));
    }
    case Op::Mul: {
      RatioParts pa = as_ratio(std::move(a));
      RatioParts pb = as_ratio(std::move(b));
      CNode r;
      r.k = CNode::K::Ratio;
      r.coeff = pa.coeff * pb.coeff;
      r.num = std::move(pa.num);
      for (auto& f : pb.num) r.num.push_back(std::move(f));
      r.den = std::move(pa.den);
      for (auto& f : pb.den) r.den.push_back(std::move(f));
      return simplify_ratio(std::move(r));
    }
    default: {  // Div
      RatioParts pb = as_ratio(std::move(b));
      // A fully constant denominator follows the protected rule exactly.
      if (pb.num.empty() && pb.den.empty() && std::fabs(pb.coeff) < kDivEps)
        return CNode::constant(1.0);
      if (pb.coeff == 0.0) return CNode::constant(1.0);  // denominator has a hard zero factor
      RatioParts pa = as_ratio(std::move(a));
      CNode r;
      r.k = CNode::K::Ratio;
      r.coeff = pa.coeff / pb.coeff;
      r.num = std::move(pa.num);
      for (auto& f : pb.den) r.num.push_back(std::move(f));
      r.den = std::move(pa.den);
      for (auto& f : pb.num) r.den.push_back(std::move(f));
      return simplify_ratio(std::move(r));
    }
  }
}

CNode build_unary(Op op, CNode c) {
  if (op == Op::Neg) return negate(std::move(c));
  if (c.k == CNode::K::Const) return CNode::constant(apply_op(op, c.cval));
  // sqrt and abs are even in this library, so a leading sign is dropped.
  if (is_negative_head(c)) c = negate(std::move(c));
  CNode p;
  p.k = CNode::K::Prim;
  p.prim = op;
  p.terms.push_back(std::move(c));
  return p;
}

CNode build(const ExprTree& t, std::size_t idx, std::size_t& next) {
  const Node& n = t.nodes[idx];
  if (n.kind == Node::Kind::Const) {
    next = idx + 1;
    return CNode::constant(n.value);
  }
  if (n.kind == Node::Kind::Var) {
    next = idx + 1;
    CNode c;
    c.k = CNode::K::Var;
    c.var = n.var;
    return c;
  }
  std::size_t mid = 0;
  CNode a = build(t, idx + 1, mid);
  if (op_arity(n.op) == 1) {
    next = mid;
    return build_unary(n.op, std::move(a));
  }
  CNode b = build(t, mid, next);
  return build_binary(n.op, std::move(a), std::move(b));
}

// --------------------------------------------------------------------------
// rendering

std::string fmt3(double v) {
  char buf[400];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

enum class Ctx { Top, InRatio, InEven };

struct TermKey {
  std::string core;
  bool neg = false;
  bool operator<(const TermKey& o) const {
    if (core != o.core) return core < o.core;
    return !neg && o.neg;
  }
};

struct Renderer {
  bool structure;

  // comp collects sign compensation that the enclosing ratio coefficient
  // absorbs (exact mode only).
  std::string render(const CNode& c, Ctx ctx, double& comp) {
    switch (c.k) {
      case CNode::K::Const:
        return structure ? std::string("const") : fmt3(c.cval);
      case CNode::K::Var:
        return "x" + std::to_string(c.var);
      case CNode::K::Prim: {
        double ignored = 1.0;
        return std::string(op_name(c.prim)) + "(" + render(c.terms[0], Ctx::InEven, ignored) + ")";
      }
      case CNode::K::Sum:
        return render_sum(c, ctx, comp);
      case CNode::K::Ratio:
      default: {
        auto [key, neg] = render_ratio(c, false);
        (void)neg;
        return key;
      }
    }
  }

  TermKey render_term(const CNode& c) {
    if (c.k == CNode::K::Const) return {fmt3(std::fabs(c.cval)), c.cval < 0.0};
    if (c.k == CNode::K::Ratio) return render_ratio(c, true);
    double ignored = 1.0;
    return {render(c, Ctx::InRatio, ignored), false};
  }

  std::string render_sum(const CNode& c, Ctx ctx, double& comp) {
    std::vector<TermKey> keys;
    keys.reserve(c.terms.size());
    for (const auto& t : c.terms) {
      if (structure && t.k == CNode::K::Const) continue;
      keys.push_back(render_term(t));
    }
    if (keys.empty()) return structure ? "const" : "0.000";
    std::sort(keys.begin(), keys.end());
    bool may_flip = structure || ctx != Ctx::Top;
    if (may_flip && keys.front().neg) {
      for (auto& k : keys) k.neg = !k.neg;
      if (ctx == Ctx::InRatio) comp = -comp;
    }
    if (keys.size() == 1) return keys[0].neg ? "neg(" + keys[0].core + ")" : keys[0].core;
    std::string out = "add(";
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i) out += ",";
      out += keys[i].neg ? "neg(" + keys[i].core + ")" : keys[i].core;
    }
    out += ")";
    return out;
  }

  std::string join_factors(const std::vector<std::string>& parts, const std::string& empty_value) {
    if (parts.empty()) return empty_value;
    if (parts.size() == 1) return parts[0];
    std::string out = "mul(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ",";
      out += parts[i];
    }
    out += ")";
    return out;
  }

  // split_sign: emit |coeff| in the key and report the sign separately so sum
  // terms print as neg(...) instead of burying the sign in a -1.000 factor.
  TermKey render_ratio(const CNode& c, bool split_sign) {
    double coeff = c.coeff;
    std::vector<std::string> num_parts, den_parts;
    num_parts.reserve(c.num.size());
    for (const auto& f : c.num) num_parts.push_back(render(f, Ctx::InRatio, coeff));
    den_parts.reserve(c.den.size());
    for (const auto& f : c.den) den_parts.push_back(render(f, Ctx::InRatio, coeff));
    std::sort(num_parts.begin(), num_parts.end());
    std::sort(den_parts.begin(), den_parts.end());

    if (structure) {
      // Magnitudes are masked but the sign still matters relative to sibling
      // terms; it is dropped only where split_sign is false (top level, even
      // function arguments), which is where a fitted scale absorbs it.
      bool neg = split_sign && coeff < 0.0;
      std::string numkey = join_factors(num_parts, "1");
      if (den_parts.empty()) return {numkey, neg};
      return {"div(" + numkey + "," + join_factors(den_parts, "1") + ")", neg};
    }

    bool neg = split_sign && coeff < 0.0;
    std::string cstr = fmt3(split_sign ? std::fabs(coeff) : coeff);
    std::vector<std::string> parts;
    if (cstr != "1.000") parts.push_back(cstr);
    for (auto& p : num_parts) parts.push_back(std::move(p));
    std::string numkey = join_factors(parts, "1.000");
    std::string key = den_parts.empty()
                          ? numkey
                          : "div(" + numkey + "," + join_factors(den_parts, "1.000") + ")";
    return {key, neg};
  }
};

std::string exact_key(const CNode& c) {
  Renderer r{false};
  double comp = 1.0;
  return r.render(c, Ctx::InRatio, comp);
}

}  // namespace

std::string canonical_key(const ExprTree& t, bool structure_only) {
  if (t.empty()) throw std::invalid_argument("cannot canonicalize empty tree");
  std::size_t next = 0;
  CNode c = build(t, 0, next);
  Renderer r{structure_only};
  double comp = 1.0;
  std::string key = r.render(c, Ctx::Top, comp);
  // Top-level ratios print their full signed coefficient, so comp stays 1
  // except for a sum folded to a single flipped term; that sign is dropped by
  // design in structure mode and cannot occur at Top in exact mode.
  return key;
}

}  // namespace srkit
