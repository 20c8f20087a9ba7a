#ifndef NRCS_NM_HPP
#define NRCS_NM_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nrcs/ordinal.hpp>
#include <nrcs/tree.hpp>

namespace nrcs {

// ---------------------------------------------------------------------------
// Nested multiset nwqo expressions: A := G0 | A + A | M[A].
// ---------------------------------------------------------------------------

class NmExpr {
public:
  enum class Kind { Gamma0, Sum, Multi };

  struct Node {
    Kind kind;
    std::shared_ptr<const Node> left, right;  // Sum; Multi uses left as inner
  };

  NmExpr() : NmExpr(gamma0()) {}

  Kind kind() const { return n_->kind; }
  NmExpr sum_left() const { return NmExpr(n_->left); }
  NmExpr sum_right() const { return NmExpr(n_->right); }
  NmExpr multi_inner() const { return NmExpr(n_->left); }
  const Node* node() const { return n_.get(); }

  static NmExpr gamma0() {
    static const auto g0 = std::make_shared<Node>(Node{Kind::Gamma0, nullptr, nullptr});
    return NmExpr(g0);
  }
  static NmExpr sum(const NmExpr& a, const NmExpr& b) {
    return NmExpr(std::make_shared<Node>(Node{Kind::Sum, a.n_, b.n_}));
  }
  static NmExpr multi(const NmExpr& a) {
    return NmExpr(std::make_shared<Node>(Node{Kind::Multi, a.n_, nullptr}));
  }
  // Gamma_n: n unordered norm-0 elements, as an n-fold sum of M[G0].
  static NmExpr gamma(unsigned n) { return times(multi(gamma0()), n); }
  // X*n: n-fold disjoint sum, left nested; X*0 is G0.
  static NmExpr times(const NmExpr& x, unsigned n) {
    if (n == 0) return gamma0();
    NmExpr acc = x;
    for (unsigned i = 1; i < n; ++i) acc = sum(acc, x);
    return acc;
  }

  bool operator==(const NmExpr& o) const { return cmp(*this, o) == 0; }
  bool operator!=(const NmExpr& o) const { return cmp(*this, o) != 0; }
  bool operator<(const NmExpr& o) const { return cmp(*this, o) < 0; }

  static int cmp(const NmExpr& a, const NmExpr& b) {
    if (a.n_ == b.n_) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    switch (a.kind()) {
      case Kind::Gamma0:
        return 0;
      case Kind::Multi:
        return cmp(a.multi_inner(), b.multi_inner());
      case Kind::Sum: {
        int c = cmp(a.sum_left(), b.sum_left());
        if (c) return c;
        return cmp(a.sum_right(), b.sum_right());
      }
    }
    return 0;
  }

  std::string str() const {
    switch (kind()) {
      case Kind::Gamma0:
        return "G0";
      case Kind::Multi:
        return "M[" + multi_inner().str() + "]";
      case Kind::Sum:
        return "(" + sum_left().str() + " + " + sum_right().str() + ")";
    }
    return "";
  }

private:
  explicit NmExpr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

// Elements: Tag(side, inner) for sums, Bag(items) for multisets; bags are
// kept sorted so equality and hashing are structural.
class NmElem {
public:
  enum class Kind { Tag, Bag };

  struct Node {
    Kind kind;
    int side = 0;  // 0 = left, 1 = right
    std::shared_ptr<const Node> inner;
    std::vector<NmElem> items;
  };

  NmElem() : NmElem(bag({})) {}

  Kind kind() const { return n_->kind; }
  int side() const { return n_->side; }
  NmElem tag_inner() const { return NmElem(n_->inner); }
  const std::vector<NmElem>& items() const { return n_->items; }
  const Node* node() const { return n_.get(); }

  static NmElem tag(int side, const NmElem& inner) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Tag;
    n->side = side;
    n->inner = inner.n_;
    return NmElem(std::move(n));
  }
  static NmElem bag(std::vector<NmElem> items) {
    std::sort(items.begin(), items.end());
    auto n = std::make_shared<Node>();
    n->kind = Kind::Bag;
    n->items = std::move(items);
    return NmElem(std::move(n));
  }

  bool operator==(const NmElem& o) const { return cmp(*this, o) == 0; }
  bool operator!=(const NmElem& o) const { return cmp(*this, o) != 0; }
  bool operator<(const NmElem& o) const { return cmp(*this, o) < 0; }

  static int cmp(const NmElem& a, const NmElem& b) {
    if (a.n_ == b.n_) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (a.kind() == Kind::Tag) {
      if (a.side() != b.side()) return a.side() < b.side() ? -1 : 1;
      return cmp(a.tag_inner(), b.tag_inner());
    }
    const auto& ai = a.items();
    const auto& bi = b.items();
    for (std::size_t i = 0; i < ai.size() && i < bi.size(); ++i) {
      int c = cmp(ai[i], bi[i]);
      if (c) return c;
    }
    if (ai.size() != bi.size()) return ai.size() < bi.size() ? -1 : 1;
    return 0;
  }

  std::string str() const {
    if (kind() == Kind::Tag) return (side() == 0 ? "L:" : "R:") + tag_inner().str();
    std::string out = "{";
    for (std::size_t i = 0; i < items().size(); ++i) {
      if (i) out += ",";
      out += items()[i].str();
    }
    return out + "}";
  }

private:
  explicit NmElem(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

inline bool nm_belongs(const NmExpr& e, const NmElem& x) {
  switch (e.kind()) {
    case NmExpr::Kind::Gamma0:
      return false;
    case NmExpr::Kind::Sum:
      if (x.kind() != NmElem::Kind::Tag) return false;
      return nm_belongs(x.side() == 0 ? e.sum_left() : e.sum_right(), x.tag_inner());
    case NmExpr::Kind::Multi:
      if (x.kind() != NmElem::Kind::Bag) return false;
      for (const auto& it : x.items())
        if (!nm_belongs(e.multi_inner(), it)) return false;
      return true;
  }
  return false;
}

// |x| in a sum is the norm in its summand; in a multiset it is the sum of
// max(|item|, 1) so that norm-0 items still cost one.
inline Nat nm_norm(const NmExpr& e, const NmElem& x) {
  switch (e.kind()) {
    case NmExpr::Kind::Gamma0:
      throw std::invalid_argument("no element of the empty nwqo");
    case NmExpr::Kind::Sum:
      if (x.kind() != NmElem::Kind::Tag) throw std::invalid_argument("element shape mismatch");
      return nm_norm(x.side() == 0 ? e.sum_left() : e.sum_right(), x.tag_inner());
    case NmExpr::Kind::Multi: {
      if (x.kind() != NmElem::Kind::Bag) throw std::invalid_argument("element shape mismatch");
      Nat total = 0;
      for (const auto& it : x.items()) {
        Nat v = nm_norm(e.multi_inner(), it);
        total += v > 1 ? v : Nat(1);
      }
      return total;
    }
  }
  return 0;
}

namespace detail {
inline bool nm_leq_rec(const NmExpr& e, const NmElem& x, const NmElem& y);

inline bool nm_bag_augment(const NmExpr& inner, const std::vector<NmElem>& xs,
                           const std::vector<NmElem>& ys, int i, std::vector<bool>& used,
                           std::vector<int>& match) {
  for (std::size_t j = 0; j < ys.size(); ++j) {
    if (used[j] || !nm_leq_rec(inner, xs[static_cast<std::size_t>(i)], ys[j])) continue;
    used[j] = true;
    if (match[j] < 0 || nm_bag_augment(inner, xs, ys, match[j], used, match)) {
      match[j] = i;
      return true;
    }
  }
  return false;
}

inline bool nm_leq_rec(const NmExpr& e, const NmElem& x, const NmElem& y) {
  switch (e.kind()) {
    case NmExpr::Kind::Gamma0:
      throw std::invalid_argument("no element of the empty nwqo");
    case NmExpr::Kind::Sum:
      if (x.side() != y.side()) return false;
      return nm_leq_rec(x.side() == 0 ? e.sum_left() : e.sum_right(), x.tag_inner(), y.tag_inner());
    case NmExpr::Kind::Multi: {
      const auto& xs = x.items();
      const auto& ys = y.items();
      if (xs.size() > ys.size()) return false;
      std::vector<int> match(ys.size(), -1);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        std::vector<bool> used(ys.size(), false);
        if (!nm_bag_augment(e.multi_inner(), xs, ys, static_cast<int>(i), used, match)) return false;
      }
      return true;
    }
  }
  return false;
}
}  // namespace detail

inline bool nm_leq(const NmExpr& e, const NmElem& x, const NmElem& y) {
  if (!nm_belongs(e, x) || !nm_belongs(e, y)) throw std::invalid_argument("element shape mismatch");
  return detail::nm_leq_rec(e, x, y);
}

// ---------------------------------------------------------------------------
// Order types and the canonical expression of an ordinal:
//   o(G0) = 0, o(A+B) = o(A) (+) o(B), o(M[A]) = w^o(A)
//   C(0) = G0, C(sum of w^b_i) = sum of M[C(b_i)]
// ---------------------------------------------------------------------------

inline Ordinal order_type(const NmExpr& e) {
  switch (e.kind()) {
    case NmExpr::Kind::Gamma0:
      return ord_zero();
    case NmExpr::Kind::Sum:
      return natural_sum(order_type(e.sum_left()), order_type(e.sum_right()));
    case NmExpr::Kind::Multi:
      return omega_pow(order_type(e.multi_inner()));
  }
  return ord_zero();
}

inline NmExpr canonical_expr(const Ordinal& a) {
  std::vector<NmExpr> parts;
  for (const auto& t : a.terms) {
    NmExpr m = NmExpr::multi(canonical_expr(t.exponent));
    for (Nat c = 0; c < t.coeff; ++c) parts.push_back(m);
  }
  if (parts.empty()) return NmExpr::gamma0();
  NmExpr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = NmExpr::sum(acc, parts[i]);
  return acc;
}

// Two nested multiset nwqos are isomorphic iff their order types agree.
inline bool nm_iso(const NmExpr& a, const NmExpr& b) { return order_type(a) == order_type(b); }

// ---------------------------------------------------------------------------
// The reflection expression R_n(A, a): a structural over-approximation of the
// residual A/a, by the four-case induction on the shape of A.
// ---------------------------------------------------------------------------

namespace detail {

// Drops G0 summands; returns the element transported along the simplification.
inline std::pair<NmExpr, std::optional<NmElem>> nm_reduce(const NmExpr& e,
                                                          const std::optional<NmElem>& x) {
  switch (e.kind()) {
    case NmExpr::Kind::Gamma0:
      return {e, std::nullopt};
    case NmExpr::Kind::Multi: {
      NmExpr ie = nm_reduce(e.multi_inner(), std::nullopt).first;
      if (!x) return {NmExpr::multi(ie), std::nullopt};
      std::vector<NmElem> items;
      for (const auto& it : x->items()) items.push_back(*nm_reduce(e.multi_inner(), it).second);
      return {NmExpr::multi(ie), NmElem::bag(std::move(items))};
    }
    case NmExpr::Kind::Sum: {
      std::optional<NmElem> xl, xr;
      if (x) (x->side() == 0 ? xl : xr) = x->tag_inner();
      auto [l, el] = nm_reduce(e.sum_left(), xl);
      auto [r, er] = nm_reduce(e.sum_right(), xr);
      bool l_empty = l.kind() == NmExpr::Kind::Gamma0;
      bool r_empty = r.kind() == NmExpr::Kind::Gamma0;
      if (l_empty && r_empty) return {NmExpr::gamma0(), std::nullopt};
      if (l_empty) return {r, er};
      if (r_empty) return {l, el};
      std::optional<NmElem> out;
      if (el) out = NmElem::tag(0, *el);
      if (er) out = NmElem::tag(1, *er);
      return {NmExpr::sum(l, r), out};
    }
  }
  return {e, std::nullopt};
}

inline void nm_flatten_sum(const NmExpr& e, std::vector<NmExpr>& out) {
  if (e.kind() == NmExpr::Kind::Sum) {
    nm_flatten_sum(e.sum_left(), out);
    nm_flatten_sum(e.sum_right(), out);
  } else if (e.kind() != NmExpr::Kind::Gamma0) {
    out.push_back(e);
  }
}

inline NmExpr nm_sum_of(const std::vector<NmExpr>& parts) {
  if (parts.empty()) return NmExpr::gamma0();
  NmExpr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = NmExpr::sum(acc, parts[i]);
  return acc;
}

// Locates the summand index a Tag path selects in the flattened view.
inline std::pair<std::size_t, NmElem> nm_locate(const NmExpr& e, const NmElem& x, std::size_t base = 0) {
  if (e.kind() != NmExpr::Kind::Sum) return {base, x};
  std::vector<NmExpr> left_parts;
  nm_flatten_sum(e.sum_left(), left_parts);
  if (x.side() == 0) return nm_locate(e.sum_left(), x.tag_inner(), base);
  return nm_locate(e.sum_right(), x.tag_inner(), base + left_parts.size());
}

inline NmExpr reflection_rec(const NmExpr& a, const NmElem& x, const Nat& n);

// R_n(M[B], bag) split into a list of M[.] summands.
inline std::vector<NmExpr> reflection_multi_parts(const NmExpr& multi_expr, const NmElem& bag,
                                                  const Nat& n) {
  std::vector<NmExpr> parts;
  nm_flatten_sum(reflection_rec(multi_expr, bag, n), parts);
  return parts;
}

inline NmExpr reflection_rec(const NmExpr& a, const NmElem& x, const Nat& n) {
  if (a.kind() == NmExpr::Kind::Sum) {
    // A = sum of M[B_i]; keep the other summands, recurse where a lives.
    std::vector<NmExpr> summands;
    nm_flatten_sum(a, summands);
    auto [idx, inner] = nm_locate(a, x, 0);
    std::vector<NmExpr> others;
    for (std::size_t i = 0; i < summands.size(); ++i)
      if (i != idx) others.push_back(summands[i]);
    NmExpr rec = reflection_rec(summands[idx], inner, n);
    if (others.empty()) return rec;
    return NmExpr::sum(nm_sum_of(others), rec);
  }
  // A = M[Inner]
  const NmExpr inner = a.multi_inner();
  if (inner.kind() == NmExpr::Kind::Gamma0) return NmExpr::gamma0();
  if (inner.kind() == NmExpr::Kind::Multi) {
    // A = M[M[B]], a = {a_1..a_m}:
    //   R_n(A,a) = sum_i M[ B*(n-1) + R_n(M[B], a_i) ]
    const NmExpr b = inner.multi_inner();
    std::vector<NmExpr> outer;
    for (const auto& ai : x.items()) {
      std::vector<NmExpr> ps;
      for (Nat c = 0; c < n - 1; ++c) ps.push_back(b);
      for (auto& p : reflection_multi_parts(inner, ai, n)) ps.push_back(p);
      outer.push_back(NmExpr::multi(nm_sum_of(ps)));
    }
    return nm_sum_of(outer);
  }
  // A = M[sum of B_i], d >= 2: split the bag by summand and combine.
  std::vector<NmExpr> bs;
  nm_flatten_sum(inner, bs);
  std::vector<std::vector<NmElem>> by_summand(bs.size());
  for (const auto& it : x.items()) {
    auto [idx, stripped] = nm_locate(inner, it, 0);
    by_summand[idx].push_back(stripped);
  }
  std::vector<NmExpr> outer;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    NmElem bi = NmElem::bag(by_summand[i]);
    for (auto& part : reflection_multi_parts(NmExpr::multi(bs[i]), bi, n)) {
      std::vector<NmExpr> ps;
      for (std::size_t k = 0; k < bs.size(); ++k)
        if (k != i) ps.push_back(bs[k]);
      ps.push_back(part.multi_inner());
      outer.push_back(NmExpr::multi(nm_sum_of(ps)));
    }
  }
  return nm_sum_of(outer);
}

}  // namespace detail

inline NmExpr nm_normalized(const NmExpr& e) { return detail::nm_reduce(e, std::nullopt).first; }

inline NmExpr residual_bound_expr(const NmExpr& a, const NmElem& x, const Nat& n) {
  if (n < 1) throw std::invalid_argument("residual_bound_expr: n >= 1 expected");
  if (!nm_belongs(a, x)) throw std::invalid_argument("element not in the expression's domain");
  if (nm_norm(a, x) > n) throw std::invalid_argument("norm of the element exceeds n");
  auto [e2, x2] = detail::nm_reduce(a, x);
  if (e2.kind() == NmExpr::Kind::Gamma0) throw std::invalid_argument("empty nwqo has no residual");
  return detail::reflection_rec(e2, *x2, n);
}

inline NmExpr residual_bound_expr(const NmExpr& a, const NmElem& x, unsigned long long n) {
  return residual_bound_expr(a, x, Nat(n));
}

// ---------------------------------------------------------------------------
// Derivatives on order types:
//   D_n(w^0) = 0
//   D_n(w^(w^b)) = w^(b*(n-1) (+) D_n(w^b)) * n
//   D_n(w^(sum of >= 2 powers)) distributes over the removed position
//   delta_n(sum of w^b_i) = one candidate per CNF position
// ---------------------------------------------------------------------------

inline Ordinal derivative_D(const Ordinal& a, const Nat& n) {
  if (n < 1) throw std::invalid_argument("derivative_D: n >= 1 expected");
  if (a.terms.size() != 1 || a.terms[0].coeff != 1)
    throw std::invalid_argument("derivative_D expects a single w-power");
  const Ordinal& beta = a.terms[0].exponent;
  if (beta.is_zero()) return ord_zero();
  Nat total = 0;
  for (const auto& t : beta.terms) total += t.coeff;
  if (total == 1) {
    // beta = w^gamma: D_n(w^(w^gamma)) = w^(gamma*(n-1) (+) D_n(w^gamma)) * n
    const Ordinal& gamma = beta.terms[0].exponent;
    Ordinal e = natural_sum(natural_mul_nat(gamma, n - 1), derivative_D(omega_pow(gamma), n));
    return omega_pow(std::move(e), n);
  }
  // beta is a sum of >= 2 powers (counting coefficients); one group per
  // distinct exponent of beta.
  Ordinal result;
  for (std::size_t i = 0; i < beta.terms.size(); ++i) {
    Ordinal rest;
    for (std::size_t p = 0; p < beta.terms.size(); ++p) {
      if (p == i) {
        if (beta.terms[p].coeff > 1)
          rest = natural_sum(rest, omega_pow(beta.terms[p].exponent, beta.terms[p].coeff - 1));
      } else {
        rest = natural_sum(rest, omega_pow(beta.terms[p].exponent, beta.terms[p].coeff));
      }
    }
    const Ordinal& gamma = beta.terms[i].exponent;
    Ordinal e = natural_sum(rest, natural_sum(natural_mul_nat(gamma, n - 1),
                                              derivative_D(omega_pow(gamma), n)));
    result = natural_sum(result, omega_pow(std::move(e), beta.terms[i].coeff * n));
  }
  return result;
}

inline Ordinal derivative_D(const Ordinal& a, unsigned long long n) { return derivative_D(a, Nat(n)); }

inline std::vector<Ordinal> delta(const Ordinal& a, const Nat& n) {
  if (a.is_zero()) throw std::invalid_argument("delta: positive ordinal expected");
  if (n < 1) throw std::invalid_argument("delta: n >= 1 expected");
  std::set<Ordinal> out;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    Ordinal rest;
    for (std::size_t p = 0; p < a.terms.size(); ++p) {
      Nat c = a.terms[p].coeff - (p == i ? 1 : 0);
      if (c > 0) rest = natural_sum(rest, omega_pow(a.terms[p].exponent, c));
    }
    out.insert(natural_sum(derivative_D(omega_pow(a.terms[i].exponent), n), rest));
  }
  return std::vector<Ordinal>(out.begin(), out.end());
}

inline std::vector<Ordinal> delta(const Ordinal& a, unsigned long long n) { return delta(a, Nat(n)); }

// M_{a,g}(n) = max over a' in delta_n(a) of 1 + M_{a',g}(g(n)); memoized on
// (a, n); the budget counts recursion nodes. Runs on an explicit stack since
// the descent depth equals the (possibly huge) value itself. On exhaustion
// the deepest descent chain found so far is reported as a lower bound.
class MBound {
public:
  explicit MBound(ControlFunction g, std::uint64_t budget = UINT64_MAX)
      : g_(std::move(g)), budget_(budget) {}

  EvalOutcome eval(const Ordinal& a0, const Nat& n0) {
    EvalOutcome out;
    if (a0.is_zero()) {
      out.value = 0;
      return out;
    }
    struct Frame {
      std::pair<Ordinal, Nat> key;
      std::vector<Ordinal> kids;
      std::size_t next = 0;
      Nat best = 0;
      Nat gn;
    };
    std::vector<Frame> stack;
    auto open = [&](const Ordinal& a, const Nat& n) -> std::optional<Nat> {
      // returns the value when it is immediate, otherwise pushes a frame
      if (a.is_zero()) return Nat(0);
      auto key = std::make_pair(a, n);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
      Frame f;
      f.key = std::move(key);
      f.kids = delta(a, n);
      f.gn = g_(n);
      stack.push_back(std::move(f));
      if (stack.size() > depth_seen_) depth_seen_ = stack.size();
      return std::nullopt;
    };
    if (auto v = open(a0, n0)) {
      out.value = *v;
      return out;
    }
    std::optional<Nat> ret;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (ret) {
        Nat v = 1 + *ret;
        if (v > f.best) f.best = v;
        ++f.next;
        ret.reset();
      }
      if (f.next >= f.kids.size()) {
        memo_[f.key] = f.best;
        ret = f.best;
        stack.pop_back();
        continue;
      }
      if (steps_ >= budget_) {
        out.steps = steps_;
        out.lower_bound = Nat(depth_seen_) - 1;
        return out;  // exhausted
      }
      ++steps_;
      ret = open(f.kids[f.next], f.gn);
    }
    out.steps = steps_;
    out.value = *ret;
    return out;
  }

private:
  ControlFunction g_;
  std::uint64_t budget_;
  std::uint64_t steps_ = 0;
  std::size_t depth_seen_ = 0;
  std::map<std::pair<Ordinal, Nat>, Nat> memo_;
};

inline EvalOutcome m_bound(const Ordinal& a, const ControlFunction& g, const Nat& n,
                           std::uint64_t budget = UINT64_MAX) {
  if (n < 1) throw std::invalid_argument("m_bound: n >= 1 expected");
  return MBound(g, budget).eval(a, n);
}

// Demonstrates M_{a,g}(n) >= threshold by following a single greedy descent
// chain (largest delta member first); every chain length is a sound lower
// bound. Returns the length reached, capped at the threshold.
inline Nat m_bound_at_least(Ordinal a, const ControlFunction& g, Nat n, const Nat& threshold) {
  Nat count = 0;
  while (!a.is_zero() && count < threshold) {
    auto kids = delta(a, n);
    a = kids.back();  // delta results are sorted ascending
    n = g(n);
    ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Exhaustive search for maximum (g,n)-controlled bad sequences.
// ---------------------------------------------------------------------------

struct BadSequenceQuery {
  NmExpr expr;
  ControlFunction control;
  Nat n;
  unsigned cap = 1;
};

struct BadSequenceResult {
  Nat length;
  std::vector<NmElem> witness;
  bool cap_hit = false;  // when set, length is only a lower bound
};

struct BadSequenceLimits {
  std::uint64_t node_budget = 0;  // 0 = unlimited; overflowing flags cap_hit
};

namespace detail {

class SliceEnumerator {
public:
  // All elements of e with norm <= bound, sorted canonically.
  const std::vector<NmElem>& slice(const NmExpr& e, const Nat& bound) {
    auto key = std::make_pair(e, bound);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<NmElem> out;
    switch (e.kind()) {
      case NmExpr::Kind::Gamma0:
        break;
      case NmExpr::Kind::Sum: {
        for (const auto& x : slice(e.sum_left(), bound)) out.push_back(NmElem::tag(0, x));
        for (const auto& x : slice(e.sum_right(), bound)) out.push_back(NmElem::tag(1, x));
        break;
      }
      case NmExpr::Kind::Multi: {
        const auto& inner = slice(e.multi_inner(), bound);
        std::vector<std::pair<NmElem, Nat>> costed;
        for (const auto& x : inner) {
          Nat c = nm_norm(e.multi_inner(), x);
          costed.emplace_back(x, c > 1 ? c : Nat(1));
        }
        std::vector<NmElem> current;
        gen_bags(costed, 0, bound, current, out);
        break;
      }
    }
    std::sort(out.begin(), out.end());
    auto [slot, _] = cache_.emplace(std::move(key), std::move(out));
    return slot->second;
  }

private:
  std::map<std::pair<NmExpr, Nat>, std::vector<NmElem>> cache_;

  void gen_bags(const std::vector<std::pair<NmElem, Nat>>& costed, std::size_t from, Nat left,
                std::vector<NmElem>& current, std::vector<NmElem>& out) {
    out.push_back(NmElem::bag(current));
    for (std::size_t i = from; i < costed.size(); ++i) {
      if (costed[i].second > left) continue;
      current.push_back(costed[i].first);
      gen_bags(costed, i, left - costed[i].second, current, out);
      current.pop_back();
    }
  }
};

}  // namespace detail

// All elements of e with norm <= bound (finite by the norm property).
inline std::vector<NmElem> nm_slice(const NmExpr& e, const Nat& bound) {
  detail::SliceEnumerator s;
  return s.slice(e, bound);
}

namespace detail {

// Depth-first search for bad sequences with per-index norm bounds. Aborts as
// soon as the cap is reached; `node_budget` (0 = unlimited) cuts runaway
// searches, in which case the result is only a lower bound.
struct BadSearch {
  const NmExpr& expr;
  const ControlFunction& control;
  Nat n;
  unsigned cap;
  Nat clamp;                   // 0 = no clamp on candidate norms
  std::uint64_t node_budget;   // 0 = unlimited

  SliceEnumerator slices;
  BadSequenceResult best{0, {}, false};
  std::vector<NmElem> seq;
  std::vector<Nat> bounds;
  std::uint64_t nodes = 0;
  bool stop = false;
  bool budget_hit = false;

  BadSequenceResult run() {
    bounds = {n};
    rec();
    return best;
  }

  void rec() {
    if (Nat(seq.size()) > best.length) {
      best.length = Nat(seq.size());
      best.witness = seq;
    }
    if (seq.size() >= cap) {
      best.cap_hit = true;
      stop = true;
      return;
    }
    if (node_budget && nodes >= node_budget) {
      budget_hit = true;
      stop = true;
      return;
    }
    ++nodes;
    while (bounds.size() <= seq.size()) bounds.push_back(control(bounds.back()));
    Nat bound = bounds[seq.size()];
    if (clamp > 0 && bound > clamp) bound = clamp;
    const auto& slice = slices.slice(expr, bound);
    // try large candidates first: long sequences tend to descend
    for (auto it = slice.rbegin(); it != slice.rend(); ++it) {
      const NmElem& x = *it;
      bool bad = true;
      for (const auto& prev : seq)
        if (nm_leq_rec(expr, prev, x)) {
          bad = false;
          break;
        }
      if (!bad) continue;
      seq.push_back(x);
      rec();
      seq.pop_back();
      if (stop) return;
    }
  }
};

}  // namespace detail

inline BadSequenceResult max_bad_sequence(const BadSequenceQuery& q,
                                          const BadSequenceLimits& limits = {}) {
  if (q.cap < 1) throw std::invalid_argument("cap >= 1 expected");
  detail::BadSearch search{q.expr, q.control, q.n, q.cap, 0, limits.node_budget};
  auto res = search.run();
  if (search.budget_hit) res.cap_hit = true;  // lower bound only
  return res;
}

// ---------------------------------------------------------------------------
// Trees of height <= k over q states as nested multisets: M_k = M[G0]*q and
// M_{j-1} = M[M_j]*q; h_0 maps a configuration to an element of M_0.
// ---------------------------------------------------------------------------

// The expression M_j for trees of height <= k-j over q labels.
inline NmExpr nm_level_expr(unsigned k, unsigned q, unsigned j = 0) {
  NmExpr acc = NmExpr::times(NmExpr::multi(NmExpr::gamma0()), q);
  for (unsigned level = k; level > j; --level) acc = NmExpr::times(NmExpr::multi(acc), q);
  return acc;
}

namespace detail {
// Addresses copy `idx` (0-based) inside the left-nested q-fold sum.
inline NmElem nm_tag_into(unsigned q, unsigned idx, const NmElem& e) {
  if (q == 1) return e;
  if (idx == q - 1) return NmElem::tag(1, e);
  return NmElem::tag(0, nm_tag_into(q - 1, idx, e));
}
}  // namespace detail

// h_j: the node label picks the copy, the child subtrees become the bag.
inline NmElem tree_to_element(const Config& c, unsigned k, const std::vector<Label>& states) {
  auto pos = std::find(states.begin(), states.end(), c.label());
  if (pos == states.end()) throw std::invalid_argument("label not among the declared states");
  if (c.height() > static_cast<int>(k)) throw std::invalid_argument("height exceeds k");
  unsigned idx = static_cast<unsigned>(pos - states.begin());
  unsigned q = static_cast<unsigned>(states.size());
  std::vector<NmElem> items;
  for (const auto& ch : c.children()) items.push_back(tree_to_element(ch, k - 1, states));
  return detail::nm_tag_into(q, idx, NmElem::bag(std::move(items)));
}

// ---------------------------------------------------------------------------
// Expression text form: G0, (E + E), M[E], sugar Gn and E*n.
// ---------------------------------------------------------------------------

namespace detail {

class NmExprParser {
public:
  explicit NmExprParser(const std::string& s) : s_(s) {}

  NmExpr parse() {
    NmExpr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("trailing input after expression", pos_);
    return e;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  unsigned parse_nat() {
    skip_ws();
    if (pos_ >= s_.size() || !isdigit(static_cast<unsigned char>(s_[pos_])))
      throw ParseError("expected a number", pos_);
    unsigned n = 0;
    while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_])))
      n = n * 10 + static_cast<unsigned>(s_[pos_++] - '0');
    return n;
  }

  NmExpr parse_expr() {
    NmExpr e = parse_atom();
    skip_ws();
    while (pos_ < s_.size() && s_[pos_] == '*') {
      ++pos_;
      e = NmExpr::times(e, parse_nat());
      skip_ws();
    }
    return e;
  }

  NmExpr parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected an expression", pos_);
    char c = s_[pos_];
    if (c == 'G') {
      ++pos_;
      unsigned n = parse_nat();
      return NmExpr::gamma(n);
    }
    if (c == 'M') {
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '[') throw ParseError("expected '['", pos_);
      ++pos_;
      NmExpr inner = parse_expr();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ']') throw ParseError("expected ']'", pos_);
      ++pos_;
      return NmExpr::multi(inner);
    }
    if (c == '(') {
      ++pos_;
      NmExpr l = parse_expr();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '+') throw ParseError("expected '+'", pos_);
      ++pos_;
      NmExpr r = parse_expr();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ')') throw ParseError("expected ')'", pos_);
      ++pos_;
      return NmExpr::sum(l, r);
    }
    throw ParseError("expected 'G', 'M' or '('", pos_);
  }
};

}  // namespace detail

inline NmExpr parse_nm_expr(const std::string& s) { return detail::NmExprParser(s).parse(); }

}  // namespace nrcs

#endif
