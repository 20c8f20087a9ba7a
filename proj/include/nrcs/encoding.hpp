#ifndef NRCS_ENCODING_HPP
#define NRCS_ENCODING_HPP

#include <nrcs/machine.hpp>
#include <nrcs/ordinal.hpp>

namespace nrcs {

// Parameters of the ordinal-to-tree encoding: trees of height <= k encode
// ordinals up to (Omega_{k+1})_ell. Interior nodes carry the reserved label
// `w`; level-k nodes absorb their children into an @wj annotation; budget
// tokens carry the reserved label `#`.
struct EncodingParams {
  unsigned k = 1;
  unsigned ell = 1;

  EncodingParams() = default;
  EncodingParams(unsigned k_, unsigned ell_) : k(k_), ell(ell_) {
    if (k < 1 || ell < 1) throw std::invalid_argument("encoding parameters must be >= 1");
  }
};

inline const std::string& interior_name() {
  static const std::string s = "w";
  return s;
}
inline const std::string& budget_name() {
  static const std::string s = "#";
  return s;
}

// A name placed at `level` of a k-bounded tree; last-level labels carry the
// annotation pair convention with annotation 0.
inline Label level_label(const std::string& name, unsigned level, unsigned k) {
  if (level == k) return Label(name, 0);
  return Label(name);
}

// (Omega_{k+1})_ell: the tower w^(w^(...^(w^ell))) with k omegas.
inline Ordinal encoding_bound(const EncodingParams& p) {
  Ordinal t = ord_fin(static_cast<unsigned long long>(p.ell));
  for (unsigned i = 0; i < p.k; ++i) t = omega_pow(std::move(t));
  return t;
}

namespace detail {

// The tree of the term w^beta rooted at `level`.
inline Config encode_term(const Ordinal& beta, unsigned level, const EncodingParams& p) {
  if (level == p.k) {
    if (!beta.is_finite()) throw std::invalid_argument("encode_tree: ordinal out of range for k");
    Nat j = beta.is_zero() ? Nat(0) : beta.terms[0].coeff;
    if (j > p.ell) throw std::invalid_argument("encode_tree: level-k child count exceeds ell");
    return Config(Label(interior_name(), static_cast<std::uint32_t>(j.convert_to<unsigned long long>())));
  }
  std::vector<Config> kids;
  for (const auto& t : beta.terms)
    for (Nat c = 0; c < t.coeff; ++c) kids.push_back(encode_term(t.exponent, level + 1, p));
  return Config(Label(interior_name()), std::move(kids));
}

}  // namespace detail

// T_alpha for 0 < alpha <= (Omega_{k+1})_ell.
inline Config encode_tree(const Ordinal& alpha, const EncodingParams& p) {
  if (alpha.is_zero()) throw std::invalid_argument("encode_tree: alpha = 0 has the empty tree");
  if (alpha > encoding_bound(p)) throw std::invalid_argument("encode_tree: alpha exceeds (Omega_{k+1})_ell");
  std::vector<Config> kids;
  for (const auto& t : alpha.terms)
    for (Nat c = 0; c < t.coeff; ++c) kids.push_back(detail::encode_term(t.exponent, 1, p));
  return Config(Label(interior_name()), std::move(kids));
}

namespace detail {

// The exponent of the term a node represents. Only the level-k annotations
// matter; every other label is ignored.
inline Ordinal decode_term(const Config& c, unsigned level, const EncodingParams& p) {
  if (c.label().annotation) {
    if (level != p.k) throw std::invalid_argument("decode_tree: annotation above the last level");
    if (!c.children().empty()) throw std::invalid_argument("decode_tree: annotated node with children");
    return ord_fin(static_cast<unsigned long long>(*c.label().annotation));
  }
  if (level == p.k && !c.children().empty())
    throw std::invalid_argument("decode_tree: missing annotation at the last level");
  Ordinal e;
  for (const auto& ch : c.children()) e = natural_sum(e, omega_pow(decode_term(ch, level + 1, p)));
  return e;
}

}  // namespace detail

// The exponent represented by a subtree whose root sits at `level`.
inline Ordinal decode_subtree_exponent(const Config& c, unsigned level, const EncodingParams& p) {
  return detail::decode_term(c, level, p);
}

// Inverse of encode_tree up to renaming of non-last-level labels.
inline Ordinal decode_tree(const Config& c, const EncodingParams& p) {
  if (c.height() > static_cast<int>(p.k)) throw std::invalid_argument("decode_tree: tree too high");
  Ordinal a;
  for (const auto& ch : c.children()) a = natural_sum(a, omega_pow(detail::decode_term(ch, 1, p)));
  return a;
}

// C_{alpha,n}: T_alpha with n budget children at the root; for alpha = 0 a
// bare w-root carries the budget.
inline Config make_hardy_config(const Ordinal& alpha, const Nat& n, const EncodingParams& p) {
  Config base = alpha.is_zero() ? Config(Label(interior_name())) : encode_tree(alpha, p);
  std::vector<Config> kids = base.children();
  Label hash = level_label(budget_name(), 1, p.k);
  for (Nat i = 0; i < n; ++i) kids.push_back(Config(hash));
  return Config(base.label(), std::move(kids));
}

inline Config make_hardy_config(const Ordinal& alpha, unsigned long long n, const EncodingParams& p) {
  return make_hardy_config(alpha, Nat(n), p);
}

// Splits C_{alpha,n} back into (alpha, n). Labels outside the last level are
// ignored except for the reserved budget name.
inline std::pair<Ordinal, Nat> decode_hardy_config(const Config& c, const EncodingParams& p) {
  Ordinal a;
  Nat n = 0;
  for (const auto& ch : c.children()) {
    if (ch.label().name == budget_name()) {
      if (!ch.children().empty()) throw std::invalid_argument("budget token with children");
      ++n;
    } else {
      a = natural_sum(a, omega_pow(detail::decode_term(ch, 1, p)));
    }
  }
  return {a, n};
}

// ---------------------------------------------------------------------------
// The Hardy rewrite system over pairs (alpha, n):
//   (a+1, n) -> (a, n+1)        (lambda, n) -> (lambda_n, n)
// Each step preserves H^alpha(n).
// ---------------------------------------------------------------------------

struct HardyState {
  Ordinal alpha;
  Nat n;

  HardyState(Ordinal a, Nat n_, const EncodingParams& p) : alpha(std::move(a)), n(std::move(n_)) {
    if (alpha > encoding_bound(p)) throw std::invalid_argument("HardyState: alpha exceeds the bound");
  }

  bool operator==(const HardyState& o) const { return alpha == o.alpha && n == o.n; }
};

inline HardyState hardy_rewrite(const HardyState& s, const EncodingParams& p) {
  if (s.alpha.is_zero()) throw std::invalid_argument("hardy_rewrite: no step from alpha = 0");
  if (s.alpha.is_successor()) return HardyState(predecessor_of_successor(s.alpha), s.n + 1, p);
  return HardyState(fundamental_sequence(s.alpha, s.n), s.n, p);
}

// Folds the rewrite relation to (0, m) and returns m.
inline Nat hardy_rewrite_fold(HardyState s, const EncodingParams& p) {
  while (!s.alpha.is_zero()) s = hardy_rewrite(s, p);
  return s.n;
}

}  // namespace nrcs

#endif
