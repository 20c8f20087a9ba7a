#ifndef NRCS_ORDINAL_HPP
#define NRCS_ORDINAL_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace nrcs {

using Nat = boost::multiprecision::cpp_int;

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
  std::size_t position;
};

struct OrdTerm;

// An ordinal below epsilon_0 in strict Cantor normal form: a sum of terms
// w^exponent * coeff with strictly decreasing exponents and coefficients >= 1.
// The empty sum is 0. Values are immutable once built.
struct Ordinal {
  using Term = OrdTerm;
  std::vector<OrdTerm> terms;

  bool is_zero() const { return terms.empty(); }
  // Successor ordinals end in a w^0 term; nonzero ordinals that do not are limits.
  bool is_successor() const;
  bool is_limit() const;
  bool is_finite() const;

  bool operator==(const Ordinal& o) const;
  bool operator!=(const Ordinal& o) const { return !(*this == o); }
  bool operator<(const Ordinal& o) const;
  bool operator<=(const Ordinal& o) const { return !(o < *this); }
  bool operator>(const Ordinal& o) const { return o < *this; }
  bool operator>=(const Ordinal& o) const { return !(*this < o); }
};

struct OrdTerm {
  Ordinal exponent;
  Nat coeff;
};

inline bool Ordinal::is_successor() const { return !terms.empty() && terms.back().exponent.is_zero(); }
inline bool Ordinal::is_limit() const { return !terms.empty() && !terms.back().exponent.is_zero(); }
inline bool Ordinal::is_finite() const {
  return terms.empty() || (terms.size() == 1 && terms[0].exponent.is_zero());
}

enum class Ordering { Less, Equal, Greater };

inline Ordinal ord_zero() { return Ordinal{}; }

inline Ordinal ord_fin(Nat n) {
  if (n < 0) throw std::invalid_argument("natural expected");
  Ordinal r;
  if (n > 0) r.terms.push_back({Ordinal{}, std::move(n)});
  return r;
}

inline Ordinal ord_fin(unsigned long long n) { return ord_fin(Nat(n)); }

// w^e * c, c >= 0 (c = 0 yields 0).
inline Ordinal omega_pow(Ordinal e, Nat c = 1) {
  if (c < 0) throw std::invalid_argument("coefficient must be nonnegative");
  Ordinal r;
  if (c > 0) r.terms.push_back({std::move(e), std::move(c)});
  return r;
}

inline Ordinal omega() { return omega_pow(ord_fin(1ULL)); }

// The three-way comparison on CNF heads.
inline Ordering compare(const Ordinal& a, const Ordinal& b) {
  std::size_t i = 0;
  for (; i < a.terms.size() && i < b.terms.size(); ++i) {
    Ordering e = compare(a.terms[i].exponent, b.terms[i].exponent);
    if (e != Ordering::Equal) return e;
    if (a.terms[i].coeff != b.terms[i].coeff)
      return a.terms[i].coeff < b.terms[i].coeff ? Ordering::Less : Ordering::Greater;
  }
  if (i < b.terms.size()) return Ordering::Less;
  if (i < a.terms.size()) return Ordering::Greater;
  return Ordering::Equal;
}

inline bool Ordinal::operator==(const Ordinal& o) const { return compare(*this, o) == Ordering::Equal; }
inline bool Ordinal::operator<(const Ordinal& o) const { return compare(*this, o) == Ordering::Less; }

// Natural (Hessenberg) sum: merge the exponent multisets, keep descending order.
inline Ordinal natural_sum(const Ordinal& a, const Ordinal& b) {
  Ordinal r;
  std::size_t i = 0, j = 0;
  while (i < a.terms.size() || j < b.terms.size()) {
    if (i == a.terms.size()) {
      r.terms.push_back(b.terms[j++]);
    } else if (j == b.terms.size()) {
      r.terms.push_back(a.terms[i++]);
    } else {
      Ordering e = compare(a.terms[i].exponent, b.terms[j].exponent);
      if (e == Ordering::Greater) {
        r.terms.push_back(a.terms[i++]);
      } else if (e == Ordering::Less) {
        r.terms.push_back(b.terms[j++]);
      } else {
        r.terms.push_back({a.terms[i].exponent, a.terms[i].coeff + b.terms[j].coeff});
        ++i;
        ++j;
      }
    }
  }
  return r;
}

// n-fold natural sum of a with itself: multiplies every coefficient by n.
inline Ordinal natural_mul_nat(const Ordinal& a, const Nat& n) {
  if (n < 0) throw std::invalid_argument("natural expected");
  if (n == 0) return Ordinal{};
  Ordinal r = a;
  for (auto& t : r.terms) t.coeff *= n;
  return r;
}

// Strips one from the last coefficient; requires a successor ordinal.
inline Ordinal predecessor_of_successor(const Ordinal& a) {
  if (!a.is_successor()) throw std::invalid_argument("successor ordinal expected");
  Ordinal r = a;
  if (r.terms.back().coeff == 1)
    r.terms.pop_back();
  else
    r.terms.back().coeff -= 1;
  return r;
}

// The fixed assignment of fundamental sequences:
//   (g + w^(b+1))_x = g + w^b * x        (g + w^l)_x = g + w^(l_x) for limit l.
inline Ordinal fundamental_sequence(const Ordinal& lambda, const Nat& x) {
  if (!lambda.is_limit()) throw std::invalid_argument("limit ordinal expected");
  if (x < 0) throw std::invalid_argument("natural index expected");
  Ordinal gamma = lambda;
  Ordinal::Term last = gamma.terms.back();
  if (last.coeff == 1)
    gamma.terms.pop_back();
  else
    gamma.terms.back().coeff -= 1;
  const Ordinal& beta = last.exponent;  // > 0
  if (beta.is_successor()) {
    Ordinal b = predecessor_of_successor(beta);
    if (x > 0) gamma.terms.push_back({std::move(b), x});
    return gamma;
  }
  Ordinal bx = fundamental_sequence(beta, x);
  gamma.terms.push_back({std::move(bx), 1});
  return gamma;
}

inline Ordinal fundamental_sequence(const Ordinal& lambda, unsigned long long x) {
  return fundamental_sequence(lambda, Nat(x));
}

// P_n(a): iterate the fundamental sequence at index n until a successor
// appears, then strip one.
inline Ordinal predecessor_P(Ordinal a, const Nat& n) {
  if (a.is_zero()) throw std::invalid_argument("predecessor_P: positive ordinal expected");
  while (a.is_limit()) a = fundamental_sequence(a, n);
  return predecessor_of_successor(a);
}

inline Ordinal predecessor_P(const Ordinal& a, unsigned long long n) { return predecessor_P(a, Nat(n)); }

// Omega_1 = w, Omega_{k+1} = w^(Omega_k).
inline Ordinal omega_tower(unsigned k) {
  if (k == 0) throw std::invalid_argument("omega_tower: k >= 1 expected");
  Ordinal t = omega();
  for (unsigned i = 1; i < k; ++i) t = omega_pow(std::move(t));
  return t;
}

// All coefficients <= l, recursively through the exponents.
inline bool is_lean(const Ordinal& a, const Nat& l) {
  for (const auto& t : a.terms) {
    if (t.coeff > l) return false;
    if (!is_lean(t.exponent, l)) return false;
  }
  return true;
}

inline bool is_lean(const Ordinal& a, unsigned long long l) { return is_lean(a, Nat(l)); }

// ---------------------------------------------------------------------------
// Control functions: strictly increasing maps on the naturals with attributes
// asserted by sampling at construction time.
// ---------------------------------------------------------------------------

struct ControlFunction {
  std::string name;
  std::function<Nat(const Nat&)> fn;
  bool inflationary = false;
  bool superadditive = false;

  Nat operator()(const Nat& x) const { return fn(x); }

  Nat iterate(const Nat& x, unsigned times) const {
    Nat v = x;
    for (unsigned i = 0; i < times; ++i) v = fn(v);
    return v;
  }

  static ControlFunction make(std::string name, std::function<Nat(const Nat&)> f, bool inflationary,
                              bool superadditive) {
    ControlFunction g{std::move(name), std::move(f), inflationary, superadditive};
    for (unsigned x = 0; x < 24; ++x) {
      Nat gx = g.fn(Nat(x));
      if (x > 0 && gx <= g.fn(Nat(x - 1)))
        throw std::invalid_argument("control function not strictly increasing: " + g.name);
      if (g.inflationary && gx < x)
        throw std::invalid_argument("control function not inflationary: " + g.name);
    }
    if (g.superadditive) {
      for (unsigned x = 0; x < 12; ++x)
        for (unsigned y = 0; y < 12; ++y)
          if (g.fn(Nat(x + y)) < g.fn(Nat(x)) + g.fn(Nat(y)))
            throw std::invalid_argument("control function not superadditive: " + g.name);
    }
    return g;
  }

  static ControlFunction successor() {
    return make("succ", [](const Nat& x) { return x + 1; }, true, false);
  }

  // The default control g(x) = 2x: strictly increasing, inflationary, superadditive.
  static ControlFunction doubling() {
    return make("2x", [](const Nat& x) { return 2 * x; }, true, true);
  }

  // h(x) = x * g(x), the control the Cichon bound is stated against.
  static ControlFunction norm_product(const ControlFunction& g) {
    auto gf = g.fn;
    return make("x*" + g.name, [gf](const Nat& x) { return x * gf(x); }, true, g.superadditive);
  }

  static std::optional<ControlFunction> from_name(const std::string& s) {
    if (s == "2x") return doubling();
    if (s == "succ") return successor();
    if (s == "x*2x") return norm_product(doubling());
    return std::nullopt;
  }
};

// Outcome of a budgeted hierarchy evaluation. A missing value means the step
// budget ran out, i.e. the result is too large for desk scale; lower_bound is
// then still a sound lower bound on the true value.
struct EvalOutcome {
  std::optional<Nat> value;
  std::uint64_t steps = 0;
  Nat lower_bound = 0;

  bool exhausted() const { return !value.has_value(); }
};

// Hardy hierarchy: h^0(x) = x, h^(a+1)(x) = h^a(h(x)), h^l(x) = h^(l_x)(x).
inline EvalOutcome hardy_eval(const ControlFunction& h, Ordinal a, Nat x, std::uint64_t budget) {
  EvalOutcome out;
  while (!a.is_zero()) {
    if (out.steps >= budget) return out;
    ++out.steps;
    if (a.is_successor()) {
      a = predecessor_of_successor(a);
      x = h(x);
    } else {
      a = fundamental_sequence(a, x);
    }
  }
  out.value = std::move(x);
  return out;
}

// Cichon hierarchy: h_0(x) = 0, h_(a+1)(x) = 1 + h_a(h(x)), h_l(x) = h_(l_x)(x).
inline EvalOutcome cichon_eval(const ControlFunction& h, Ordinal a, Nat x, std::uint64_t budget) {
  EvalOutcome out;
  Nat count = 0;
  while (!a.is_zero()) {
    if (out.steps >= budget) return out;
    ++out.steps;
    if (a.is_successor()) {
      a = predecessor_of_successor(a);
      x = h(x);
      ++count;
    } else {
      a = fundamental_sequence(a, x);
    }
  }
  out.value = std::move(count);
  return out;
}

// Decides h_a(x) >= threshold without computing the full Cichon value: the
// running count is itself a lower bound, so we can stop early. Returns
// nullopt only when the step budget runs out before a decision.
inline std::optional<bool> cichon_at_least(const ControlFunction& h, Ordinal a, Nat x,
                                           const Nat& threshold, std::uint64_t budget) {
  Nat count = 0;
  std::uint64_t steps = 0;
  while (!a.is_zero()) {
    if (count >= threshold) return true;
    if (steps++ >= budget) return std::nullopt;
    if (a.is_successor()) {
      a = predecessor_of_successor(a);
      x = h(x);
      ++count;
    } else {
      a = fundamental_sequence(a, x);
    }
  }
  return count >= threshold;
}

namespace detail {
inline bool fast_growing_rec(const ControlFunction& h, const Ordinal& a, Nat& x, std::uint64_t budget,
                             std::uint64_t& steps) {
  if (a.is_zero()) {
    if (steps >= budget) return false;
    ++steps;
    x = h(x);
    return true;
  }
  if (a.is_successor()) {
    Ordinal b = predecessor_of_successor(a);
    Nat reps = x;
    for (Nat i = 0; i < reps; ++i)
      if (!fast_growing_rec(h, b, x, budget, steps)) return false;
    return true;
  }
  Ordinal ax = fundamental_sequence(a, x);
  return fast_growing_rec(h, ax, x, budget, steps);
}
}  // namespace detail

// Fast-growing hierarchy: f_0 = h, f_(a+1)(x) = f_a^x(x), f_l(x) = f_(l_x)(x).
// The budget counts applications of h.
inline EvalOutcome fast_growing_eval(const ControlFunction& h, const Ordinal& a, Nat x,
                                     std::uint64_t budget) {
  EvalOutcome out;
  if (detail::fast_growing_rec(h, a, x, budget, out.steps)) out.value = std::move(x);
  return out;
}

// ---------------------------------------------------------------------------
// Text form. Grammar:
//   ordinal := "0" | term ("+" term)*
//   term    := nat | "w" ["^" base] ["*" nat]
//   base    := nat | "w" | "(" ordinal ")"
// The parser normalizes arbitrary well-formed sums into strict CNF via the
// natural sum, so "1 + w" parses as w+1.
// ---------------------------------------------------------------------------

namespace detail {

class OrdinalParser {
public:
  explicit OrdinalParser(const std::string& text) : s_(text) {}

  Ordinal parse() {
    Ordinal r = parse_ordinal();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("trailing input after ordinal", pos_);
    return r;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  Nat parse_nat() {
    skip_ws();
    if (pos_ >= s_.size() || !isdigit(static_cast<unsigned char>(s_[pos_])))
      throw ParseError("expected a natural number", pos_);
    Nat n = 0;
    while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_]))) {
      n = n * 10 + (s_[pos_] - '0');
      ++pos_;
    }
    return n;
  }

  Ordinal parse_ordinal() {
    Ordinal acc = parse_term();
    while (peek_is('+')) {
      expect('+');
      acc = natural_sum(acc, parse_term());
    }
    return acc;
  }

  Ordinal parse_term() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected a term", pos_);
    if (isdigit(static_cast<unsigned char>(s_[pos_]))) return ord_fin(parse_nat());
    if (s_[pos_] != 'w') throw ParseError("expected 'w' or a number", pos_);
    ++pos_;
    Ordinal exp = ord_fin(1ULL);
    if (peek_is('^')) {
      expect('^');
      exp = parse_base();
    }
    Nat coeff = 1;
    if (peek_is('*')) {
      expect('*');
      coeff = parse_nat();
    }
    return omega_pow(std::move(exp), std::move(coeff));
  }

  Ordinal parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected an exponent", pos_);
    if (isdigit(static_cast<unsigned char>(s_[pos_]))) return ord_fin(parse_nat());
    if (s_[pos_] == 'w') {
      ++pos_;
      return omega();
    }
    if (s_[pos_] == '(') {
      expect('(');
      Ordinal o = parse_ordinal();
      expect(')');
      return o;
    }
    throw ParseError("expected a number, 'w' or '('", pos_);
  }
};

}  // namespace detail

inline Ordinal parse_ordinal(const std::string& text) { return detail::OrdinalParser(text).parse(); }

inline std::string render_ordinal(const Ordinal& a) {
  if (a.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : a.terms) {
    if (!first) out += "+";
    first = false;
    if (t.exponent.is_zero()) {
      out += t.coeff.str();
      continue;
    }
    out += "w";
    if (t.exponent != ord_fin(1ULL)) {
      out += "^";
      if (t.exponent.is_finite()) {
        out += t.exponent.terms[0].coeff.str();
      } else if (t.exponent == omega()) {
        out += "w";
      } else {
        out += "(" + render_ordinal(t.exponent) + ")";
      }
    }
    if (t.coeff != 1) out += "*" + t.coeff.str();
  }
  return out;
}

}  // namespace nrcs

#endif
