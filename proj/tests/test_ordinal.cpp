#include <nrcs/ordinal.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace nrcs;

namespace {

// Independent oracle: evaluate the hierarchies by direct recursion on the
// defining equations, without the budgeted stepper under test.
Nat hardy_oracle(const ControlFunction& h, const Ordinal& a, const Nat& x) {
  if (a.is_zero()) return x;
  if (a.is_successor()) return hardy_oracle(h, predecessor_of_successor(a), h(x));
  return hardy_oracle(h, fundamental_sequence(a, x), x);
}

Nat cichon_oracle(const ControlFunction& h, const Ordinal& a, const Nat& x) {
  if (a.is_zero()) return 0;
  if (a.is_successor()) return 1 + cichon_oracle(h, predecessor_of_successor(a), h(x));
  return cichon_oracle(h, fundamental_sequence(a, x), x);
}

Nat fg_oracle(const ControlFunction& h, const Ordinal& a, const Nat& x) {
  if (a.is_zero()) return h(x);
  if (a.is_successor()) {
    Ordinal b = predecessor_of_successor(a);
    Nat v = x;
    for (Nat i = 0; i < x; ++i) v = fg_oracle(h, b, v);
    return v;
  }
  return fg_oracle(h, fundamental_sequence(a, x), x);
}

Ordinal random_ordinal(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> nterms(0, 3);
  std::uniform_int_distribution<int> coeff(1, 3);
  int n = nterms(rng);
  Ordinal acc;
  for (int i = 0; i < n; ++i) {
    Ordinal e = depth > 0 && (rng() & 1) ? random_ordinal(rng, depth - 1) : ord_fin((unsigned long long)(rng() % 3));
    acc = natural_sum(acc, omega_pow(std::move(e), Nat(coeff(rng))));
  }
  return acc;
}

Ordinal W(const std::string& s) { return parse_ordinal(s); }

}  // namespace

TEST_CASE("compare basics") {
  CHECK(compare(ord_zero(), ord_fin(1ULL)) == Ordering::Less);
  CHECK(compare(W("w^2"), W("w^w")) == Ordering::Less);
  CHECK(compare(W("w^w*2+1"), W("w^w*2+1")) == Ordering::Equal);
  CHECK(compare(W("w+1"), W("w")) == Ordering::Greater);
  CHECK(compare(W("w*2"), W("w+5")) == Ordering::Greater);
}

TEST_CASE("compare is a total order on a generated pool") {
  std::mt19937 rng(20240811);
  std::vector<Ordinal> pool;
  for (int i = 0; i < 1100; ++i) pool.push_back(random_ordinal(rng, 2));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int it = 0; it < 4000; ++it) {
    const Ordinal& a = pool[pick(rng)];
    const Ordinal& b = pool[pick(rng)];
    const Ordinal& c = pool[pick(rng)];
    Ordering ab = compare(a, b), ba = compare(b, a);
    // antisymmetry + totality
    if (ab == Ordering::Equal) {
      CHECK(ba == Ordering::Equal);
    } else {
      CHECK(ab != ba);
    }
    // transitivity
    if (compare(a, b) != Ordering::Greater && compare(b, c) != Ordering::Greater)
      CHECK(compare(a, c) != Ordering::Greater);
  }
}

TEST_CASE("natural sum") {
  CHECK(natural_sum(W("w"), W("1")) == W("w+1"));
  CHECK(natural_sum(W("1"), W("w")) == W("w+1"));
  CHECK(natural_sum(W("w^w+1"), W("w")) == W("w^w+w+1"));

  std::mt19937 rng(7);
  for (int it = 0; it < 500; ++it) {
    Ordinal a = random_ordinal(rng, 2), b = random_ordinal(rng, 2), c = random_ordinal(rng, 2);
    CHECK(natural_sum(a, b) == natural_sum(b, a));
    CHECK(natural_sum(natural_sum(a, b), c) == natural_sum(a, natural_sum(b, c)));
    CHECK(natural_sum(a, ord_zero()) == a);
  }
}

TEST_CASE("fundamental sequences") {
  CHECK(fundamental_sequence(W("w"), 5ULL) == W("5"));
  CHECK(fundamental_sequence(W("w^w"), 2ULL) == W("w^2"));
  CHECK(fundamental_sequence(W("w^2+w"), 3ULL) == W("w^2+3"));
  CHECK_THROWS_AS(fundamental_sequence(W("0"), 1ULL), std::invalid_argument);
  CHECK_THROWS_AS(fundamental_sequence(W("w+1"), 1ULL), std::invalid_argument);

  std::mt19937 rng(99);
  int checked = 0;
  while (checked < 300) {
    Ordinal l = random_ordinal(rng, 2);
    if (!l.is_limit()) continue;
    ++checked;
    Ordinal prev;
    bool have_prev = false;
    for (unsigned long long x = 1; x <= 4; ++x) {
      Ordinal lx = fundamental_sequence(l, x);
      CHECK(lx < l);
      if (have_prev) CHECK(prev <= lx);  // monotone approach toward the supremum
      prev = lx;
      have_prev = true;
    }
  }
}

TEST_CASE("predecessor P_n") {
  CHECK(predecessor_P(W("5"), 2ULL) == W("4"));
  CHECK(predecessor_P(W("w"), 3ULL) == W("2"));
  CHECK(predecessor_P(W("w^2"), 2ULL) == W("w+1"));
  CHECK_THROWS_AS(predecessor_P(W("0"), 2ULL), std::invalid_argument);
}

TEST_CASE("omega tower") {
  CHECK(omega_tower(1) == W("w"));
  CHECK(omega_tower(2) == W("w^w"));
  CHECK(omega_tower(3) == W("w^(w^w)"));
  CHECK_THROWS_AS(omega_tower(0), std::invalid_argument);
}

TEST_CASE("leanness") {
  CHECK(is_lean(W("0"), 0ULL));
  CHECK_FALSE(is_lean(W("w^2*3"), 2ULL));
  CHECK(is_lean(W("w^(w*2)*2"), 2ULL));

  std::mt19937 rng(3);
  for (int it = 0; it < 400; ++it) {
    Ordinal a = random_ordinal(rng, 2);
    for (unsigned long long l = 0; l < 4; ++l)
      if (is_lean(a, l)) CHECK(is_lean(a, l + 1));
  }
}

TEST_CASE("hardy evaluation") {
  auto succ = ControlFunction::successor();
  CHECK(hardy_eval(succ, W("0"), 7, 10).value == Nat(7));
  CHECK(hardy_eval(succ, W("3"), 5, 10).value == Nat(8));
  CHECK(hardy_eval(succ, W("w^2"), 3, 10000).value == Nat(24));
  CHECK(hardy_eval(succ, W("w^2"), 3, 10000).value == hardy_oracle(succ, W("w^2"), 3));
  CHECK(hardy_eval(succ, W("w^w"), 2, 2).exhausted());

  std::mt19937 rng(17);
  for (int it = 0; it < 60; ++it) {
    // keep values small: exponents below w^2, coefficients <= 2
    Ordinal a = natural_sum(omega_pow(ord_fin((unsigned long long)(rng() % 2)), Nat(1 + rng() % 2)),
                            ord_fin((unsigned long long)(rng() % 3)));
    Nat x = Nat(rng() % 4);
    auto got = hardy_eval(succ, a, x, 1u << 22);
    REQUIRE_FALSE(got.exhausted());
    CHECK(*got.value == hardy_oracle(succ, a, x));
  }
}

TEST_CASE("cichon evaluation") {
  auto succ = ControlFunction::successor();
  CHECK(cichon_eval(succ, W("0"), 9, 10).value == Nat(0));
  CHECK(cichon_eval(succ, W("3"), 5, 10).value == Nat(3));
  CHECK(cichon_eval(succ, W("w"), 4, 100).value == Nat(4));
  CHECK(cichon_eval(succ, W("w*2+1"), 3, 1000).value == cichon_oracle(succ, W("w*2+1"), 3));
}

TEST_CASE("fast-growing evaluation") {
  auto succ = ControlFunction::successor();
  CHECK(fast_growing_eval(succ, W("0"), 6, 10).value == Nat(7));
  CHECK(fast_growing_eval(succ, W("1"), 5, 100).value == Nat(10));
  CHECK(fast_growing_eval(succ, W("2"), 3, 100).value == Nat(24));
  CHECK(fast_growing_eval(succ, W("2"), 3, 100).value == fg_oracle(succ, W("2"), 3));
  // f_w(2) = f_2(2) = 8; anything much larger is beyond desk scale
  CHECK(fast_growing_eval(succ, W("w"), 2, 100).value == fg_oracle(succ, W("w"), 2));
  CHECK(fast_growing_eval(succ, W("3"), 4, 50).exhausted());
}

TEST_CASE("hardy agrees with rewriting relation") {
  // (a, x) ->_H (a', x') preserves the Hardy value; one step of each kind.
  auto succ = ControlFunction::successor();
  std::mt19937 rng(5);
  for (int it = 0; it < 100; ++it) {
    Ordinal a = natural_sum(omega_pow(ord_fin((unsigned long long)(rng() % 2)), Nat(1 + rng() % 2)),
                            ord_fin((unsigned long long)(rng() % 3)));
    if (a.is_zero()) continue;
    Nat x = Nat(rng() % 4);
    Ordinal a2;
    Nat x2;
    if (a.is_successor()) {
      a2 = predecessor_of_successor(a);
      x2 = x + 1;
    } else {
      a2 = fundamental_sequence(a, x);
      x2 = x;
    }
    auto lhs = hardy_eval(succ, a, x, 1u << 22);
    auto rhs = hardy_eval(succ, a2, x2, 1u << 22);
    REQUIRE_FALSE(lhs.exhausted());
    REQUIRE_FALSE(rhs.exhausted());
    CHECK(*lhs.value == *rhs.value);
  }
}

TEST_CASE("control function attributes") {
  CHECK_NOTHROW(ControlFunction::doubling());
  CHECK_NOTHROW(ControlFunction::successor());
  CHECK_NOTHROW(ControlFunction::norm_product(ControlFunction::doubling()));
  // successor is not superadditive; declaring it so must fail the sampling check
  CHECK_THROWS_AS(ControlFunction::make("bad", [](const Nat& x) { return x + 1; }, true, true),
                  std::invalid_argument);
  CHECK_FALSE(ControlFunction::successor().superadditive);
  auto h = ControlFunction::norm_product(ControlFunction::doubling());
  CHECK(h(Nat(3)) == Nat(18));
}

TEST_CASE("parse and render") {
  CHECK(render_ordinal(W("w^(w^2+1)*3 + w*2 + 5")) == "w^(w^2+1)*3+w*2+5");
  CHECK(W("0") == ord_zero());
  CHECK(W("1 + w") == W("w+1"));
  CHECK(render_ordinal(W("w^w")) == "w^w");
  CHECK(render_ordinal(W("w^1")) == "w");
  CHECK_THROWS_AS(W("w^"), ParseError);
  CHECK_THROWS_AS(W("w+"), ParseError);
  CHECK_THROWS_AS(W("x"), ParseError);

  std::mt19937 rng(11);
  for (int it = 0; it < 500; ++it) {
    Ordinal a = random_ordinal(rng, 2);
    CHECK(parse_ordinal(render_ordinal(a)) == a);
  }
}
