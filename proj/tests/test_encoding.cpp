#include <nrcs/encoding.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace nrcs;

namespace {

Ordinal W(const std::string& s) { return parse_ordinal(s); }

// w*b + c for the k=1 pool
Ordinal wbc(unsigned b, unsigned c) {
  return natural_sum(omega_pow(ord_fin(1ULL), Nat(b)), ord_fin((unsigned long long)c));
}

// all alpha <= (Omega_2)_2 = w^2 with at most `cap` CNF positions
std::vector<Ordinal> pool_k1() {
  std::vector<Ordinal> pool;
  for (unsigned b = 0; b <= 4; ++b)
    for (unsigned c = 0; c + b <= 4; ++c)
      if (b + c > 0) pool.push_back(wbc(b, c));
  pool.push_back(W("w^2"));
  return pool;
}

}  // namespace

TEST_CASE("encoding bound") {
  CHECK(encoding_bound({1, 2}) == W("w^2"));
  CHECK(encoding_bound({2, 2}) == W("w^(w^2)"));
  CHECK(encoding_bound({1, 1}) == W("w"));
  CHECK_THROWS_AS(EncodingParams(0, 1), std::invalid_argument);
}

TEST_CASE("encode examples") {
  EncodingParams p12{1, 2};
  CHECK(encode_tree(W("1"), p12) == parse_tree("w(w@w0)"));
  CHECK(encode_tree(W("w+1"), p12) == parse_tree("w(w@w1,w@w0)"));
  CHECK(encode_tree(W("w"), {2, 2}) == parse_tree("w(w(w@w0))"));
  CHECK(encode_tree(W("w^2"), p12) == parse_tree("w(w@w2)"));
  CHECK_THROWS_AS(encode_tree(W("0"), p12), std::invalid_argument);
  CHECK_THROWS_AS(encode_tree(W("w^3"), p12), std::invalid_argument);
  CHECK_THROWS_AS(encode_tree(W("w^2+1"), p12), std::invalid_argument);
}

TEST_CASE("decode examples") {
  EncodingParams p12{1, 2};
  CHECK(decode_tree(parse_tree("w(w@w0)"), p12) == W("1"));
  CHECK(decode_tree(parse_tree("w(w@w1,w@w0)"), p12) == W("w+1"));
  // interior names are irrelevant
  CHECK(decode_tree(parse_tree("start_sm(x@w1,y@w0)"), p12) == W("w+1"));
  CHECK(decode_tree(parse_tree("w(w(w@w0))"), {2, 2}) == W("w"));
  // malformed annotations
  CHECK_THROWS_AS(decode_tree(parse_tree("w(w@w1(w@w0))"), p12), std::invalid_argument);
  CHECK_THROWS_AS(decode_tree(parse_tree("w(w@w1(w))"), {2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(decode_tree(parse_tree("w(w(w))"), p12), std::invalid_argument);
}

TEST_CASE("roundtrips") {
  EncodingParams p12{1, 2};
  for (const auto& a : pool_k1()) CHECK(decode_tree(encode_tree(a, p12), p12) == a);
  EncodingParams p22{2, 2};
  for (const char* s : {"1", "2", "w", "w+1", "w*2", "w^2", "w^2+w+1", "w^w", "w^(w+1)", "w^(w^2)"})
    CHECK(decode_tree(encode_tree(W(s), p22), p22) == W(s));
}

TEST_CASE("hardy configurations") {
  EncodingParams p12{1, 2};
  CHECK(make_hardy_config(W("0"), 2ULL, p12) == parse_tree("w(#@w0,#@w0)"));
  CHECK(make_hardy_config(W("1"), 0ULL, p12) == parse_tree("w(w@w0)"));
  CHECK(make_hardy_config(W("w+1"), 1ULL, p12) == parse_tree("w(w@w1,w@w0,#@w0)"));
  // budget tokens below the last level stay bare
  CHECK(make_hardy_config(W("w"), 2ULL, {2, 2}) == parse_tree("w(w(w@w0),#,#)"));

  auto [a, n] = decode_hardy_config(make_hardy_config(W("w+1"), 3ULL, p12), p12);
  CHECK(a == W("w+1"));
  CHECK(n == Nat(3));
}

TEST_CASE("hardy rewriting") {
  EncodingParams p12{1, 2};
  HardyState s{W("3"), 5, p12};
  HardyState s2 = hardy_rewrite(s, p12);
  CHECK(s2.alpha == W("2"));
  CHECK(s2.n == Nat(6));

  HardyState l{W("w"), 4, p12};
  HardyState l2 = hardy_rewrite(l, p12);
  CHECK(l2.alpha == W("4"));
  CHECK(l2.n == Nat(4));

  CHECK(hardy_rewrite_fold({W("w^2"), 3, p12}, p12) == Nat(24));
  CHECK_THROWS_AS(hardy_rewrite({W("0"), 1, p12}, p12), std::invalid_argument);
}

TEST_CASE("rewrite folding agrees with the evaluator") {
  EncodingParams p12{1, 2};
  auto succ = ControlFunction::successor();
  for (const auto& a : pool_k1()) {
    for (unsigned long long n = 0; n <= 3; ++n) {
      Nat folded = hardy_rewrite_fold({a, n, p12}, p12);
      auto eval = hardy_eval(succ, a, n, 1u << 22);
      REQUIRE_FALSE(eval.exhausted());
      CHECK(folded == *eval.value);
    }
  }
}

TEST_CASE("structural order refines the ordinal order and the Hardy value") {
  EncodingParams p12{1, 2};
  auto succ = ControlFunction::successor();
  auto pool = pool_k1();
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      if (!leq_induced(encode_tree(a, p12), encode_tree(b, p12))) continue;
      CHECK(a <= b);
      for (unsigned long long n = 0; n <= 4; ++n)
        for (unsigned long long n2 = n; n2 <= 4; ++n2) {
          auto ha = hardy_eval(succ, a, n, 1u << 22);
          auto hb = hardy_eval(succ, b, n2, 1u << 22);
          REQUIRE_FALSE(ha.exhausted());
          REQUIRE_FALSE(hb.exhausted());
          CHECK(*ha.value <= *hb.value);
        }
    }
  }
}
