#include <nrcs/machine.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace nrcs;

namespace {

const char* kExample21 =
    "# running example machine\n"
    "nrcs k=2\n"
    "states q0 q1 q2 q3\n"
    "update q0,q1 -> q1\n"
    "update q1 -> q0,q1,q2\n"
    "reset  q0 [q1] -> q3\n"
    "init   q0(q1(q3),q2,q1(q2,q2))\n"
    "target q3(q2)\n";

Nrcs random_machine(std::mt19937& rng, unsigned k, int nstates, int ntrans) {
  Nrcs m;
  m.k = k;
  std::vector<Label> labs;
  for (int i = 0; i < nstates; ++i) {
    labs.emplace_back("s" + std::to_string(i));
    m.add_state(labs.back());
  }
  auto rand_lab = [&]() { return labs[rng() % labs.size()]; };
  auto rand_path = [&](int maxlen) {
    std::vector<Label> p;
    int len = 1 + static_cast<int>(rng() % static_cast<unsigned>(maxlen));
    for (int i = 0; i < len; ++i) p.push_back(rand_lab());
    return p;
  };
  for (int i = 0; i < ntrans; ++i) {
    if (rng() % 4 == 0) {
      auto src = rand_path(static_cast<int>(k));
      std::vector<Label> dst;
      for (std::size_t j = 0; j < src.size(); ++j) dst.push_back(rand_lab());
      m.add_transition(Transition::reset(src, rand_lab(), dst));
    } else {
      m.add_transition(Transition::update(rand_path(static_cast<int>(k) + 1),
                                          rand_path(static_cast<int>(k) + 1)));
    }
  }
  return m;
}

Config random_config(std::mt19937& rng, const std::vector<Label>& labs, int max_nodes, int height) {
  Label l = labs[rng() % labs.size()];
  std::vector<Config> kids;
  int budget = max_nodes - 1;
  while (height > 0 && budget > 0 && rng() % 3 != 0) {
    int sub = 1 + static_cast<int>(rng() % static_cast<unsigned>(budget));
    kids.push_back(random_config(rng, labs, sub, height - 1));
    budget -= kids.back().size();
  }
  return Config(l, std::move(kids));
}

}  // namespace

TEST_CASE("canonical configs") {
  Config a = parse_tree("q0(q1(q3),q2,q1(q2,q2))");
  Config b = parse_tree("q0(q2, q1(q2, q2), q1(q3))");
  CHECK(a == b);
  CHECK(a.size() == 7);
  CHECK(a.height() == 2);
  CHECK(parse_tree(render_tree(a)) == a);
  CHECK_THROWS_AS(parse_tree("q0("), ParseError);
  Config c = parse_tree("w(w@w2,x@w0)");
  CHECK(c.children()[0].label() == Label("w", 2));
  CHECK(render_tree(c) == "w(w@w2,x@w0)");
}

TEST_CASE("example machine parses and renders") {
  MachineFile mf = parse_machine_file(kExample21);
  CHECK(mf.machine.k == 2);
  CHECK(mf.machine.states.size() == 4);
  CHECK(mf.machine.transitions.size() == 3);
  REQUIRE(mf.init.has_value());
  REQUIRE(mf.target.has_value());
  MachineFile back = parse_machine_file(render_machine_file(mf));
  CHECK(back.machine.k == mf.machine.k);
  CHECK(back.machine.states == mf.machine.states);
  CHECK(back.machine.transitions == mf.machine.transitions);
  CHECK(*back.init == *mf.init);
  CHECK(*back.target == *mf.target);
}

TEST_CASE("figure-one run") {
  MachineFile mf = parse_machine_file(kExample21);
  const Nrcs& m = mf.machine;
  Config t1 = *mf.init;

  // step 1: (q0,q1) -> (q1) removes one whole q1-branch and renames the root
  const Transition& tr1 = m.transitions[0];
  auto anchors = matching_anchors(t1, tr1.src);
  REQUIRE(anchors.size() == 2);
  Config t2 = apply_at(m, t1, tr1, anchors[0]);
  Config t2b = apply_at(m, t1, tr1, anchors[1]);
  Config expect2 = parse_tree("q1(q1(q3),q2)");
  bool first = t2 == expect2, second = t2b == expect2;
  CHECK((first || second));
  Config got2 = first ? t2 : t2b;

  // step 2: (q1) -> (q0,q1,q2) grows a fresh chain below the root
  const Transition& tr2 = m.transitions[1];
  Config t3 = apply_at(m, got2, tr2, {});
  CHECK(t3 == parse_tree("q0(q1(q3),q2,q1(q2))"));

  // step 3: reset q1 under the root
  const Transition& tr3 = m.transitions[2];
  Config t4 = apply_at(m, t3, tr3, {});
  CHECK(t4 == parse_tree("q3(q2)"));
  CHECK(leq_induced(*mf.target, t4));
}

TEST_CASE("successor enumeration") {
  MachineFile mf = parse_machine_file(kExample21);
  Config single_q0(Label("q0"));
  // only the reset matches a bare q0 root
  auto steps = successors(mf.machine, single_q0);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].result == Config(Label("q3")));

  Nrcs empty;
  empty.k = 2;
  empty.add_state(Label("q0"));
  CHECK(successors(empty, single_q0).empty());

  auto set2 = successor_set(mf.machine, parse_tree("q1(q1(q3),q2)"));
  CHECK(set2.count(parse_tree("q0(q1(q3),q2,q1(q2))")) == 1);
}

TEST_CASE("renaming a single node") {
  Nrcs m;
  m.k = 1;
  auto t = Transition::update({Label("q")}, {Label("q'")});
  m.add_transition(t);
  CHECK(apply_at(m, Config(Label("q")), t, {}) == Config(Label("q'")));
}

TEST_CASE("anchor mismatch and height bound violations") {
  Nrcs m;
  m.k = 1;
  auto t = Transition::update({Label("a")}, {Label("b")});
  m.add_transition(t);
  CHECK_THROWS_AS(apply_at(m, Config(Label("c")), t, {}), std::invalid_argument);
  CHECK_THROWS_AS(m.add_transition(Transition::update({Label("a")}, {Label("a"), Label("a"), Label("a")})),
                  std::invalid_argument);
  CHECK_THROWS_AS(m.add_transition(Transition::reset({Label("a")}, Label("b"), {Label("c"), Label("d")})),
                  std::invalid_argument);
}

TEST_CASE("induced subgraph order") {
  CHECK(leq_induced(parse_tree("q0"), parse_tree("q0(q1,q2)")));
  CHECK_FALSE(leq_induced(parse_tree("q0(q1)"), parse_tree("q0(q2)")));
  CHECK(leq_induced(parse_tree("q0(q1(q3),q2)"), parse_tree("q0(q1(q3),q2,q1(q2,q2))")));
  CHECK_FALSE(leq_induced(parse_tree("q0(q1,q1)"), parse_tree("q0(q1)")));
  // reflexive + transitive on random configs
  std::mt19937 rng(7);
  std::vector<Label> labs{Label("a"), Label("b")};
  std::vector<Config> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(random_config(rng, labs, 5, 2));
  for (const auto& c : pool) CHECK(leq_induced(c, c));
  for (const auto& a : pool)
    for (const auto& b : pool)
      for (const auto& c : pool)
        if (leq_induced(a, b) && leq_induced(b, c)) CHECK(leq_induced(a, c));
}

TEST_CASE("embedding witness lifts anchors") {
  Config c = parse_tree("q0(q1(q3),q2)");
  Config d = parse_tree("q0(q2,q1(q2,q3),q1)");
  auto w = leq_induced_witness(c, d);
  REQUIRE(w.has_value());
  // every witness entry maps equally-labelled nodes
  for (const auto& [pc, pd] : *w) CHECK(c.at(pc).label() == d.at(pd).label());
}

TEST_CASE("compatibility property") {
  // C ->t C' and C <=is D yield D ->t D' with C' <=is D', via the witness
  std::mt19937 rng(99);
  std::vector<Label> labs{Label("s0"), Label("s1"), Label("s2")};
  int tested = 0;
  while (tested < 200) {
    Nrcs m = random_machine(rng, 2, 3, 4);
    Config c = random_config(rng, labs, 4, 2);
    Config d = c;
    // grow d by grafting extra subtrees so that c <= d
    for (int g = 0; g < 2; ++g) {
      Config extra = random_config(rng, labs, 3, static_cast<int>(rng() % 2));
      std::vector<Config> kids = d.children();
      kids.push_back(extra);
      d = Config(d.label(), kids);
    }
    REQUIRE(leq_induced(c, d));
    auto steps = successors(m, c);
    if (steps.empty()) continue;
    auto w = leq_induced_witness(c, d);
    REQUIRE(w.has_value());
    for (const auto& st : steps) {
      ++tested;
      const Transition& t = m.transitions[static_cast<std::size_t>(st.transition)];
      // lift the anchor through the embedding
      Config::Path lifted = w->at(st.anchor);
      Config d2 = apply_at(m, d, t, lifted);
      CHECK(leq_induced(st.result, d2));
    }
  }
}

TEST_CASE("lossy steps subsume exact steps") {
  MachineFile mf = parse_machine_file(kExample21);
  Config c = *mf.init;
  auto exact = successor_set(mf.machine, c);
  auto lossy = lossy_successor_set(mf.machine, c);
  for (const auto& s : exact) CHECK(lossy.count(s) == 1);
  CHECK(lossy.size() >= exact.size());

  // dropping a subtree can enable a transition
  Nrcs m;
  m.k = 1;
  auto t = Transition::update({Label("q0")}, {Label("ok")});
  m.add_transition(t);
  m.add_state(Label("q1"));
  Config blocked = parse_tree("q0(q1)");
  CHECK(matching_anchors(blocked, t.src).size() == 1);  // anchors only check the path
  auto ls = lossy_step(m, blocked, t);
  CHECK(ls.count(Config(Label("ok"))) == 1);

  Nrcs none;
  none.k = 1;
  none.add_state(Label("q0"));
  none.add_state(Label("q1"));
  CHECK(lossy_successor_set(none, blocked).empty());
}

TEST_CASE("generalized reset expansion") {
  // |S| = 1 collapses to an ordinary reset
  auto t1 = Transition::generalized_reset({Label("p")}, {Label("a")}, {Label("q")});
  auto exp1 = expand_generalized_reset(t1, [](int i) { return Label("gr" + std::to_string(i)); });
  REQUIRE(exp1.size() == 1);
  CHECK(exp1[0] == Transition::reset({Label("p")}, Label("a"), {Label("q")}));

  // |S| = 2 chains through one fresh labelling
  auto t2 = Transition::generalized_reset({Label("p")}, {Label("a"), Label("b")}, {Label("q")});
  auto exp2 = expand_generalized_reset(t2, [](int i) { return Label("gr" + std::to_string(i)); });
  REQUIRE(exp2.size() == 2);
  CHECK(exp2[0] == Transition::reset({Label("p")}, Label("a"), {Label("gr1")}));
  CHECK(exp2[1] == Transition::reset({Label("gr1")}, Label("b"), {Label("q")}));

  CHECK_THROWS_AS(expand_generalized_reset(Transition::reset({Label("p")}, Label("a"), {Label("q")}),
                                           [](int) { return Label("x"); }),
                  std::invalid_argument);
}

TEST_CASE("generalized reset one-shot agrees with the chain") {
  // exhaustive over configurations with <= 4 nodes over 3 labels
  std::vector<Label> labs{Label("a"), Label("b"), Label("p")};
  std::vector<Config> all;
  std::function<std::vector<Config>(int, int)> gen = [&](int nodes, int height) {
    std::vector<Config> out;
    if (nodes <= 0) return out;
    for (const auto& l : labs) {
      if (nodes == 1 || height == 0) {
        out.push_back(Config(l));
        continue;
      }
      // distribute remaining nodes among up to three children
      std::vector<std::vector<Config>> parts{{}};
      std::function<void(int, std::vector<Config>&)> fill = [&](int left, std::vector<Config>& kids) {
        all.push_back(Config(l, kids));
        for (int take = 1; take <= left; ++take)
          for (const auto& sub : gen(take, height - 1)) {
            kids.push_back(sub);
            fill(left - take, kids);
            kids.pop_back();
          }
      };
      std::vector<Config> kids;
      fill(nodes - 1, kids);
    }
    return std::vector<Config>{};  // results accumulate in `all`
  };
  gen(4, 2);
  std::set<Config> uniq(all.begin(), all.end());

  for (std::size_t subset = 1; subset < 8; ++subset) {
    std::vector<Label> S;
    for (std::size_t bit = 0; bit < 3; ++bit)
      if (subset & (1u << bit)) S.push_back(labs[bit]);

    // one-shot machine
    Nrcs one;
    one.k = 2;
    auto gr = Transition::generalized_reset({Label("p")}, S, {Label("done")});
    one.add_transition(gr);
    for (const auto& l : labs) one.add_state(l);

    // chained machine
    Nrcs chain;
    chain.k = 2;
    auto parts = expand_generalized_reset(gr, [](int i) { return Label("f" + std::to_string(i)); });
    for (auto& p : parts) chain.add_transition(p);
    for (const auto& l : labs) chain.add_state(l);

    for (const auto& c : uniq) {
      std::set<Config> oneshot = successor_set(one, c);
      // run the chain to completion from c
      std::set<Config> frontier{c};
      for (const auto& p : parts) {
        std::set<Config> next;
        for (const auto& f : frontier)
          for (auto& anchor : matching_anchors(f, p.src)) next.insert(apply_at(chain, f, p, anchor));
        frontier = std::move(next);
      }
      CHECK(oneshot == frontier);
    }
  }
}

TEST_CASE("height preservation") {
  std::mt19937 rng(1234);
  std::vector<Label> labs{Label("s0"), Label("s1"), Label("s2")};
  for (int it = 0; it < 150; ++it) {
    Nrcs m = random_machine(rng, 2, 3, 5);
    Config c = random_config(rng, labs, 5, 2);
    for (const auto& st : successors(m, c)) CHECK(st.result.height() <= 2);
  }
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH(parse_machine_file("nrcs k=2\nupdate q0 ->\n"),
                    Catch::Matchers::ContainsSubstring("line 2"));
  CHECK_THROWS_AS(parse_machine_file("states q0\n"), ParseError);
  CHECK_THROWS_AS(parse_machine_file("nrcs k=0\n"), ParseError);
}
