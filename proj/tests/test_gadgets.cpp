#include <nrcs/gadgets.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace nrcs;

namespace {

Ordinal W(const std::string& s) { return parse_ordinal(s); }

Config T(const std::string& s) { return parse_tree(s); }

PerfectRun run_and_check(const GadgetMachine& gm, const Config& input, Config& out) {
  PerfectRun plan = synthesize_perfect_run(gm, input);
  out = run_perfect(gm.machine, input, plan);
  return plan;
}

}  // namespace

TEST_CASE("copy(1) perfect run") {
  auto gm = build_gadget({GadgetType::Copy, {1, 2}});
  Config input = T("start_copy(mrkd@w1,w@w0)");
  Config out;
  run_and_check(gm, input, out);
  CHECK(out == T("end_copy(w@w1,cpd@w1,w@w0)"));
  CHECK(validate_encoder(EncoderCheck::PerfectCopy, gm.kind.params, input, out));
  CHECK(validate_encoder(EncoderCheck::LossyCopy, gm.kind.params, input, out));

  // a lossy output with a shrunken copy still passes the lossy predicate
  CHECK(validate_encoder(EncoderCheck::LossyCopy, gm.kind.params, input,
                         T("end_copy(w@w0,cpd@w1,w@w0)")));
  CHECK_FALSE(validate_encoder(EncoderCheck::PerfectCopy, gm.kind.params, input,
                               T("end_copy(w@w0,cpd@w1,w@w0)")));
  // an enlarged copy violates containment
  CHECK_FALSE(validate_encoder(EncoderCheck::LossyCopy, gm.kind.params, input,
                               T("end_copy(w@w1,cpd@w2,w@w0)")));
}

TEST_CASE("copy(2) perfect run") {
  auto gm = build_gadget({GadgetType::Copy, {2, 2}});
  // marked subtree encodes exponent w+1: mrkd(w@w1, w@w0)
  Config input = T("start_copy(mrkd(w@w1,w@w0),w)");
  Config out;
  run_and_check(gm, input, out);
  CHECK(out == T("end_copy(w(w@w1,w@w0),cpd(w@w1,w@w0),w)"));
  CHECK(validate_encoder(EncoderCheck::PerfectCopy, gm.kind.params, input, out));
}

TEST_CASE("comparator(1) perfect runs") {
  auto gm = build_gadget({GadgetType::Comparator, {1, 2}});
  SECTION("strict") {
    Config input = T("start_cmp(A_cmp@w0,B_cmp@w1,w@w2)");
    Config out;
    run_and_check(gm, input, out);
    CHECK(out == T("end_cmp(small_cmp@w0,big_cmp@w1,w@w2)"));
    CHECK(validate_encoder(EncoderCheck::PerfectCompared, gm.kind.params, input, out));
  }
  SECTION("equal") {
    Config input = T("start_cmp(A_cmp@w1,B_cmp@w1)");
    Config out;
    run_and_check(gm, input, out);
    CHECK(out == T("end_cmp(equal_cmp@w1,equal_cmp@w1)"));
    CHECK(validate_encoder(EncoderCheck::PerfectCompared, gm.kind.params, input, out));
  }
}

TEST_CASE("smallest(1) perfect runs") {
  auto gm = build_gadget({GadgetType::Smallest, {1, 2}});
  SECTION("two children") {
    Config input = T("start_sm(w@w1,w@w0)");
    Config out;
    run_and_check(gm, input, out);
    CHECK(out == T("end_sm(w@w1,smallest@w0)"));
    CHECK(validate_encoder(EncoderCheck::PerfectSmallest, gm.kind.params, input, out));
  }
  SECTION("single child") {
    Config input = T("start_sm(w@w1)");
    Config out;
    run_and_check(gm, input, out);
    CHECK(out == T("end_sm(smallest@w1)"));
    CHECK(validate_encoder(EncoderCheck::PerfectSmallest, gm.kind.params, input, out));
  }
  SECTION("with budget tokens around") {
    Config input = T("start_sm(w@w2,w@w1,w@w1,#@w0)");
    Config out;
    run_and_check(gm, input, out);
    CHECK(validate_encoder(EncoderCheck::PerfectSmallest, gm.kind.params, input, out));
    // the marked child must be one of the w1 children
    bool found = false;
    for (const auto& c : out.children())
      if (c.label() == Label("smallest", 1)) found = true;
    CHECK(found);
  }
}

TEST_CASE("biggest(1) perfect runs") {
  auto gm = build_gadget({GadgetType::Biggest, {1, 2}});
  Config input = T("start_big(w@w1,w@w0)");
  Config out;
  run_and_check(gm, input, out);
  CHECK(out == T("end_big(biggest@w1,w@w0)"));
  CHECK(validate_encoder(EncoderCheck::PerfectBiggest, gm.kind.params, input, out));
}

TEST_CASE("smallest verdicts refute wrong markings") {
  EncodingParams p{1, 2};
  Config input = T("start_sm(w@w1,w@w0)");
  CHECK_FALSE(validate_encoder(EncoderCheck::LossySmallest, p, input, T("end_sm(smallest@w1,w@w0)")));
  CHECK_FALSE(validate_encoder(EncoderCheck::LossySmallest, p, input,
                               T("end_sm(w@w1,smallest@w0,w@w0)")));  // extra node
  CHECK(validate_encoder(EncoderCheck::LossySmallest, p, input, T("end_sm(smallest@w1)")));
}

TEST_CASE("build determinism") {
  for (GadgetType t : {GadgetType::Copy, GadgetType::Comparator, GadgetType::Smallest,
                       GadgetType::Biggest, GadgetType::HardyForward, GadgetType::HardyBackward}) {
    auto a = build_gadget({t, {1, 2}});
    auto b = build_gadget({t, {1, 2}});
    CHECK(render_machine_file({a.machine, std::nullopt, std::nullopt}) ==
          render_machine_file({b.machine, std::nullopt, std::nullopt}));
  }
}

TEST_CASE("inductive wiring") {
  gad::GadgetLibrary lib(2);
  // smallest(k) and biggest(k) contain the comparator(k) transitions verbatim
  auto contains = [](const std::vector<Transition>& big, const std::vector<Transition>& small,
                     const gad::Labels& prefix) {
    std::set<Transition> pool(big.begin(), big.end());
    for (const auto& t : small)
      if (!pool.count(gad::prefixed(t, prefix))) return false;
    return true;
  };
  CHECK(contains(lib.smallest_rel(1), lib.comparator_rel(1), {}));
  CHECK(contains(lib.biggest_rel(1), lib.comparator_rel(1), {}));
  CHECK(contains(lib.smallest_rel(2), lib.comparator_rel(2), {}));
  // comparator(k+1) embeds biggest(k) under both side prefixes and the
  // comparator(k) via the recheck phases
  CHECK(contains(lib.comparator_rel(2), lib.biggest_rel(1), {Label("cm.A")}));
  CHECK(contains(lib.comparator_rel(2), lib.biggest_rel(1), {Label("cm.B")}));
  CHECK(contains(lib.comparator_rel(2), lib.comparator_rel(1), {Label("cm.kA")}));
  CHECK(contains(lib.comparator_rel(2), lib.copy_rel(1, true), {Label("cm.A")}));
}

TEST_CASE("hardy forward machine contains the successor transitions") {
  auto gm = build_gadget({GadgetType::HardyForward, {1, 2}});
  bool has_pair = false, has_hash = false;
  for (const auto& t : gm.machine.transitions) {
    if (t.kind != Transition::Kind::Update) continue;
    if (t.src.size() == 2 && t.src[0] == Label(roles::w) && t.src[1].name == roles::w &&
        t.dst.size() == 1 && t.dst[0] == Label("f.succ"))
      has_pair = true;
    if (t.src.size() == 1 && t.src[0] == Label("f.succ") && t.dst.size() == 2 &&
        t.dst[0] == Label(roles::w) && t.dst[1].name == roles::hash)
      has_hash = true;
  }
  CHECK(has_pair);
  CHECK(has_hash);
}

TEST_CASE("hardy backward machine contains the inverse successor transition") {
  auto gm = build_gadget({GadgetType::HardyBackward, {1, 2}});
  bool found = false;
  for (const auto& t : gm.machine.transitions)
    if (t.kind == Transition::Kind::Update && t.src.size() == 2 && t.src[0] == Label(roles::w) &&
        t.src[1].name == roles::hash && t.dst.size() == 2 && t.dst[1].name == roles::w)
      found = true;
  CHECK(found);
}

TEST_CASE("hardy forward perfect run folds the rewriting") {
  auto gm = build_gadget({GadgetType::HardyForward, {1, 2}});
  EncodingParams p{1, 2};
  Config input = make_hardy_config(W("w"), 2ULL, p);
  Config out;
  run_and_check(gm, input, out);
  CHECK(out == make_hardy_config(W("0"), 4ULL, p));
}

TEST_CASE("hardy backward perfect run inverts the rewriting") {
  auto gm = build_gadget({GadgetType::HardyBackward, {1, 2}});
  EncodingParams p{1, 2};
  Config input = make_hardy_config(W("2"), 2ULL, p);
  auto plan = synthesize_backward_run(gm, input, W("w"), Nat(2));
  Config out = run_perfect(gm.machine, input, plan);
  CHECK(out == make_hardy_config(W("w"), 2ULL, p));

  // a full inverse chain through a successor step as well
  Config input2 = make_hardy_config(W("0"), 4ULL, p);
  auto plan2 = synthesize_backward_run(gm, input2, W("w"), Nat(2));
  Config out2 = run_perfect(gm.machine, input2, plan2);
  CHECK(out2 == make_hardy_config(W("w"), 2ULL, p));
}

TEST_CASE("soundness search on tiny gadget inputs") {
  SECTION("smallest(1)") {
    auto gm = build_gadget({GadgetType::Smallest, {1, 2}});
    auto rep = check_soundness_by_search(gm, T("start_sm(w@w1,w@w0)"), 200000);
    CHECK_FALSE(rep.cutoff);
    CHECK(rep.terminals > 0);
    CHECK(rep.ok());
  }
  SECTION("comparator(1)") {
    auto gm = build_gadget({GadgetType::Comparator, {1, 2}});
    auto rep = check_soundness_by_search(gm, T("start_cmp(A_cmp@w2,B_cmp@w1)"), 200000);
    CHECK_FALSE(rep.cutoff);
    CHECK(rep.ok());
  }
  SECTION("cutoff reporting") {
    auto gm = build_gadget({GadgetType::HardyForward, {1, 2}});
    auto rep = check_soundness_by_search(gm, make_hardy_config(W("w"), 2ULL, {1, 2}), 2);
    CHECK(rep.cutoff);
  }
}
