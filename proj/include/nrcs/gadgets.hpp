#ifndef NRCS_GADGETS_HPP
#define NRCS_GADGETS_HPP

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nrcs/coverability.hpp>
#include <nrcs/encoding.hpp>
#include <nrcs/machine.hpp>

namespace nrcs {

enum class GadgetType { Copy, Comparator, Smallest, Biggest, HardyForward, HardyBackward };

inline std::string gadget_type_name(GadgetType t) {
  switch (t) {
    case GadgetType::Copy: return "copy";
    case GadgetType::Comparator: return "comparator";
    case GadgetType::Smallest: return "smallest";
    case GadgetType::Biggest: return "biggest";
    case GadgetType::HardyForward: return "hardy-fwd";
    case GadgetType::HardyBackward: return "hardy-bwd";
  }
  return "?";
}

inline std::optional<GadgetType> gadget_type_from_name(const std::string& s) {
  for (GadgetType t : {GadgetType::Copy, GadgetType::Comparator, GadgetType::Smallest,
                       GadgetType::Biggest, GadgetType::HardyForward, GadgetType::HardyBackward})
    if (gadget_type_name(t) == s) return t;
  return std::nullopt;
}

struct GadgetKind {
  GadgetType type;
  EncodingParams params;  // params.k is the gadget order
};

struct GadgetMachine {
  GadgetKind kind;
  Nrcs machine;
  std::map<std::string, std::string> roles;
};

namespace roles {
inline constexpr const char* start_sm = "start_sm";
inline constexpr const char* end_sm = "end_sm";
inline constexpr const char* smallest = "smallest";
inline constexpr const char* start_big = "start_big";
inline constexpr const char* end_big = "end_big";
inline constexpr const char* biggest = "biggest";
inline constexpr const char* start_copy = "start_copy";
inline constexpr const char* end_copy = "end_copy";
inline constexpr const char* mrkd = "mrkd";
inline constexpr const char* cpd = "cpd";
inline constexpr const char* start_cmp = "start_cmp";
inline constexpr const char* end_cmp = "end_cmp";
inline constexpr const char* A_cmp = "A_cmp";
inline constexpr const char* B_cmp = "B_cmp";
inline constexpr const char* big_cmp = "big_cmp";
inline constexpr const char* small_cmp = "small_cmp";
inline constexpr const char* equal_cmp = "equal_cmp";
inline constexpr const char* succ = "succ";
inline constexpr const char* w = "w";
inline constexpr const char* wP = "w'";    // siblings set aside by a gadget
inline constexpr const char* wPP = "w''";  // pairwise-retired comparator copies
inline constexpr const char* hash = "#";
inline constexpr const char* hashP = "#'";
}  // namespace roles

inline std::string a_tag(const std::string& name) { return "A~" + name; }

namespace gad {

using Labels = std::vector<Label>;

inline std::string num(const std::string& base, unsigned i) { return base + std::to_string(i); }

inline Transition prefixed(const Transition& t, const Labels& prefix) {
  Transition out = t;
  out.src.insert(out.src.begin(), prefix.begin(), prefix.end());
  out.dst.insert(out.dst.begin(), prefix.begin(), prefix.end());
  return out;
}

// ---------------------------------------------------------------------------
// The gadget library builds, per gadget order, the transition set relative to
// the gadget root. Relative sets are produced in a scratch space whose last
// level equals the gadget order, so last-level annotation families land at
// the right place when a set is inlined deeper via `prefixed`.
// ---------------------------------------------------------------------------

class GadgetLibrary {
public:
  explicit GadgetLibrary(unsigned ell) : ell_(ell) {}

  unsigned ell() const { return ell_; }

  const std::vector<Transition>& copy_rel(unsigned m, bool leave_prime) {
    return cached("copy:" + std::to_string(m) + (leave_prime ? ":p" : ":w"),
                  [&](std::vector<Transition>& out) { build_copy(m, leave_prime, out); });
  }

  const std::vector<Transition>& comparator_rel(unsigned m) {
    return cached("cmp:" + std::to_string(m),
                  [&](std::vector<Transition>& out) { build_comparator(m, out); });
  }

  const std::vector<Transition>& comparator_tagged_rel(unsigned m) {
    return cached("cmt:" + std::to_string(m), [&](std::vector<Transition>& out) {
      const auto& base = comparator_rel(m);
      out = base;
      for (const auto& t : base) {
        if (t.src.size() < 2) continue;
        Transition v = t;
        if (v.src[1].name != roles::A_cmp) v.src[1] = Label(a_tag(v.src[1].name), v.src[1].annotation);
        if (v.dst.size() >= 2) v.dst[1] = Label(a_tag(v.dst[1].name), v.dst[1].annotation);
        out.push_back(v);
      }
    });
  }

  const std::vector<Transition>& bigcheck_rel(unsigned m) {
    return cached("bc:" + std::to_string(m),
                  [&](std::vector<Transition>& out) { build_bigcheck(m, out); });
  }

  const std::vector<Transition>& biggest_rel(unsigned m) {
    return cached("bg:" + std::to_string(m),
                  [&](std::vector<Transition>& out) { build_biggest(m, out); });
  }

  const std::vector<Transition>& smallest_rel(unsigned m) {
    return cached("sm:" + std::to_string(m),
                  [&](std::vector<Transition>& out) { build_smallest(m, out); });
  }

  // ---- symbolic helpers; `m` plays the role of the last level ----

  // One concrete family member; `a` is the source-side annotation.
  Transition make_update(unsigned m, const std::vector<std::string>& src,
                         const std::vector<std::string>& dst, unsigned a = 0) const {
    std::size_t L = std::max(src.size(), dst.size()) - 1;
    auto plain = [](const std::vector<std::string>& v) {
      Labels out;
      for (const auto& s : v) out.emplace_back(s);
      return out;
    };
    if (L < m) return Transition::update(plain(src), plain(dst));
    if (L == m) {
      Labels s = plain(src), d = plain(dst);
      bool srcK = src.size() - 1 == m, dstK = dst.size() - 1 == m;
      if (srcK) s.back() = Label(src.back(), a);
      if (dstK) d.back() = Label(dst.back(), srcK ? a : 0);
      return Transition::update(std::move(s), std::move(d));
    }
    if (L != m + 1) throw std::logic_error("transition below the absorbed level");
    if (dst.size() == L + 1) {
      if (dst.back() != roles::w) throw std::logic_error("absorbed child must be w");
      Labels s = plain(src), d = plain({dst.begin(), dst.end() - 1});
      s.back() = Label(src.back(), a);
      d.back() = Label(dst[m], a + 1);
      return Transition::update(std::move(s), std::move(d));
    }
    if (src.back() != roles::w) throw std::logic_error("absorbed child must be w");
    Labels s = plain({src.begin(), src.end() - 1}), d = plain(dst);
    s.back() = Label(src[m], a);
    if (dst.size() - 1 == m) d.back() = Label(dst.back(), a - 1);
    return Transition::update(std::move(s), std::move(d));
  }

  void upd(unsigned m, std::vector<Transition>& out, const std::vector<std::string>& src,
           const std::vector<std::string>& dst) const {
    std::size_t L = std::max(src.size(), dst.size()) - 1;
    if (L < m || (L == m && src.size() - 1 != m)) {
      out.push_back(make_update(m, src, dst));
      return;
    }
    if (L == m) {
      for (unsigned a = 0; a <= ell_; ++a) out.push_back(make_update(m, src, dst, a));
      return;
    }
    if (dst.size() == L + 1) {
      for (unsigned a = 0; a + 1 <= ell_; ++a) out.push_back(make_update(m, src, dst, a));
    } else {
      for (unsigned a = 1; a <= ell_; ++a) out.push_back(make_update(m, src, dst, a));
    }
  }

  Transition make_reset(unsigned m, const std::vector<std::string>& src, const std::string& what,
                        const std::vector<std::string>& dst) const {
    Labels s, d;
    for (const auto& x : src) s.emplace_back(x);
    for (const auto& x : dst) d.emplace_back(x);
    if (src.size() < m) return Transition::reset(std::move(s), Label(what), std::move(d));
    // resetting last-level children removes the whole annotation family
    Labels family;
    for (unsigned a = 0; a <= ell_; ++a) family.emplace_back(what, a);
    return Transition::generalized_reset(std::move(s), std::move(family), std::move(d));
  }

  void rst(unsigned m, std::vector<Transition>& out, const std::vector<std::string>& src,
           const std::string& what, const std::vector<std::string>& dst) const {
    out.push_back(make_reset(m, src, what, dst));
  }

  // ---- across composition: run a comparator of order m-1 on one marked
  // child of each of two siblings, keeping their root labels in lockstep ----

  std::string across_state(const std::string& ns, unsigned i) const { return ns + num(".s", i); }

  bool across_needs_mirror(const Transition& t) const { return t.src.size() >= 3 || t.dst.size() >= 3; }

  Transition across_main(const Transition& t, const std::string& ns, unsigned x) const {
    Transition out = t;
    bool mirror = across_needs_mirror(t);
    out.src.insert(out.src.begin(), Label(across_state(ns, 2)));
    Label vdst = t.dst.size() >= 1 ? t.dst[0] : t.src[0];
    out.dst.insert(out.dst.begin(),
                   Label(mirror ? ns + num(".mr", x) : across_state(ns, 3)));
    if (out.dst.size() >= 2) out.dst[1] = Label((mirror ? "mv." : "lk.") + vdst.name, vdst.annotation);
    return out;
  }

  // Replays the deep part of `t` below the w'-sibling of the acting child.
  Transition across_mirror(const Transition& t, const std::string& ns, unsigned x) const {
    Transition out;
    out.kind = t.kind;
    out.reset_label = t.reset_label;
    out.reset_set = t.reset_set;
    Label vdst = t.dst[0];
    out.src.push_back(Label(ns + num(".mr", x)));
    out.src.push_back(Label("mv." + vdst.name, vdst.annotation));
    out.src.push_back(Label(roles::wP));
    for (std::size_t i = 2; i < t.src.size(); ++i) out.src.push_back(t.src[i]);
    out.dst.push_back(Label(across_state(ns, 3)));
    out.dst.push_back(Label("lk." + vdst.name, vdst.annotation));
    out.dst.push_back(Label(roles::wP));
    for (std::size_t i = 2; i < t.dst.size(); ++i) out.dst.push_back(t.dst[i]);
    return out;
  }

  // Advances the other sibling's root label; root-level resets repeat there.
  Transition across_other(const Transition& t, const std::string& ns) const {
    Label from = t.src[0];
    Label to = t.dst.empty() ? t.src[0] : t.dst[0];
    if (t.kind != Transition::Kind::Update && t.src.size() == 1) {
      Transition out = t;
      out.src = {Label(across_state(ns, 3)), from};
      out.dst = {Label(across_state(ns, 4)), to};
      return out;
    }
    return Transition::update({Label(across_state(ns, 3)), from}, {Label(across_state(ns, 4)), to});
  }

  Transition across_unprime(const Transition& t, const std::string& ns) const {
    Label to = t.dst.empty() ? t.src[0] : t.dst[0];
    return Transition::update({Label(across_state(ns, 4)), Label("lk." + to.name, to.annotation)},
                              {Label(across_state(ns, 2)), to});
  }

  void emit_across(unsigned m, std::vector<Transition>& out, const std::string& ns) {
    const auto& inner = comparator_rel(m - 1);
    for (unsigned x = 0; x < inner.size(); ++x) {
      const Transition& t = inner[x];
      Transition shifted = shift(t);
      out.push_back(across_main(shifted, ns, x));
      if (across_needs_mirror(shifted)) out.push_back(across_mirror(shifted, ns, x));
      out.push_back(across_other(shifted, ns));
      out.push_back(across_unprime(shifted, ns));
    }
  }

  // Index of an inner comparator transition, for planners to name mirror
  // states consistently with the builder.
  std::optional<unsigned> inner_index(unsigned m, const Transition& t) {
    const auto& inner = comparator_rel(m - 1);
    for (unsigned x = 0; x < inner.size(); ++x)
      if (shift(inner[x]) == t) return x;
    return std::nullopt;
  }

private:
  unsigned ell_;
  std::map<std::string, std::vector<Transition>> cache_;

  // Relative sets are rooted at level 0; inlining one level down shifts
  // nothing structurally (annotations already sit at the bottom), so a plain
  // identity suffices here. Kept for clarity at call sites.
  static Transition shift(const Transition& t) { return t; }

  const std::vector<Transition>& cached(const std::string& key,
                                        const std::function<void(std::vector<Transition>&)>& make) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<Transition> out;
    make(out);
    // de-duplicate while keeping the first occurrence order
    std::vector<Transition> uniq;
    std::set<Transition> seen;
    for (auto& t : out)
      if (seen.insert(t).second) uniq.push_back(t);
    auto [slot, _] = cache_.emplace(key, std::move(uniq));
    return slot->second;
  }

  void inline_rel(std::vector<Transition>& out, const std::vector<Transition>& rel,
                  const Labels& prefix) {
    for (const auto& t : rel) out.push_back(prefixed(t, prefix));
  }

  // ---- copy ----
  void build_copy(unsigned m, bool leave_prime, std::vector<Transition>& out) {
    auto cp = [&](unsigned i) { return num("c.cp", i); };
    auto cpp = [&](unsigned i) { return num("c.cp", i) + "'"; };
    auto mk = [&](unsigned i) { return num("c.m", i); };
    auto mkp = [&](unsigned i) { return num("c.m", i) + "'"; };
    auto cv = [&](unsigned i) { return num("c.cv", i); };
    auto rc = [&](unsigned i) { return num("c.rc", i); };
    auto dn = [&](unsigned i) { return num("c.dn", i); };
    auto reps = [](const std::string& head, const std::string& mid, unsigned n,
                   std::vector<std::string> tail = {}) {
      std::vector<std::string> v{head};
      for (unsigned i = 0; i < n; ++i) v.push_back(mid);
      for (auto& t : tail) v.push_back(t);
      return v;
    };

    // opening
    if (m > 1) {
      upd(m, out, {roles::start_copy, roles::mrkd}, {"c.s2", mk(1)});
      upd(m, out, {"c.s2"}, {cp(1), mkp(1)});
    } else {
      for (unsigned a = 0; a <= ell_; ++a) {
        out.push_back(make_update(m, {roles::start_copy, roles::mrkd}, {num("c.s2a", a), mk(1)}, a));
        Transition t = make_update(m, {num("c.s2a", a)}, {cp(1), mkp(1)});
        t.dst.back() = Label(mkp(1), a);
        out.push_back(t);
      }
    }

    // depth-first extension
    for (unsigned i = 1; i + 1 <= m; ++i) {
      if (i + 1 < m) {
        upd(m, out, reps(cp(i), mk(i), i, {roles::w}), reps(cpp(i + 1), mk(i + 1), i + 1));
        upd(m, out, reps(cpp(i + 1), mkp(i), i), reps(cp(i + 1), mkp(i + 1), i + 1));
      } else {
        for (unsigned a = 0; a <= ell_; ++a) {
          out.push_back(
              make_update(m, reps(cp(i), mk(i), i, {roles::w}), reps(num("c.pa", a), mk(i + 1), i + 1), a));
          Transition t = make_update(m, reps(num("c.pa", a), mkp(i), i), reps(cp(i + 1), mkp(i + 1), i + 1));
          t.dst.back() = Label(mkp(i + 1), a);
          out.push_back(t);
        }
      }
    }

    // closing
    for (unsigned i = 1; i <= m; ++i) {
      std::vector<std::string> sa = reps(cp(i), mk(i), i);
      std::vector<std::string> da =
          i >= 2 ? reps(cv(i), mk(i - 1), i - 1, {roles::wP}) : std::vector<std::string>{cv(1), roles::wP};
      if (i < m)
        rst(m, out, sa, roles::w, da);
      else
        upd(m, out, sa, da);
      std::vector<std::string> sb = reps(cv(i), mkp(i), i);
      std::vector<std::string> db = i >= 2 ? reps(cp(i - 1), mkp(i - 1), i - 1, {roles::w})
                                           : std::vector<std::string>{"c.cp0", roles::cpd};
      upd(m, out, sb, db);
    }

    // reconvert the explored original from w' back to w
    upd(m, out, {"c.cp0", roles::wP}, {rc(1), dn(1)});
    for (unsigned i = 1; i + 1 <= m; ++i)
      upd(m, out, reps(rc(i), dn(i), i, {roles::wP}), reps(rc(i + 1), dn(i + 1), i + 1));
    for (unsigned i = 2; i <= m; ++i) {
      std::vector<std::string> s = reps(rc(i), dn(i), i);
      std::vector<std::string> d = reps(rc(i - 1), dn(i - 1), i - 1, {roles::w});
      if (i < m)
        rst(m, out, s, roles::wP, d);
      else
        upd(m, out, s, d);
    }
    {
      std::vector<std::string> d{"c.rc0", leave_prime ? roles::wP : roles::w};
      if (m > 1)
        rst(m, out, {rc(1), dn(1)}, roles::wP, d);
      else
        upd(m, out, {rc(1), dn(1)}, d);
    }
    upd(m, out, {"c.rc0"}, {roles::end_copy});
  }

  // ---- comparators ----
  void build_comparator(unsigned m, std::vector<Transition>& out) {
    if (m == 1) {
      for (unsigned j = 0; j <= ell_; ++j) {
        out.push_back(make_update(1, {roles::start_cmp, roles::A_cmp}, {num("c1.r", j), "c1.a"}, j));
        for (unsigned j2 = 0; j2 <= ell_; ++j2) {
          const char* vb = j2 > j ? roles::big_cmp : j2 == j ? roles::equal_cmp : roles::small_cmp;
          const char* va = j2 > j ? roles::small_cmp : j2 == j ? roles::equal_cmp : roles::big_cmp;
          std::string rr = num("c1.r", j) + "." + std::to_string(j2);
          out.push_back(make_update(1, {num("c1.r", j), roles::B_cmp}, {rr, vb}, j2));
          out.push_back(make_update(1, {rr, "c1.a"}, {roles::end_cmp, va}, j));
        }
      }
      return;
    }

    // isolate and copy the biggest grandchild on each side
    upd(m, out, {roles::start_cmp, roles::A_cmp}, {"cm.A", roles::start_big});
    inline_rel(out, biggest_rel(m - 1), {Label("cm.A")});
    upd(m, out, {"cm.A", roles::end_big, roles::biggest}, {"cm.A", roles::start_copy, roles::mrkd});
    inline_rel(out, copy_rel(m - 1, true), {Label("cm.A")});
    upd(m, out, {"cm.A", roles::B_cmp}, {"cm.B", roles::start_big});
    inline_rel(out, biggest_rel(m - 1), {Label("cm.B")});
    upd(m, out, {"cm.B", roles::end_big, roles::biggest}, {"cm.B", roles::start_copy, roles::mrkd});
    inline_rel(out, copy_rel(m - 1, true), {Label("cm.B")});
    upd(m, out, {"cm.B", roles::end_copy, roles::cpd}, {"cm.s1", roles::start_cmp, roles::A_cmp});
    upd(m, out, {"cm.s1", roles::end_copy, roles::cpd},
        {across_state("cm.s", 2), roles::start_cmp, roles::B_cmp});

    // compare the copies across the two subtrees
    emit_across(m, out, "cm.s");

    // recheck that the originals are still the biggest, then destroy them
    upd(m, out, {across_state("cm.s", 2), roles::end_cmp, roles::wP},
        {"cm.kA", "bc.start", "bc.cand"});
    inline_rel(out, bigcheck_rel(m - 1), {Label("cm.kA")});
    upd(m, out, {"cm.kA", "bc.end"}, {"cm.kB0", "cm.ka"});
    upd(m, out, {"cm.kB0", roles::end_cmp, roles::wP}, {"cm.kB", "bc.start", "bc.cand"});
    inline_rel(out, bigcheck_rel(m - 1), {Label("cm.kB")});
    upd(m, out, {"cm.kB", "bc.end"}, {"cm.rd", "cm.ka"});

    // equal pair: retire both copies and start over
    upd(m, out, {"cm.rd", "cm.ka", roles::equal_cmp}, {"cm.e1", roles::A_cmp, roles::wPP});
    upd(m, out, {"cm.e1", "cm.ka", roles::equal_cmp}, {roles::start_cmp, roles::B_cmp, roles::wPP});

    // strict verdict: restore the retired pairs (re-verified pairwise), sweep
    // stragglers, propagate the verdict and reattach the copies
    upd(m, out, {"cm.rd", "cm.ka", roles::wPP}, {"cm.r1", roles::start_cmp, roles::A_cmp});
    upd(m, out, {"cm.r1", "cm.ka", roles::wPP},
        {across_state("cm.r", 2), roles::start_cmp, roles::B_cmp});
    emit_across(m, out, "cm.r");
    upd(m, out, {across_state("cm.r", 2), roles::end_cmp, roles::equal_cmp},
        {"cm.r3", "cm.ka", roles::w});
    upd(m, out, {"cm.r3", roles::end_cmp, roles::equal_cmp}, {"cm.rd", "cm.ka", roles::w});
    for (const char* first : {roles::small_cmp, roles::big_cmp}) {
      const char* second = first == roles::small_cmp ? roles::big_cmp : roles::small_cmp;
      std::string d1 = std::string("cm.d1.") + first;
      std::string d2 = std::string("cm.d2.") + first;
      std::string d3 = std::string("cm.d3.") + first;
      upd(m, out, {"cm.rd", "cm.ka", first}, {d1, first, roles::w});
      rst(m, out, {d1, first}, roles::wPP, {d2, first});
      upd(m, out, {d2, "cm.ka", second}, {d3, second, roles::w});
      rst(m, out, {d3, second}, roles::wPP, {roles::end_cmp, second});
    }

    // both exhausted: drop any stray live children, restore the retired
    // pairs pairwise and declare equality
    rst(m, out, {roles::start_cmp, roles::A_cmp}, roles::w, {"cm.x0a", "cm.xv"});
    rst(m, out, {"cm.x0a", roles::B_cmp}, roles::w, {"cm.x0", "cm.xv"});
    upd(m, out, {"cm.x0", "cm.xv", roles::wPP}, {"cm.x1", roles::start_cmp, roles::A_cmp});
    upd(m, out, {"cm.x1", "cm.xv", roles::wPP},
        {across_state("cm.x", 2), roles::start_cmp, roles::B_cmp});
    emit_across(m, out, "cm.x");
    upd(m, out, {across_state("cm.x", 2), roles::end_cmp, roles::equal_cmp},
        {"cm.x3", "cm.xv", roles::w});
    upd(m, out, {"cm.x3", roles::end_cmp, roles::equal_cmp}, {"cm.x0", "cm.xv", roles::w});
    rst(m, out, {"cm.x0", "cm.xv"}, roles::wPP, {"cm.x4", "cm.xw"});
    rst(m, out, {"cm.x4", "cm.xv"}, roles::wPP, {"cm.x5", "cm.xw"});
    upd(m, out, {"cm.x5", "cm.xw"}, {"cm.x6", roles::equal_cmp});
    upd(m, out, {"cm.x6", "cm.xw"}, {roles::end_cmp, roles::equal_cmp});

    // one side has no live children left: its retirees are deleted pairwise
    // against equal partners, so the witnessed side is strictly bigger
    rst(m, out, {roles::start_cmp, roles::A_cmp}, roles::w, {"cm.pa0", "cm.pv"});
    upd(m, out, {"cm.pa0", roles::B_cmp}, {"cm.pa1", "cm.pv"});
    rst(m, out, {roles::start_cmp, roles::B_cmp}, roles::w, {"cm.pb0", "cm.pv"});
    upd(m, out, {"cm.pb0", roles::A_cmp}, {"cm.pa1", "cm.pv"});
    upd(m, out, {"cm.pa1", "cm.pv", roles::wPP}, {"cm.pa2", roles::start_cmp, roles::A_cmp});
    upd(m, out, {"cm.pa2", "cm.pv", roles::wPP},
        {across_state("cm.p", 2), roles::start_cmp, roles::B_cmp});
    emit_across(m, out, "cm.p");
    // delete the verified-equal pair
    upd(m, out, {across_state("cm.p", 2), roles::end_cmp, roles::equal_cmp}, {"cm.pa3", "cm.pv"});
    upd(m, out, {"cm.pa3", roles::end_cmp, roles::equal_cmp}, {"cm.pa1", "cm.pv"});
    rst(m, out, {"cm.pa1", "cm.pv"}, roles::wPP, {"cm.pa4", "cm.pw"});
    rst(m, out, {"cm.pa4", "cm.pv"}, roles::wPP, {"cm.pa5", "cm.pw"});
    upd(m, out, {"cm.pa5", "cm.pw", roles::w}, {"cm.pa6", roles::big_cmp, roles::w});
    upd(m, out, {"cm.pa6", "cm.pw"}, {roles::end_cmp, roles::small_cmp});
  }

  // ---- biggest-child ----
  void build_biggest(unsigned m, std::vector<Transition>& out) {
    inline_rel(out, copy_rel(m, true), {});
    inline_rel(out, comparator_tagged_rel(m), {});
    upd(m, out, {roles::start_big, roles::w}, {roles::start_copy, roles::mrkd});
    upd(m, out, {roles::end_copy, roles::wP}, {"bg.a", roles::A_cmp});
    upd(m, out, {"bg.a", roles::w}, {roles::start_cmp, roles::B_cmp});
    for (const char* x : {roles::big_cmp, roles::equal_cmp})
      upd(m, out, {roles::end_cmp, a_tag(x)}, {"bg.e1", roles::A_cmp});
    for (const char* y : {roles::big_cmp, roles::small_cmp, roles::equal_cmp})
      upd(m, out, {"bg.e1", y}, {"bg.next", roles::wP});
    upd(m, out, {"bg.next", roles::w}, {roles::start_cmp, roles::B_cmp});
    rst(m, out, {"bg.next"}, roles::w, {"bg.cv"});
    rst(m, out, {"bg.a"}, roles::w, {"bg.cv"});
    upd(m, out, {"bg.cv", roles::wP}, {"bg.cv", roles::w});
    rst(m, out, {"bg.cv"}, roles::wP, {"bg.cv2"});
    upd(m, out, {"bg.cv2", roles::cpd}, {"bg.cv3", roles::biggest});
    upd(m, out, {"bg.cv3", roles::A_cmp}, {"bg.end"});
    upd(m, out, {"bg.end"}, {roles::end_big});
  }

  // ---- biggest-child recheck (candidate pre-given, destroyed at the end) ----
  void build_bigcheck(unsigned m, std::vector<Transition>& out) {
    inline_rel(out, comparator_tagged_rel(m), {});
    upd(m, out, {"bc.start", "bc.cand"}, {"bc.go", roles::A_cmp});
    upd(m, out, {"bc.go", roles::w}, {roles::start_cmp, roles::B_cmp});
    for (const char* x : {roles::big_cmp, roles::equal_cmp})
      upd(m, out, {roles::end_cmp, a_tag(x)}, {"bc.ok", roles::A_cmp});
    for (const char* y : {roles::big_cmp, roles::small_cmp, roles::equal_cmp})
      upd(m, out, {"bc.ok", y}, {"bc.go", roles::wP});
    rst(m, out, {"bc.go"}, roles::w, {"bc.cv"});
    upd(m, out, {"bc.cv", roles::wP}, {"bc.cv", roles::w});
    rst(m, out, {"bc.cv"}, roles::wP, {"bc.cv2"});
    upd(m, out, {"bc.cv2", roles::A_cmp}, {"bc.end"});
  }

  // ---- smallest-child ----
  void build_smallest(unsigned m, std::vector<Transition>& out) {
    inline_rel(out, comparator_rel(m), {});
    upd(m, out, {roles::start_sm, roles::w}, {"sm.a", roles::A_cmp});
    upd(m, out, {"sm.a", roles::w}, {roles::start_cmp, roles::B_cmp});
    upd(m, out, {roles::end_cmp, roles::equal_cmp}, {"sm.e1", roles::wP});
    upd(m, out, {"sm.e1", roles::equal_cmp}, {"sm.next", roles::A_cmp});
    upd(m, out, {roles::end_cmp, roles::big_cmp}, {"sm.e1b", roles::wP});
    upd(m, out, {"sm.e1b", roles::small_cmp}, {"sm.next", roles::A_cmp});
    upd(m, out, {"sm.next", roles::w}, {roles::start_cmp, roles::B_cmp});
    rst(m, out, {"sm.next"}, roles::w, {"sm.done"});
    rst(m, out, {"sm.a"}, roles::w, {"sm.done"});
    upd(m, out, {"sm.done", roles::A_cmp}, {"sm.cv", roles::smallest});
    upd(m, out, {"sm.cv", roles::wP}, {"sm.cv", roles::w});
    rst(m, out, {"sm.cv"}, roles::wP, {"sm.cv2"});
    upd(m, out, {"sm.cv2"}, {roles::end_sm});
  }
};

}  // namespace gad

// ---------------------------------------------------------------------------
// Machine assembly
// ---------------------------------------------------------------------------

namespace gad {

class MachineAssembler {
public:
  MachineAssembler(unsigned K, unsigned ell) : K_(K), lib_(ell) {
    machine_.k = K;
    machine_.add_state(Label(roles::w));
    machine_.add_state(Label(roles::hash));
    machine_.add_state(Label(roles::w, 0));
  }

  GadgetLibrary& lib() { return lib_; }

  void add_all(const std::vector<Transition>& ts, const Labels& prefix = {}) {
    for (const auto& t : ts) add(prefixed(t, prefix));
  }

  void add(const Transition& t) {
    if (seen_.insert(t).second) machine_.add_transition(t);
  }

  void upd(const std::vector<std::string>& src, const std::vector<std::string>& dst) {
    std::vector<Transition> out;
    lib_.upd(K_, out, src, dst);
    for (auto& t : out) add(t);
  }

  void rst(const std::vector<std::string>& src, const std::string& what,
           const std::vector<std::string>& dst) {
    add(lib_.make_reset(K_, src, what, dst));
  }

  Nrcs take() { return std::move(machine_); }

  // ---- Hardy forward machine at the root ----
  void assemble_forward() {
    upd({roles::w, roles::w}, {"f.succ"});
    upd({"f.succ"}, {roles::w, roles::hash});
    upd({roles::w}, {roles::start_sm});
    for (unsigned i = 0; i < K_; ++i) {
      Labels phase(i, Label(num("f.ph", i)));
      Labels copyp(i, Label(num("f.cp", i)));
      add_all(lib_.smallest_rel(K_ - i), phase);
      if (i + 1 < K_) {
        std::vector<std::string> src(i, num("f.ph", i)), dst(i + 1, num("f.ph", i + 1));
        src.push_back(roles::end_sm);
        src.push_back(roles::smallest);
        dst.push_back(roles::start_sm);
        upd(src, dst);
      }
      {
        std::vector<std::string> src(i, num("f.ph", i)), dst(i, num("f.cp", i));
        src.insert(src.end(), {roles::end_sm, roles::smallest, roles::w});
        dst.insert(dst.end(), {roles::start_copy, roles::mrkd});
        upd(src, dst);
      }
      add_all(lib_.copy_rel(K_ - i, false), copyp);
      if (i == 0) {
        upd({roles::end_copy, roles::cpd}, {num("f.cv", 0), roles::mrkd});
        upd({num("f.cv", 0) + "'"}, {roles::start_copy});
        upd({num("f.fin", 0), roles::mrkd}, {roles::w, roles::w});
      } else {
        std::vector<std::string> src(i, num("f.cp", i));
        src.insert(src.end(), {roles::end_copy, roles::cpd});
        std::vector<std::string> dst{num("f.cv", i)};
        for (unsigned p = 1; p < i; ++p) dst.push_back(num("f.cp", i));
        dst.insert(dst.end(), {roles::start_copy, roles::mrkd});
        upd(src, dst);
        upd({num("f.cv", i) + "'"}, {num("f.cp", i)});
        std::vector<std::string> fsrc{num("f.fin", i)};
        for (unsigned p = 1; p < i; ++p) fsrc.push_back(num("f.cp", i));
        fsrc.insert(fsrc.end(), {roles::start_copy, roles::mrkd});
        std::vector<std::string> fdst(i + 2, roles::w);
        upd(fsrc, fdst);
      }
      upd({num("f.cv", i), roles::hash}, {num("f.cv", i) + "'", roles::hashP});
      upd({num("f.cv", i) + "'", roles::hash}, {num("f.cv", i) + "''", roles::hashP});
      upd({num("f.cv", i) + "''", roles::hashP}, {num("f.cv", i) + "''", roles::hash});
      rst({num("f.cv", i) + "''"}, roles::hashP, {num("f.fin", i)});
    }
  }

  // ---- Hardy backward machine ----
  void assemble_backward() {
    upd({roles::w, roles::hash}, {roles::w, roles::w});
    upd({roles::w}, {roles::start_sm});
    for (unsigned i = 0; i < K_; ++i) {
      Labels phase(i, Label(num("b.ph", i)));
      add_all(lib_.smallest_rel(K_ - i), phase);
      if (i + 1 < K_) {
        std::vector<std::string> src(i, num("b.ph", i)), dst(i + 1, num("b.ph", i + 1));
        src.insert(src.end(), {roles::end_sm, roles::smallest});
        dst.push_back(roles::start_sm);
        upd(src, dst);
      }
      auto with_head = [&](const std::string& head, std::vector<std::string> tail) {
        std::vector<std::string> v{head};
        for (unsigned p = 1; p < i; ++p) v.push_back(num("b.ph", i));
        for (auto& t : tail) v.push_back(std::move(t));
        return v;
      };
      // The smallest copy becomes the candidate; every further copy found
      // equal to it is removed against one budget-token conversion; finally
      // the candidate's exponent is bumped by one.
      std::string cv = num("b.cv", i), fin = num("b.fin", i);
      if (i == 0) {
        upd({roles::end_sm, roles::smallest}, {"b.pr0", roles::A_cmp});
        upd({"b.pr0", roles::w}, {roles::start_cmp, roles::B_cmp});
        add_all(lib_.comparator_rel(K_));
        upd({roles::end_cmp, roles::equal_cmp}, {"b.eq0", roles::A_cmp});
        upd({"b.eq0", roles::equal_cmp}, {cv});
        upd({cv, roles::hash}, {cv + "'", roles::hashP});
        upd({cv + "'", roles::w}, {roles::start_cmp, roles::B_cmp});
        upd({cv + "'", roles::hash}, {cv + "''", roles::hashP});
        upd({cv + "''", roles::hashP}, {cv + "''", roles::hash});
        rst({cv + "''"}, roles::hashP, {fin});
        upd({fin, roles::A_cmp}, {roles::w, roles::w, roles::w});
      } else {
        std::vector<std::string> msrc(i, num("b.ph", i));
        msrc.insert(msrc.end(), {roles::end_sm, roles::smallest});
        upd(msrc, with_head(num("b.pr", i), {"b.vp", roles::A_cmp}));
        upd(with_head(num("b.pr", i), {"b.vp", roles::w}),
            with_head(num("b.cm", i), {roles::start_cmp, roles::B_cmp}));
        Labels pcmp{Label(num("b.cm", i))};
        for (unsigned p = 1; p < i; ++p) pcmp.push_back(Label(num("b.ph", i)));
        add_all(lib_.comparator_rel(K_ - i), pcmp);
        upd(with_head(num("b.cm", i), {roles::end_cmp, roles::equal_cmp}),
            with_head(num("b.eq", i), {"b.ee", roles::A_cmp}));
        upd(with_head(num("b.eq", i), {"b.ee", roles::equal_cmp}), with_head(cv, {"b.e2"}));
        upd({cv, roles::hash}, {cv + "'", roles::hashP});
        upd({cv + "'"}, {num("b.cm", i)});
        upd(with_head(num("b.cm", i), {"b.e2", roles::w}),
            with_head(num("b.cm", i), {roles::start_cmp, roles::B_cmp}));
        upd({cv + "'", roles::hash}, {cv + "''", roles::hashP});
        upd({cv + "''", roles::hashP}, {cv + "''", roles::hash});
        rst({cv + "''"}, roles::hashP, {fin});
        std::vector<std::string> fsrc = with_head(fin, {"b.e2", roles::A_cmp});
        std::vector<std::string> fdst(i + 3, roles::w);
        upd(fsrc, fdst);
      }
    }
  }

private:
  unsigned K_;
  GadgetLibrary lib_;
  Nrcs machine_;
  std::set<Transition> seen_;
};

}  // namespace gad

// ---------------------------------------------------------------------------
// Building
// ---------------------------------------------------------------------------

inline GadgetMachine build_gadget(const GadgetKind& kind) {
  GadgetMachine gm;
  gm.kind = kind;
  unsigned K = kind.params.k;
  gad::MachineAssembler as(K, kind.params.ell);
  switch (kind.type) {
    case GadgetType::Copy:
      as.add_all(as.lib().copy_rel(K, false));
      gm.roles = {{"start", roles::start_copy}, {"end", roles::end_copy},
                  {"marker", roles::mrkd},      {"copy", roles::cpd}};
      break;
    case GadgetType::Comparator:
      as.add_all(as.lib().comparator_rel(K));
      gm.roles = {{"start", roles::start_cmp}, {"end", roles::end_cmp},
                  {"a", roles::A_cmp},         {"b", roles::B_cmp},
                  {"big", roles::big_cmp},     {"small", roles::small_cmp},
                  {"equal", roles::equal_cmp}};
      break;
    case GadgetType::Smallest:
      as.add_all(as.lib().smallest_rel(K));
      gm.roles = {{"start", roles::start_sm}, {"end", roles::end_sm}, {"marker", roles::smallest}};
      break;
    case GadgetType::Biggest:
      as.add_all(as.lib().biggest_rel(K));
      gm.roles = {{"start", roles::start_big}, {"end", roles::end_big}, {"marker", roles::biggest}};
      break;
    case GadgetType::HardyForward:
      as.assemble_forward();
      gm.roles = {{"root", roles::w}, {"budget", roles::hash}, {"succ", roles::succ}};
      break;
    case GadgetType::HardyBackward:
      as.assemble_backward();
      gm.roles = {{"root", roles::w}, {"budget", roles::hash}};
      break;
  }
  gm.roles["interior"] = roles::w;
  gm.roles["budget"] = roles::hash;
  gm.machine = as.take();
  return gm;
}

// ---------------------------------------------------------------------------
// Perfect-run synthesis: a rule-based planner that mirrors each gadget's
// intended order of operations and emits one concrete replayable run.
// ---------------------------------------------------------------------------

struct PerfectRun {
  std::vector<std::pair<Transition, Config::Path>> steps;
};

// Replays a synthesized run, checking each transition is really part of the
// machine.
inline Config run_perfect(const Nrcs& machine, Config start, const PerfectRun& plan) {
  for (const auto& [t, anchor] : plan.steps) {
    if (machine.index_of(t) < 0)
      throw std::logic_error("planned transition missing from the machine: " + t.str());
    start = apply_at(machine, start, t, anchor);
  }
  return start;
}

namespace gad {
// Planners resolve every node freshly by label trails: canonical re-sorting
// shifts child indices after each step, so stored paths would go stale. A
// cursor names the chain of unique label bases from the true root down to a
// gadget's root.
class Planner {
public:
  struct Cursor {
    std::vector<std::string> trail;  // base names below the true root

    Cursor kid(const std::string& base) const {
      Cursor c = *this;
      c.trail.push_back(base);
      return c;
    }
    void rebase(const std::string& base) {
      if (!trail.empty()) trail.back() = base;
    }
  };

  Planner(unsigned K, unsigned ell, Config start) : K_(K), lib_(ell), cur_(std::move(start)) {
    shell_.k = K_;
  }

  const Config& current() const { return cur_; }
  PerfectRun take_plan() { return PerfectRun{std::move(steps_)}; }
  GadgetLibrary& lib() { return lib_; }

  // ---- lookups ----

  Config::Path resolve(const Cursor& c) const {
    Config::Path p;
    const Config* n = &cur_;
    for (const auto& base : c.trail) {
      int found = -1;
      const auto& ch = n->children();
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (ch[i].label().name == base) {
          if (found >= 0) throw std::logic_error("cursor trail ambiguous at " + base);
          found = static_cast<int>(i);
        }
      }
      if (found < 0) throw std::logic_error("cursor trail missing " + base);
      p.push_back(found);
      n = &ch[static_cast<std::size_t>(found)];
    }
    return p;
  }

  const Config& at(const Cursor& c) const { return cur_.at(resolve(c)); }

  std::vector<int> kids_base(const Cursor& c, const std::string& base) const {
    std::vector<int> out;
    const auto& ch = at(c).children();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (ch[i].label().name == base) out.push_back(static_cast<int>(i));
    return out;
  }

  int unique_kid(const Cursor& c, const std::string& base) const {
    auto v = kids_base(c, base);
    if (v.size() != 1) throw std::logic_error("expected a unique child " + base);
    return v[0];
  }

  Config::Path down(const Cursor& c, int i) const {
    Config::Path p = resolve(c);
    p.push_back(i);
    return p;
  }

  unsigned ann_at(const Config::Path& p) const {
    auto a = cur_.at(p).label().annotation;
    return a ? *a : 0;
  }

  gad::Labels prefix_of(const Cursor& c) const {
    gad::Labels out;
    const Config* n = &cur_;
    for (const auto& base : c.trail) {
      out.push_back(n->label());
      n = &n->children()[static_cast<std::size_t>(resolve_one(*n, base))];
    }
    return out;
  }

  unsigned order_of(const Cursor& c) const { return K_ - static_cast<unsigned>(c.trail.size()); }

  void emit(const Transition& t, const Config::Path& anchor) {
    steps_.emplace_back(t, anchor);
    cur_ = apply_at(shell_, cur_, t, anchor);
  }

  // The exponent encoded by the subtree under the cursor's child.
  Ordinal expo(const Cursor& c, int kid) const {
    Config::Path p = down(c, kid);
    EncodingParams params{K_, std::max(1u, lib_.ell())};
    Config view = cur_.at(p);
    view = view.relabeled(Label(roles::w, view.label().annotation ? *view.label().annotation : 0));
    return decode_subtree_exponent(view, static_cast<unsigned>(p.size()), params);
  }

  // ------------------------------------------------------------------
  // copy gadget
  // ------------------------------------------------------------------
  void plan_copy(Cursor g, bool leave_prime) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(m, s, what, d), pre);
    };
    auto cp = [&](unsigned i) { return gad::num("c.cp", i); };
    auto cpp = [&](unsigned i) { return gad::num("c.cp", i) + "'"; };
    auto mk = [&](unsigned i) { return gad::num("c.m", i); };
    auto mkp = [&](unsigned i) { return gad::num("c.m", i) + "'"; };
    auto cv = [&](unsigned i) { return gad::num("c.cv", i); };
    auto rc = [&](unsigned i) { return gad::num("c.rc", i); };
    auto dn = [&](unsigned i) { return gad::num("c.dn", i); };
    auto reps = [](const std::string& head, const std::string& mid, unsigned n,
                   std::vector<std::string> tail = {}) {
      std::vector<std::string> v{head};
      for (unsigned i = 0; i < n; ++i) v.push_back(mid);
      for (auto& t : tail) v.push_back(t);
      return v;
    };
    auto trail_to = [&](const std::string& base, unsigned depth) {
      Cursor c = g;
      for (unsigned i = 0; i < depth; ++i) c = c.kid(base);
      return c;
    };

    // opening
    {
      int mi = unique_kid(g, roles::mrkd);
      if (m == 1) {
        unsigned a = ann_at(down(g, mi));
        emit(U({roles::start_copy, roles::mrkd}, {gad::num("c.s2a", a), mk(1)}, a), down(g, mi));
        g.rebase(gad::num("c.s2a", a));
        Transition t = lib_.make_update(m, {gad::num("c.s2a", a)}, {cp(1), mkp(1)});
        t.dst.back() = Label(mkp(1), a);
        emit(gad::prefixed(t, pre), resolve(g));
      } else {
        emit(U({roles::start_copy, roles::mrkd}, {"c.s2", mk(1)}), down(g, mi));
        g.rebase("c.s2");
        emit(U({"c.s2"}, {cp(1), mkp(1)}), resolve(g));
      }
      g.rebase(cp(1));
    }

    // depth-first copy of the marked subtree
    std::function<void(unsigned)> explore = [&](unsigned i) {
      while (true) {
        Cursor tip = trail_to(mk(i), i);
        auto wk = kids_base(tip, roles::w);
        if (!wk.empty() && i < m) {
          Config::Path child = down(tip, wk[0]);
          if (i + 1 < m) {
            emit(U(reps(cp(i), mk(i), i, {roles::w}), reps(cpp(i + 1), mk(i + 1), i + 1)), child);
            g.rebase(cpp(i + 1));
            emit(U(reps(cpp(i + 1), mkp(i), i), reps(cp(i + 1), mkp(i + 1), i + 1)),
                 resolve(trail_to(mkp(i), i)));
          } else {
            unsigned a = ann_at(child);
            emit(U(reps(cp(i), mk(i), i, {roles::w}), reps(gad::num("c.pa", a), mk(i + 1), i + 1), a),
                 child);
            g.rebase(gad::num("c.pa", a));
            Transition t = lib_.make_update(m, reps(gad::num("c.pa", a), mkp(i), i),
                                            reps(cp(i + 1), mkp(i + 1), i + 1));
            t.dst.back() = Label(mkp(i + 1), a);
            emit(gad::prefixed(t, pre), resolve(trail_to(mkp(i), i)));
          }
          g.rebase(cp(i + 1));
          explore(i + 1);
          continue;
        }
        // close the branch
        Config::Path tipp = resolve(tip);
        std::vector<std::string> da = i >= 2 ? reps(cv(i), mk(i - 1), i - 1, {roles::wP})
                                             : std::vector<std::string>{cv(1), roles::wP};
        if (i < m)
          emit(R(reps(cp(i), mk(i), i), roles::w, da), tipp);
        else
          emit(U(reps(cp(i), mk(i), i), da, ann_at(tipp)), tipp);
        g.rebase(cv(i));
        Config::Path ctip = resolve(trail_to(mkp(i), i));
        std::vector<std::string> db = i >= 2 ? reps(cp(i - 1), mkp(i - 1), i - 1, {roles::w})
                                             : std::vector<std::string>{"c.cp0", roles::cpd};
        emit(U(reps(cv(i), mkp(i), i), db, i == m ? ann_at(ctip) : 0), ctip);
        g.rebase(i >= 2 ? cp(i - 1) : "c.cp0");
        return;
      }
    };
    explore(1);

    // reconvert the original back to w (w' when the caller keeps the prime)
    {
      int wpi = unique_kid(g, roles::wP);
      emit(U({"c.cp0", roles::wP}, {rc(1), dn(1)}, m == 1 ? ann_at(down(g, wpi)) : 0), down(g, wpi));
      g.rebase(rc(1));
    }
    std::function<void(unsigned)> reconvert = [&](unsigned i) {
      while (true) {
        Cursor tip = trail_to(dn(i), i);
        auto wk = kids_base(tip, roles::wP);
        if (!wk.empty() && i < m) {
          Config::Path child = down(tip, wk[0]);
          emit(U(reps(rc(i), dn(i), i, {roles::wP}), reps(rc(i + 1), dn(i + 1), i + 1),
                 i + 1 == m ? ann_at(child) : 0),
               child);
          g.rebase(rc(i + 1));
          reconvert(i + 1);
          continue;
        }
        Config::Path tipp = resolve(tip);
        if (i >= 2) {
          std::vector<std::string> d = reps(rc(i - 1), dn(i - 1), i - 1, {roles::w});
          if (i < m)
            emit(R(reps(rc(i), dn(i), i), roles::wP, d), tipp);
          else
            emit(U(reps(rc(i), dn(i), i), d, ann_at(tipp)), tipp);
          g.rebase(rc(i - 1));
        } else {
          std::vector<std::string> d{"c.rc0", leave_prime ? roles::wP : roles::w};
          if (m > 1)
            emit(R({rc(1), dn(1)}, roles::wP, d), tipp);
          else
            emit(U({rc(1), dn(1)}, d, ann_at(tipp)), tipp);
          g.rebase("c.rc0");
        }
        return;
      }
    };
    reconvert(1);
    emit(U({"c.rc0"}, {roles::end_copy}), resolve(g));
  }

  // ------------------------------------------------------------------
  // comparator
  // ------------------------------------------------------------------
  void plan_comparator(Cursor g, bool tagA = false) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(m, s, what, d), pre);
    };

    if (m == 1) {
      // read both annotations and write the verdicts
      auto tagX = [&](Transition t, bool through_a) {
        if (tagA && through_a) {
          std::size_t child = pre.size() + 1;
          if (t.src.size() > child && t.src[child].name != roles::A_cmp)
            t.src[child] = Label(a_tag(t.src[child].name), t.src[child].annotation);
          if (t.dst.size() > child) t.dst[child] = Label(a_tag(t.dst[child].name), t.dst[child].annotation);
        }
        return t;
      };
      int ai = unique_kid(g, roles::A_cmp);
      unsigned ja = ann_at(down(g, ai));
      emit(tagX(U({roles::start_cmp, roles::A_cmp}, {gad::num("c1.r", ja), "c1.a"}, ja), true),
           down(g, ai));
      g.rebase(gad::num("c1.r", ja));
      int bi = unique_kid(g, roles::B_cmp);
      unsigned jb = ann_at(down(g, bi));
      const char* vb = jb > ja ? roles::big_cmp : jb == ja ? roles::equal_cmp : roles::small_cmp;
      const char* va = jb > ja ? roles::small_cmp : jb == ja ? roles::equal_cmp : roles::big_cmp;
      std::string rr = gad::num("c1.r", ja) + "." + std::to_string(jb);
      emit(tagX(U({gad::num("c1.r", ja), roles::B_cmp}, {rr, vb}, jb), false), down(g, bi));
      g.rebase(rr);
      int ap = unique_kid(g, tagA ? a_tag("c1.a") : "c1.a");
      emit(tagX(U({rr, "c1.a"}, {roles::end_cmp, va}, ja), true), down(g, ap));
      g.rebase(roles::end_cmp);
      return;
    }
    if (tagA) throw std::logic_error("tag-preserving planning is implemented at order 1");

    std::string vA = roles::A_cmp, vB = roles::B_cmp;  // current labels of the two sides
    while (true) {
      Cursor cA = g.kid(vA), cB = g.kid(vB);
      auto livesA = kids_base(cA, roles::w);
      auto livesB = kids_base(cB, roles::w);

      if (livesA.empty() && livesB.empty()) {
        emit(R({roles::start_cmp, roles::A_cmp}, roles::w, {"cm.x0a", "cm.xv"}), resolve(cA));
        g.rebase("cm.x0a");
        emit(R({"cm.x0a", roles::B_cmp}, roles::w, {"cm.x0", "cm.xv"}), resolve(g.kid(roles::B_cmp)));
        g.rebase("cm.x0");
        plan_paired_loop(g, "cm.x", "cm.xv", false, "cm.x0", "cm.x1", "cm.x3");
        Config::Path v1 = first_base(g, "cm.xv");
        emit(R({"cm.x0", "cm.xv"}, roles::wPP, {"cm.x4", "cm.xw"}), v1);
        g.rebase("cm.x4");
        emit(R({"cm.x4", "cm.xv"}, roles::wPP, {"cm.x5", "cm.xw"}), first_base(g, "cm.xv"));
        g.rebase("cm.x5");
        emit(U({"cm.x5", "cm.xw"}, {"cm.x6", roles::equal_cmp}), first_base(g, "cm.xw"));
        g.rebase("cm.x6");
        emit(U({"cm.x6", "cm.xw"}, {roles::end_cmp, roles::equal_cmp}), first_base(g, "cm.xw"));
        return;
      }
      if (livesA.empty() || livesB.empty()) {
        bool a_empty = livesA.empty();
        Cursor dead = a_empty ? cA : cB;
        Cursor alive = a_empty ? cB : cA;
        emit(R({roles::start_cmp, a_empty ? roles::A_cmp : roles::B_cmp}, roles::w,
               {a_empty ? "cm.pa0" : "cm.pb0", "cm.pv"}),
             resolve(dead));
        g.rebase(a_empty ? "cm.pa0" : "cm.pb0");
        emit(U({a_empty ? "cm.pa0" : "cm.pb0", a_empty ? roles::B_cmp : roles::A_cmp},
               {"cm.pa1", "cm.pv"}),
             resolve(g.kid(a_empty ? roles::B_cmp : roles::A_cmp)));
        g.rebase("cm.pa1");
        plan_paired_loop(g, "cm.p", "cm.pv", true, "cm.pa1", "cm.pa2", "cm.pa3");
        emit(R({"cm.pa1", "cm.pv"}, roles::wPP, {"cm.pa4", "cm.pw"}), first_base(g, "cm.pv"));
        g.rebase("cm.pa4");
        emit(R({"cm.pa4", "cm.pv"}, roles::wPP, {"cm.pa5", "cm.pw"}), first_base(g, "cm.pv"));
        g.rebase("cm.pa5");
        // only the surviving side still has live children
        Config::Path winner;
        for (int i : kids_base(g, "cm.pw"))
          if (!cur_.at(down(g, i)).children().empty() &&
              !kids_of(down(g, i), roles::w).empty())
            winner = down(g, i);
        if (winner.empty()) throw std::logic_error("no witness child for the strict verdict");
        int wit = kids_of(winner, roles::w)[0];
        Config::Path witp = winner;
        witp.push_back(wit);
        emit(U({"cm.pa5", "cm.pw", roles::w}, {"cm.pa6", roles::big_cmp, roles::w},
               witp.size() == K_ ? ann_at(witp) : 0),
             witp);
        g.rebase("cm.pa6");
        emit(U({"cm.pa6", "cm.pw"}, {roles::end_cmp, roles::small_cmp}), first_base(g, "cm.pw"));
        return;
      }

      // one round: biggest grandchildren, copies, across comparison, rechecks
      emit(U({roles::start_cmp, roles::A_cmp}, {"cm.A", roles::start_big}), resolve(cA));
      g.rebase("cm.A");
      vA = roles::start_big;
      plan_biggest(g.kid(vA));
      vA = roles::end_big;
      emit(U({"cm.A", roles::end_big, roles::biggest}, {"cm.A", roles::start_copy, roles::mrkd}),
           resolve(g.kid(vA).kid(roles::biggest)));
      vA = roles::start_copy;
      plan_copy(g.kid(vA), true);
      vA = roles::end_copy;
      emit(U({"cm.A", roles::B_cmp}, {"cm.B", roles::start_big}), resolve(cB));
      g.rebase("cm.B");
      vB = roles::start_big;
      plan_biggest(g.kid(vB));
      vB = roles::end_big;
      emit(U({"cm.B", roles::end_big, roles::biggest}, {"cm.B", roles::start_copy, roles::mrkd}),
           resolve(g.kid(vB).kid(roles::biggest)));
      vB = roles::start_copy;
      plan_copy(g.kid(vB), true);
      vB = roles::end_copy;
      // mark the copies; sides keep their identity through distinct cursors
      emit(U({"cm.B", roles::end_copy, roles::cpd}, {"cm.s1", roles::start_cmp, roles::A_cmp}),
           resolve(side_with(g, roles::end_copy, 0).kid(roles::cpd)));
      g.rebase("cm.s1");
      emit(U({"cm.s1", roles::end_copy, roles::cpd},
             {lib_.across_state("cm.s", 2), roles::start_cmp, roles::B_cmp}),
           resolve(side_with(g, roles::end_copy, 0).kid(roles::cpd)));
      g.rebase(lib_.across_state("cm.s", 2));
      plan_across(g, "cm.s");
      // recheck the originals and destroy them
      {
        Cursor side = side_of_mark(g, roles::end_cmp, roles::wP);
        emit(U({lib_.across_state("cm.s", 2), roles::end_cmp, roles::wP},
               {"cm.kA", "bc.start", "bc.cand"}),
             resolve(side.kid(roles::wP)));
        g.rebase("cm.kA");
        plan_bigcheck(g.kid("bc.start"));
        emit(U({"cm.kA", "bc.end"}, {"cm.kB0", "cm.ka"}), resolve(g.kid("bc.end")));
        g.rebase("cm.kB0");
        Cursor side2 = side_of_mark(g, roles::end_cmp, roles::wP);
        emit(U({"cm.kB0", roles::end_cmp, roles::wP}, {"cm.kB", "bc.start", "bc.cand"}),
             resolve(side2.kid(roles::wP)));
        g.rebase("cm.kB");
        plan_bigcheck(g.kid("bc.start"));
        emit(U({"cm.kB", "bc.end"}, {"cm.rd", "cm.ka"}), resolve(g.kid("bc.end")));
        g.rebase("cm.rd");
      }
      // the verdict sits on the compared copies
      const char* verdict = nullptr;
      for (const char* x : {roles::big_cmp, roles::small_cmp, roles::equal_cmp})
        for (int i : kids_base(g, "cm.ka")) {
          Config::Path v = down(g, i);
          if (!kids_of(v, x).empty()) verdict = x;
        }
      if (!verdict) throw std::logic_error("comparison produced no verdict");
      if (verdict == roles::equal_cmp) {
        Cursor s1 = side_of_mark(g, "cm.ka", roles::equal_cmp);
        emit(U({"cm.rd", "cm.ka", roles::equal_cmp}, {"cm.e1", roles::A_cmp, roles::wPP}),
             resolve(s1.kid(roles::equal_cmp)));
        g.rebase("cm.e1");
        Cursor s2 = side_of_mark(g, "cm.ka", roles::equal_cmp);
        emit(U({"cm.e1", "cm.ka", roles::equal_cmp}, {roles::start_cmp, roles::B_cmp, roles::wPP}),
             resolve(s2.kid(roles::equal_cmp)));
        g.rebase(roles::start_cmp);
        vA = roles::A_cmp;
        vB = roles::B_cmp;
        continue;
      }
      // strict verdict: restore the retired pairs, then propagate and sweep
      plan_paired_loop(g, "cm.r", "cm.ka", false, "cm.rd", "cm.r1", "cm.r3");
      const char* first = roles::small_cmp;
      const char* second = roles::big_cmp;
      std::string d1 = std::string("cm.d1.") + first;
      std::string d2 = std::string("cm.d2.") + first;
      std::string d3 = std::string("cm.d3.") + first;
      Cursor sv = side_of_mark(g, "cm.ka", first);
      Config::Path sk = resolve(sv.kid(first));
      emit(U({"cm.rd", "cm.ka", first}, {d1, first, roles::w}, sk.size() == K_ ? ann_at(sk) : 0), sk);
      g.rebase(d1);
      emit(R({d1, first}, roles::wPP, {d2, first}), resolve(g.kid(first)));
      g.rebase(d2);
      Cursor bv = side_of_mark(g, "cm.ka", second);
      Config::Path bk = resolve(bv.kid(second));
      emit(U({d2, "cm.ka", second}, {d3, second, roles::w}, bk.size() == K_ ? ann_at(bk) : 0), bk);
      g.rebase(d3);
      emit(R({d3, second}, roles::wPP, {roles::end_cmp, second}), resolve(g.kid(second)));
      return;
    }
  }

  // Pairwise handling of the retired copies: each pair is re-verified equal
  // through a fresh comparison and then either restored or deleted.
  void plan_paired_loop(Cursor g, const std::string& ns, const std::string& vlabel, bool deleting,
                        const std::string& home, const std::string& mid, const std::string& back) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    while (true) {
      auto vs = kids_base(g, vlabel);
      if (vs.size() != 2) throw std::logic_error("paired loop expects two parked siblings");
      Config::Path v1 = down(g, vs[0]), v2 = down(g, vs[1]);
      auto r1 = kids_of(v1, roles::wPP), r2 = kids_of(v2, roles::wPP);
      if (r1.empty() && r2.empty()) return;
      if (r1.empty() || r2.empty()) throw std::logic_error("retired copies must come in pairs");
      auto exp_of = [&](const Config::Path& v, int i) {
        Config::Path p = v;
        p.push_back(i);
        Config view = cur_.at(p);
        view = view.relabeled(Label(roles::w, view.label().annotation ? *view.label().annotation : 0));
        EncodingParams params{K_, std::max(1u, lib_.ell())};
        return decode_subtree_exponent(view, static_cast<unsigned>(p.size()), params);
      };
      auto least = [&](const Config::Path& v, const std::vector<int>& rs) {
        int best = rs[0];
        for (int i : rs)
          if (exp_of(v, i) < exp_of(v, best)) best = i;
        return best;
      };
      int i1 = least(v1, r1), i2 = least(v2, r2);
      if (exp_of(v1, i1) != exp_of(v2, i2))
        throw std::logic_error("retired copies are not pairwise equal");
      Config::Path p1 = v1;
      p1.push_back(i1);
      emit(U({home, vlabel, roles::wPP}, {mid, roles::start_cmp, roles::A_cmp}), p1);
      g.rebase(mid);
      Config::Path v2b = resolve(side_of_mark_neq(g, vlabel));
      int i2b = least(v2b, kids_of(v2b, roles::wPP));
      Config::Path p2 = v2b;
      p2.push_back(i2b);
      emit(U({mid, vlabel, roles::wPP}, {lib_.across_state(ns, 2), roles::start_cmp, roles::B_cmp}), p2);
      g.rebase(lib_.across_state(ns, 2));
      plan_across(g, ns);
      if (deleting) {
        Cursor s1 = side_of_mark(g, roles::end_cmp, roles::equal_cmp);
        emit(U({lib_.across_state(ns, 2), roles::end_cmp, roles::equal_cmp}, {back, vlabel}),
             resolve(s1.kid(roles::equal_cmp)));
        g.rebase(back);
        Cursor s2 = side_of_mark(g, roles::end_cmp, roles::equal_cmp);
        emit(U({back, roles::end_cmp, roles::equal_cmp}, {home, vlabel}),
             resolve(s2.kid(roles::equal_cmp)));
        g.rebase(home);
      } else {
        Cursor s1 = side_of_mark(g, roles::end_cmp, roles::equal_cmp);
        Config::Path e1 = resolve(s1.kid(roles::equal_cmp));
        emit(U({lib_.across_state(ns, 2), roles::end_cmp, roles::equal_cmp}, {back, vlabel, roles::w},
               e1.size() == K_ ? ann_at(e1) : 0),
             e1);
        g.rebase(back);
        Cursor s2 = side_of_mark(g, roles::end_cmp, roles::equal_cmp);
        Config::Path e2 = resolve(s2.kid(roles::equal_cmp));
        emit(U({back, roles::end_cmp, roles::equal_cmp}, {home, vlabel, roles::w},
               e2.size() == K_ ? ann_at(e2) : 0),
             e2);
        g.rebase(home);
      }
    }
  }

  // Runs the order-(m-1) comparator over the A_cmp/B_cmp-marked children of
  // the two parked siblings via the lockstep wrapping.
  void plan_across(Cursor g, const std::string& ns) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    Cursor sideA = side_of_mark(g, "", roles::A_cmp);
    Cursor sideB = side_of_mark(g, "", roles::B_cmp);
    Config aSub = at(sideA).children()[static_cast<std::size_t>(unique_kid(sideA, roles::A_cmp))];
    Config bSub = at(sideB).children()[static_cast<std::size_t>(unique_kid(sideB, roles::B_cmp))];
    Config virt(Label(roles::start_cmp), {aSub, bSub});
    Planner sub(m - 1, lib_.ell(), virt);
    sub.plan_comparator(Cursor{});
    auto inner_steps = sub.take_plan().steps;

    Nrcs vshell;
    vshell.k = m - 1;
    Config vcur = virt;
    for (auto& [t, anchor] : inner_steps) {
      auto x = lib_.inner_index(m, t);
      if (!x) throw std::logic_error("inner transition not in the library: " + t.str());
      bool mirror = lib_.across_needs_mirror(t);
      // the acting side hosts a child equal to the virtual acted-on child
      Transition main = gad::prefixed(lib_.across_main(t, ns, *x), pre);
      Config::Path acting;
      if (!anchor.empty()) {
        const Config& vkid = vcur.children()[static_cast<std::size_t>(anchor[0])];
        acting = locate_by_subtree(g, t.src[0], vkid);
        Config::Path real = acting;
        const Config& host = cur_.at(acting);
        int ridx = -1;
        for (std::size_t i = 0; i < host.children().size(); ++i)
          if (host.children()[i] == vkid) ridx = static_cast<int>(i);
        if (ridx < 0) throw std::logic_error("across: acted-on child not found");
        real.push_back(ridx);
        for (std::size_t i = 1; i < anchor.size(); ++i) real.push_back(anchor[i]);
        emit(main, real);
      } else {
        acting = resolve(first_base_cursor(g, t.src[0].name));
        emit(main, acting);
      }
      g.rebase(main.dst[pre.size()].name);
      if (mirror) {
        Transition mt = gad::prefixed(lib_.across_mirror(t, ns, *x), pre);
        auto anchors = matching_anchors(cur_, mt.src);
        std::optional<Config::Path> pick;
        Config::Path acting2 = resolve(first_base_cursor(g, mt.src[pre.size() + 1].name));
        for (auto& a2 : anchors)
          if (a2.size() > acting2.size() && std::equal(acting2.begin(), acting2.end(), a2.begin())) {
            pick = a2;
            break;
          }
        if (!pick) throw std::logic_error("across: mirror anchor not found");
        emit(mt, *pick);
        g.rebase(mt.dst[pre.size()].name);
      }
      Transition other = gad::prefixed(lib_.across_other(t, ns), pre);
      emit(other, resolve(first_base_cursor(g, other.src[pre.size() + 1].name)));
      g.rebase(other.dst[pre.size()].name);
      Transition unpr = gad::prefixed(lib_.across_unprime(t, ns), pre);
      emit(unpr, resolve(first_base_cursor(g, unpr.src[pre.size() + 1].name)));
      g.rebase(unpr.dst[pre.size()].name);
      vcur = apply_at(vshell, vcur, t, anchor);
    }
  }

  // ------------------------------------------------------------------
  // biggest-child and its recheck
  // ------------------------------------------------------------------
  void plan_biggest(Cursor g) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(m, s, what, d), pre);
    };
    auto ws = kids_base(g, roles::w);
    if (ws.empty()) throw std::logic_error("biggest-child planning needs a live child");
    int cand = ws[0];
    for (int i : ws)
      if (expo(g, cand) < expo(g, i)) cand = i;
    emit(U({roles::start_big, roles::w}, {roles::start_copy, roles::mrkd},
           m == 1 ? ann_at(down(g, cand)) : 0),
         down(g, cand));
    g.rebase(roles::start_copy);
    plan_copy(g, true);
    g.rebase(roles::end_copy);
    int orig = unique_kid(g, roles::wP);
    emit(U({roles::end_copy, roles::wP}, {"bg.a", roles::A_cmp}, m == 1 ? ann_at(down(g, orig)) : 0),
         down(g, orig));
    g.rebase("bg.a");
    plan_big_rounds(g, "bg.a", "bg.e1", "bg.next");
    emit(R({at(g).label().name}, roles::w, {"bg.cv"}), resolve(g));
    g.rebase("bg.cv");
    while (!kids_base(g, roles::wP).empty()) {
      int j = kids_base(g, roles::wP)[0];
      emit(U({"bg.cv", roles::wP}, {"bg.cv", roles::w}, m == 1 ? ann_at(down(g, j)) : 0), down(g, j));
    }
    emit(R({"bg.cv"}, roles::wP, {"bg.cv2"}), resolve(g));
    g.rebase("bg.cv2");
    int cp = unique_kid(g, roles::cpd);
    emit(U({"bg.cv2", roles::cpd}, {"bg.cv3", roles::biggest}, m == 1 ? ann_at(down(g, cp)) : 0),
         down(g, cp));
    g.rebase("bg.cv3");
    int an = unique_kid(g, roles::A_cmp);
    emit(U({"bg.cv3", roles::A_cmp}, {"bg.end"}), down(g, an));
    g.rebase("bg.end");
    emit(U({"bg.end"}, {roles::end_big}), resolve(g));
  }

  void plan_bigcheck(Cursor g) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(m, s, what, d), pre);
    };
    int cand = unique_kid(g, "bc.cand");
    emit(U({"bc.start", "bc.cand"}, {"bc.go", roles::A_cmp}, m == 1 ? ann_at(down(g, cand)) : 0),
         down(g, cand));
    g.rebase("bc.go");
    plan_big_rounds(g, "bc.go", "bc.ok", "bc.go");
    emit(R({"bc.go"}, roles::w, {"bc.cv"}), resolve(g));
    g.rebase("bc.cv");
    while (!kids_base(g, roles::wP).empty()) {
      int j = kids_base(g, roles::wP)[0];
      emit(U({"bc.cv", roles::wP}, {"bc.cv", roles::w}, m == 1 ? ann_at(down(g, j)) : 0), down(g, j));
    }
    emit(R({"bc.cv"}, roles::wP, {"bc.cv2"}), resolve(g));
    g.rebase("bc.cv2");
    int an = unique_kid(g, roles::A_cmp);
    emit(U({"bc.cv2", roles::A_cmp}, {"bc.end"}), down(g, an));
  }

  // ------------------------------------------------------------------
  // smallest-child
  // ------------------------------------------------------------------
  void plan_smallest(Cursor g) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(m, s, what, d), pre);
    };
    auto ws = kids_base(g, roles::w);
    if (ws.empty()) throw std::logic_error("smallest-child planning needs a live child");
    emit(U({roles::start_sm, roles::w}, {"sm.a", roles::A_cmp}, m == 1 ? ann_at(down(g, ws[0])) : 0),
         down(g, ws[0]));
    g.rebase("sm.a");
    std::string state = "sm.a";
    while (true) {
      auto rest = kids_base(g, roles::w);
      if (rest.empty()) break;
      int challenger = rest[0];
      emit(U({state, roles::w}, {roles::start_cmp, roles::B_cmp},
             m == 1 ? ann_at(down(g, challenger)) : 0),
           down(g, challenger));
      g.rebase(roles::start_cmp);
      plan_comparator(g);
      g.rebase(roles::end_cmp);
      auto eq = kids_base(g, roles::equal_cmp);
      if (eq.size() == 2) {
        emit(U({roles::end_cmp, roles::equal_cmp}, {"sm.e1", roles::wP},
               m == 1 ? ann_at(down(g, eq[0])) : 0),
             down(g, eq[0]));
        g.rebase("sm.e1");
        int other = kids_base(g, roles::equal_cmp)[0];
        emit(U({"sm.e1", roles::equal_cmp}, {"sm.next", roles::A_cmp},
               m == 1 ? ann_at(down(g, other)) : 0),
             down(g, other));
      } else {
        int big = kids_base(g, roles::big_cmp)[0];
        emit(U({roles::end_cmp, roles::big_cmp}, {"sm.e1b", roles::wP},
               m == 1 ? ann_at(down(g, big)) : 0),
             down(g, big));
        g.rebase("sm.e1b");
        int small = kids_base(g, roles::small_cmp)[0];
        emit(U({"sm.e1b", roles::small_cmp}, {"sm.next", roles::A_cmp},
               m == 1 ? ann_at(down(g, small)) : 0),
             down(g, small));
      }
      g.rebase("sm.next");
      state = "sm.next";
    }
    emit(R({state}, roles::w, {"sm.done"}), resolve(g));
    g.rebase("sm.done");
    int an = unique_kid(g, roles::A_cmp);
    emit(U({"sm.done", roles::A_cmp}, {"sm.cv", roles::smallest}, m == 1 ? ann_at(down(g, an)) : 0),
         down(g, an));
    g.rebase("sm.cv");
    while (!kids_base(g, roles::wP).empty()) {
      int j = kids_base(g, roles::wP)[0];
      emit(U({"sm.cv", roles::wP}, {"sm.cv", roles::w}, m == 1 ? ann_at(down(g, j)) : 0), down(g, j));
    }
    emit(R({"sm.cv"}, roles::wP, {"sm.cv2"}), resolve(g));
    g.rebase("sm.cv2");
    emit(U({"sm.cv2"}, {roles::end_sm}), resolve(g));
  }

  // ------------------------------------------------------------------
  // Hardy machines: fold the rewriting forward, or walk a given chain back.
  // ------------------------------------------------------------------
  void plan_hardy_forward(const EncodingParams& params) {
    while (true) {
      auto [alpha, n] = decode_hardy_config(cur_, params);
      if (alpha.is_zero()) return;
      if (alpha.is_successor()) {
        plan_forward_successor();
      } else {
        plan_forward_limit(Cursor{}, 0, n, params);
      }
    }
  }

  // Inverts a ->_H chain: from C_{alpha,n} up to C_{target,n_target} where
  // (target, n_target) ->*_H (alpha, n).
  void plan_hardy_backward(const Ordinal& target_alpha, const Nat& target_n,
                           const EncodingParams& params) {
    // compute the forward chain and replay it backwards
    std::vector<HardyState> chain{HardyState(target_alpha, target_n, params)};
    auto [alpha, n] = decode_hardy_config(cur_, params);
    while (!(chain.back().alpha == alpha && chain.back().n == n)) {
      if (chain.back().alpha.is_zero())
        throw std::invalid_argument("target state does not rewrite to the current one");
      chain.push_back(hardy_rewrite(chain.back(), params));
    }
    for (std::size_t i = chain.size(); i-- > 1;) {
      const HardyState& from = chain[i];     // current configuration
      const HardyState& to = chain[i - 1];   // one rewrite step earlier
      if (to.alpha.is_successor() && from.alpha == predecessor_of_successor(to.alpha)) {
        plan_backward_successor();
      } else {
        plan_backward_limit(Cursor{}, 0, to.alpha, from.alpha, to.n, params);
      }
    }
  }

private:
  unsigned K_;
  GadgetLibrary lib_;
  Config cur_;
  Nrcs shell_;
  std::vector<std::pair<Transition, Config::Path>> steps_;

  static int resolve_one(const Config& n, const std::string& base) {
    int found = -1;
    const auto& ch = n.children();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (ch[i].label().name == base) {
        if (found >= 0) throw std::logic_error("ambiguous base " + base);
        found = static_cast<int>(i);
      }
    if (found < 0) throw std::logic_error("missing base " + base);
    return found;
  }

  std::vector<int> kids_of(const Config::Path& p, const std::string& base) const {
    std::vector<int> out;
    const auto& ch = cur_.at(p).children();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (ch[i].label().name == base) out.push_back(static_cast<int>(i));
    return out;
  }

  Config::Path first_base(const Cursor& c, const std::string& base) const {
    auto v = kids_base(c, base);
    if (v.empty()) throw std::logic_error("no child labelled " + base);
    return down(c, v[0]);
  }

  Cursor first_base_cursor(const Cursor& c, const std::string& base) const {
    auto v = kids_base(c, base);
    if (v.empty()) throw std::logic_error("no child labelled " + base);
    return c.kid(base);  // resolution requires uniqueness; assert it
  }

  // The child of g (a parked sibling) that carries a child labelled `mark`.
  // `vbase` restricts the sibling's own label when nonempty.
  Cursor side_of_mark(const Cursor& g, const std::string& vbase, const std::string& mark) const {
    const auto& ch = at(g).children();
    std::optional<std::string> base;
    for (const auto& c : ch) {
      if (!vbase.empty() && c.label().name != vbase) continue;
      for (const auto& k : c.children())
        if (k.label().name == mark) base = c.label().name;
    }
    if (!base) throw std::logic_error("no sibling carries mark " + mark);
    // ambiguity between equal-labelled siblings with the same mark is
    // resolved by taking the first; the cases are symmetric
    Cursor c = g;
    c.trail.push_back(*base);
    return c;
  }

  Cursor side_of_mark_neq(const Cursor& g, const std::string& vbase) const {
    // the parked sibling still labelled vbase (the other entered the across)
    Cursor c = g;
    c.trail.push_back(vbase);
    return c;
  }

  Cursor side_with(const Cursor& g, const std::string& vbase, int) const {
    Cursor c = g;
    c.trail.push_back(vbase);
    return c;
  }

  Config::Path locate_by_subtree(const Cursor& g, const Label& vlabel, const Config& sub) const {
    const auto& ch = at(g).children();
    Config::Path base = resolve(g);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (ch[i].label() != vlabel) continue;
      for (const auto& k : ch[i].children())
        if (k == sub) {
          Config::Path p = base;
          p.push_back(static_cast<int>(i));
          return p;
        }
    }
    throw std::logic_error("across: no sibling hosts the acted-on child");
  }

  void plan_big_rounds(Cursor& g, const std::string& start_state, const std::string& ok_state,
                       const std::string& loop_state) {
    const unsigned m = order_of(g);
    const gad::Labels pre = prefix_of(g);
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(m, s, d, a), pre);
    };
    std::string state = start_state;
    while (true) {
      auto rest = kids_base(g, roles::w);
      if (rest.empty()) break;
      int challenger = rest[0];
      emit(U({state, roles::w}, {roles::start_cmp, roles::B_cmp},
             m == 1 ? ann_at(down(g, challenger)) : 0),
           down(g, challenger));
      g.rebase(roles::start_cmp);
      plan_comparator(g, true);
      g.rebase(roles::end_cmp);
      const char* got = nullptr;
      for (const char* x : {roles::big_cmp, roles::equal_cmp})
        if (!kids_base(g, a_tag(x)).empty()) got = x;
      if (!got) throw std::logic_error("candidate was not the biggest");
      int an = kids_base(g, a_tag(got))[0];
      emit(U({roles::end_cmp, a_tag(got)}, {ok_state, roles::A_cmp}, m == 1 ? ann_at(down(g, an)) : 0),
           down(g, an));
      g.rebase(ok_state);
      const char* y = nullptr;
      for (const char* x : {roles::big_cmp, roles::small_cmp, roles::equal_cmp})
        if (!kids_base(g, x).empty()) y = x;
      int yi = kids_base(g, y)[0];
      emit(U({ok_state, y}, {loop_state, roles::wP}, m == 1 ? ann_at(down(g, yi)) : 0), down(g, yi));
      g.rebase(loop_state);
      state = loop_state;
    }
  }

  // ---- Hardy forward pieces ----
  void plan_forward_successor() {
    // remove a term w^0 child of the root and convert it into a budget token
    Cursor root{};
    int leaf = -1;
    const auto& ch = cur_.children();
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (ch[i].label().name != roles::w) continue;
      bool is_unit = K_ == 1 ? ch[i].label().annotation == std::optional<std::uint32_t>(0u)
                             : ch[i].children().empty() && !ch[i].label().annotation;
      if (is_unit) leaf = static_cast<int>(i);
    }
    if (leaf < 0) throw std::logic_error("no unit term to remove");
    emit(gad::prefixed(lib_.make_update(K_, {roles::w, roles::w}, {"f.succ"}, 0), {}), {leaf});
    emit(gad::prefixed(lib_.make_update(K_, {"f.succ"}, {roles::w, roles::hash}), {}), {});
  }

  void plan_forward_limit(Cursor node, unsigned depth, const Nat& budget_n, const EncodingParams& params) {
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(K_, s, d, a), gad::Labels{});
    };
    // enter the phase
    if (depth == 0) {
      emit(U({roles::w}, {roles::start_sm}), {});
      node.rebase("");
      node.trail.clear();
    }
    Cursor g = node;
    plan_smallest(g);
    // the marked child now carries `smallest`; decide by its exponent shape
    Cursor sm = g.kid(roles::smallest);
    Config::Path smp = resolve(sm);
    Config view = cur_.at(smp).relabeled(
        Label(roles::w, cur_.at(smp).label().annotation ? *cur_.at(smp).label().annotation : 0));
    Ordinal e = decode_subtree_exponent(view, static_cast<unsigned>(smp.size()), params);
    if (e.is_limit()) {
      // descend: relabel the phase path and recurse
      std::vector<std::string> src(depth, gad::num("f.ph", depth));
      std::vector<std::string> dst(depth + 1, gad::num("f.ph", depth + 1));
      src.insert(src.end(), {roles::end_sm, roles::smallest});
      dst.push_back(roles::start_sm);
      emit(U(src, dst), smp);
      Cursor deeper;
      for (unsigned i = 0; i < depth + 1; ++i) deeper.trail.push_back(gad::num("f.ph", depth + 1));
      deeper.trail.back() = roles::start_sm;
      // the phase trail: f.ph marks then the start_sm node
      Cursor next;
      for (unsigned i = 0; i < depth; ++i) next.trail.push_back(gad::num("f.ph", depth + 1));
      next.trail.push_back(roles::start_sm);
      plan_forward_limit(next, depth + 1, budget_n, params);
      return;
    }
    // successor exponent: drop one unit child, then copy n-1 times
    {
      Config::Path unit;
      if (smp.size() == K_) {
        unit = smp;  // annotation decrement on the level-K node
        std::vector<std::string> src(depth, gad::num("f.ph", depth));
        std::vector<std::string> dst(depth, gad::num("f.cp", depth));
        src.insert(src.end(), {roles::end_sm, roles::smallest, roles::w});
        dst.insert(dst.end(), {roles::start_copy, roles::mrkd});
        emit(gad::prefixed(lib_.make_update(K_, src, dst, ann_at(smp)), {}), smp);
      } else {
        const auto& ch = cur_.at(smp).children();
        int leaf = -1;
        for (std::size_t i = 0; i < ch.size(); ++i) {
          bool is_unit = smp.size() + 1 == K_
                             ? ch[i].label() == Label(roles::w, 0)
                             : ch[i].label().name == roles::w && ch[i].children().empty();
          if (is_unit) leaf = static_cast<int>(i);
        }
        if (leaf < 0) throw std::logic_error("missing unit child below the smallest term");
        std::vector<std::string> src(depth, gad::num("f.ph", depth));
        std::vector<std::string> dst(depth, gad::num("f.cp", depth));
        src.insert(src.end(), {roles::end_sm, roles::smallest, roles::w});
        dst.insert(dst.end(), {roles::start_copy, roles::mrkd});
        Config::Path a = smp;
        a.push_back(leaf);
        emit(gad::prefixed(lib_.make_update(K_, src, dst,
                                            smp.size() + 1 == K_ ? 0u : 0u),
                           {}),
             a);
      }
    }
    // copy rounds
    Cursor croot;
    for (unsigned i = 0; i < depth; ++i) croot.trail.push_back(gad::num("f.cp", depth));
    croot.trail.push_back(roles::start_copy);
    if (depth == 0) {
      croot.trail.clear();  // the copy root is the tree root
    } else {
      croot.trail.pop_back();
      croot.trail.push_back(roles::start_copy);
    }
    if (depth == 0) {
      Cursor r{};
      Nat rounds = budget_n - 1;
      for (Nat rdone = 0; rdone < rounds; ++rdone) {
        plan_copy(r, false);
        emit(U({roles::end_copy, roles::cpd}, {gad::num("f.cv", 0), roles::mrkd},
               K_ == 1 ? ann_of_kid(r, roles::cpd) : 0),
             first_base(r, roles::cpd));
        emit(U({gad::num("f.cv", 0), roles::hash}, {gad::num("f.cv", 0) + "'", roles::hashP},
               K_ == 1 ? 0u : 0u),
             first_base(r, roles::hash));
        if (rdone + 1 < rounds) emit(U({gad::num("f.cv", 0) + "'"}, {roles::start_copy}), {});
      }
      finish_forward_copy(0, rounds == 0, params);
    } else {
      Cursor r = croot;
      Nat rounds = budget_n - 1;
      for (Nat rdone = 0; rdone < rounds; ++rdone) {
        plan_copy(r, false);
        r.rebase(roles::end_copy);
        std::vector<std::string> src(depth, gad::num("f.cp", depth));
        std::vector<std::string> dst{gad::num("f.cv", depth)};
        for (unsigned p = 1; p < depth; ++p) dst.push_back(gad::num("f.cp", depth));
        src.insert(src.end(), {roles::end_copy, roles::cpd});
        dst.insert(dst.end(), {roles::start_copy, roles::mrkd});
        emit(gad::prefixed(lib_.make_update(K_, src, dst,
                                            resolve(r).size() + 1 == K_ ? ann_of_kid(r, roles::cpd) : 0),
                           {}),
             first_base(r, roles::cpd));
        r.rebase(roles::start_copy);
        emit(U({gad::num("f.cv", depth), roles::hash}, {gad::num("f.cv", depth) + "'", roles::hashP}),
             first_base(Cursor{}, roles::hash));
        if (rdone + 1 < rounds)
          emit(U({gad::num("f.cv", depth) + "'"}, {gad::num("f.cp", depth)}), Config::Path{});
      }
      finish_forward_copy(depth, rounds == 0, params);
    }
  }

  unsigned ann_of_kid(const Cursor& c, const std::string& base) const {
    return ann_at(first_base(c, base));
  }

  void finish_forward_copy(unsigned depth, bool zero_rounds, const EncodingParams&) {
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(K_, s, d, a), gad::Labels{});
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(K_, s, what, d), gad::Labels{});
    };
    std::string cv = gad::num("f.cv", depth);
    if (zero_rounds) throw std::logic_error("limit steps with a zero budget are not representable");
    // the root currently carries f.cv<depth>' after the last conversion
    emit(U({cv + "'", roles::hash}, {cv + "''", roles::hashP}), first_base(Cursor{}, roles::hash));
    while (!kids_base(Cursor{}, roles::hashP).empty())
      emit(U({cv + "''", roles::hashP}, {cv + "''", roles::hash}), first_base(Cursor{}, roles::hashP));
    emit(R({cv + "''"}, roles::hashP, {gad::num("f.fin", depth)}), Config::Path{});
    if (depth == 0) {
      emit(U({gad::num("f.fin", 0), roles::mrkd}, {roles::w, roles::w},
             K_ == 1 ? ann_of_kid(Cursor{}, roles::mrkd) : 0),
           first_base(Cursor{}, roles::mrkd));
    } else {
      std::vector<std::string> src{gad::num("f.fin", depth)};
      for (unsigned p = 1; p < depth; ++p) src.push_back(gad::num("f.cp", depth));
      src.insert(src.end(), {roles::start_copy, roles::mrkd});
      std::vector<std::string> dst(depth + 2, roles::w);
      Cursor mark;
      for (unsigned i = 0; i + 1 < depth; ++i) mark.trail.push_back(gad::num("f.cp", depth));
      mark.trail.push_back(roles::start_copy);
      Config::Path mp = resolve(mark);
      mp.push_back(unique_kid(mark, roles::mrkd));
      emit(gad::prefixed(lib_.make_update(K_, src, dst, mp.size() == K_ ? ann_at(mp) : 0), {}), mp);
    }
  }

  // ---- Hardy backward pieces ----
  void plan_backward_successor() {
    int hi = -1;
    const auto& ch = cur_.children();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (ch[i].label().name == roles::hash) hi = static_cast<int>(i);
    if (hi < 0) throw std::logic_error("no budget token to convert");
    emit(gad::prefixed(lib_.make_update(K_, {roles::w, roles::hash}, {roles::w, roles::w}, 0), {}),
         {hi});
  }

  // Inverts (lambda, n) -> (lambda_n, n) at the given depth.
  void plan_backward_limit(Cursor node, unsigned depth, const Ordinal& lambda, const Ordinal& lambda_n,
                           const Nat& n, const EncodingParams& params) {
    auto U = [&](const std::vector<std::string>& s, const std::vector<std::string>& d, unsigned a = 0) {
      return gad::prefixed(lib_.make_update(K_, s, d, a), gad::Labels{});
    };
    auto R = [&](const std::vector<std::string>& s, const std::string& what,
                 const std::vector<std::string>& d) {
      return gad::prefixed(lib_.make_reset(K_, s, what, d), gad::Labels{});
    };
    if (depth == 0) {
      emit(U({roles::w}, {roles::start_sm}), {});
      node.trail.clear();
    }
    Cursor g = node;
    plan_smallest(g);
    const Ordinal eta = lambda.terms.back().exponent;  // smallest exponent of the target
    Cursor sm = g.kid(roles::smallest);
    Config::Path smp = resolve(sm);
    if (eta.is_limit()) {
      // go deeper: the smallest term of lambda_n is w^{eta_n}
      std::vector<std::string> src(depth, gad::num("b.ph", depth));
      std::vector<std::string> dst(depth + 1, gad::num("b.ph", depth + 1));
      src.insert(src.end(), {roles::end_sm, roles::smallest});
      dst.push_back(roles::start_sm);
      emit(U(src, dst), smp);
      Cursor next;
      for (unsigned i = 0; i < depth; ++i) next.trail.push_back(gad::num("b.ph", depth + 1));
      next.trail.push_back(roles::start_sm);
      Ordinal inner_target = eta;
      Ordinal inner_now = fundamental_sequence(eta, n);
      plan_backward_limit(next, depth + 1, inner_target, inner_now, n, params);
      return;
    }
    // eta = beta + 1: lambda_n carries n copies of w^beta; remove n-1 of
    // them against budget conversions and bump the survivor
    if (depth == 0) {
      emit(U({roles::end_sm, roles::smallest}, {"b.pr0", roles::A_cmp},
             smp.size() == K_ ? ann_at(smp) : 0),
           smp);
      Nat rounds = n - 1;
      std::string loop_root = "b.pr0";
      for (Nat r = 0; r < rounds; ++r) {
        Cursor root{};
        // pick another copy of w^beta
        Ordinal beta = predecessor_of_successor(eta);
        int pick = -1;
        const auto& ch = cur_.children();
        for (std::size_t i = 0; i < ch.size(); ++i) {
          if (ch[i].label().name != roles::w) continue;
          Config view = ch[i].relabeled(
              Label(roles::w, ch[i].label().annotation ? *ch[i].label().annotation : 0));
          if (decode_subtree_exponent(view, 1, params) == beta) pick = static_cast<int>(i);
        }
        if (pick < 0) throw std::logic_error("no equal copy to remove");
        emit(U({loop_root, roles::w}, {roles::start_cmp, roles::B_cmp},
               K_ == 1 ? ann_at({pick}) : 0),
             {pick});
        plan_comparator(Cursor{});
        // relabel one equal copy as the candidate, remove the other
        Cursor root2{};
        int keep = kids_base(root2, roles::equal_cmp)[0];
        emit(U({roles::end_cmp, roles::equal_cmp}, {"b.eq0", roles::A_cmp},
               K_ == 1 ? ann_at({keep}) : 0),
             {keep});
        int drop = kids_base(root2, roles::equal_cmp)[0];
        emit(U({"b.eq0", roles::equal_cmp}, {gad::num("b.cv", 0)}, K_ == 1 ? ann_at({drop}) : 0),
             {drop});
        emit(U({gad::num("b.cv", 0), roles::hash}, {gad::num("b.cv", 0) + "'", roles::hashP}),
             first_base(Cursor{}, roles::hash));
        loop_root = gad::num("b.cv", 0) + "'";
      }
      // guard conversion, transfer back, reset, bump the candidate
      emit(U({gad::num("b.cv", 0) + "'", roles::hash}, {gad::num("b.cv", 0) + "''", roles::hashP}),
           first_base(Cursor{}, roles::hash));
      while (!kids_base(Cursor{}, roles::hashP).empty())
        emit(U({gad::num("b.cv", 0) + "''", roles::hashP}, {gad::num("b.cv", 0) + "''", roles::hash}),
             first_base(Cursor{}, roles::hashP));
      emit(R({gad::num("b.cv", 0) + "''"}, roles::hashP, {gad::num("b.fin", 0)}), Config::Path{});
      int an = kids_base(Cursor{}, roles::A_cmp)[0];
      emit(gad::prefixed(lib_.make_update(K_, {gad::num("b.fin", 0), roles::A_cmp, roles::w},
                                          {roles::w, roles::w, roles::w}, K_ == 1 ? ann_at({an}) : 0),
                         {}),
           K_ == 1 ? Config::Path{an} : Config::Path{an});
      return;
    }
    throw std::logic_error("backward limit planning below the root is exercised at k = 1 only");
  }
};

}  // namespace gad

// ---------------------------------------------------------------------------
// Encoder predicates
// ---------------------------------------------------------------------------

namespace gad {

// Compares two encoder subtrees ignoring their root marks.
inline bool subtree_leq(const Config& a, const Config& b) {
  auto norm = [](const Config& c) {
    return c.relabeled(Label(roles::w, c.label().annotation ? *c.label().annotation : 0));
  };
  return leq_induced(norm(a), norm(b));
}

inline bool subtree_eq(const Config& a, const Config& b) {
  return subtree_leq(a, b) && subtree_leq(b, a);
}

inline Ordinal subtree_exponent(const Config& c, unsigned level, const EncodingParams& p) {
  Config view = c.relabeled(Label(roles::w, c.label().annotation ? *c.label().annotation : 0));
  return decode_subtree_exponent(view, level, p);
}

}  // namespace gad

enum class EncoderCheck {
  LossySmallest,
  PerfectSmallest,
  LossyBiggest,
  PerfectBiggest,
  LossyCopy,
  PerfectCopy,
  LossyCompared,
  PerfectCompared,
};

// Checks an output configuration against its input encoder per the
// definitional clauses: node containment relative to the reference, label
// rules, and verdict correctness via decoding.
inline bool validate_encoder(EncoderCheck check, const EncodingParams& params, const Config& reference,
                             const Config& candidate) {
  const bool perfect = check == EncoderCheck::PerfectSmallest || check == EncoderCheck::PerfectBiggest ||
                       check == EncoderCheck::PerfectCopy || check == EncoderCheck::PerfectCompared;
  auto base_of = [](const Config& c) { return c.label().name; };

  if (check == EncoderCheck::LossySmallest || check == EncoderCheck::PerfectSmallest ||
      check == EncoderCheck::LossyBiggest || check == EncoderCheck::PerfectBiggest) {
    bool smallest_kind = check == EncoderCheck::LossySmallest || check == EncoderCheck::PerfectSmallest;
    if (base_of(candidate) != (smallest_kind ? roles::end_sm : roles::end_big)) return false;
    const char* markname = smallest_kind ? roles::smallest : roles::biggest;
    std::vector<Config> marked, others, rest;
    for (const auto& c : candidate.children()) {
      if (base_of(c) == markname)
        marked.push_back(c);
      else if (base_of(c) == roles::w)
        others.push_back(c);
      else
        rest.push_back(c);
    }
    if (marked.size() != 1) return false;
    // non-w reference children must survive untouched
    std::vector<Config> ref_w, ref_rest;
    for (const auto& c : reference.children())
      (base_of(c) == roles::w ? ref_w : ref_rest).push_back(c);
    if (std::multiset<Config>(rest.begin(), rest.end()) !=
        std::multiset<Config>(ref_rest.begin(), ref_rest.end()))
      return false;
    // injective matching of surviving children into the reference w-children
    std::vector<Config> survivors = others;
    survivors.push_back(marked[0]);
    if (survivors.size() > ref_w.size()) return false;
    std::vector<int> match(ref_w.size(), -1);
    std::function<bool(int, std::vector<bool>&)> aug = [&](int i, std::vector<bool>& used) {
      for (std::size_t j = 0; j < ref_w.size(); ++j) {
        if (used[j] || !gad::subtree_leq(survivors[static_cast<std::size_t>(i)], ref_w[j])) continue;
        used[j] = true;
        if (match[j] < 0 || aug(match[j], used)) {
          match[j] = i;
          return true;
        }
      }
      return false;
    };
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      std::vector<bool> used(ref_w.size(), false);
      if (!aug(static_cast<int>(i), used)) return false;
    }
    if (perfect) {
      if (survivors.size() != ref_w.size()) return false;
      std::multiset<Config> a, b;
      for (const auto& c : survivors)
        a.insert(c.relabeled(Label(roles::w, c.label().annotation ? *c.label().annotation : 0)));
      for (const auto& c : ref_w)
        b.insert(c.relabeled(Label(roles::w, c.label().annotation ? *c.label().annotation : 0)));
      if (a != b) return false;
    }
    // the mark must be extremal among the surviving children
    Ordinal me = gad::subtree_exponent(marked[0], 1, params);
    for (const auto& c : others) {
      Ordinal oe = gad::subtree_exponent(c, 1, params);
      if (smallest_kind ? oe < me : oe > me) return false;
    }
    return true;
  }

  if (check == EncoderCheck::LossyCopy || check == EncoderCheck::PerfectCopy) {
    if (base_of(candidate) != roles::end_copy) return false;
    std::vector<Config> ref_rest;
    std::optional<Config> ref_marked;
    for (const auto& c : reference.children()) {
      if (base_of(c) == roles::mrkd) {
        if (ref_marked) return false;
        ref_marked = c;
      } else {
        ref_rest.push_back(c);
      }
    }
    if (!ref_marked) return false;
    std::optional<Config> copy;
    std::vector<Config> cand_rest;
    for (const auto& c : candidate.children()) {
      if (base_of(c) == roles::cpd) {
        if (copy) return false;
        copy = c;
      } else {
        cand_rest.push_back(c);
      }
    }
    if (!copy) return false;
    // one of the w-children plays the original; the rest must match exactly
    for (std::size_t pick = 0; pick < cand_rest.size(); ++pick) {
      if (base_of(cand_rest[pick]) != roles::w) continue;
      std::multiset<Config> remaining;
      for (std::size_t i = 0; i < cand_rest.size(); ++i)
        if (i != pick) remaining.insert(cand_rest[i]);
      if (remaining != std::multiset<Config>(ref_rest.begin(), ref_rest.end())) continue;
      const Config& original = cand_rest[pick];
      if (!gad::subtree_leq(original, *copy) || !gad::subtree_leq(*copy, *ref_marked)) continue;
      if (perfect &&
          !(gad::subtree_eq(original, *copy) && gad::subtree_eq(*copy, *ref_marked)))
        continue;
      return true;
    }
    return false;
  }

  // compared encoders
  if (base_of(candidate) != roles::end_cmp) return false;
  std::optional<Config> refA, refB;
  std::vector<Config> ref_rest;
  for (const auto& c : reference.children()) {
    if (base_of(c) == roles::A_cmp) {
      if (refA) return false;
      refA = c;
    } else if (base_of(c) == roles::B_cmp) {
      if (refB) return false;
      refB = c;
    } else {
      ref_rest.push_back(c);
    }
  }
  if (!refA || !refB) return false;
  std::vector<Config> verdicts, cand_rest;
  for (const auto& c : candidate.children()) {
    std::string b = base_of(c);
    if (b == roles::big_cmp || b == roles::small_cmp || b == roles::equal_cmp)
      verdicts.push_back(c);
    else
      cand_rest.push_back(c);
  }
  if (verdicts.size() != 2) return false;
  if (std::multiset<Config>(cand_rest.begin(), cand_rest.end()) !=
      std::multiset<Config>(ref_rest.begin(), ref_rest.end()))
    return false;
  std::multiset<std::string> names{base_of(verdicts[0]), base_of(verdicts[1])};
  bool both_equal = names == std::multiset<std::string>{roles::equal_cmp, roles::equal_cmp};
  bool strict = names == std::multiset<std::string>{roles::big_cmp, roles::small_cmp};
  if (!both_equal && !strict) return false;
  Ordinal e0 = gad::subtree_exponent(verdicts[0], 1, params);
  Ordinal e1 = gad::subtree_exponent(verdicts[1], 1, params);
  if (both_equal && e0 != e1) return false;
  if (strict) {
    const Config& big = base_of(verdicts[0]) == roles::big_cmp ? verdicts[0] : verdicts[1];
    const Config& small = base_of(verdicts[0]) == roles::big_cmp ? verdicts[1] : verdicts[0];
    if (!(gad::subtree_exponent(small, 1, params) < gad::subtree_exponent(big, 1, params)))
      return false;
  }
  // containment: each verdict child embeds into one of the reference sides
  auto fits = [&](const Config& v, const Config& r) { return gad::subtree_leq(v, r); };
  bool ok = (fits(verdicts[0], *refA) && fits(verdicts[1], *refB)) ||
            (fits(verdicts[0], *refB) && fits(verdicts[1], *refA));
  if (!ok) return false;
  if (perfect) {
    bool exact = (gad::subtree_eq(verdicts[0], *refA) && gad::subtree_eq(verdicts[1], *refB)) ||
                 (gad::subtree_eq(verdicts[0], *refB) && gad::subtree_eq(verdicts[1], *refA));
    if (!exact) return false;
    if (candidate.size() != reference.size()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Perfect-run synthesis dispatch
// ---------------------------------------------------------------------------

inline PerfectRun synthesize_perfect_run(const GadgetMachine& gm, const Config& input) {
  gad::Planner pl(gm.kind.params.k, gm.kind.params.ell, input);
  switch (gm.kind.type) {
    case GadgetType::Copy:
      pl.plan_copy({}, false);
      break;
    case GadgetType::Comparator:
      pl.plan_comparator({});
      break;
    case GadgetType::Smallest:
      pl.plan_smallest({});
      break;
    case GadgetType::Biggest:
      pl.plan_biggest({});
      break;
    case GadgetType::HardyForward:
      pl.plan_hardy_forward(gm.kind.params);
      break;
    case GadgetType::HardyBackward:
      throw std::invalid_argument("backward runs need a target state; use synthesize_backward_run");
  }
  return pl.take_plan();
}

inline PerfectRun synthesize_backward_run(const GadgetMachine& gm, const Config& input,
                                          const Ordinal& target_alpha, const Nat& target_n) {
  if (gm.kind.type != GadgetType::HardyBackward)
    throw std::invalid_argument("synthesize_backward_run expects the backward machine");
  gad::Planner pl(gm.kind.params.k, gm.kind.params.ell, input);
  pl.plan_hardy_backward(target_alpha, target_n, gm.kind.params);
  return pl.take_plan();
}

// ---------------------------------------------------------------------------
// Bounded soundness search: explore runs, validate every terminal against
// the lossy predicates (or the Hardy bound for the Hardy machines).
// ---------------------------------------------------------------------------

struct SoundnessReport {
  bool cutoff = false;
  std::size_t explored = 0;
  std::size_t terminals = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline SoundnessReport check_soundness_by_search(const GadgetMachine& gm, const Config& input,
                                                 std::size_t frontier_cap) {
  SoundnessReport rep;
  const EncodingParams& params = gm.kind.params;
  std::optional<std::pair<Ordinal, Nat>> hardy_input;
  std::optional<Nat> hardy_value;
  if (gm.kind.type == GadgetType::HardyForward || gm.kind.type == GadgetType::HardyBackward) {
    hardy_input = decode_hardy_config(input, params);
    auto hv = hardy_eval(ControlFunction::successor(), hardy_input->first, hardy_input->second, 1u << 24);
    if (hv.exhausted()) throw std::invalid_argument("input Hardy value exceeds the desk budget");
    hardy_value = *hv.value;
  }

  auto classify = [&](const Config& c) -> std::optional<std::string> {
    const std::string& base = c.label().name;
    auto check_with = [&](EncoderCheck chk) -> std::optional<std::string> {
      ++rep.terminals;
      if (!validate_encoder(chk, params, input, c))
        return "predicate violated by terminal " + c.str();
      return std::nullopt;
    };
    switch (gm.kind.type) {
      case GadgetType::Smallest:
        if (base == roles::end_sm) return check_with(EncoderCheck::LossySmallest);
        return std::nullopt;
      case GadgetType::Biggest:
        if (base == roles::end_big) return check_with(EncoderCheck::LossyBiggest);
        return std::nullopt;
      case GadgetType::Copy:
        if (base == roles::end_copy) return check_with(EncoderCheck::LossyCopy);
        return std::nullopt;
      case GadgetType::Comparator:
        if (base == roles::end_cmp) return check_with(EncoderCheck::LossyCompared);
        return std::nullopt;
      case GadgetType::HardyForward:
      case GadgetType::HardyBackward:
        if (base == roles::w && c != input) {
          ++rep.terminals;
          try {
            auto [a2, n2] = decode_hardy_config(c, params);
            auto hv = hardy_eval(ControlFunction::successor(), a2, n2, 1u << 24);
            if (hv.exhausted()) return std::string("terminal Hardy value exceeded the desk budget");
            if (*hv.value > *hardy_value)
              return "terminal " + c.str() + " exceeds the input Hardy value";
          } catch (const std::exception& e) {
            return "terminal " + c.str() + " is not a Hardy configuration: " + e.what();
          }
        }
        return std::nullopt;
    }
    return std::nullopt;
  };

  std::set<Config> seen{input};
  std::deque<Config> queue{input};
  if (auto v = classify(input)) rep.violations.push_back(*v);
  while (!queue.empty()) {
    Config cur = queue.front();
    queue.pop_front();
    ++rep.explored;
    for (const auto& st : successors(gm.machine, cur)) {
      if (seen.count(st.result)) continue;
      if (seen.size() >= frontier_cap) {
        rep.cutoff = true;
        return rep;
      }
      seen.insert(st.result);
      if (auto v = classify(st.result)) {
        rep.violations.push_back(*v);
        if (rep.violations.size() > 8) return rep;
      }
      queue.push_back(st.result);
    }
  }
  return rep;
}

}  // namespace nrcs

#endif
