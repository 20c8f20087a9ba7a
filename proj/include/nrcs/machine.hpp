#ifndef NRCS_MACHINE_HPP
#define NRCS_MACHINE_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nrcs/tree.hpp>

namespace nrcs {

// Update transitions rename a root path and may create or delete nodes at its
// end; reset transitions remove all children of the path end carrying a given
// label. Generalized resets remove a set of labels at once; they expand into
// chains of plain resets.
struct Transition {
  enum class Kind { Update, Reset, GeneralizedReset };

  Kind kind = Kind::Update;
  std::vector<Label> src;
  std::vector<Label> dst;
  Label reset_label;               // Kind::Reset
  std::vector<Label> reset_set;    // Kind::GeneralizedReset, kept sorted

  static Transition update(std::vector<Label> src, std::vector<Label> dst) {
    Transition t;
    t.kind = Kind::Update;
    t.src = std::move(src);
    t.dst = std::move(dst);
    return t;
  }

  static Transition reset(std::vector<Label> src, Label what, std::vector<Label> dst) {
    Transition t;
    t.kind = Kind::Reset;
    t.src = std::move(src);
    t.reset_label = std::move(what);
    t.dst = std::move(dst);
    return t;
  }

  static Transition generalized_reset(std::vector<Label> src, std::vector<Label> what,
                                      std::vector<Label> dst) {
    Transition t;
    t.kind = Kind::GeneralizedReset;
    t.src = std::move(src);
    std::sort(what.begin(), what.end());
    what.erase(std::unique(what.begin(), what.end()), what.end());
    t.reset_set = std::move(what);
    t.dst = std::move(dst);
    return t;
  }

  bool removes(const Label& l) const {
    if (kind == Kind::Reset) return l == reset_label;
    if (kind == Kind::GeneralizedReset)
      return std::binary_search(reset_set.begin(), reset_set.end(), l);
    return false;
  }

  bool operator==(const Transition& o) const {
    return kind == o.kind && src == o.src && dst == o.dst && reset_label == o.reset_label &&
           reset_set == o.reset_set;
  }
  bool operator<(const Transition& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (src != o.src) return src < o.src;
    if (dst != o.dst) return dst < o.dst;
    if (reset_label != o.reset_label) return reset_label < o.reset_label;
    return reset_set < o.reset_set;
  }

  std::string str() const {
    auto path = [](const std::vector<Label>& p) {
      std::string s;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ",";
        s += p[i].str();
      }
      return s;
    };
    switch (kind) {
      case Kind::Update:
        return "update " + path(src) + " -> " + path(dst);
      case Kind::Reset:
        return "reset " + path(src) + " [" + reset_label.str() + "] -> " + path(dst);
      case Kind::GeneralizedReset: {
        std::string s = "greset " + path(src) + " [";
        for (std::size_t i = 0; i < reset_set.size(); ++i) {
          if (i) s += " ";
          s += reset_set[i].str();
        }
        return s + "] -> " + path(dst);
      }
    }
    return "";
  }
};

struct Nrcs {
  unsigned k = 1;
  std::set<Label> states;
  std::vector<Transition> transitions;

  void add_state(const Label& l) { states.insert(l); }

  int add_transition(Transition t) {
    validate_transition(t);
    for (const auto& l : t.src) states.insert(l);
    for (const auto& l : t.dst) states.insert(l);
    if (t.kind == Transition::Kind::Reset) states.insert(t.reset_label);
    for (const auto& l : t.reset_set) states.insert(l);
    transitions.push_back(std::move(t));
    return static_cast<int>(transitions.size()) - 1;
  }

  void validate_transition(const Transition& t) const {
    if (t.src.empty() || t.dst.empty()) throw std::invalid_argument("empty transition path");
    if (t.kind == Transition::Kind::Update) {
      if (t.src.size() > k + 1 || t.dst.size() > k + 1)
        throw std::invalid_argument("update path exceeds k+1 labels: " + t.str());
    } else {
      if (t.src.size() != t.dst.size())
        throw std::invalid_argument("reset src/dst length mismatch: " + t.str());
      if (t.src.size() > k) throw std::invalid_argument("reset path exceeds k labels: " + t.str());
      if (t.kind == Transition::Kind::GeneralizedReset && t.reset_set.empty())
        throw std::invalid_argument("generalized reset with empty label set");
    }
  }

  bool config_valid(const Config& c) const {
    if (c.height() > static_cast<int>(k)) return false;
    if (!states.count(c.label())) return false;
    for (const auto& ch : c.children())
      if (!config_valid(ch)) return false;
    return true;
  }

  std::vector<Transition> updates() const {
    std::vector<Transition> r;
    for (const auto& t : transitions)
      if (t.kind == Transition::Kind::Update) r.push_back(t);
    return r;
  }
  std::vector<Transition> resets() const {
    std::vector<Transition> r;
    for (const auto& t : transitions)
      if (t.kind != Transition::Kind::Update) r.push_back(t);
    return r;
  }

  int index_of(const Transition& t) const {
    for (std::size_t i = 0; i < transitions.size(); ++i)
      if (transitions[i] == t) return static_cast<int>(i);
    return -1;
  }
};

// ---------------------------------------------------------------------------
// Step semantics
// ---------------------------------------------------------------------------

// All root-started paths of c whose labels match `src`.
inline std::vector<Config::Path> matching_anchors(const Config& c, const std::vector<Label>& src) {
  std::vector<Config::Path> out;
  if (c.label() != src[0]) return out;
  std::vector<std::pair<const Config*, Config::Path>> frontier{{&c, {}}};
  for (std::size_t depth = 1; depth < src.size(); ++depth) {
    std::vector<std::pair<const Config*, Config::Path>> next;
    for (auto& [node, path] : frontier) {
      const auto& kids = node->children();
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (kids[i].label() == src[depth]) {
          Config::Path p = path;
          p.push_back(static_cast<int>(i));
          next.emplace_back(&kids[i], std::move(p));
        }
      }
    }
    frontier = std::move(next);
  }
  for (auto& [node, path] : frontier) out.push_back(path);
  return out;
}

namespace detail {

inline Config apply_rec(const Config& c, const Transition& t, const Config::Path& anchor,
                        std::size_t depth, unsigned k) {
  const std::size_t i = t.src.size() - 1;
  const std::size_t j = t.dst.size() - 1;
  Label new_label = depth <= j ? t.dst[depth] : c.label();
  std::vector<Config> kids = c.children();

  if (t.kind == Transition::Kind::Update && i < j && depth == i) {
    // incrementing: attach the fresh chain dst[i+1..j]
    if (j > k) throw std::invalid_argument("increment exceeds height bound");
    Config chain = leaf(t.dst[j]);
    for (std::size_t l = j - 1; l > i; --l) chain = Config(t.dst[l], {chain});
    kids.push_back(std::move(chain));
  } else if (t.kind == Transition::Kind::Update && j < i && depth == j) {
    // decrementing: remove the subtree at the next path node
    int victim = anchor[depth];
    kids.erase(kids.begin() + victim);
    return Config(std::move(new_label), std::move(kids));
  } else if (t.kind != Transition::Kind::Update && depth == i) {
    // reset: drop every child carrying a reset label
    std::vector<Config> kept;
    for (auto& ch : kids)
      if (!t.removes(ch.label())) kept.push_back(std::move(ch));
    kids = std::move(kept);
  }

  if (depth < i && !(t.kind == Transition::Kind::Update && j < i && depth >= j)) {
    int next = anchor[depth];
    kids[static_cast<std::size_t>(next)] = apply_rec(c.children()[static_cast<std::size_t>(next)], t,
                                                     anchor, depth + 1, k);
  }
  return Config(std::move(new_label), std::move(kids));
}

}  // namespace detail

// Applies `t` along the root path designated by `anchor` (child indices; the
// path length must equal |src|). Returns the canonical successor.
inline Config apply_at(const Nrcs& n, const Config& c, const Transition& t,
                       const Config::Path& anchor) {
  if (anchor.size() + 1 != t.src.size()) throw std::invalid_argument("anchor/src length mismatch");
  const Config* cur = &c;
  if (cur->label() != t.src[0]) throw std::invalid_argument("anchor does not match src");
  for (std::size_t d = 0; d < anchor.size(); ++d) {
    cur = &cur->children().at(static_cast<std::size_t>(anchor[d]));
    if (cur->label() != t.src[d + 1]) throw std::invalid_argument("anchor does not match src");
  }
  return detail::apply_rec(c, t, anchor, 0, n.k);
}

struct Step {
  int transition = -1;
  Config::Path anchor;
  Config result;
};

inline std::vector<Step> successors(const Nrcs& n, const Config& c) {
  std::vector<Step> out;
  for (std::size_t ti = 0; ti < n.transitions.size(); ++ti) {
    const Transition& t = n.transitions[ti];
    for (auto& anchor : matching_anchors(c, t.src))
      out.push_back({static_cast<int>(ti), anchor, apply_at(n, c, t, anchor)});
  }
  return out;
}

// Successor configurations de-duplicated by canonical form.
inline std::set<Config> successor_set(const Nrcs& n, const Config& c) {
  std::set<Config> out;
  for (auto& s : successors(n, c)) out.insert(s.result);
  return out;
}

// Lossy semantics: drop any set of whole subtrees, then take an exact step.
inline std::set<Config> lossy_step(const Nrcs& n, const Config& c, const Transition& t) {
  std::set<Config> out;
  for (const auto& sub : induced_subconfigs(c))
    for (auto& anchor : matching_anchors(sub, t.src)) out.insert(apply_at(n, sub, t, anchor));
  return out;
}

inline std::set<Config> lossy_successor_set(const Nrcs& n, const Config& c) {
  std::set<Config> out;
  for (const auto& t : n.transitions) {
    auto s = lossy_step(n, c, t);
    out.insert(s.begin(), s.end());
  }
  return out;
}

// Expands a generalized reset into the chain of plain resets through fresh
// intermediate labels. `fresh` must yield labels unused by the machine.
inline std::vector<Transition> expand_generalized_reset(
    const Transition& t, const std::function<Label(int)>& fresh) {
  if (t.kind != Transition::Kind::GeneralizedReset)
    throw std::invalid_argument("generalized reset expected");
  if (t.reset_set.empty()) throw std::invalid_argument("empty reset set");
  const std::size_t m = t.reset_set.size();
  if (m == 1) return {Transition::reset(t.src, t.reset_set[0], t.dst)};
  std::vector<Transition> out;
  auto stage = [&](int idx) {
    return std::vector<Label>(t.src.size(), fresh(idx));
  };
  out.push_back(Transition::reset(t.src, t.reset_set[0], stage(1)));
  for (std::size_t jj = 1; jj + 1 < m; ++jj)
    out.push_back(Transition::reset(stage(static_cast<int>(jj)), t.reset_set[jj],
                                    stage(static_cast<int>(jj) + 1)));
  out.push_back(Transition::reset(stage(static_cast<int>(m) - 1), t.reset_set[m - 1], t.dst));
  return out;
}

// ---------------------------------------------------------------------------
// Machine file format (line oriented, whole-line # comments):
//   nrcs k=2
//   states q0 q1 q2 q3
//   update q0,q1 -> q1
//   reset  q0 [q1] -> q3
//   greset q0 [a b] -> q3
//   init   q0(q1(q3),q2,q1(q2,q2))
//   target q3(q2)
// ---------------------------------------------------------------------------

struct MachineFile {
  Nrcs machine;
  std::optional<Config> init;
  std::optional<Config> target;
};

namespace detail {

inline std::vector<Label> parse_label_path(const std::string& text, int line) {
  std::vector<Label> out;
  std::string cur;
  auto flush = [&]() {
    std::string trimmed;
    for (char ch : cur)
      if (ch != ' ' && ch != '\t') trimmed += ch;
    if (trimmed.empty()) throw ParseError("empty label in path on line " + std::to_string(line), 0);
    out.push_back(parse_label(trimmed));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == ',')
      flush();
    else
      cur += ch;
  }
  flush();
  return out;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

inline MachineFile parse_machine_file(const std::string& text) {
  MachineFile mf;
  bool have_header = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw ParseError(msg + " on line " + std::to_string(lineno), 0); };
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    std::string rest;
    std::getline(ls, rest);
    while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.pop_back();
    std::size_t skip = rest.find_first_not_of(" \t");
    rest = skip == std::string::npos ? "" : rest.substr(skip);

    if (kw == "nrcs") {
      if (have_header) fail("duplicate header");
      auto eq = rest.find("k=");
      if (eq == std::string::npos) fail("expected k=<n> in header");
      try {
        mf.machine.k = static_cast<unsigned>(std::stoul(rest.substr(eq + 2)));
      } catch (...) {
        fail("bad k value");
      }
      if (mf.machine.k < 1) fail("k must be >= 1");
      have_header = true;
      continue;
    }
    if (!have_header) fail("expected 'nrcs k=<n>' header first");
    if (kw == "states") {
      for (const auto& w : detail::split_ws(rest)) mf.machine.add_state(parse_label(w));
    } else if (kw == "update") {
      auto arrow = rest.find("->");
      if (arrow == std::string::npos) fail("expected '->' in update");
      try {
        mf.machine.add_transition(
            Transition::update(detail::parse_label_path(rest.substr(0, arrow), lineno),
                               detail::parse_label_path(rest.substr(arrow + 2), lineno)));
      } catch (const std::exception& e) {
        fail(e.what());
      }
    } else if (kw == "reset" || kw == "greset") {
      auto lb = rest.find('[');
      auto rb = rest.find(']');
      auto arrow = rest.find("->", rb == std::string::npos ? 0 : rb);
      if (lb == std::string::npos || rb == std::string::npos || arrow == std::string::npos || rb < lb)
        fail("expected 'src [labels] -> dst' in reset");
      try {
        auto src = detail::parse_label_path(rest.substr(0, lb), lineno);
        auto dst = detail::parse_label_path(rest.substr(arrow + 2), lineno);
        auto labels = detail::split_ws(rest.substr(lb + 1, rb - lb - 1));
        if (labels.empty()) fail("empty reset label set");
        if (kw == "reset") {
          if (labels.size() != 1) fail("plain reset takes exactly one label");
          mf.machine.add_transition(Transition::reset(std::move(src), parse_label(labels[0]), std::move(dst)));
        } else {
          std::vector<Label> ls2;
          for (auto& w : labels) ls2.push_back(parse_label(w));
          mf.machine.add_transition(
              Transition::generalized_reset(std::move(src), std::move(ls2), std::move(dst)));
        }
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        fail(e.what());
      }
    } else if (kw == "init") {
      mf.init = parse_tree(rest);
    } else if (kw == "target") {
      mf.target = parse_tree(rest);
    } else {
      fail("unknown keyword '" + kw + "'");
    }
  }
  if (!have_header) throw ParseError("missing 'nrcs k=<n>' header", 0);
  if (mf.init && !mf.machine.config_valid(*mf.init)) throw ParseError("init configuration invalid for machine", 0);
  if (mf.target && !mf.machine.config_valid(*mf.target)) throw ParseError("target configuration invalid for machine", 0);
  return mf;
}

inline std::string render_machine_file(const MachineFile& mf) {
  std::ostringstream out;
  out << "nrcs k=" << mf.machine.k << "\n";
  std::string states_line;
  int per_line = 0;
  for (const auto& s : mf.machine.states) {
    if (per_line == 0) states_line += "states";
    states_line += " " + s.str();
    if (++per_line == 16) {
      states_line += "\n";
      per_line = 0;
    }
  }
  if (per_line != 0) states_line += "\n";
  out << states_line;
  for (const auto& t : mf.machine.transitions) out << t.str() << "\n";
  if (mf.init) out << "init " << mf.init->str() << "\n";
  if (mf.target) out << "target " << mf.target->str() << "\n";
  return out.str();
}

}  // namespace nrcs

#endif
