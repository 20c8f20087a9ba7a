#ifndef NRCS_TREE_HPP
#define NRCS_TREE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nrcs/ordinal.hpp>

namespace nrcs {

// A node label: a base name plus an optional last-level annotation, rendered
// as name@wI. Annotations realize the (name, w^i) pair notation used by the
// ordinal encoders on level-k nodes.
struct Label {
  std::string name;
  std::optional<std::uint32_t> annotation;

  Label() = default;
  Label(std::string n) : name(std::move(n)) {}
  Label(std::string n, std::uint32_t a) : name(std::move(n)), annotation(a) {}
  Label(std::string n, std::optional<std::uint32_t> a) : name(std::move(n)), annotation(a) {}

  bool operator==(const Label& o) const { return name == o.name && annotation == o.annotation; }
  bool operator!=(const Label& o) const { return !(*this == o); }
  bool operator<(const Label& o) const {
    if (name != o.name) return name < o.name;
    return annotation < o.annotation;
  }

  std::string str() const {
    if (annotation) return name + "@w" + std::to_string(*annotation);
    return name;
  }
};

// Finite rooted unordered labelled tree kept in canonical form: children are
// sorted by a structural total order, so isomorphic trees compare equal.
// Values are immutable and cheaply shareable.
class Config {
public:
  struct Node {
    Label label;
    std::vector<Config> children;  // canonically sorted
    int height = 0;
    int size = 1;
    std::size_t hash = 0;
  };

  Config() : n_(leaf_node(Label("?"))) {}
  explicit Config(Label label, std::vector<Config> children = {}) {
    std::sort(children.begin(), children.end());
    auto node = std::make_shared<Node>();
    node->label = std::move(label);
    node->children = std::move(children);
    for (const auto& c : node->children) {
      node->height = std::max(node->height, c.height() + 1);
      node->size += c.size();
    }
    node->hash = compute_hash(*node);
    n_ = std::move(node);
  }

  const Label& label() const { return n_->label; }
  const std::vector<Config>& children() const { return n_->children; }
  int height() const { return n_->height; }
  int size() const { return n_->size; }
  std::size_t hash() const { return n_->hash; }
  const Node* node() const { return n_.get(); }

  bool operator==(const Config& o) const {
    if (n_ == o.n_) return true;
    if (n_->hash != o.n_->hash) return false;
    return cmp(*this, o) == 0;
  }
  bool operator!=(const Config& o) const { return !(*this == o); }
  bool operator<(const Config& o) const { return cmp(*this, o) < 0; }

  static int cmp(const Config& a, const Config& b) {
    if (a.n_ == b.n_) return 0;
    if (a.label() != b.label()) return a.label() < b.label() ? -1 : 1;
    const auto& ac = a.children();
    const auto& bc = b.children();
    for (std::size_t i = 0; i < ac.size() && i < bc.size(); ++i) {
      int c = cmp(ac[i], bc[i]);
      if (c != 0) return c;
    }
    if (ac.size() != bc.size()) return ac.size() < bc.size() ? -1 : 1;
    return 0;
  }

  // Node addressing: a path of child indices from the root (empty = root).
  using Path = std::vector<int>;

  const Config& at(const Path& p) const {
    const Config* cur = this;
    for (int i : p) cur = &cur->children().at(static_cast<std::size_t>(i));
    return *cur;
  }

  // Returns a copy with the subtree at `p` replaced.
  Config with_subtree(const Path& p, const Config& sub, std::size_t depth = 0) const {
    if (depth == p.size()) return sub;
    std::vector<Config> kids = children();
    int idx = p[depth];
    kids[static_cast<std::size_t>(idx)] = kids[static_cast<std::size_t>(idx)].with_subtree(p, sub, depth + 1);
    return Config(label(), std::move(kids));
  }

  Config relabeled(const Label& l) const { return Config(l, children()); }

  std::string str() const {
    std::string out = label().str();
    if (!children().empty()) {
      out += "(";
      for (std::size_t i = 0; i < children().size(); ++i) {
        if (i) out += ",";
        out += children()[i].str();
      }
      out += ")";
    }
    return out;
  }

private:
  std::shared_ptr<const Node> n_;

  static std::shared_ptr<const Node> leaf_node(Label l) {
    auto node = std::make_shared<Node>();
    node->label = std::move(l);
    node->hash = compute_hash(*node);
    return node;
  }

  static std::size_t compute_hash(const Node& node) {
    std::size_t h = std::hash<std::string>{}(node.label.name);
    h = h * 1000003u + (node.label.annotation ? 1u + *node.label.annotation : 0u);
    for (const auto& c : node.children) h = h * 1000003u + c.hash();
    return h;
  }
};

inline Config leaf(Label l) { return Config(std::move(l)); }

// ---------------------------------------------------------------------------
// Induced-subgraph order: C <=is D iff C is obtained from D by deleting whole
// subtrees. Decided by recursive maximum bipartite matching on children.
// ---------------------------------------------------------------------------

namespace detail {

class InducedMatcher {
public:
  bool leq(const Config& c, const Config& d) {
    if (c.label() != d.label()) return false;
    if (c.size() > d.size() || c.height() > d.height()) return false;
    auto key = std::make_pair(c.node(), d.node());
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool ok = match_children(c, d, nullptr);
    memo_[key] = ok;
    return ok;
  }

  // Like leq but records, for every node of c, the child index chosen in d.
  // The witness maps a path in c to the corresponding path in d.
  bool leq_witness(const Config& c, const Config& d, std::map<Config::Path, Config::Path>& witness) {
    if (!leq(c, d)) return false;
    witness[{}] = {};
    build_witness(c, d, {}, {}, witness);
    return true;
  }

private:
  std::map<std::pair<const Config::Node*, const Config::Node*>, bool> memo_;

  bool match_children(const Config& c, const Config& d, std::vector<int>* assignment) {
    const auto& cs = c.children();
    const auto& ds = d.children();
    if (cs.size() > ds.size()) return false;
    // Kuhn's augmenting-path matching: child i of c -> some child of d.
    std::vector<int> match_d(ds.size(), -1);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      std::vector<bool> used(ds.size(), false);
      if (!augment(cs, ds, static_cast<int>(i), used, match_d)) return false;
    }
    if (assignment) {
      assignment->assign(cs.size(), -1);
      for (std::size_t j = 0; j < ds.size(); ++j)
        if (match_d[j] >= 0) (*assignment)[static_cast<std::size_t>(match_d[j])] = static_cast<int>(j);
    }
    return true;
  }

  bool augment(const std::vector<Config>& cs, const std::vector<Config>& ds, int i,
               std::vector<bool>& used, std::vector<int>& match_d) {
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (used[j] || !leq(cs[static_cast<std::size_t>(i)], ds[j])) continue;
      used[j] = true;
      if (match_d[j] < 0 || augment(cs, ds, match_d[j], used, match_d)) {
        match_d[j] = i;
        return true;
      }
    }
    return false;
  }

  void build_witness(const Config& c, const Config& d, const Config::Path& pc, const Config::Path& pd,
                     std::map<Config::Path, Config::Path>& witness) {
    std::vector<int> assignment;
    match_children(c, d, &assignment);
    for (std::size_t i = 0; i < c.children().size(); ++i) {
      Config::Path npc = pc;
      npc.push_back(static_cast<int>(i));
      Config::Path npd = pd;
      npd.push_back(assignment[i]);
      witness[npc] = npd;
      build_witness(c.children()[i], d.children()[static_cast<std::size_t>(assignment[i])], npc, npd,
                    witness);
    }
  }
};

}  // namespace detail

inline bool leq_induced(const Config& c, const Config& d) {
  detail::InducedMatcher m;
  return m.leq(c, d);
}

// Embedding witness: maps each node path of c to a node path of d.
inline std::optional<std::map<Config::Path, Config::Path>> leq_induced_witness(const Config& c,
                                                                               const Config& d) {
  detail::InducedMatcher m;
  std::map<Config::Path, Config::Path> w;
  if (!m.leq_witness(c, d, w)) return std::nullopt;
  return w;
}

// ---------------------------------------------------------------------------
// Tree text: tree := label | label "(" tree ("," tree)* ")"
// label := ident ["@w" nat]; idents may contain letters, digits, _ ' . # &
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_ident_char(char c) {
  return isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '.' || c == '#' ||
         c == '&' || c == '-' || c == '@';
}

class TreeParser {
public:
  TreeParser(const std::string& text, std::size_t base_offset = 0)
      : s_(text), base_(base_offset) {}

  Config parse() {
    Config c = parse_tree();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("trailing input after tree", base_ + pos_);
    return c;
  }

  static Label parse_label_text(const std::string& text) {
    TreeParser p(text);
    Label l = p.parse_label();
    p.skip_ws();
    if (p.pos_ != text.size()) throw ParseError("trailing input after label", p.pos_);
    return l;
  }

private:
  const std::string& s_;
  std::size_t base_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Label parse_label() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("expected a label", base_ + pos_);
    std::string name = s_.substr(start, pos_ - start);
    // split a trailing @wN annotation
    auto at = name.rfind("@w");
    if (at != std::string::npos && at + 2 < name.size() &&
        std::all_of(name.begin() + static_cast<long>(at) + 2, name.end(),
                    [](char c) { return isdigit(static_cast<unsigned char>(c)); })) {
      std::uint32_t ann = static_cast<std::uint32_t>(std::stoul(name.substr(at + 2)));
      return Label(name.substr(0, at), ann);
    }
    return Label(name);
  }

  Config parse_tree() {
    Label l = parse_label();
    std::vector<Config> kids;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      kids.push_back(parse_tree());
      skip_ws();
      while (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        kids.push_back(parse_tree());
        skip_ws();
      }
      if (pos_ >= s_.size() || s_[pos_] != ')') throw ParseError("expected ')'", base_ + pos_);
      ++pos_;
    }
    return Config(std::move(l), std::move(kids));
  }
};

}  // namespace detail

inline Config parse_tree(const std::string& text) { return detail::TreeParser(text).parse(); }
inline std::string render_tree(const Config& c) { return c.str(); }
inline Label parse_label(const std::string& text) {
  return detail::TreeParser::parse_label_text(text);
}

// Labels with the @wN annotation stripped: '@' is not an ident char, so the
// only way to build annotated labels in text is the @w suffix.

// Enumerates all rooted induced subtrees of c (any set of whole subtrees
// deleted, root kept). Exponential; intended for tiny inputs only.
inline std::vector<Config> induced_subconfigs(const Config& c) {
  std::vector<std::vector<Config>> per_child;
  for (const auto& ch : c.children()) per_child.push_back(induced_subconfigs(ch));
  std::vector<std::vector<Config>> child_sets{{}};
  for (const auto& opts : per_child) {
    std::vector<std::vector<Config>> next;
    for (const auto& base : child_sets) {
      next.push_back(base);  // drop this child entirely
      for (const auto& kept : opts) {
        auto ext = base;
        ext.push_back(kept);
        next.push_back(std::move(ext));
      }
    }
    child_sets = std::move(next);
  }
  std::set<Config> out;
  for (auto& ks : child_sets) out.insert(Config(c.label(), std::move(ks)));
  return std::vector<Config>(out.begin(), out.end());
}

}  // namespace nrcs

#endif
