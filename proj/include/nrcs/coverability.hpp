#ifndef NRCS_COVERABILITY_HPP
#define NRCS_COVERABILITY_HPP

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nrcs/machine.hpp>

namespace nrcs {

// A finite antichain of configurations denoting its upward closure.
struct Basis {
  std::vector<Config> elements;

  bool covers(const Config& c) const {
    for (const auto& b : elements)
      if (leq_induced(b, c)) return true;
    return false;
  }

  // Mutual domination: both antichains denote the same upward-closed set.
  bool same_denotation(const Basis& o) const {
    for (const auto& b : elements)
      if (!o.covers(b)) return false;
    for (const auto& b : o.elements)
      if (!covers(b)) return false;
    return true;
  }
};

// Keeps exactly the <=is-minimal configurations. Mutual embedding of finite
// canonical trees forces equality, so <=is is a partial order here.
inline Basis minimize(const std::set<Config>& configs) {
  Basis out;
  for (const auto& c : configs) {
    bool dominated = false;
    for (const auto& d : configs)
      if (!(d == c) && leq_induced(d, c)) {
        dominated = true;
        break;
      }
    if (!dominated) out.elements.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Effective predecessor basis: for each transition, enumerate the overlap
// patterns between the transition's post-state and C and invert them. Every
// candidate has at most |C|+k+1 nodes.
// ---------------------------------------------------------------------------

namespace detail {

// Root paths of c labelled by prefix[0..m] for every m < prefix.size();
// returns pairs (m, path).
inline std::vector<std::pair<std::size_t, Config::Path>> overlap_prefixes(
    const Config& c, const std::vector<Label>& prefix) {
  std::vector<std::pair<std::size_t, Config::Path>> out;
  if (c.label() != prefix[0]) return out;
  std::vector<std::pair<const Config*, Config::Path>> frontier{{&c, {}}};
  out.push_back({0, {}});
  for (std::size_t depth = 1; depth < prefix.size(); ++depth) {
    std::vector<std::pair<const Config*, Config::Path>> next;
    for (auto& [node, path] : frontier) {
      const auto& kids = node->children();
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (kids[i].label() != prefix[depth]) continue;
        Config::Path p = path;
        p.push_back(static_cast<int>(i));
        out.push_back({depth, p});
        next.emplace_back(&kids[i], p);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

// Relabels the root path designated by `path` with labels[0..path.size()].
inline Config relabel_path(const Config& c, const Config::Path& path, const std::vector<Label>& labels,
                           std::size_t depth = 0) {
  std::vector<Config> kids = c.children();
  if (depth < path.size()) {
    std::size_t i = static_cast<std::size_t>(path[depth]);
    kids[i] = relabel_path(kids[i], path, labels, depth + 1);
  }
  return Config(labels[depth], std::move(kids));
}

// Attaches a bare chain labelled labels[from..] below the node at `path`.
inline Config attach_chain(const Config& c, const Config::Path& path, const std::vector<Label>& labels,
                           std::size_t from) {
  if (from >= labels.size()) return c;
  Config chain = leaf(labels.back());
  for (std::size_t l = labels.size() - 1; l > from; --l) chain = Config(labels[l - 1], {chain});
  const Config& at = c.at(path);
  std::vector<Config> kids = at.children();
  kids.push_back(std::move(chain));
  return c.with_subtree(path, Config(at.label(), std::move(kids)));
}

inline void pre_candidates_for(const Nrcs& n, const Config& c, const Transition& t,
                               std::set<Config>& out) {
  const std::size_t i = t.src.size() - 1;
  const std::size_t j = t.dst.size() - 1;

  if (t.kind == Transition::Kind::Update) {
    // overlap of C with the relabelled prefix dst[0..min(i,j)]
    std::vector<Label> pref(t.dst.begin(), t.dst.begin() + static_cast<long>(std::min(i, j)) + 1);
    for (auto& [m, path] : overlap_prefixes(c, pref)) {
      std::vector<Label> relab(t.src.begin(), t.src.begin() + static_cast<long>(m) + 1);
      Config cand = relabel_path(c, path, relab);
      cand = attach_chain(cand, path, t.src, m + 1);
      out.insert(cand);
    }
    if (i < j) {
      // the overlap may extend into the freshly created chain dst[i+1..j]:
      // the overlapping part of C must itself be a bare chain ending in a leaf
      for (auto& [r, path] : overlap_prefixes(c, t.dst)) {
        if (r <= i) continue;
        bool bare = true;
        for (std::size_t d = i + 1; d <= r; ++d) {
          const Config& node = c.at(Config::Path(path.begin(), path.begin() + static_cast<long>(d)));
          std::size_t want = d < r ? 1 : 0;
          if (node.children().size() != want) {
            bare = false;
            break;
          }
        }
        if (!bare) continue;
        // drop the chain, relabel the remaining prefix back to src
        Config::Path chain_root(path.begin(), path.begin() + static_cast<long>(i) + 1);
        Config::Path parent(path.begin(), path.begin() + static_cast<long>(i));
        const Config& pnode = c.at(parent);
        std::vector<Config> kids = pnode.children();
        kids.erase(kids.begin() + chain_root.back());
        Config cand = c.with_subtree(parent, Config(pnode.label(), std::move(kids)));
        cand = relabel_path(cand, parent, t.src);
        out.insert(cand);
      }
    }
  } else {
    // reset: overlap with the relabelled path dst[0..i]
    for (auto& [m, path] : overlap_prefixes(c, t.dst)) {
      if (m == i) {
        // the reset fires at the path end: any child carrying a reset label
        // would have been removed, so such configurations have no embedding
        bool blocked = false;
        for (const auto& ch : c.at(path).children())
          if (t.removes(ch.label())) {
            blocked = true;
            break;
          }
        if (blocked) continue;
      }
      std::vector<Label> relab(t.src.begin(), t.src.begin() + static_cast<long>(m) + 1);
      Config cand = relabel_path(c, path, relab);
      cand = attach_chain(cand, path, t.src, m + 1);
      out.insert(cand);
    }
  }
}

}  // namespace detail

// A basis of pre(upward closure of c): the union over all transitions of the
// inverted overlap patterns, minimized.
inline Basis pre_basis(const Nrcs& n, const Config& c) {
  std::set<Config> candidates;
  for (const auto& t : n.transitions) detail::pre_candidates_for(n, c, t, candidates);
  return minimize(candidates);
}

// ---------------------------------------------------------------------------
// Brute-force oracle: collect every configuration of size <= |C|+k+1 over the
// machine's states that steps into the upward closure of C. Exponential; a
// size guard refuses oversized instances.
// ---------------------------------------------------------------------------

class PreBasisOracle {
public:
  explicit PreBasisOracle(std::uint64_t candidate_cap = 2000000) : cap_(candidate_cap) {}

  Basis compute(const Nrcs& n, const Config& c) {
    labels_.assign(n.states.begin(), n.states.end());
    std::uint64_t est = count_trees(static_cast<int>(c.size()) + static_cast<int>(n.k) + 1,
                                    static_cast<int>(n.k));
    if (est > cap_)
      throw std::invalid_argument("pre_basis_oracle: candidate count estimate " + std::to_string(est) +
                                  " exceeds the guard");
    std::set<Config> preds;
    int max_size = static_cast<int>(c.size()) + static_cast<int>(n.k) + 1;
    for (int s = 1; s <= max_size; ++s) {
      for (const auto& cand : trees_of_size(s, static_cast<int>(n.k))) {
        for (const auto& st : successors(n, cand)) {
          if (leq_induced(c, st.result)) {
            preds.insert(cand);
            break;
          }
        }
      }
    }
    return minimize(preds);
  }

  // Number of canonical labelled trees with <= max_size nodes, height <= h.
  std::uint64_t count_trees(int max_size, int h) {
    counts_.clear();
    std::uint64_t total = 0;
    for (int s = 1; s <= max_size; ++s) {
      total += count_exact(s, h);
      if (total > (1ULL << 60)) return total;  // saturate
    }
    return total;
  }

private:
  std::uint64_t cap_;
  std::vector<Label> labels_;
  std::map<std::pair<int, int>, std::vector<Config>> memo_;
  std::map<std::pair<int, int>, std::uint64_t> counts_;

  // multiset-of-forests counting: trees of exactly s nodes, height <= h
  std::uint64_t count_exact(int s, int h) {
    auto key = std::make_pair(s, h);
    auto it = counts_.find(key);
    if (it != counts_.end()) return it->second;
    std::uint64_t r;
    if (s <= 0) {
      r = 0;
    } else if (s == 1) {
      r = labels_.size();
    } else if (h == 0) {
      r = 0;
    } else {
      // approximate upper bound: label choices times compositions of child
      // subtrees; used only as a guard, so overcounting is fine
      std::uint64_t forests = count_forests(s - 1, h - 1);
      r = labels_.size() * forests;
    }
    counts_[key] = r;
    return r;
  }

  std::uint64_t count_forests(int s, int h) {
    if (s == 0) return 1;
    std::uint64_t total = 0;
    for (int first = 1; first <= s; ++first) {
      std::uint64_t a = count_exact(first, h);
      std::uint64_t b = count_forests(s - first, h);
      if (a && b > (1ULL << 60) / a) return 1ULL << 61;
      total += a * b;
      if (total > (1ULL << 60)) return total;
    }
    return total;
  }

  const std::vector<Config>& trees_of_size(int s, int h) {
    auto key = std::make_pair(s, h);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<Config> out;
    if (s >= 1 && h >= 0) {
      if (s == 1) {
        for (const auto& l : labels_) out.push_back(Config(l));
      } else if (h > 0) {
        // pool of candidate subtrees, globally ordered for canonical choice
        std::vector<Config> pool;
        for (int sub = 1; sub < s; ++sub) {
          const auto& v = trees_of_size(sub, h - 1);
          pool.insert(pool.end(), v.begin(), v.end());
        }
        std::sort(pool.begin(), pool.end());
        std::vector<Config> kids;
        std::function<void(int, std::size_t)> pick = [&](int left, std::size_t from) {
          if (left == 0) {
            for (const auto& l : labels_) out.push_back(Config(l, kids));
            return;
          }
          for (std::size_t p = from; p < pool.size(); ++p) {
            int sz = pool[p].size();
            if (sz > left) continue;
            kids.push_back(pool[p]);
            pick(left - sz, p);
            kids.pop_back();
          }
        };
        pick(s - 1, 0);
      }
    }
    auto [slot, _] = memo_.emplace(key, std::move(out));
    return slot->second;
  }
};

inline Basis pre_basis_oracle(const Nrcs& n, const Config& c, std::uint64_t candidate_cap = 2000000) {
  return PreBasisOracle(candidate_cap).compute(n, c);
}

// ---------------------------------------------------------------------------
// Backward coverability
// ---------------------------------------------------------------------------

struct CoverabilityVerdict {
  bool coverable = false;
  unsigned iterations = 0;
  std::vector<std::pair<int, Config::Path>> certificate;  // coverable: a replayable run
  Basis fixpoint;                                         // not coverable: the final basis
  std::vector<std::size_t> basis_sizes;                   // per-round antichain sizes
};

class BackwardSolver {
public:
  BackwardSolver(const Nrcs& n, unsigned iteration_cap = 100000) : n_(n), cap_(iteration_cap) {}

  CoverabilityVerdict solve(const Config& init, const Config& target) {
    CoverabilityVerdict v;
    // layered record of minimal elements; survives later minimization
    std::vector<std::pair<Config, unsigned>> layers{{target, 0}};
    std::vector<Config> antichain{target};
    std::vector<Config> worklist{target};

    auto covered = [&](const Config& x) {
      for (const auto& b : antichain)
        if (leq_induced(b, x)) return true;
      return false;
    };

    v.basis_sizes.push_back(antichain.size());
    while (!covered(init)) {
      if (worklist.empty()) {
        v.coverable = false;
        v.fixpoint.elements = antichain;
        return v;
      }
      if (v.iterations >= cap_)
        throw std::runtime_error("backward coverability: iteration cap exceeded");
      ++v.iterations;
      std::set<Config> fresh;
      for (const auto& w : worklist)
        for (const auto& t : n_.transitions) detail::pre_candidates_for(n_, w, t, fresh);
      worklist.clear();
      for (const auto& cand : fresh) {
        if (covered(cand)) continue;
        // strictly new: extend the antichain, dropping dominated elements
        std::vector<Config> kept;
        for (auto& b : antichain)
          if (!leq_induced(cand, b)) kept.push_back(std::move(b));
        kept.push_back(cand);
        antichain = std::move(kept);
        layers.emplace_back(cand, v.iterations);
        worklist.push_back(cand);
      }
      v.basis_sizes.push_back(antichain.size());
    }

    v.coverable = true;
    v.certificate = replay(init, layers);
    return v;
  }

private:
  const Nrcs& n_;
  unsigned cap_;

  // Greedy forward replay through decreasing layer indices.
  std::vector<std::pair<int, Config::Path>> replay(
      const Config& init, const std::vector<std::pair<Config, unsigned>>& layers) {
    auto layer_of = [&](const Config& x) -> std::optional<unsigned> {
      std::optional<unsigned> best;
      for (const auto& [b, l] : layers)
        if ((!best || l < *best) && leq_induced(b, x)) best = l;
      return best;
    };
    std::vector<std::pair<int, Config::Path>> run;
    Config cur = init;
    auto d = layer_of(cur);
    while (d && *d > 0) {
      std::optional<std::tuple<unsigned, Config, int, Config::Path>> pick;
      for (const auto& st : successors(n_, cur)) {
        auto d2 = layer_of(st.result);
        if (!d2) continue;
        if (!pick || *d2 < std::get<0>(*pick) ||
            (*d2 == std::get<0>(*pick) && st.result < std::get<1>(*pick)))
          pick = {*d2, st.result, st.transition, st.anchor};
      }
      if (!pick || std::get<0>(*pick) >= *d)
        throw std::runtime_error("certificate replay failed to make progress");
      run.emplace_back(std::get<2>(*pick), std::get<3>(*pick));
      cur = std::get<1>(*pick);
      d = std::get<0>(*pick);
    }
    return run;
  }
};

inline CoverabilityVerdict backward_coverability(const Nrcs& n, const Config& init,
                                                 const Config& target,
                                                 unsigned iteration_cap = 100000) {
  return BackwardSolver(n, iteration_cap).solve(init, target);
}

// Replays a certificate from init; returns the final configuration.
inline Config replay_run(const Nrcs& n, const Config& init,
                         const std::vector<std::pair<int, Config::Path>>& run) {
  Config cur = init;
  for (const auto& [ti, anchor] : run)
    cur = apply_at(n, cur, n.transitions.at(static_cast<std::size_t>(ti)), anchor);
  return cur;
}

// ---------------------------------------------------------------------------
// Bounded forward exploration: the independent oracle and witness generator.
// ---------------------------------------------------------------------------

struct ForwardResult {
  enum class Status { Found, Exhausted, Cutoff } status = Status::Exhausted;
  std::vector<std::pair<int, Config::Path>> run;  // meaningful when Found
  std::size_t explored = 0;
};

inline ForwardResult forward_explore(const Nrcs& n, const Config& init, int max_nodes_per_config,
                                     std::size_t max_frontier, const Config& target) {
  if (max_nodes_per_config < 1 || max_frontier < 1)
    throw std::invalid_argument("forward_explore: bounds must be >= 1");
  ForwardResult res;
  struct Edge {
    Config parent;
    int transition;
    Config::Path anchor;
  };
  std::map<Config, std::optional<Edge>> seen;
  std::deque<Config> queue;

  auto finish = [&](const Config& hit) {
    std::vector<std::pair<int, Config::Path>> run;
    Config cur = hit;
    while (true) {
      const auto& e = seen.at(cur);
      if (!e) break;
      run.emplace_back(e->transition, e->anchor);
      cur = e->parent;
    }
    std::reverse(run.begin(), run.end());
    res.status = ForwardResult::Status::Found;
    res.run = std::move(run);
  };

  if (init.size() > max_nodes_per_config) {
    res.status = ForwardResult::Status::Cutoff;
    return res;
  }
  seen.emplace(init, std::nullopt);
  queue.push_back(init);
  if (leq_induced(target, init)) {
    finish(init);
    return res;
  }
  while (!queue.empty()) {
    Config cur = queue.front();
    queue.pop_front();
    ++res.explored;
    for (const auto& st : successors(n, cur)) {
      if (st.result.size() > max_nodes_per_config) continue;
      if (seen.count(st.result)) continue;
      if (seen.size() >= max_frontier) {
        res.status = ForwardResult::Status::Cutoff;
        return res;
      }
      seen.emplace(st.result, Edge{cur, st.transition, st.anchor});
      if (leq_induced(target, st.result)) {
        finish(st.result);
        return res;
      }
      queue.push_back(st.result);
    }
  }
  res.status = ForwardResult::Status::Exhausted;
  return res;
}

}  // namespace nrcs

#endif
