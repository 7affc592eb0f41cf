#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "sge/linalg.hpp"

namespace sge {

// Undirected graph with nonnegative integer link weights, zero diagonal,
// optional per-node attribute vectors.
struct Graph {
  std::size_t n = 0;
  std::size_t attr_dim = 0;
  std::vector<std::map<std::size_t, long>> adj;  // i -> {j -> w_ij}, both directions
  std::vector<Vec> attributes;                   // empty or n rows of attr_dim

  explicit Graph(std::size_t nodes = 0, std::size_t p = 0)
      : n(nodes), attr_dim(p), adj(nodes) {
    if (p > 0) attributes.assign(nodes, Vec(p, 0.0));
  }

  long weight(std::size_t i, std::size_t j) const {
    if (i >= n || j >= n) throw std::out_of_range("weight: node index out of range");
    auto it = adj[i].find(j);
    return it == adj[i].end() ? 0 : it->second;
  }

  void set_weight(std::size_t i, std::size_t j, long w) {
    if (i >= n || j >= n) throw std::out_of_range("set_weight: node index out of range");
    if (i == j) throw std::invalid_argument("set_weight: diagonal must stay zero");
    if (w < 0) throw std::invalid_argument("set_weight: negative weight");
    if (w == 0) {
      adj[i].erase(j);
      adj[j].erase(i);
    } else {
      adj[i][j] = w;
      adj[j][i] = w;
    }
  }

  // Undirected positive pairs, i < j.
  std::vector<std::tuple<std::size_t, std::size_t, long>> edges() const {
    std::vector<std::tuple<std::size_t, std::size_t, long>> e;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [j, w] : adj[i])
        if (i < j) e.emplace_back(i, j, w);
    return e;
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& a : adj) m += a.size();
    return m / 2;
  }
};

struct LabeledPair {
  std::size_t i = 0, j = 0;
  bool positive = false;
};

// Format: header "n <count> p <attr-dim>", one "i<TAB>j<TAB>w" line per
// positive pair (i < j), optional "attr i v1 ... vp" lines. UTF-8, LF.
inline void write_graph(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_graph: cannot open " + path);
  os << "n " << g.n << " p " << g.attr_dim << "\n";
  for (const auto& [i, j, w] : g.edges()) os << i << '\t' << j << '\t' << w << "\n";
  if (g.attr_dim > 0) {
    char buf[32];
    for (std::size_t i = 0; i < g.n; ++i) {
      os << "attr " << i;
      for (double v : g.attributes[i]) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ' ' << buf;
      }
      os << "\n";
    }
  }
  if (!os) throw std::runtime_error("write_graph: write failed: " + path);
}

inline Graph read_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_graph: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_graph: empty file");
  std::size_t n = 0, p = 0;
  {
    std::istringstream ls(line);
    std::string kn, kp;
    if (!(ls >> kn >> n >> kp >> p) || kn != "n" || kp != "p")
      throw std::runtime_error("read_graph: bad header: " + line);
  }
  Graph g(n, p);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.rfind("attr", 0) == 0) {
      std::string kw;
      std::size_t i;
      ls >> kw >> i;
      if (i >= n) throw std::runtime_error("read_graph: attr index out of range");
      for (std::size_t k = 0; k < p; ++k)
        if (!(ls >> g.attributes[i][k]))
          throw std::runtime_error("read_graph: short attr row");
      continue;
    }
    std::size_t i, j;
    long w;
    if (!(ls >> i >> j >> w)) throw std::runtime_error("read_graph: bad edge line: " + line);
    g.set_weight(i, j, w);
  }
  return g;
}

struct LinkSplit {
  Graph train;
  std::vector<LabeledPair> val;
  std::vector<LabeledPair> test;
};

namespace detail {

// Removes held-out nodes' incident links from `g`, returning them as
// positives, then samples an equal number of zero-weight pairs touching the
// held-out nodes as negatives.
inline std::vector<LabeledPair> hold_out_nodes(
    Graph& g, const std::vector<std::size_t>& held, Rng& rng) {
  std::vector<char> is_held(g.n, 0);
  for (std::size_t v : held) is_held[v] = 1;
  std::vector<LabeledPair> pairs;
  for (const auto& [i, j, w] : g.edges())
    if (is_held[i] || is_held[j]) pairs.push_back({i, j, true});
  for (const auto& pr : pairs) g.set_weight(pr.i, pr.j, 0);
  // Negatives 1:1 with positives, uniform over unlinked pairs touching a
  // held-out node.
  std::uniform_int_distribution<std::size_t> pick_held(0, held.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, g.n - 1);
  const std::size_t want = pairs.size();
  std::size_t guard = 0;
  std::vector<LabeledPair> negs;
  std::map<std::pair<std::size_t, std::size_t>, char> seen;
  while (negs.size() < want) {
    if (++guard > 1000 * (want + 1))
      throw std::runtime_error("hold_out_nodes: cannot sample enough negatives");
    std::size_t i = held[pick_held(rng)];
    std::size_t j = pick_any(rng);
    if (i == j || g.weight(i, j) != 0) continue;
    auto key = std::minmax(i, j);
    bool was_positive = false;
    for (const auto& pr : pairs)
      if (std::minmax(pr.i, pr.j) == key) { was_positive = true; break; }
    if (was_positive || seen.count(key)) continue;
    seen[key] = 1;
    negs.push_back({key.first, key.second, false});
  }
  pairs.insert(pairs.end(), negs.begin(), negs.end());
  return pairs;
}

}  // namespace detail

namespace detail {

// Removes a random `count`-sized subset of the remaining links from `g` as
// positives and pairs them 1:1 with uniformly sampled unlinked pairs.
inline std::vector<LabeledPair> hold_out_edges(Graph& g, std::size_t count,
                                               Rng& rng) {
  auto all = g.edges();
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<LabeledPair> pairs;
  for (std::size_t t = 0; t < count && t < all.size(); ++t) {
    const auto& [i, j, w] = all[t];
    g.set_weight(i, j, 0);
    pairs.push_back({i, j, true});
  }
  std::uniform_int_distribution<std::size_t> pick(0, g.n - 1);
  const std::size_t want = pairs.size();
  std::size_t guard = 0;
  std::map<std::pair<std::size_t, std::size_t>, char> seen;
  std::vector<LabeledPair> negs;
  while (negs.size() < want) {
    if (++guard > 1000 * (want + 1))
      throw std::runtime_error("hold_out_edges: cannot sample enough negatives");
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j || g.weight(i, j) != 0) continue;
    auto key = std::minmax(i, j);
    bool was_positive = false;
    for (const auto& pr : pairs)
      if (std::minmax(pr.i, pr.j) == key) { was_positive = true; break; }
    if (was_positive || seen.count(key)) continue;
    seen[key] = 1;
    negs.push_back({key.first, key.second, false});
  }
  pairs.insert(pairs.end(), negs.begin(), negs.end());
  return pairs;
}

}  // namespace detail

// Edge-level split: a uniform fraction of links leaves the training graph,
// independent of which nodes they touch. Deterministic given seed.
inline LinkSplit split_links_by_edge(const Graph& g, double test_frac,
                                     double val_frac, std::uint64_t seed) {
  if (test_frac < 0.0 || val_frac < 0.0 || test_frac + val_frac >= 1.0)
    throw std::invalid_argument("split_links_by_edge: fractions must be in [0,1) and sum < 1");
  LinkSplit out;
  out.train = g;
  Rng rng(seed);
  const auto m = static_cast<double>(g.edge_count());
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * m));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * m));
  out.test = detail::hold_out_edges(out.train, n_test, rng);
  out.val = detail::hold_out_edges(out.train, n_val, rng);
  return out;
}

// Node-level split: test nodes' incident positive links leave the training
// graph and become test positives; validation nodes are then drawn from the
// remaining training nodes the same way. Deterministic given seed.
inline LinkSplit split_links(const Graph& g, double test_frac, double val_frac,
                             std::uint64_t seed) {
  if (test_frac < 0.0 || val_frac < 0.0 || test_frac + val_frac >= 1.0)
    throw std::invalid_argument("split_links: fractions must be in [0,1) and sum < 1");
  LinkSplit out;
  out.train = g;
  Rng rng(seed);
  std::vector<std::size_t> order(g.n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * g.n));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * g.n));
  if ((test_frac > 0.0 && n_test == 0) || (val_frac > 0.0 && n_val == 0) ||
      n_test + n_val >= g.n)
    throw std::invalid_argument("split_links: too few nodes for requested fractions");
  if (n_test > 0) {
    std::vector<std::size_t> test_nodes(order.begin(), order.begin() + n_test);
    out.test = detail::hold_out_nodes(out.train, test_nodes, rng);
  }
  if (n_val > 0) {
    std::vector<std::size_t> val_nodes(order.begin() + n_test,
                                       order.begin() + n_test + n_val);
    out.val = detail::hold_out_nodes(out.train, val_nodes, rng);
  }
  return out;
}

}  // namespace sge
