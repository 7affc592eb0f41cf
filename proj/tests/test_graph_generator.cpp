#include <catch2/catch_amalgamated.hpp>
#include <cstdio>

#include "sge/generator.hpp"
#include "sge/graph.hpp"

using namespace sge;

namespace {

// All nodes share the feature (0, h/2), so every pair scores exactly h.
GeneratorSpec constant_head_spec(GeneratorKind kind, std::size_t n, double h,
                                 std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = kind;
  spec.head = SimilarityHead::sips();
  spec.features.assign(n, Vec{0.0, h / 2.0});
  spec.seed = seed;
  return spec;
}

void check_invariants(const Graph& g) {
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(g.weight(i, i) == 0);
    for (const auto& [j, w] : g.adj[i]) {
      CHECK(j < g.n);
      CHECK(w > 0);
      CHECK(g.weight(j, i) == w);
    }
  }
}

}  // namespace

TEST_CASE("graph weight bookkeeping") {
  Graph g(4);
  g.set_weight(0, 1, 3);
  CHECK(g.weight(1, 0) == 3);
  CHECK(g.edge_count() == 1);
  g.set_weight(0, 1, 0);
  CHECK(g.edge_count() == 0);
  CHECK_THROWS_AS(g.set_weight(2, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(g.set_weight(0, 1, -1), std::invalid_argument);
  CHECK_THROWS_AS(g.set_weight(0, 4, 1), std::out_of_range);
  CHECK_THROWS_AS(g.weight(4, 0), std::out_of_range);
}

TEST_CASE("graph file round trip") {
  Graph g(5, 2);
  g.set_weight(0, 3, 2);
  g.set_weight(1, 4, 1);
  g.attributes[2] = {0.25, -1.75};
  g.attributes[4] = {1e-3, 3.14159};
  const std::string path = "graph_rt_tmp.txt";
  write_graph(path, g);
  const Graph back = read_graph(path);
  CHECK(back.n == 5);
  CHECK(back.attr_dim == 2);
  CHECK(back.weight(3, 0) == 2);
  CHECK(back.weight(4, 1) == 1);
  CHECK(back.edge_count() == 2);
  CHECK(back.attributes[2] == g.attributes[2]);
  CHECK(back.attributes[4] == g.attributes[4]);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_graph("no_such_graph_file.txt"), std::runtime_error);
}

TEST_CASE("tree closure counts") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 2;
  spec.depth = 2;
  const Graph g = generate(spec);
  CHECK(g.n == 7);
  CHECK(g.edge_count() == 10);
  check_invariants(g);
  // Node 6 is a child of 2 and grandchild of 0; siblings stay unlinked.
  CHECK(g.weight(6, 2) == 1);
  CHECK(g.weight(6, 0) == 1);
  CHECK(g.weight(5, 6) == 0);
  CHECK(g.weight(3, 4) == 0);
}

TEST_CASE("tree closure only links ancestor-descendant pairs") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 2;
  spec.depth = 2;
  const Graph g = generate(spec);
  auto is_ancestor = [&](std::size_t a, std::size_t v) {
    while (v != 0) {
      v = (v - 1) / 2;
      if (v == a) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) {
      if (i == j) continue;
      const bool related = is_ancestor(i, j) || is_ancestor(j, i);
      CHECK(g.weight(i, j) == (related ? 1 : 0));
    }
}

TEST_CASE("tree closure larger instance") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 3;
  spec.depth = 5;
  const Graph g = generate(spec);
  CHECK(g.n == 364);
  CHECK(g.edge_count() == 1641);
}

TEST_CASE("poisson generator with vanishing rate yields an empty graph") {
  const Graph g =
      generate(constant_head_spec(GeneratorKind::PoissonFromHead, 40, -20.0, 3));
  CHECK(g.edge_count() == 0);
}

TEST_CASE("poisson generator rejects overflowing rates") {
  CHECK_THROWS_AS(
      generate(constant_head_spec(GeneratorKind::PoissonFromHead, 4, 31.0, 1)),
      std::invalid_argument);
}

TEST_CASE("poisson generator matches its mean and dispersion") {
  const double lambda = 1.3;
  const std::size_t n = 200;  // 19900 samples
  const Graph g = generate(constant_head_spec(GeneratorKind::PoissonFromHead, n,
                                              std::log(lambda), 11));
  check_invariants(g);
  const double samples = n * (n - 1) / 2.0;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& [i, j, w] : g.edges()) {
    sum += static_cast<double>(w);
    sum_sq += static_cast<double>(w) * static_cast<double>(w);
  }
  const double mean = sum / samples;
  const double var = sum_sq / samples - mean * mean;
  const double se = std::sqrt(lambda / samples);
  CHECK(std::abs(mean - lambda) <= 3 * se);
  CHECK(var / mean >= 0.8);
  CHECK(var / mean <= 1.2);
}

TEST_CASE("bernoulli generator approximates the truncated poisson for small rates") {
  const double lambda = 0.1;
  const double h = std::log(lambda);
  const std::size_t n = 200;
  const double samples = n * (n - 1) / 2.0;

  const Graph gp =
      generate(constant_head_spec(GeneratorKind::PoissonFromHead, n, h, 21));
  const Graph gb =
      generate(constant_head_spec(GeneratorKind::BernoulliFromHead, n, h, 22));
  check_invariants(gb);
  for (const auto& [i, j, w] : gb.edges()) CHECK(w == 1);

  const double sig = sigmoid(h);  // lambda / (1 + lambda)
  const double se = std::sqrt(sig * (1 - sig) / samples);
  const double p_link_poisson = gp.edge_count() / samples;
  const double p_link_bernoulli = gb.edge_count() / samples;
  CHECK(std::abs(p_link_poisson - sig) <= 3 * se + lambda * lambda);
  CHECK(std::abs(p_link_bernoulli - sig) <= 3 * se);
}

TEST_CASE("generation is deterministic under a fixed seed") {
  const auto spec = constant_head_spec(GeneratorKind::PoissonFromHead, 50, 0.0, 77);
  const Graph a = generate(spec), b = generate(spec);
  REQUIRE(a.edge_count() == b.edge_count());
  for (const auto& [i, j, w] : a.edges()) CHECK(b.weight(i, j) == w);
}

TEST_CASE("planted clusters produce denser blocks than cross links") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::PlantedClusters;
  spec.clusters = 2;
  spec.n = 80;
  spec.p_in = 0.7;
  spec.p_out = 0.05;
  spec.seed = 5;
  const Graph g = generate(spec);
  check_invariants(g);
  double in_links = 0, in_pairs = 0, out_links = 0, out_pairs = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j) {
      const bool same = (i * 2 / g.n) == (j * 2 / g.n);
      (same ? in_pairs : out_pairs) += 1;
      if (g.weight(i, j) > 0) (same ? in_links : out_links) += 1;
    }
  CHECK(in_links / in_pairs > 0.5);
  CHECK(out_links / out_pairs < 0.2);

  spec.p_in = 1.5;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("split with zero fractions keeps the graph intact") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 2;
  spec.depth = 3;
  const Graph g = generate(spec);
  const auto s = split_links(g, 0.0, 0.0, 9);
  CHECK(s.train.edge_count() == g.edge_count());
  CHECK(s.val.empty());
  CHECK(s.test.empty());
}

TEST_CASE("node-level split removes exactly the held nodes' links") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 2;
  spec.depth = 3;
  const Graph g = generate(spec);
  const auto s = split_links(g, 0.2, 0.1, 42);

  std::size_t test_pos = 0, test_neg = 0;
  for (const auto& pr : s.test) (pr.positive ? test_pos : test_neg) += 1;
  CHECK(test_pos == test_neg);
  std::size_t val_pos = 0, val_neg = 0;
  for (const auto& pr : s.val) (pr.positive ? val_pos : val_neg) += 1;
  CHECK(val_pos == val_neg);

  // recount: every removed link shows up as a positive exactly once
  CHECK(g.edge_count() == s.train.edge_count() + test_pos + val_pos);
  for (const auto& pr : s.test) {
    if (pr.positive) {
      CHECK(g.weight(pr.i, pr.j) > 0);
      CHECK(s.train.weight(pr.i, pr.j) == 0);
    } else {
      CHECK(g.weight(pr.i, pr.j) == 0);
    }
  }

  const auto s2 = split_links(g, 0.2, 0.1, 42);
  REQUIRE(s2.test.size() == s.test.size());
  for (std::size_t t = 0; t < s.test.size(); ++t) {
    CHECK(s2.test[t].i == s.test[t].i);
    CHECK(s2.test[t].j == s.test[t].j);
    CHECK(s2.test[t].positive == s.test[t].positive);
  }

  CHECK_THROWS_AS(split_links(g, 0.6, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_links(g, -0.1, 0.0, 1), std::invalid_argument);
}

TEST_CASE("edge-level split holds out a uniform fraction of links") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::TreeClosure;
  spec.branching = 2;
  spec.depth = 3;
  const Graph g = generate(spec);
  const auto s = split_links_by_edge(g, 0.25, 0.0, 13);
  std::size_t test_pos = 0;
  for (const auto& pr : s.test)
    if (pr.positive) ++test_pos;
  const auto want = static_cast<std::size_t>(std::llround(0.25 * g.edge_count()));
  CHECK(test_pos == want);
  CHECK(s.test.size() == 2 * want);
  CHECK(s.train.edge_count() == g.edge_count() - want);
  CHECK(s.val.empty());
}
