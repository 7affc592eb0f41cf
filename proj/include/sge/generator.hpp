#pragma once

#include <cstdint>
#include <vector>

#include "sge/graph.hpp"
#include "sge/similarity.hpp"

namespace sge {

enum class GeneratorKind {
  PoissonFromHead,
  BernoulliFromHead,
  TreeClosure,
  PlantedClusters,
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::TreeClosure;
  // head-driven kinds: ground-truth head + explicit per-node features
  SimilarityHead head = SimilarityHead::ips();
  std::vector<Vec> features;
  // tree closure
  std::size_t branching = 2;
  std::size_t depth = 1;
  // planted clusters (standard SBM), n nodes split into k near-equal blocks
  std::size_t clusters = 2;
  std::size_t n = 0;
  double p_in = 0.5;
  double p_out = 0.05;
  std::uint64_t seed = 0;
};

inline constexpr double kMaxLogRate = 30.0;

inline Graph generate(const GeneratorSpec& spec) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case GeneratorKind::PoissonFromHead:
    case GeneratorKind::BernoulliFromHead: {
      const std::size_t n = spec.features.size();
      if (n < 2) throw std::invalid_argument("generate: need >= 2 feature vectors");
      Graph g(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double h = head_value(spec.head, spec.features[i], spec.features[j]);
          if (spec.kind == GeneratorKind::PoissonFromHead) {
            if (h > kMaxLogRate)
              throw std::invalid_argument("generate: rate exp(h) overflows, h > 30");
            std::poisson_distribution<long> po(std::exp(h));
            const long w = po(rng);
            if (w > 0) g.set_weight(i, j, w);
          } else {
            std::bernoulli_distribution be(sigmoid(h));
            if (be(rng)) g.set_weight(i, j, 1);
          }
        }
      return g;
    }
    case GeneratorKind::TreeClosure: {
      if (spec.branching < 2) throw std::invalid_argument("generate: branching >= 2");
      if (spec.depth < 1) throw std::invalid_argument("generate: depth >= 1");
      // Complete b-ary tree, levels 0..depth; node 0 is the root, children of
      // v are b*v+1 .. b*v+b. Links are all ancestor-descendant pairs.
      std::size_t n = 0, level = 1;
      for (std::size_t d = 0; d <= spec.depth; ++d) {
        n += level;
        level *= spec.branching;
      }
      Graph g(n);
      for (std::size_t v = 1; v < n; ++v) {
        std::size_t a = v;
        while (a != 0) {
          a = (a - 1) / spec.branching;
          g.set_weight(v, a, 1);
        }
      }
      return g;
    }
    case GeneratorKind::PlantedClusters: {
      if (spec.n < 2) throw std::invalid_argument("generate: need n >= 2");
      if (spec.clusters < 1) throw std::invalid_argument("generate: clusters >= 1");
      if (spec.p_in < 0.0 || spec.p_in > 1.0 || spec.p_out < 0.0 || spec.p_out > 1.0)
        throw std::invalid_argument("generate: probabilities must lie in [0,1]");
      Graph g(spec.n);
      auto block = [&](std::size_t v) { return v * spec.clusters / spec.n; };
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = i + 1; j < spec.n; ++j) {
          const double p = block(i) == block(j) ? spec.p_in : spec.p_out;
          if (unif(rng) < p) g.set_weight(i, j, 1);
        }
      return g;
    }
  }
  throw std::logic_error("generate: unknown kind");
}

}  // namespace sge
