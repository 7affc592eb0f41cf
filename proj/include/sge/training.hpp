#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "sge/eval.hpp"
#include "sge/graph.hpp"
#include "sge/model.hpp"

namespace sge {

struct TrainConfig {
  std::size_t num_negatives = 10;  // r
  std::size_t batch_size = 64;
  std::size_t iterations = 10000;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t checkpoint_every = 500;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_negatives < 1) throw std::invalid_argument("config: r >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::invalid_argument("config: betas in [0,1)");
    if (checkpoint_every < 1) throw std::invalid_argument("config: checkpoint_every >= 1");
  }
};

// Candidate set for the softmax denominator of positive pair (i,j):
// r entries without replacement from N_ij = {k != i : w_ik = 0} u {j},
// with j always included. Returns all of N_ij when it has fewer than r
// elements.
inline std::vector<std::size_t> sample_negatives(const Graph& g, std::size_t i,
                                                 std::size_t j, std::size_t r,
                                                 Rng& rng) {
  if (g.weight(i, j) == 0)
    throw std::invalid_argument("sample_negatives: (i,j) is not a positive pair");
  if (r < 1) throw std::invalid_argument("sample_negatives: r >= 1");
  std::vector<std::size_t> pool;
  pool.reserve(g.n);
  for (std::size_t k = 0; k < g.n; ++k)
    if (k != i && k != j && g.weight(i, k) == 0) pool.push_back(k);
  std::vector<std::size_t> out{j};
  const std::size_t extra = std::min(r - 1, pool.size());
  for (std::size_t t = 0; t < extra; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
    std::swap(pool[t], pool[pick(rng)]);
    out.push_back(pool[t]);
  }
  return out;
}

// One softmax term of the objective; candidates must contain j.
struct ObjectiveTerm {
  std::size_t i = 0, j = 0;
  std::vector<std::size_t> candidates;
};

inline constexpr double kHeadClamp = 50.0;

namespace detail {

struct TermEval {
  Vec z_i;
  std::vector<Vec> z_k;       // per candidate
  Vec h;                      // clamped head values per candidate
  std::vector<char> clamped;  // per candidate
  std::size_t j_pos = 0;
  double weight = 0.0;
};

inline TermEval eval_term(const Graph& g, const Model& model,
                          const ObjectiveTerm& term, std::size_t* clamp_warnings) {
  TermEval te;
  te.weight = static_cast<double>(g.weight(term.i, term.j));
  if (te.weight <= 0.0)
    throw std::invalid_argument("objective: term (i,j) has zero weight");
  te.z_i = model.encode(g, term.i);
  te.h.reserve(term.candidates.size());
  bool found_j = false;
  for (std::size_t c = 0; c < term.candidates.size(); ++c) {
    const std::size_t k = term.candidates[c];
    if (k == term.j) {
      found_j = true;
      te.j_pos = c;
    }
    te.z_k.push_back(model.encode(g, k));
    double v = head_value(model.head, te.z_i, te.z_k.back());
    if (!std::isfinite(v))
      throw std::runtime_error("objective: non-finite head value for pair (" +
                               std::to_string(term.i) + "," + std::to_string(k) + ")");
    bool cl = false;
    if (v > kHeadClamp) { v = kHeadClamp; cl = true; }
    if (v < -kHeadClamp) { v = -kHeadClamp; cl = true; }
    if (cl && clamp_warnings) ++*clamp_warnings;
    te.clamped.push_back(cl);
    te.h.push_back(v);
  }
  if (!found_j)
    throw std::invalid_argument("objective: candidate set must contain j");
  return te;
}

}  // namespace detail

// Sum over terms of w_ij [ h_ij - logsumexp_{k in S} h_ik ], log-sum-exp
// stabilized; each term is <= 0 since j is in S.
inline double objective_value(const Graph& g, const Model& model,
                              const std::vector<ObjectiveTerm>& terms,
                              std::size_t* clamp_warnings = nullptr) {
  double total = 0.0;
  for (const auto& term : terms) {
    const auto te = detail::eval_term(g, model, term, clamp_warnings);
    total += te.weight * (te.h[te.j_pos] - logsumexp(te.h));
  }
  return total;
}

// Exact gradient of objective_value w.r.t. all trainable parameters; the
// csips gamma gradient lands in grads.head.gamma. Clamped head values have
// zero local derivative.
inline Model objective_gradient(const Graph& g, const Model& model,
                                const std::vector<ObjectiveTerm>& terms,
                                std::size_t* clamp_warnings = nullptr) {
  Model grads = zeros_like(model);
  for (const auto& term : terms) {
    const auto te = detail::eval_term(g, model, term, clamp_warnings);
    const std::size_t nc = te.h.size();
    // softmax over the candidate set
    const double lse = logsumexp(te.h);
    Vec coeff(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      double a = -std::exp(te.h[c] - lse);
      if (c == te.j_pos) a += 1.0;
      coeff[c] = te.clamped[c] ? 0.0 : te.weight * a;
    }
    Vec upstream_i(te.z_i.size(), 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      if (coeff[c] == 0.0) continue;
      const auto hg = head_gradient(model.head, te.z_i, te.z_k[c]);
      axpy(coeff[c], hg.d_zi, upstream_i);
      Vec up_k(hg.d_zj);
      for (auto& v : up_k) v *= coeff[c];
      model.encode_backward(g, term.candidates[c], up_k, grads);
      if (hg.d_gamma) grads.head.gamma += coeff[c] * *hg.d_gamma;
    }
    model.encode_backward(g, term.i, upstream_i, grads);
  }
  return grads;
}

struct AdamState {
  Model m, v;  // first/second moment accumulators, parameter-shaped
  double gamma_m = 0.0, gamma_v = 0.0;
  long step = 0;
};

inline AdamState make_adam_state(const Model& model) {
  return {zeros_like(model), zeros_like(model), 0.0, 0.0, 0};
}

// Bias-corrected Adam ASCENT step: params += lr * mhat / (sqrt(vhat) + eps).
inline void adam_step(Model& model, const Model& grads, AdamState& state,
                      double lr, double beta1, double beta2, double eps) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, state.step);
  const double bc2 = 1.0 - std::pow(beta2, state.step);
  auto blocks_p = param_blocks(model);
  Model grads_copy = grads;  // param_blocks needs mutable refs
  auto blocks_g = param_blocks(grads_copy);
  auto blocks_m = param_blocks(state.m);
  auto blocks_v = param_blocks(state.v);
  if (blocks_p.size() != blocks_g.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  for (std::size_t b = 0; b < blocks_p.size(); ++b) {
    auto p = blocks_p[b];
    auto gr = blocks_g[b];
    auto m = blocks_m[b];
    auto v = blocks_v[b];
    if (p.size() != gr.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (std::size_t t = 0; t < p.size(); ++t) {
      m[t] = beta1 * m[t] + (1.0 - beta1) * gr[t];
      v[t] = beta2 * v[t] + (1.0 - beta2) * gr[t] * gr[t];
      p[t] += lr * (m[t] / bc1) / (std::sqrt(v[t] / bc2) + eps);
    }
  }
  if (model.head.kind == HeadKind::Csips) {
    const double gg = grads.head.gamma;
    state.gamma_m = beta1 * state.gamma_m + (1.0 - beta1) * gg;
    state.gamma_v = beta2 * state.gamma_v + (1.0 - beta2) * gg * gg;
    model.head.gamma +=
        lr * (state.gamma_m / bc1) / (std::sqrt(state.gamma_v / bc2) + eps);
  }
}

struct MetricsRow {
  std::size_t iteration = 0;
  double objective_estimate = 0.0;
  double validation_auc = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  Model best;
  double best_metric = 0.0;
  std::vector<MetricsRow> history;
  std::size_t clamp_warnings = 0;
  bool diverged = false;
};

// Batched ascent on the negative-sampling objective. Positive directed pairs
// are drawn proportional to their integer weight; negatives are resampled on
// every visit. Validation AUC is evaluated every checkpoint_every iterations
// (falling back to the objective estimate when no validation pairs are
// given) and the best parameters are retained. Deterministic given seed.
inline TrainResult train(const Graph& g, Model model, const TrainConfig& cfg,
                         const std::vector<LabeledPair>& val_pairs = {}) {
  cfg.validate();
  model.validate();
  // Directed positive pairs with cumulative weights.
  std::vector<std::pair<std::size_t, std::size_t>> pos;
  std::vector<double> cum;
  double total_w = 0.0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (const auto& [j, w] : g.adj[i]) {
      pos.emplace_back(i, j);
      total_w += static_cast<double>(w);
      cum.push_back(total_w);
    }
  if (pos.empty()) throw std::invalid_argument("train: graph has no positive pairs");

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, total_w);
  AdamState state = make_adam_state(model);

  TrainResult out;
  out.best = model;
  out.best_metric = -std::numeric_limits<double>::infinity();
  const auto t0 = std::chrono::steady_clock::now();

  auto evaluate_checkpoint = [&](std::size_t iter, double obj_estimate) {
    double val_auc = 0.0;
    double metric = obj_estimate;
    if (!val_pairs.empty()) {
      val_auc = auc(score_pairs(model, g, val_pairs));
      metric = val_auc;
    }
    if (metric >= out.best_metric) {
      out.best_metric = metric;
      out.best = model;
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    out.history.push_back({iter, obj_estimate, val_auc, ms});
  };

  if (cfg.iterations == 0) {
    evaluate_checkpoint(0, 0.0);
    out.best = model;
    return out;
  }

  double last_obj = 0.0;
  for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
    std::vector<ObjectiveTerm> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const double u = unif(rng);
      const auto it = std::lower_bound(cum.begin(), cum.end(), u);
      const auto& [i, j] = pos[static_cast<std::size_t>(it - cum.begin())];
      batch.push_back({i, j, sample_negatives(g, i, j, cfg.num_negatives, rng)});
    }
    double obj;
    Model grads = zeros_like(model);
    try {
      obj = objective_value(g, model, batch, &out.clamp_warnings);
      grads = objective_gradient(g, model, batch, nullptr);
    } catch (const std::runtime_error&) {
      out.diverged = true;
      break;
    }
    if (!std::isfinite(obj)) {
      out.diverged = true;
      break;
    }
    // Mean over the batch keeps the step size independent of batch_size.
    Model grads_copy = grads;
    for (auto blk : param_blocks(grads_copy))
      for (auto& v : blk) v /= static_cast<double>(cfg.batch_size);
    grads_copy.head.gamma = grads.head.gamma / static_cast<double>(cfg.batch_size);
    adam_step(model, grads_copy, state, cfg.learning_rate, cfg.beta1, cfg.beta2,
              cfg.adam_eps);
    last_obj = obj / static_cast<double>(cfg.batch_size);
    if (iter % cfg.checkpoint_every == 0 || iter == cfg.iterations)
      evaluate_checkpoint(iter, last_obj);
  }
  if (out.history.empty()) evaluate_checkpoint(0, last_obj);
  return out;
}

}  // namespace sge
