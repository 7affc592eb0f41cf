#pragma once

#include <cstdint>
#include <vector>

#include "sge/encoder.hpp"
#include "sge/kernels.hpp"
#include "sge/model.hpp"
#include "sge/similarity.hpp"

namespace sge {

// Lower bound 2 p M^2 / 3 on the box-uniform L1 error of any inner-product
// approximation to the negative squared distance.
inline double ip_error_lower_bound(std::size_t p, double M) {
  if (p < 1) throw std::invalid_argument("ip_error_lower_bound: p >= 1");
  if (M < 0.0) throw std::invalid_argument("ip_error_lower_bound: M >= 0");
  return 2.0 * static_cast<double>(p) * M * M / 3.0;
}

struct LowerBoundReport {
  std::size_t p = 0;
  double M = 0.0;
  double bound = 0.0;
  double estimated_ips_error = 0.0;
  double estimated_sips_error = 0.0;
  double estimated_csips_error = 0.0;  // only when requested
  double planted_sips_error = 0.0;
  std::size_t mc_samples = 0;
  double mc_stderr = 0.0;       // stderr of the IPS estimate (bound test)
  double mc_stderr_sips = 0.0;
};

namespace detail {

inline Vec uniform_box_point(std::size_t p, double M, Rng& rng) {
  std::uniform_real_distribution<double> unif(-M, M);
  Vec x(p);
  for (auto& v : x) v = unif(rng);
  return x;
}

// L2 regression of head(enc(x), enc(x')) onto the NSD target -||x-x'||^2
// over uniform box pairs; plain Adam on the encoder (and gamma for csips).
inline void regress_to_nsd(Model& model, std::size_t p, double M,
                           std::size_t iterations, std::size_t batch,
                           double lr, Rng& rng) {
  struct AdamBlocks {
    std::vector<Vec> m, v;
    double gm = 0.0, gv = 0.0;
    long t = 0;
  } st;
  {
    Model tmp = model;
    for (auto blk : param_blocks(tmp)) {
      st.m.emplace_back(blk.size(), 0.0);
      st.v.emplace_back(blk.size(), 0.0);
    }
  }
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t it = 0; it < iterations; ++it) {
    Model grads = zeros_like(model);
    for (std::size_t b = 0; b < batch; ++b) {
      const Vec x = uniform_box_point(p, M, rng);
      const Vec x2 = uniform_box_point(p, M, rng);
      const Vec zi = forward(model.enc, std::span<const double>(x));
      const Vec zj = forward(model.enc, std::span<const double>(x2));
      const double target = -dist_sq(x, x2);
      const double h = head_value(model.head, zi, zj);
      const double coeff =
          2.0 * (h - target) / static_cast<double>(batch);  // d mean loss / dh
      const auto hg = head_gradient(model.head, zi, zj);
      Vec up_i(hg.d_zi), up_j(hg.d_zj);
      for (auto& v : up_i) v *= -coeff;  // ascent convention below adds +lr m
      for (auto& v : up_j) v *= -coeff;
      backward(model.enc, std::span<const double>(x), up_i, grads.enc);
      backward(model.enc, std::span<const double>(x2), up_j, grads.enc);
      if (hg.d_gamma) grads.head.gamma += -coeff * *hg.d_gamma;
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(b1, st.t);
    const double bc2 = 1.0 - std::pow(b2, st.t);
    auto bp = param_blocks(model);
    auto bg = param_blocks(grads);
    for (std::size_t k = 0; k < bp.size(); ++k)
      for (std::size_t t2 = 0; t2 < bp[k].size(); ++t2) {
        auto& m = st.m[k][t2];
        auto& v = st.v[k][t2];
        const double gr = bg[k][t2];
        m = b1 * m + (1.0 - b1) * gr;
        v = b2 * v + (1.0 - b2) * gr * gr;
        bp[k][t2] += lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
      }
    if (model.head.kind == HeadKind::Csips) {
      st.gm = b1 * st.gm + (1.0 - b1) * grads.head.gamma;
      st.gv = b2 * st.gv + (1.0 - b2) * grads.head.gamma * grads.head.gamma;
      model.head.gamma += lr * (st.gm / bc1) / (std::sqrt(st.gv / bc2) + eps);
    }
  }
}

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

template <typename ScoreFn>
McEstimate mc_l1_error_vs_nsd(ScoreFn&& score, std::size_t p, double M,
                              std::size_t samples, Rng& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec x = uniform_box_point(p, M, rng);
    const Vec x2 = uniform_box_point(p, M, rng);
    const double err = std::abs(-dist_sq(x, x2) - score(x, x2));
    sum += err;
    sum_sq += err * err;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Trains IPS and SIPS heads over MLP encoders to regress the NSD similarity
// surface, then Monte-Carlo-estimates each model's L1 error. The IPS error
// must sit above the 2pM^2/3 bound (up to MC noise); SIPS can represent the
// target exactly, which the hand-planted parameters f(x) = sqrt(2) x,
// u(x) = -||x||^2 confirm without any training.
struct LowerBoundModels {
  Model ips, sips;
};

inline LowerBoundReport lower_bound_experiment(std::size_t p, double M, std::size_t K,
                                    std::size_t train_budget,
                                    std::size_t mc_samples, std::uint64_t seed,
                                    std::size_t hidden = 64,
                                    bool include_csips = false,
                                    LowerBoundModels* out_models = nullptr) {
  if (K < 2) throw std::invalid_argument("lower_bound_experiment: K >= 2 (sips layout)");
  if (mc_samples < 2) throw std::invalid_argument("lower_bound_experiment: mc_samples >= 2");
  LowerBoundReport rep;
  rep.p = p;
  rep.M = M;
  rep.bound = ip_error_lower_bound(p, M);
  rep.mc_samples = mc_samples;

  Rng rng(seed);
  const std::size_t batch = 64;
  const double lr = 0.01;

  auto run = [&](SimilarityHead head) {
    Model model{init_mlp(p, hidden, K, rng()), std::nullopt, head};
    detail::regress_to_nsd(model, p, M, train_budget, batch, lr, rng);
    return model;
  };

  {
    Model ips = run(SimilarityHead::ips());
    auto est = detail::mc_l1_error_vs_nsd(
        [&](const Vec& x, const Vec& x2) {
          return head_value(ips.head, forward(ips.enc, std::span<const double>(x)),
                            forward(ips.enc, std::span<const double>(x2)));
        },
        p, M, mc_samples, rng);
    rep.estimated_ips_error = est.mean;
    rep.mc_stderr = est.stderr_;
    if (out_models) out_models->ips = ips;
  }
  {
    Model sips = run(SimilarityHead::sips());
    auto est = detail::mc_l1_error_vs_nsd(
        [&](const Vec& x, const Vec& x2) {
          return head_value(sips.head, forward(sips.enc, std::span<const double>(x)),
                            forward(sips.enc, std::span<const double>(x2)));
        },
        p, M, mc_samples, rng);
    rep.estimated_sips_error = est.mean;
    rep.mc_stderr_sips = est.stderr_;
    if (out_models) out_models->sips = sips;
  }
  if (include_csips) {
    Model csips = run(SimilarityHead::csips());
    auto est = detail::mc_l1_error_vs_nsd(
        [&](const Vec& x, const Vec& x2) {
          return head_value(csips.head, forward(csips.enc, std::span<const double>(x)),
                            forward(csips.enc, std::span<const double>(x2)));
        },
        p, M, mc_samples, rng);
    rep.estimated_csips_error = est.mean;
  }
  {
    // exact SIPS representation, no training
    auto planted = [&](const Vec& x, const Vec& x2) {
      auto lift = [](const Vec& v) {
        Vec z;
        z.reserve(v.size() + 1);
        for (double t : v) z.push_back(std::sqrt(2.0) * t);
        z.push_back(-norm_sq(v));
        return z;
      };
      return head_value(SimilarityHead::sips(), lift(x), lift(x2));
    };
    auto est = detail::mc_l1_error_vs_nsd(planted, p, M,
                                          std::min<std::size_t>(mc_samples, 10000), rng);
    rep.planted_sips_error = est.mean;
  }
  return rep;
}

// Max absolute residual of the shift decomposition
//   g(y,y') = g0(y,y') + h*(y) + h*(y')
// with g0(y,y') = g(y,y') - g(y,y0) - g(y0,y') + g(y0,y0) and
// h*(y) = g(y,y0) - g(y0,y0)/2. Algebraic identity, so the residual is
// rounding noise only.
inline double shift_decomposition_check(const Kernel& k,
                                        const std::vector<Vec>& points,
                                        const Vec& y0) {
  const double g00 = eval_kernel(k, y0, y0);
  double max_res = 0.0;
  std::vector<double> gy0(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    gy0[i] = eval_kernel(k, points[i], y0);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double g = eval_kernel(k, points[i], points[j]);
      const double g0 = g - gy0[i] - gy0[j] + g00;
      const double hs_i = gy0[i] - 0.5 * g00;
      const double hs_j = gy0[j] - 0.5 * g00;
      max_res = std::max(max_res, std::abs(g - (g0 + hs_i + hs_j)));
    }
  return max_res;
}

// Gram matrix of the shifted kernel g0 (PD for CPD g, any y0).
inline GramMatrix shifted_pd_gram(const Kernel& k, const std::vector<Vec>& points,
                                  const Vec& y0) {
  const double g00 = eval_kernel(k, y0, y0);
  std::vector<double> gy0(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    gy0[i] = eval_kernel(k, points[i], y0);
  GramMatrix g0(points.size(), Vec(points.size(), 0.0));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i; j < points.size(); ++j) {
      const double v =
          eval_kernel(k, points[i], points[j]) - gy0[i] - gy0[j] + g00;
      g0[i][j] = v;
      g0[j][i] = v;
    }
  return g0;
}

struct PoissonBernoulliRow {
  double lambda = 0.0;
  double p_one = 0.0;       // P(w=1) = exp(-lambda) lambda
  double sigma_h = 0.0;     // sigmoid(log lambda) = lambda/(1+lambda)
  double diff = 0.0;        // |p_one - sigma_h|
  double lambda_cubed = 0.0;
  double p_ge2 = 0.0;       // 1 - exp(-lambda)(1+lambda)
  double half_lambda_sq = 0.0;
};

inline constexpr double kPoissonBernoulliC = 2.0;

// Closed-form comparison of the Poisson link model against its Bernoulli
// approximation; valid in the expansion regime lambda <= 0.5.
inline std::vector<PoissonBernoulliRow> poisson_bernoulli_check(
    const std::vector<double>& h_values) {
  std::vector<PoissonBernoulliRow> rows;
  for (double h : h_values) {
    const double lambda = std::exp(h);
    if (lambda > 0.5)
      throw std::invalid_argument("poisson_bernoulli_check: lambda > 0.5 is out of regime");
    PoissonBernoulliRow r;
    r.lambda = lambda;
    r.p_one = std::exp(-lambda) * lambda;
    r.sigma_h = sigmoid(h);
    r.diff = std::abs(r.p_one - r.sigma_h);
    r.lambda_cubed = lambda * lambda * lambda;
    r.p_ge2 = 1.0 - std::exp(-lambda) * (1.0 + lambda);
    r.half_lambda_sq = 0.5 * lambda * lambda;
    rows.push_back(r);
  }
  return rows;
}

inline bool poisson_bernoulli_pass(const std::vector<PoissonBernoulliRow>& rows) {
  for (const auto& r : rows) {
    if (r.diff > kPoissonBernoulliC * r.lambda_cubed) return false;
    if (std::abs(r.p_ge2 - r.half_lambda_sq) > r.lambda_cubed) return false;
  }
  return true;
}

}  // namespace sge
