#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "sge/linalg.hpp"

namespace sge {

// arcosh(z) = log(z + sqrt(z^2 - 1)); z is clamped to >= 1 to absorb rounding
// when the two points nearly coincide.
inline double arcosh(double z) {
  if (z < 1.0) {
    if (z < 1.0 - 1e-15) throw std::domain_error("arcosh: argument < 1");
    z = 1.0;
  }
  return std::log(z + std::sqrt(z * z - 1.0));
}

inline constexpr double kPoincareBallMargin = 1e-9;

inline void check_in_ball(std::span<const double> y, const char* which) {
  if (norm(y) >= 1.0 - kPoincareBallMargin)
    throw std::domain_error(std::string("poincare: ") + which +
                            " not strictly inside the unit ball");
}

// Hyperbolic distance on the open unit ball.
inline double poincare_distance(std::span<const double> y,
                                std::span<const double> y2) {
  check_in_ball(y, "first argument");
  check_in_ball(y2, "second argument");
  const double a = 1.0 - norm_sq(y);
  const double b = 1.0 - norm_sq(y2);
  return arcosh(1.0 + 2.0 * dist_sq(y, y2) / (a * b));
}

// Symmetrized KL divergence between diagonal-covariance Gaussians.
// Closed form per dimension:
//   1/2 [ s1/s2 + s2/s1 - 2 + (mu1-mu2)^2 (1/s1 + 1/s2) ]
inline double jeffrey_divergence_gaussian(std::span<const double> mu1,
                                          std::span<const double> var1,
                                          std::span<const double> mu2,
                                          std::span<const double> var2) {
  const std::size_t q = mu1.size();
  if (var1.size() != q || mu2.size() != q || var2.size() != q)
    throw std::invalid_argument("jeffrey: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < q; ++k) {
    if (var1[k] <= 0.0)
      throw std::domain_error("jeffrey: first argument has nonpositive variance");
    if (var2[k] <= 0.0)
      throw std::domain_error("jeffrey: second argument has nonpositive variance");
    const double dm = mu1[k] - mu2[k];
    s += var1[k] / var2[k] + var2[k] / var1[k] - 2.0 +
         dm * dm * (1.0 / var1[k] + 1.0 / var2[k]);
  }
  return 0.5 * s;
}

enum class KernelKind {
  InnerProduct,
  Cosine,
  Nsd,
  NegPoincare,
  NegJeffreyGaussian,  // point packed as (mean, variance diagonal), dim 2q
  ShiftedByFunction,   // base(y,y') + u(y) + u(y'); null base means 0
};

struct Kernel {
  KernelKind kind = KernelKind::InnerProduct;
  std::shared_ptr<const Kernel> base;
  std::function<double(std::span<const double>)> shift;

  static Kernel inner_product() { return {KernelKind::InnerProduct, {}, {}}; }
  static Kernel cosine() { return {KernelKind::Cosine, {}, {}}; }
  static Kernel nsd() { return {KernelKind::Nsd, {}, {}}; }
  static Kernel neg_poincare() { return {KernelKind::NegPoincare, {}, {}}; }
  static Kernel neg_jeffrey_gaussian() {
    return {KernelKind::NegJeffreyGaussian, {}, {}};
  }
  static Kernel shifted(std::optional<Kernel> base_kernel,
                        std::function<double(std::span<const double>)> u) {
    Kernel k;
    k.kind = KernelKind::ShiftedByFunction;
    if (base_kernel) k.base = std::make_shared<Kernel>(std::move(*base_kernel));
    k.shift = std::move(u);
    return k;
  }
};

inline double eval_kernel(const Kernel& k, std::span<const double> y,
                          std::span<const double> y2) {
  switch (k.kind) {
    case KernelKind::InnerProduct:
      return dot(y, y2);
    case KernelKind::Cosine: {
      const double ny = norm(y), ny2 = norm(y2);
      if (ny == 0.0 || ny2 == 0.0)
        throw std::domain_error("cosine: zero vector");
      return dot(y, y2) / (ny * ny2);
    }
    case KernelKind::Nsd:
      return -dist_sq(y, y2);
    case KernelKind::NegPoincare:
      return -poincare_distance(y, y2);
    case KernelKind::NegJeffreyGaussian: {
      if (y.size() != y2.size() || y.size() % 2 != 0)
        throw std::invalid_argument("jeffrey: packed point must have even dim");
      const std::size_t q = y.size() / 2;
      return -jeffrey_divergence_gaussian(y.first(q), y.last(q), y2.first(q),
                                          y2.last(q));
    }
    case KernelKind::ShiftedByFunction: {
      double v = k.base ? eval_kernel(*k.base, y, y2) : 0.0;
      return v + k.shift(y) + k.shift(y2);
    }
  }
  throw std::logic_error("eval_kernel: unknown kind");
}

using GramMatrix = std::vector<Vec>;

// Upper triangle evaluated, lower mirrored, so G is exactly symmetric.
inline GramMatrix gram_matrix(const Kernel& k, const std::vector<Vec>& points) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("gram_matrix: empty point set");
  GramMatrix g(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      try {
        v = eval_kernel(k, points[i], points[j]);
      } catch (const std::exception& e) {
        throw std::domain_error("gram_matrix: pair (" + std::to_string(i) +
                                "," + std::to_string(j) + "): " + e.what());
      }
      g[i][j] = v;
      g[j][i] = v;
    }
  }
  return g;
}

inline double quadratic_form(const GramMatrix& g, std::span<const double> c) {
  const std::size_t n = g.size();
  if (c.size() != n) throw std::invalid_argument("quadratic_form: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += c[i] * dot(g[i], c);
  return s;
}

// c := normalized(P c) with P = I - (1/n) 1 1^T; returns false when the
// projection annihilates c.
inline bool project_sum_zero(Vec& c) {
  const std::size_t n = c.size();
  double mean = 0.0;
  for (double v : c) mean += v;
  mean /= static_cast<double>(n);
  for (auto& v : c) v -= mean;
  const double nn = norm(c);
  if (nn < 1e-12) return false;
  for (auto& v : c) v /= nn;
  return true;
}

enum class DefinitenessVerdict { PdConsistent, CpdOnlyConsistent, NotCpd };

inline const char* to_string(DefinitenessVerdict v) {
  switch (v) {
    case DefinitenessVerdict::PdConsistent: return "PD-consistent";
    case DefinitenessVerdict::CpdOnlyConsistent: return "CPD-only-consistent";
    case DefinitenessVerdict::NotCpd: return "NotCPD";
  }
  return "?";
}

struct GramReport {
  std::size_t n = 0;
  double min_quadratic_form = 0.0;
  double min_constrained_quadratic_form = 0.0;
  DefinitenessVerdict verdict = DefinitenessVerdict::PdConsistent;
  // Coefficient vector reproducing min_constrained_quadratic_form when the
  // verdict is NotCPD, otherwise min_quadratic_form when that is negative.
  std::optional<Vec> witness;
};

inline constexpr double kDefinitenessTolDefault = 1e-9;

// Sampling-based NECESSARY test on a precomputed Gram matrix: "PD-consistent"
// means no violation found on the probed coefficient vectors, not a proof.
// Probes are `trials` random unit vectors plus deterministic ones: the
// all-ones direction and the basis differences e_i - e_j. Extra
// caller-supplied probes (e.g. a known counterexample witness) are appended
// after normalization. Each probe contributes to the unconstrained minimum
// as-is and to the constrained minimum after sum-zero projection.
inline GramReport classify_gram(const GramMatrix& g, std::size_t trials,
                                std::uint64_t seed, double tol,
                                const std::vector<Vec>& extra_probes = {}) {
  const std::size_t n = g.size();
  if (n < 2) throw std::invalid_argument("classify_gram: need n >= 2");
  if (trials < 1) throw std::invalid_argument("classify_gram: trials >= 1");
  if (tol <= 0.0) throw std::invalid_argument("classify_gram: tol > 0");

  GramReport rep;
  rep.n = n;
  double min_q = std::numeric_limits<double>::infinity();
  double min_cq = std::numeric_limits<double>::infinity();
  Vec min_q_c, min_cq_c;
  auto visit = [&](const Vec& c) {
    const double q = quadratic_form(g, c);
    if (q < min_q) {
      min_q = q;
      min_q_c = c;
    }
    Vec pc = c;
    if (!project_sum_zero(pc)) return;
    const double cq = quadratic_form(g, pc);
    if (cq < min_cq) {
      min_cq = cq;
      min_cq_c = pc;
    }
  };

  visit(Vec(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Vec c(n, 0.0);
      c[i] = 1.0 / std::sqrt(2.0);
      c[j] = -c[i];
      visit(c);
    }
  for (const Vec& c : extra_probes) {
    if (c.size() != n)
      throw std::invalid_argument("classify_gram: probe size mismatch");
    Vec cc = c;
    const double nn = norm(cc);
    if (nn < 1e-12) continue;
    for (auto& v : cc) v /= nn;
    visit(cc);
  }
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) visit(random_unit_vector(n, rng));

  rep.min_quadratic_form = min_q;
  rep.min_constrained_quadratic_form = min_cq;
  if (min_cq < -tol) {
    rep.verdict = DefinitenessVerdict::NotCpd;
    rep.witness = min_cq_c;
  } else if (min_q < -tol) {
    rep.verdict = DefinitenessVerdict::CpdOnlyConsistent;
    rep.witness = min_q_c;
  } else {
    rep.verdict = DefinitenessVerdict::PdConsistent;
  }
  return rep;
}

inline GramReport classify_definiteness(
    const Kernel& k, const std::vector<Vec>& points, std::size_t trials,
    std::uint64_t seed, double tol = kDefinitenessTolDefault,
    const std::vector<Vec>& extra_probes = {}) {
  return classify_gram(gram_matrix(k, points), trials, seed, tol, extra_probes);
}

}  // namespace sge
