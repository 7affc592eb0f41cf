#pragma once

#include <optional>
#include <utility>

#include "sge/kernels.hpp"
#include "sge/linalg.hpp"

namespace sge {

enum class HeadKind { Ips, Sips, Csips, Ipds, Nsd, Poincare };

inline const char* to_string(HeadKind k) {
  switch (k) {
    case HeadKind::Ips: return "ips";
    case HeadKind::Sips: return "sips";
    case HeadKind::Csips: return "csips";
    case HeadKind::Ipds: return "ipds";
    case HeadKind::Nsd: return "nsd";
    case HeadKind::Poincare: return "poincare";
  }
  return "?";
}

// Feature layout over the encoder's K output slots:
//   ips / nsd / poincare : all K slots are y
//   sips                 : slots 0..K-2 are y, slot K-1 is the bias u
//   ipds                 : first k_plus slots are f, remaining k_minus are r
struct SimilarityHead {
  HeadKind kind = HeadKind::Ips;
  double gamma = 0.0;        // csips shift, trainable
  std::size_t k_plus = 0;    // ipds only
  std::size_t k_minus = 0;   // ipds only

  static SimilarityHead ips() { return {HeadKind::Ips}; }
  static SimilarityHead sips() { return {HeadKind::Sips}; }
  static SimilarityHead csips(double gamma = 0.0) {
    return {HeadKind::Csips, gamma};
  }
  static SimilarityHead ipds(std::size_t k_plus, std::size_t k_minus) {
    return {HeadKind::Ipds, 0.0, k_plus, k_minus};
  }
  static SimilarityHead nsd() { return {HeadKind::Nsd}; }
  static SimilarityHead poincare() { return {HeadKind::Poincare}; }

  void check_layout(std::size_t K) const {
    switch (kind) {
      case HeadKind::Sips:
        if (K < 2) throw std::invalid_argument("sips head requires K >= 2");
        break;
      case HeadKind::Ipds:
        if (k_plus < 1 || k_minus < 1 || k_plus + k_minus != K)
          throw std::invalid_argument(
              "ipds head requires k_plus >= 1, k_minus >= 1, k_plus + k_minus = K");
        break;
      default:
        if (K < 1) throw std::invalid_argument("head requires K >= 1");
        break;
    }
  }
};

inline double head_value(const SimilarityHead& head, std::span<const double> zi,
                         std::span<const double> zj) {
  if (zi.size() != zj.size())
    throw std::invalid_argument("head_value: feature dim mismatch");
  const std::size_t K = zi.size();
  head.check_layout(K);
  switch (head.kind) {
    case HeadKind::Ips:
      return dot(zi, zj);
    case HeadKind::Sips:
      return dot(zi.first(K - 1), zj.first(K - 1)) + (zi[K - 1] + zj[K - 1]);
    case HeadKind::Csips:
      return dot(zi, zj) - head.gamma;
    case HeadKind::Ipds:
      return dot(zi.first(head.k_plus), zj.first(head.k_plus)) -
             dot(zi.last(head.k_minus), zj.last(head.k_minus));
    case HeadKind::Nsd:
      return -dist_sq(zi, zj);
    case HeadKind::Poincare:
      return -poincare_distance(zi, zj);
  }
  throw std::logic_error("head_value: unknown kind");
}

struct HeadGradient {
  Vec d_zi, d_zj;
  std::optional<double> d_gamma;  // csips only, always -1
};

inline HeadGradient head_gradient(const SimilarityHead& head,
                                  std::span<const double> zi,
                                  std::span<const double> zj) {
  if (zi.size() != zj.size())
    throw std::invalid_argument("head_gradient: feature dim mismatch");
  const std::size_t K = zi.size();
  head.check_layout(K);
  HeadGradient g;
  g.d_zi.assign(K, 0.0);
  g.d_zj.assign(K, 0.0);
  switch (head.kind) {
    case HeadKind::Ips:
      for (std::size_t k = 0; k < K; ++k) {
        g.d_zi[k] = zj[k];
        g.d_zj[k] = zi[k];
      }
      break;
    case HeadKind::Sips:
      for (std::size_t k = 0; k + 1 < K; ++k) {
        g.d_zi[k] = zj[k];
        g.d_zj[k] = zi[k];
      }
      g.d_zi[K - 1] = 1.0;
      g.d_zj[K - 1] = 1.0;
      break;
    case HeadKind::Csips:
      for (std::size_t k = 0; k < K; ++k) {
        g.d_zi[k] = zj[k];
        g.d_zj[k] = zi[k];
      }
      g.d_gamma = -1.0;
      break;
    case HeadKind::Ipds:
      for (std::size_t k = 0; k < head.k_plus; ++k) {
        g.d_zi[k] = zj[k];
        g.d_zj[k] = zi[k];
      }
      for (std::size_t k = head.k_plus; k < K; ++k) {
        g.d_zi[k] = -zj[k];
        g.d_zj[k] = -zi[k];
      }
      break;
    case HeadKind::Nsd:
      for (std::size_t k = 0; k < K; ++k) {
        g.d_zi[k] = -2.0 * (zi[k] - zj[k]);
        g.d_zj[k] = 2.0 * (zi[k] - zj[k]);
      }
      break;
    case HeadKind::Poincare: {
      check_in_ball(zi, "first argument");
      check_in_ball(zj, "second argument");
      const double alpha = 1.0 - norm_sq(zi);
      const double beta = 1.0 - norm_sq(zj);
      const double dsq = dist_sq(zi, zj);
      const double z = 1.0 + 2.0 * dsq / (alpha * beta);
      // Subgradient 0 at the cusp zi == zj.
      if (z <= 1.0 + 1e-15) break;
      const double c = 1.0 / std::sqrt(z * z - 1.0);
      // d z / d zi = 4/(alpha*beta) [ ((dsq/alpha) zi) + (zi - zj) ]
      // (differentiating both the numerator and 1 - ||zi||^2).
      const double s = 4.0 / (alpha * beta);
      for (std::size_t k = 0; k < K; ++k) {
        const double dz_i = s * ((dsq / alpha) * zi[k] + (zi[k] - zj[k]));
        const double dz_j = s * ((dsq / beta) * zj[k] + (zj[k] - zi[k]));
        // head is -distance, distance' = c * z'
        g.d_zi[k] = -c * dz_i;
        g.d_zj[k] = -c * dz_j;
      }
      break;
    }
  }
  return g;
}

// IPDS feature pair reproducing the SIPS value <f_i,f_j> + u_i + u_j:
//   f_plus = (f, u, 1), r_minus = (u - 1)
// since <f_plus_i, f_plus_j> - r_i r_j
//     = <f_i,f_j> + u_i u_j + 1 - (u_i - 1)(u_j - 1) = <f_i,f_j> + u_i + u_j.
inline std::pair<Vec, Vec> sips_reduction_of_ipds(std::span<const double> f,
                                                  double u) {
  Vec f_plus(f.begin(), f.end());
  f_plus.push_back(u);
  f_plus.push_back(1.0);
  return {std::move(f_plus), Vec{u - 1.0}};
}

}  // namespace sge
