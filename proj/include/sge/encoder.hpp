#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "sge/linalg.hpp"

namespace sge {

enum class EncoderKind { Table, Mlp };

inline constexpr double kBallProjectionEps = 1e-5;

// Table: per-node K-dim rows. Mlp: y = A relu(B x + c), A is K x m,
// B is m x p, c is m. Row-major storage throughout.
struct EncoderParams {
  EncoderKind kind = EncoderKind::Table;
  std::size_t n = 0;  // table rows
  std::size_t p = 0;  // mlp input dim
  std::size_t m = 0;  // mlp hidden units
  std::size_t K = 0;
  Vec table;  // n*K
  Vec A;      // K*m
  Vec B;      // m*p
  Vec c;      // m
  bool ball_projection = false;
  double ball_eps = kBallProjectionEps;

  std::size_t num_params() const {
    return kind == EncoderKind::Table ? table.size()
                                      : A.size() + B.size() + c.size();
  }
};

// Table entries ~ N(0, 1e-2^2). Deterministic given seed.
inline EncoderParams init_table(std::size_t n, std::size_t K,
                                std::uint64_t seed,
                                bool ball_projection = false) {
  if (n == 0 || K == 0) throw std::invalid_argument("init_table: zero dimension");
  EncoderParams ep;
  ep.kind = EncoderKind::Table;
  ep.n = n;
  ep.K = K;
  ep.ball_projection = ball_projection;
  ep.table.resize(n * K);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1e-2);
  for (auto& v : ep.table) v = gauss(rng);
  return ep;
}

// He initialization: weights ~ N(0, 2/fan_in), biases zero.
inline EncoderParams init_mlp(std::size_t p, std::size_t m, std::size_t K,
                              std::uint64_t seed,
                              bool ball_projection = false) {
  if (p == 0 || m == 0 || K == 0) throw std::invalid_argument("init_mlp: zero dimension");
  EncoderParams ep;
  ep.kind = EncoderKind::Mlp;
  ep.p = p;
  ep.m = m;
  ep.K = K;
  ep.ball_projection = ball_projection;
  ep.A.resize(K * m);
  ep.B.resize(m * p);
  ep.c.assign(m, 0.0);
  Rng rng(seed);
  std::normal_distribution<double> gb(0.0, std::sqrt(2.0 / static_cast<double>(p)));
  std::normal_distribution<double> ga(0.0, std::sqrt(2.0 / static_cast<double>(m)));
  for (auto& v : ep.B) v = gb(rng);
  for (auto& v : ep.A) v = ga(rng);
  return ep;
}

// Maps y with ||y|| > 1 - eps to y (1 - eps)/||y||.
inline void project_to_ball(Vec& y, double eps) {
  const double ny = norm(y);
  const double r = 1.0 - eps;
  if (ny > r)
    for (auto& v : y) v *= r / ny;
}

inline Vec forward(const EncoderParams& ep, std::size_t node_index) {
  if (ep.kind != EncoderKind::Table)
    throw std::invalid_argument("forward: index input requires a table encoder");
  if (node_index >= ep.n)
    throw std::out_of_range("forward: node index out of range");
  Vec y(ep.table.begin() + node_index * ep.K,
        ep.table.begin() + (node_index + 1) * ep.K);
  if (ep.ball_projection) project_to_ball(y, ep.ball_eps);
  return y;
}

inline Vec forward(const EncoderParams& ep, std::span<const double> x) {
  if (ep.kind != EncoderKind::Mlp)
    throw std::invalid_argument("forward: vector input requires an mlp encoder");
  if (x.size() != ep.p)
    throw std::invalid_argument("forward: input dim mismatch");
  Vec h(ep.m);
  for (std::size_t i = 0; i < ep.m; ++i) {
    double s = ep.c[i];
    const double* row = ep.B.data() + i * ep.p;
    for (std::size_t j = 0; j < ep.p; ++j) s += row[j] * x[j];
    h[i] = s > 0.0 ? s : 0.0;
  }
  Vec y(ep.K);
  for (std::size_t k = 0; k < ep.K; ++k) {
    const double* row = ep.A.data() + k * ep.m;
    double s = 0.0;
    for (std::size_t i = 0; i < ep.m; ++i) s += row[i] * h[i];
    y[k] = s;
  }
  if (ep.ball_projection) project_to_ball(y, ep.ball_eps);
  return y;
}

// Gradient accumulator shaped like the parameters.
inline EncoderParams zeros_like(const EncoderParams& ep) {
  EncoderParams g = ep;
  std::fill(g.table.begin(), g.table.end(), 0.0);
  std::fill(g.A.begin(), g.A.end(), 0.0);
  std::fill(g.B.begin(), g.B.end(), 0.0);
  std::fill(g.c.begin(), g.c.end(), 0.0);
  return g;
}

// Adjusts the upstream gradient through the ball projection. The projection
// is identity when inactive; when active the Jacobian of y -> y r/||y|| is
// (r/||y||)(I - yhat yhat^T).
inline Vec projection_backward(const Vec& raw, std::span<const double> upstream,
                               double eps) {
  const double ny = norm(raw);
  const double r = 1.0 - eps;
  Vec g(upstream.begin(), upstream.end());
  if (ny <= r) return g;
  const double s = r / ny;
  double proj = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) proj += raw[k] * upstream[k];
  proj /= ny * ny;
  for (std::size_t k = 0; k < raw.size(); ++k)
    g[k] = s * (upstream[k] - raw[k] * proj);
  return g;
}

// Accumulates d<upstream, forward(ep, input)>/d(params) into `grads`.
inline void backward(const EncoderParams& ep, std::size_t node_index,
                     std::span<const double> upstream, EncoderParams& grads) {
  if (ep.kind != EncoderKind::Table)
    throw std::invalid_argument("backward: index input requires a table encoder");
  if (node_index >= ep.n)
    throw std::out_of_range("backward: node index out of range");
  if (upstream.size() != ep.K)
    throw std::invalid_argument("backward: upstream dim mismatch");
  Vec g(upstream.begin(), upstream.end());
  if (ep.ball_projection) {
    Vec raw(ep.table.begin() + node_index * ep.K,
            ep.table.begin() + (node_index + 1) * ep.K);
    g = projection_backward(raw, upstream, ep.ball_eps);
  }
  double* row = grads.table.data() + node_index * ep.K;
  for (std::size_t k = 0; k < ep.K; ++k) row[k] += g[k];
}

inline void backward(const EncoderParams& ep, std::span<const double> x,
                     std::span<const double> upstream, EncoderParams& grads) {
  if (ep.kind != EncoderKind::Mlp)
    throw std::invalid_argument("backward: vector input requires an mlp encoder");
  if (x.size() != ep.p)
    throw std::invalid_argument("backward: input dim mismatch");
  if (upstream.size() != ep.K)
    throw std::invalid_argument("backward: upstream dim mismatch");
  // Recompute activations.
  Vec pre(ep.m), h(ep.m);
  for (std::size_t i = 0; i < ep.m; ++i) {
    double s = ep.c[i];
    const double* row = ep.B.data() + i * ep.p;
    for (std::size_t j = 0; j < ep.p; ++j) s += row[j] * x[j];
    pre[i] = s;
    h[i] = s > 0.0 ? s : 0.0;
  }
  Vec g(upstream.begin(), upstream.end());
  if (ep.ball_projection) {
    Vec raw(ep.K);
    for (std::size_t k = 0; k < ep.K; ++k)
      raw[k] = dot(std::span<const double>(ep.A.data() + k * ep.m, ep.m), h);
    g = projection_backward(raw, upstream, ep.ball_eps);
  }
  // dA = g h^T
  for (std::size_t k = 0; k < ep.K; ++k) {
    double* row = grads.A.data() + k * ep.m;
    for (std::size_t i = 0; i < ep.m; ++i) row[i] += g[k] * h[i];
  }
  // dh = A^T g, gated by relu'(pre); relu' at exactly 0 is 0.
  for (std::size_t i = 0; i < ep.m; ++i) {
    if (pre[i] <= 0.0) continue;
    double dh = 0.0;
    for (std::size_t k = 0; k < ep.K; ++k) dh += ep.A[k * ep.m + i] * g[k];
    grads.c[i] += dh;
    double* row = grads.B.data() + i * ep.p;
    for (std::size_t j = 0; j < ep.p; ++j) row[j] += dh * x[j];
  }
}

// --- checkpoint format "sips-ckpt-v1" ------------------------------------

namespace detail {

inline void write_array(std::ostream& os, const char* name, const Vec& v,
                        std::size_t rows, std::size_t cols) {
  os << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    os << buf << ((i + 1) % std::max<std::size_t>(cols, 1) == 0 ? '\n' : ' ');
  }
  if (!v.empty() && v.size() % std::max<std::size_t>(cols, 1) != 0) os << '\n';
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const EncoderParams& ep,
                            double gamma = 0.0) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os << "sips-ckpt-v1\n";
  os << "meta kind " << (ep.kind == EncoderKind::Table ? "table" : "mlp")
     << " n " << ep.n << " p " << ep.p << " m " << ep.m << " K " << ep.K
     << " ball_projection " << (ep.ball_projection ? 1 : 0) << " ball_eps "
     << ep.ball_eps << '\n';
  if (ep.kind == EncoderKind::Table) {
    detail::write_array(os, "encoder.table", ep.table, ep.n, ep.K);
  } else {
    detail::write_array(os, "encoder.A", ep.A, ep.K, ep.m);
    detail::write_array(os, "encoder.B", ep.B, ep.m, ep.p);
    detail::write_array(os, "encoder.c", ep.c, 1, ep.m);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", gamma);
  os << "scalar head.gamma " << buf << "\nend\n";
  if (!os) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

inline EncoderParams load_checkpoint(const std::string& path,
                                     double* gamma = nullptr) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string tag;
  std::getline(is, tag);
  if (tag != "sips-ckpt-v1")
    throw std::runtime_error("load_checkpoint: unsupported format tag '" + tag + "'");
  EncoderParams ep;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end") break;
    if (word == "meta") {
      std::string key, kind;
      while (ls >> key) {
        if (key == "kind") {
          ls >> kind;
          ep.kind = kind == "table" ? EncoderKind::Table : EncoderKind::Mlp;
        } else if (key == "n") ls >> ep.n;
        else if (key == "p") ls >> ep.p;
        else if (key == "m") ls >> ep.m;
        else if (key == "K") ls >> ep.K;
        else if (key == "ball_projection") {
          int b; ls >> b; ep.ball_projection = b != 0;
        } else if (key == "ball_eps") ls >> ep.ball_eps;
      }
    } else if (word == "tensor") {
      std::string name;
      std::size_t rows, cols;
      ls >> name >> rows >> cols;
      Vec v(rows * cols);
      for (auto& x : v)
        if (!(is >> x))
          throw std::runtime_error("load_checkpoint: truncated tensor " + name);
      is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      if (name == "encoder.table") ep.table = std::move(v);
      else if (name == "encoder.A") ep.A = std::move(v);
      else if (name == "encoder.B") ep.B = std::move(v);
      else if (name == "encoder.c") ep.c = std::move(v);
      else throw std::runtime_error("load_checkpoint: unknown tensor " + name);
    } else if (word == "scalar") {
      std::string name;
      double v;
      ls >> name >> v;
      if (name == "head.gamma" && gamma) *gamma = v;
    }
  }
  return ep;
}

}  // namespace sge
