#pragma once

#include <optional>

#include "sge/encoder.hpp"
#include "sge/graph.hpp"
#include "sge/similarity.hpp"

namespace sge {

// Encoder + head. For SIPS the bias u is normally carved out of the
// encoder's K outputs (slot K-1); setting `bias_enc` instead emits u from a
// separate 1-output network appended after the main encoder's outputs.
struct Model {
  EncoderParams enc;
  std::optional<EncoderParams> bias_enc;
  SimilarityHead head;

  std::size_t feature_dim() const { return enc.K + (bias_enc ? 1 : 0); }

  void validate() const {
    head.check_layout(feature_dim());
    if (bias_enc) {
      if (head.kind != HeadKind::Sips)
        throw std::invalid_argument("model: separate bias network requires sips head");
      if (bias_enc->K != 1)
        throw std::invalid_argument("model: bias network must have 1 output");
    }
  }

  Vec encode(const Graph& g, std::size_t i) const {
    Vec z = enc.kind == EncoderKind::Table
                ? forward(enc, i)
                : forward(enc, std::span<const double>(g.attributes.at(i)));
    if (bias_enc) {
      Vec u = bias_enc->kind == EncoderKind::Table
                  ? forward(*bias_enc, i)
                  : forward(*bias_enc, std::span<const double>(g.attributes.at(i)));
      z.push_back(u[0]);
    }
    return z;
  }

  // Accumulates d<upstream, encode(g, i)>/d(params) into `grads`.
  void encode_backward(const Graph& g, std::size_t i,
                       std::span<const double> upstream, Model& grads) const {
    const auto main = upstream.first(enc.K);
    if (enc.kind == EncoderKind::Table)
      backward(enc, i, main, grads.enc);
    else
      backward(enc, std::span<const double>(g.attributes.at(i)), main, grads.enc);
    if (bias_enc) {
      const auto u = upstream.last(1);
      if (bias_enc->kind == EncoderKind::Table)
        backward(*bias_enc, i, u, *grads.bias_enc);
      else
        backward(*bias_enc, std::span<const double>(g.attributes.at(i)), u,
                 *grads.bias_enc);
    }
  }
};

inline Model zeros_like(const Model& m) {
  Model g = m;
  g.enc = zeros_like(m.enc);
  if (m.bias_enc) g.bias_enc = zeros_like(*m.bias_enc);
  g.head.gamma = 0.0;
  return g;
}

// Flat views over all trainable parameter blocks, gamma excluded (it lives
// on the head and only csips trains it).
inline std::vector<std::span<double>> param_blocks(Model& m) {
  std::vector<std::span<double>> blocks;
  auto add = [&](EncoderParams& ep) {
    if (ep.kind == EncoderKind::Table) {
      blocks.emplace_back(ep.table);
    } else {
      blocks.emplace_back(ep.A);
      blocks.emplace_back(ep.B);
      blocks.emplace_back(ep.c);
    }
  };
  add(m.enc);
  if (m.bias_enc) add(*m.bias_enc);
  return blocks;
}

}  // namespace sge
