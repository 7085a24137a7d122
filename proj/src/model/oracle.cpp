// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

// Cache-free reference forward. Recomputes every position from scratch in
// double precision with a two-pass softmax; shares only the weights with the
// incremental path.

#include <algorithm>
#include <cmath>

#include "streamkv/model/transformer.hpp"

namespace streamkv::model {

namespace {

using Mat = std::vector<std::vector<double>>;

std::vector<double> apply(const std::vector<float>& w, const std::vector<double>& x, std::size_t out_dim) {
  const std::size_t in = x.size();
  std::vector<double> y(out_dim, 0.0);
  for (std::size_t o = 0; o < out_dim; ++o) {
    double s = 0.0;
    for (std::size_t i = 0; i < in; ++i) s += static_cast<double>(w[o * in + i]) * x[i];
    y[o] = s;
  }
  return y;
}

std::vector<double> rms(const std::vector<double>& x) {
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  const double inv = 1.0 / std::sqrt(ms + 1e-6);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * inv;
  return y;
}

}  // namespace

std::vector<Logits> Transformer::full_forward_oracle(std::span<const TokenId> tokens) const {
  const auto n = tokens.size();
  if (static_cast<std::int64_t>(n) > config_.max_positions) {
    throw Error(ErrorCode::kLengthOverflow, "oracle: sequence longer than max_positions");
  }
  const auto d = static_cast<std::size_t>(config_.model_dim);
  const auto H = static_cast<std::size_t>(config_.heads);
  const auto dk = static_cast<std::size_t>(config_.head_dim);
  const auto hidden = d * static_cast<std::size_t>(config_.mlp_ratio);
  const double emb_scale = std::sqrt(static_cast<double>(d));

  Mat x(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(tokens[i]);
    for (std::size_t k = 0; k < d; ++k) {
      x[i][k] = static_cast<double>(weights_.embedding[t * d + k]) * emb_scale +
                positional_encoding(static_cast<Position>(i), static_cast<int>(k), config_.model_dim);
    }
  }

  for (const auto& lw : weights_.layers) {
    Mat q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto hn = rms(x[i]);
      q[i] = apply(lw.wq, hn, d);
      k[i] = apply(lw.wk, hn, d);
      v[i] = apply(lw.wv, hn, d);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> out(d, 0.0);
      for (std::size_t h = 0; h < H; ++h) {
        std::vector<double> scores(i + 1);
        for (std::size_t j = 0; j <= i; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += q[i][h * dk + c] * k[j][h * dk + c];
          scores[j] = s * scale;
        }
        const double mx = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (auto& s : scores) z += (s = std::exp(s - mx));
        for (std::size_t j = 0; j <= i; ++j) {
          for (std::size_t c = 0; c < dk; ++c) out[h * dk + c] += scores[j] / z * v[j][h * dk + c];
        }
      }
      // Attention for later rows reads q/k/v only, so the residual update can
      // be applied in place.
      const auto proj = apply(lw.wo, out, d);
      for (std::size_t c = 0; c < d; ++c) x[i][c] += proj[c];
      auto m = apply(lw.w1, rms(x[i]), hidden);
      for (auto& e : m) e = std::max(e, 0.0);
      const auto back = apply(lw.w2, m, d);
      for (std::size_t c = 0; c < d; ++c) x[i][c] += back[c];
    }
  }

  std::vector<Logits> result(n);
  const auto vocab = static_cast<std::size_t>(config_.vocab_size);
  for (std::size_t i = 0; i < n; ++i) {
    const auto logits = apply(weights_.unembedding, rms(x[i]), vocab);
    result[i].position = static_cast<Position>(i);
    result[i].values.assign(logits.begin(), logits.end());
  }
  return result;
}

}  // namespace streamkv::model
