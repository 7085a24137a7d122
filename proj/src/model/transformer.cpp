// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace streamkv::model {

namespace {

// Fixed-order dot product with eight partial lanes so it vectorizes without
// reassociation flags. Lane sums are combined pairwise in a fixed order.
inline float dot(const float* a, const float* b, int n) {
  float lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int k = 0; k < 8; ++k) lane[k] += a[i + k] * b[i + k];
  }
  for (int k = 0; i < n; ++i, ++k) lane[k] += a[i] * b[i];
  return ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7]));
}

// out[o] = sum_i w[o][i] * x[i]
void matvec(const std::vector<float>& w, const float* x, int in, int out_dim, float* out) {
  for (int o = 0; o < out_dim; ++o) out[o] = dot(w.data() + static_cast<std::size_t>(o) * in, x, in);
}

// Cephes-style expf for arguments <= 0. Branch free so loops over it
// vectorize; about 1 ulp on [-87, 0].
inline float fast_exp(float x) {
  x = std::max(x, -87.0f);
  const float fx = x * 1.44269504088896341f + 0.5f;
  const int n = static_cast<int>(fx + 128.0f) - 128;
  const float nf = static_cast<float>(n);
  const float r = (x - nf * 0.693359375f) + nf * 2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  const float y = p * r * r + r + 1.0f;
  const std::uint32_t bits = static_cast<std::uint32_t>(n + 127) << 23;
  float scale;
  std::memcpy(&scale, &bits, sizeof(scale));
  return y * scale;
}

inline float lane_sum(const float* a, std::size_t n) {
  float lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int k = 0; k < 8; ++k) lane[k] += a[i + k];
  }
  for (int k = 0; i < n; ++i, ++k) lane[k] += a[i];
  return ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7]));
}

constexpr int kFastHeadDim = 16;

// Eight-lane float vector (GCC/Clang extension). Lane-wise arithmetic keeps
// the per-element operation order fixed.
typedef float f32x8 __attribute__((vector_size(32)));

inline f32x8 load8(const float* p) {
  f32x8 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}
inline void store8(float* p, f32x8 v) { std::memcpy(p, &v, sizeof(v)); }
inline f32x8 splat8(float x) { return f32x8{x, x, x, x, x, x, x, x}; }

constexpr std::size_t kTile = 64;
constexpr std::size_t kTileVecs = kTile / 8;

// scores[t] = sum_k q[k] * kt[k][t] for a key tile packed [k][kTile].
// Each score accumulates over k in ascending order.
inline void tile_scores(const float* q, const float* kt, int dk, std::size_t cnt, float* out) {
  f32x8 s[kTileVecs];
  for (auto& v : s) v = splat8(0.0f);
  for (int k = 0; k < dk; ++k) {
    const f32x8 qk = splat8(q[k]);
    const float* row = kt + static_cast<std::size_t>(k) * kTile;
    for (std::size_t b = 0; b < kTileVecs; ++b) s[b] += qk * load8(row + 8 * b);
  }
  float full[kTile];
  for (std::size_t b = 0; b < kTileVecs; ++b) store8(full + 8 * b, s[b]);
  std::memcpy(out, full, cnt * sizeof(float));
}

// a = a * c + sum_t p[t] * v[t] for a 16-wide head, v packed [t][16].
inline void accumulate_tile16(float* a, float c, const float* p, const float* v, std::size_t cnt) {
  const f32x8 cv = splat8(c);
  f32x8 r0 = load8(a) * cv;
  f32x8 r1 = load8(a + 8) * cv;
  for (std::size_t t = 0; t < cnt; ++t) {
    const f32x8 w = splat8(p[t]);
    r0 += w * load8(v + 16 * t);
    r1 += w * load8(v + 16 * t + 8);
  }
  store8(a, r0);
  store8(a + 8, r1);
}

void rms_norm(const float* x, int n, float* out) {
  const float ms = dot(x, x, n) / static_cast<float>(n);
  const float inv = 1.0f / std::sqrt(ms + 1e-6f);
  for (int i = 0; i < n; ++i) out[i] = x[i] * inv;
}

}  // namespace

double positional_encoding(Position pos, int dim, int model_dim) {
  const int pair = dim / 2;
  const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(model_dim));
  const double angle = static_cast<double>(pos) * freq;
  return (dim % 2 == 0) ? std::sin(angle) : std::cos(angle);
}

double relative_error(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a[i]) - b[i]));
    scale = std::max(scale, std::abs(static_cast<double>(b[i])));
  }
  return scale > 0.0 ? diff / scale : diff;
}

SampleResult greedy_sample(std::span<const float> logits) {
  if (logits.empty()) throw Error(ErrorCode::kInvalidArgument, "greedy_sample: empty logits");
  std::size_t best = 0;
  float top = logits[0];
  float second = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 1; i < logits.size(); ++i) {
    const float v = logits[i];
    if (v > top) {
      second = top;
      top = v;
      best = i;
    } else if (v > second) {
      second = v;
    }
  }
  const float gap = logits.size() > 1 ? top - second : 0.0f;
  return {static_cast<TokenId>(best), gap};
}

std::uint64_t ForwardStats::Snapshot::total() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumPriorities; ++i) t += prefill[i] + decode[i];
  return t;
}

ForwardStats::Snapshot ForwardStats::snapshot() const {
  Snapshot s;
  for (std::size_t i = 0; i < kNumPriorities; ++i) {
    s.prefill[i] = prefill_[i].load(std::memory_order_relaxed);
    s.decode[i] = decode_[i].load(std::memory_order_relaxed);
  }
  return s;
}

Transformer::Transformer(ModelConfig config) : config_(config), weights_(Weights::generate(config)) {}

void Transformer::unembed(std::span<const float> hidden, std::span<float> out) const {
  const int d = config_.model_dim;
  std::vector<float> normed(static_cast<std::size_t>(d));
  rms_norm(hidden.data(), d, normed.data());
  matvec(weights_.unembedding, normed.data(), d, config_.vocab_size, out.data());
}

Logits Transformer::forward(kv::CellPool& pool, const ForwardArgs& args) {
  auto all = run(pool, args, false);
  return std::move(all.back());
}

std::vector<Logits> Transformer::forward_all(kv::CellPool& pool, const ForwardArgs& args) {
  return run(pool, args, true);
}

std::vector<Logits> Transformer::run(kv::CellPool& pool, const ForwardArgs& args, bool all_logits) {
  const auto n = args.tokens.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "forward: empty token sequence");
  if (args.start_pos < 0 || args.start_pos + static_cast<Position>(n) > config_.max_positions) {
    throw Error(ErrorCode::kLengthOverflow, "forward: position range exceeds max_positions");
  }
  for (TokenId t : args.tokens) {
    if (t < 0 || t >= config_.vocab_size) throw Error(ErrorCode::kInvalidArgument, "forward: token out of range");
  }
  if (pool.layers() != config_.layers || pool.model_dim() != config_.model_dim) {
    throw Error(ErrorCode::kInvalidArgument, "forward: pool shape does not match model");
  }

  const int d = config_.model_dim;
  const int H = config_.heads;
  const int dk = config_.head_dim;
  const int hidden = d * config_.mlp_ratio;
  const int L = config_.layers;
  const auto ud = static_cast<std::size_t>(d);
  const float scale = 1.0f / std::sqrt(static_cast<float>(dk));
  const float emb_scale = std::sqrt(static_cast<float>(d));

  auto txn = pool.begin_write();
  const std::size_t first = txn.append_tokens(args.seq, args.start_pos, n, args.region);
  const kv::SequenceIndex& index = txn.sequence(args.seq);

  std::vector<float> x(n * ud), h(n * ud), q(n * ud), attn(n * ud), tmp(ud), mlp(static_cast<std::size_t>(hidden));
  for (std::size_t i = 0; i < n; ++i) {
    const auto pos = args.start_pos + static_cast<Position>(i);
    const float* e = weights_.embedding.data() + static_cast<std::size_t>(args.tokens[i]) * ud;
    for (int k = 0; k < d; ++k) {
      x[i * ud + k] = e[k] * emb_scale + static_cast<float>(positional_encoding(pos, k, d));
    }
  }

  // Per (token, head) online-softmax state.
  std::vector<float> run_max(n * static_cast<std::size_t>(H)), run_sum(n * static_cast<std::size_t>(H));
  const std::size_t total = index.size();
  std::vector<const float*> kp(total), vp(total);
  std::vector<float> scores(kTile);
  std::vector<float> key_tile(kTile * ud, 0.0f), value_tile(kTile * ud, 0.0f);

  for (int l = 0; l < L; ++l) {
    const auto& lw = weights_.layers[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < n; ++i) {
      float* hi = h.data() + i * ud;
      rms_norm(x.data() + i * ud, d, hi);
      matvec(lw.wq, hi, d, d, q.data() + i * ud);
      const kv::CellIndex cell = index.cells[(first + i) * static_cast<std::size_t>(L) + static_cast<std::size_t>(l)];
      matvec(lw.wk, hi, d, d, txn.key(cell));
      matvec(lw.wv, hi, d, d, txn.value(cell));
    }

    for (std::size_t j = 0; j < total; ++j) {
      const kv::CellIndex cell = index.cells[j * static_cast<std::size_t>(L) + static_cast<std::size_t>(l)];
      kp[j] = txn.key(cell);
      vp[j] = txn.value(cell);
    }

    std::fill(run_max.begin(), run_max.end(), -std::numeric_limits<float>::infinity());
    std::fill(run_sum.begin(), run_sum.end(), 0.0f);
    std::fill(attn.begin(), attn.end(), 0.0f);

    // Tiles are anchored at entry 0 and cut at the last visible entry, so a
    // token sees the same tile partition however its history was chunked.
    // Tiles are anchored at entry 0 and cut at the last visible entry, so a
    // token sees the same tile partition however its history was chunked.
    for (std::size_t jb = 0; jb < total; jb += kTile) {
      const std::size_t tile_len = std::min(total, jb + kTile) - jb;
      // Pack the tile: keys transposed per head [h][k][t], values [h][t][k].
      for (std::size_t t = 0; t < tile_len; ++t) {
        const float* kt = kp[jb + t];
        const float* vt = vp[jb + t];
        for (int hh = 0; hh < H; ++hh) {
          for (int k = 0; k < dk; ++k) {
            key_tile[(static_cast<std::size_t>(hh * dk + k)) * kTile + t] = kt[hh * dk + k];
            value_tile[(static_cast<std::size_t>(hh) * kTile + t) * static_cast<std::size_t>(dk) + k] = vt[hh * dk + k];
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t visible = first + i + 1;
        if (visible <= jb) continue;
        const std::size_t cnt = std::min(visible, jb + kTile) - jb;
        const float* qi = q.data() + i * ud;
        float* acc = attn.data() + i * ud;
        float* mx = run_max.data() + i * static_cast<std::size_t>(H);
        float* sm = run_sum.data() + i * static_cast<std::size_t>(H);
        for (int hh = 0; hh < H; ++hh) {
          const int off = hh * dk;
          float* sc = scores.data();
          const float* kt = key_tile.data() + static_cast<std::size_t>(off) * kTile;
          const float* vt = value_tile.data() + static_cast<std::size_t>(hh) * kTile * static_cast<std::size_t>(dk);
          tile_scores(qi + off, kt, dk, cnt, sc);
          float tile_max = -std::numeric_limits<float>::infinity();
          for (std::size_t t = 0; t < cnt; ++t) {
            sc[t] *= scale;
            tile_max = std::max(tile_max, sc[t]);
          }
          const float new_max = std::max(mx[hh], tile_max);
          const float c = fast_exp(mx[hh] - new_max);
          for (std::size_t t = 0; t < cnt; ++t) sc[t] = fast_exp(sc[t] - new_max);
          sm[hh] = sm[hh] * c + lane_sum(sc, cnt);
          float* a = acc + off;
          if (dk == kFastHeadDim) {
            accumulate_tile16(a, c, sc, vt, cnt);
          } else {
            for (int k = 0; k < dk; ++k) a[k] *= c;
            for (std::size_t t = 0; t < cnt; ++t) {
              const float p = sc[t];
              for (int k = 0; k < dk; ++k) a[k] += p * vt[t * static_cast<std::size_t>(dk) + static_cast<std::size_t>(k)];
            }
          }
          mx[hh] = new_max;
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      float* acc = attn.data() + i * ud;
      const float* sm = run_sum.data() + i * static_cast<std::size_t>(H);
      for (int hh = 0; hh < H; ++hh) {
        const float inv = 1.0f / sm[hh];
        for (int k = 0; k < dk; ++k) acc[hh * dk + k] *= inv;
      }
      float* xi = x.data() + i * ud;
      matvec(lw.wo, acc, d, d, tmp.data());
      for (int k = 0; k < d; ++k) xi[k] += tmp[static_cast<std::size_t>(k)];

      rms_norm(xi, d, tmp.data());
      matvec(lw.w1, tmp.data(), d, hidden, mlp.data());
      for (auto& m : mlp) m = std::max(m, 0.0f);
      matvec(lw.w2, mlp.data(), hidden, d, tmp.data());
      for (int k = 0; k < d; ++k) xi[k] += tmp[static_cast<std::size_t>(k)];
    }
  }

  stats_.add(args.cause, args.decode, n);

  std::vector<Logits> out;
  const std::size_t from = all_logits ? 0 : n - 1;
  out.reserve(n - from);
  for (std::size_t i = from; i < n; ++i) {
    Logits lg;
    lg.values.resize(static_cast<std::size_t>(config_.vocab_size));
    lg.position = args.start_pos + static_cast<Position>(i);
    unembed(std::span<const float>(x.data() + i * ud, ud), lg.values);
    out.push_back(std::move(lg));
  }
  return out;
}

}  // namespace streamkv::model
