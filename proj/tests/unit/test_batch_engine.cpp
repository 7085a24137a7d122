// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "streamkv/common/error.hpp"
#include "streamkv/sched/batch_engine.hpp"

using namespace streamkv;
using namespace streamkv::sched;

namespace {

RuntimeConfig runtime_config(std::int64_t cells = 1 << 18, std::size_t slots = 16) {
  RuntimeConfig c;
  c.capacity_cells = cells;
  c.transient_slots = slots;
  c.session_slots = 1;
  return c;
}

// Plain greedy decoding straight on the model, one token per forward.
Tokens reference_greedy(model::Transformer& m, const Tokens& prompt, std::size_t max_tokens) {
  kv::CellPool pool(m.config().layers, m.config().model_dim, 1 << 14);
  auto s = pool.create_sequence(SequenceKind::kTransient);
  Tokens out;
  if (max_tokens == 0) return out;
  auto l = m.forward(pool, {prompt, s, 0});
  Position pos = static_cast<Position>(prompt.size());
  while (out.size() < max_tokens) {
    const TokenId t = model::greedy_sample(l).token;
    if (t == model::vocab::kEos) break;
    out.push_back(t);
    if (out.size() >= max_tokens) break;
    l = m.forward(pool, {std::span<const TokenId>(&t, 1), s, pos++});
  }
  return out;
}

// Repetitive prompts so prompt lookup finds drafts.
Tokens repetitive_prompt(std::mt19937& rng) {
  std::uniform_int_distribution<TokenId> alpha(282, 300);
  Tokens motif(3 + rng() % 6);
  for (auto& t : motif) t = alpha(rng);
  Tokens p;
  const std::size_t n = 12 + rng() % 40;
  while (p.size() < n) p.insert(p.end(), motif.begin(), motif.end());
  if (rng() % 2) p.push_back(alpha(rng));
  return p;
}

}  // namespace

TEST(BatchEngine, MatchesReferenceGreedy) {
  Runtime rt(runtime_config());
  EngineConfig cfg;
  BatchEngine eng(rt, cfg);
  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Tokens p = repetitive_prompt(rng);
    const auto c = eng.generate(p, 12);
    EXPECT_EQ(c.tokens, reference_greedy(rt.model, p, 12));
    EXPECT_EQ(c.prefill_tokens, p.size());
  }
  EXPECT_EQ(rt.pool.occupancy().used_cells, 0);
}

TEST(BatchEngine, SpeculationIsTransparent) {
  Runtime rt(runtime_config());
  EngineConfig cfg;
  BatchEngine eng(rt, cfg);
  std::mt19937 rng(4);
  std::uint64_t proposed = 0;
  for (std::size_t n_active : {1u, 4u, 16u}) {
    std::vector<Tokens> prompts;
    for (std::size_t i = 0; i < n_active; ++i) prompts.push_back(repetitive_prompt(rng));
    std::vector<Tokens> on, off;
    for (bool spec : {true, false}) {
      eng.set_speculation(spec);
      std::vector<std::future<Completion>> fs;
      for (const auto& p : prompts) fs.push_back(eng.submit(p, 16));
      auto& dst = spec ? on : off;
      for (auto& f : fs) {
        const auto c = f.get();
        if (spec) proposed += c.drafts_proposed;
        dst.push_back(c.tokens);
      }
    }
    EXPECT_EQ(on, off) << "n_active " << n_active;
    for (std::size_t i = 0; i < prompts.size(); ++i) EXPECT_EQ(on[i], reference_greedy(rt.model, prompts[i], 16));
  }
  EXPECT_GT(proposed, 0u);
}

TEST(BatchEngine, GroupsIdenticalPrompts) {
  Runtime rt(runtime_config());
  EngineConfig cfg;
  cfg.start_thread = false;
  BatchEngine eng(rt, cfg);
  Tokens p(300);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<TokenId>(282 + i % 50);
  std::vector<std::future<Completion>> fs;
  for (int i = 0; i < 4; ++i) fs.push_back(eng.submit(p, 4));
  eng.run_until_idle();
  const auto ref = reference_greedy(rt.model, p, 4);
  std::size_t aliased = 0;
  for (auto& f : fs) {
    const auto c = f.get();
    EXPECT_EQ(c.tokens, ref);
    aliased += c.aliased_tokens;
  }
  const auto st = eng.stats();
  EXPECT_EQ(st.grouped_followers, 3u);
  EXPECT_GT(aliased, 0u);
  EXPECT_LT(st.prefill_tokens, 4u * p.size());
}

TEST(BatchEngine, DefersPrefillAtHighWaterWhileDecoding) {
  Runtime rt(runtime_config(1 << 12, 4));
  EngineConfig cfg;
  cfg.start_thread = false;
  cfg.speculation = false;
  cfg.planner.high_water = 0.01;
  BatchEngine eng(rt, cfg);
  const Tokens a(20, 300);
  const Tokens b(20, 301);
  auto fa = eng.submit(a, 6);
  eng.step();  // a prefills
  auto fb = eng.submit(b, 6);
  eng.step();  // a decodes, b waits above the mark
  auto st = eng.stats();
  EXPECT_GE(st.deferred_iterations, 1u);
  EXPECT_GE(st.decode_tokens, 1u);
  eng.run_until_idle();
  EXPECT_EQ(fa.get().tokens, reference_greedy(rt.model, a, 6));
  EXPECT_EQ(fb.get().tokens, reference_greedy(rt.model, b, 6));
}

TEST(BatchEngine, OversizedRequestFailsWithSizing) {
  Runtime rt(runtime_config(1 << 12, 2));
  EngineConfig cfg;
  BatchEngine eng(rt, cfg);
  auto f = eng.submit(Tokens(600, 300), 4);
  try {
    f.get();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSizing);
  }
  EXPECT_EQ(eng.generate(Tokens(10, 300), 2).tokens, reference_greedy(rt.model, Tokens(10, 300), 2));
}

TEST(BatchEngine, EdgeCases) {
  Runtime rt(runtime_config());
  BatchEngine eng(rt, EngineConfig{});
  EXPECT_TRUE(eng.generate(Tokens{300, 301}, 0).tokens.empty());
  EXPECT_THROW(eng.submit(Tokens{}, 4), Error);
  EXPECT_THROW(eng.submit(Tokens(10, 300), 40000), Error);
}

TEST(BatchEngine, OccupancyStaysWithinCapacityUnderFuzz) {
  Runtime rt(runtime_config(1 << 13, 8));
  BatchEngine eng(rt, EngineConfig{});
  std::mt19937 rng(12);
  std::vector<std::future<Completion>> fs;
  for (int i = 0; i < 1000; ++i) {
    Tokens p(1 + rng() % 80);
    for (auto& t : p) t = static_cast<TokenId>(282 + rng() % 30);
    fs.push_back(eng.submit(p, rng() % 10));
  }
  std::size_t ok = 0, sized = 0;
  for (auto& f : fs) {
    try {
      f.get();
      ++ok;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSizing);
      ++sized;
    }
  }
  EXPECT_EQ(ok + sized, 1000u);
  const auto st = eng.stats();
  EXPECT_LE(st.peak_used_cells, rt.pool.occupancy().capacity_cells);
  EXPECT_LE(st.peak_projected_cells, rt.transient_budget());
  EXPECT_EQ(rt.pool.occupancy().used_cells, 0);
  EXPECT_EQ(rt.sequences.free_count(SequenceKind::kTransient), 8u);
}
