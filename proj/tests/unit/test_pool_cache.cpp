// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "streamkv/common/error.hpp"
#include "streamkv/pool/lru_cache.hpp"
#include "streamkv/pool/radix_cache.hpp"
#include "streamkv/pool/sequence_pool.hpp"
#include "streamkv/pool/stateless_service.hpp"

using namespace streamkv;
using namespace streamkv::pool;
using namespace std::chrono_literals;

namespace {

RuntimeConfig runtime_config() {
  RuntimeConfig c;
  c.capacity_cells = 1 << 16;
  c.transient_slots = 4;
  c.session_slots = 1;
  return c;
}

Tokens ramp(TokenId from, std::size_t n) {
  Tokens t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = from + static_cast<TokenId>(i);
  return t;
}

}  // namespace

TEST(SequencePool, TimeoutAndRelease) {
  kv::CellPool cells(4, 64, 1024);
  SequencePool sp(cells, 2, 1);
  auto a = sp.acquire(SequenceKind::kTransient, 0ms);
  auto b = sp.acquire(SequenceKind::kTransient, 0ms);
  EXPECT_EQ(sp.free_count(SequenceKind::kTransient), 0u);
  try {
    sp.acquire(SequenceKind::kTransient, 20ms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
  sp.release(a);
  EXPECT_THROW(sp.release(a), Error);
  sp.release(b);
  EXPECT_EQ(sp.free_count(SequenceKind::kTransient), 2u);
  EXPECT_EQ(sp.capacity(SequenceKind::kSession), 1u);
}

TEST(SequencePool, ReleaseClearsCells) {
  model::Transformer m{model::ModelConfig{}};
  kv::CellPool cells(4, 64, 4096);
  SequencePool sp(cells, 1, 0);
  auto s = sp.acquire(SequenceKind::kTransient, 0ms);
  m.forward(cells, {Tokens(10, 300), s, 0});
  EXPECT_EQ(cells.occupancy().used_cells, 40);
  sp.release(s);
  EXPECT_EQ(cells.occupancy().used_cells, 0);
  auto again = sp.acquire(SequenceKind::kTransient, 0ms);
  EXPECT_EQ(cells.token_count(again), 0u);
}

TEST(SequencePool, WaitersServedInArrivalOrder) {
  kv::CellPool cells(4, 64, 1024);
  SequencePool sp(cells, 1, 0);
  auto held = sp.acquire(SequenceKind::kTransient, 0ms);
  std::vector<int> order;
  std::mutex m;
  std::vector<std::thread> ts;
  for (int i = 0; i < 3; ++i) {
    ts.emplace_back([&, i] {
      auto s = sp.acquire(SequenceKind::kTransient, 5000ms);
      {
        std::lock_guard lock(m);
        order.push_back(i);
      }
      sp.release(s);
    });
    while (sp.waiting(SequenceKind::kTransient) < static_cast<std::size_t>(i + 1)) std::this_thread::sleep_for(1ms);
  }
  sp.release(held);
  for (auto& t : ts) t.join();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2}));
}

TEST(RadixCache, SplitsAndCountsDeltaCells) {
  model::Transformer m{model::ModelConfig{}};
  kv::CellPool cells(4, 64, 1 << 14);
  RadixCache rc(cells, 1 << 12);
  const Tokens a = ramp(300, 10);
  Tokens b = ramp(300, 5);
  const Tokens tail = ramp(400, 5);
  b.insert(b.end(), tail.begin(), tail.end());

  auto sa = cells.create_sequence(SequenceKind::kTransient);
  m.forward(cells, {a, sa, 0});
  EXPECT_TRUE(rc.insert(a, sa));
  EXPECT_EQ(rc.node_count(), 1u);
  EXPECT_EQ(rc.committed_cells(), 40);
  cells.destroy_sequence(sa);
  EXPECT_EQ(cells.occupancy().used_cells, 40);  // held by the donor

  auto mb = rc.match(b);
  EXPECT_EQ(mb.length, 5u);
  auto sb = cells.create_sequence(SequenceKind::kTransient);
  rc.restore(mb, sb);
  EXPECT_EQ(cells.occupancy().used_cells, 40);  // aliasing copies nothing
  m.forward(cells, {std::span<const TokenId>(b).subspan(5), sb, 5});
  EXPECT_TRUE(rc.insert(b, sb));
  EXPECT_EQ(rc.node_count(), 3u);
  EXPECT_EQ(rc.committed_cells(), 60);
  cells.destroy_sequence(sb);

  EXPECT_EQ(rc.match(a).length, 10u);
  EXPECT_EQ(rc.match(ramp(300, 3)).length, 3u);
  EXPECT_EQ(rc.match(ramp(999, 3)).length, 0u);
  EXPECT_TRUE(rc.insert(a, sb));  // already cached, sequence unused
}

TEST(RadixCache, EvictsLeastRecentlyUsedLeaf) {
  model::Transformer m{model::ModelConfig{}};
  kv::CellPool cells(4, 64, 1 << 14);
  RadixCache rc(cells, 1 << 12);
  for (TokenId base : {300, 350, 400}) {
    auto s = cells.create_sequence(SequenceKind::kTransient);
    const Tokens t = ramp(base, 6);
    m.forward(cells, {t, s, 0});
    rc.insert(t, s);
    cells.destroy_sequence(s);
  }
  rc.match(ramp(300, 6));  // refresh the first
  ASSERT_TRUE(rc.evict_one());
  EXPECT_EQ(rc.match(ramp(350, 6)).length, 0u);
  EXPECT_EQ(rc.match(ramp(300, 6)).length, 6u);
  EXPECT_EQ(rc.committed_cells(), 48);
  rc.clear();
  EXPECT_EQ(rc.node_count(), 0u);
  EXPECT_EQ(rc.committed_cells(), 0);
  EXPECT_EQ(cells.occupancy().used_cells, 0);
  EXPECT_FALSE(rc.evict_one());
}

TEST(RadixCache, SkipsInsertOverBudget) {
  model::Transformer m{model::ModelConfig{}};
  kv::CellPool cells(4, 64, 1 << 14);
  RadixCache rc(cells, 40);
  auto s = cells.create_sequence(SequenceKind::kTransient);
  const Tokens t = ramp(300, 11);
  m.forward(cells, {t, s, 0});
  EXPECT_FALSE(rc.insert(t, s));
  EXPECT_EQ(rc.skipped_inserts(), 1u);
  EXPECT_TRUE(rc.insert(std::span<const TokenId>(t).first(10), s));
  EXPECT_EQ(rc.committed_cells(), 40);
}

TEST(Stateless, SeedDerivation) {
  EXPECT_EQ(derive_seed(Tokens{}), 2216829733u);
  EXPECT_EQ(derive_seed(Tokens{1, 2}), 3382077638u);
  EXPECT_EQ(derive_seed(Tokens{300, 301, 302}), 75939953u);
}

TEST(Stateless, RenderChat) {
  const std::string s = render_chat({{"system", "be brief"}, {"user", "hello"}});
  EXPECT_EQ(s, "SYSTEM: be brief\nUSER: hello\nASSISTANT:");
}

TEST(LruCache, EvictsLeastRecentlyUsed) {
  LruCache<int, int> c(1024);
  for (int i = 0; i < 1025; ++i) c.put(i, i);
  EXPECT_EQ(c.size(), 1024u);
  EXPECT_FALSE(c.get(0));
  EXPECT_EQ(c.get(1).value_or(-1), 1);
  EXPECT_EQ(c.evictions(), 1u);
  c.put(5000, 1);  // 2 is now the oldest
  EXPECT_FALSE(c.contains(2));
  EXPECT_TRUE(c.contains(1));
  EXPECT_EQ(c.hits(), 1u);
  EXPECT_EQ(c.misses(), 1u);
}

TEST(Stateless, ResponseCacheServesRepeatsWithoutForwards) {
  Runtime rt(runtime_config());
  StatelessService svc(rt, StatelessConfig{});
  const auto a = svc.complete("what is the trend of the market ?", 8);
  const auto forwards = rt.model.stats().snapshot().total();
  const auto b = svc.complete("what is the trend of the market ?", 8);
  EXPECT_EQ(rt.model.stats().snapshot().total(), forwards);
  EXPECT_TRUE(b.cache_hit);
  EXPECT_FALSE(a.cache_hit);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.seed, b.seed);
  // Different budget is a different key.
  EXPECT_FALSE(svc.complete("what is the trend of the market ?", 3).cache_hit);
}

TEST(Stateless, PrefixRestoreIsTokenIdentical) {
  Runtime rt(runtime_config());
  StatelessConfig with;
  with.use_response_cache = false;
  StatelessConfig without = with;
  without.use_prefix_cache = false;
  StatelessService cached(rt, with);
  StatelessService plain(rt, without);
  const std::string stem = "you are an analyst . summarize the recent market data and report the trend";
  for (const char* tail : {" now", " today ?", " please", " now"}) {
    const auto c = cached.complete(stem + tail, 6);
    const auto p = plain.complete(stem + tail, 6);
    EXPECT_EQ(c.tokens, p.tokens) << tail;
    EXPECT_EQ(p.restored_tokens, 0u);
  }
  ASSERT_NE(cached.prefix_cache(), nullptr);
  EXPECT_GT(cached.engine().stats().restored_tokens, 0u);
}

TEST(Stateless, ChatUsesRenderAndTokenizeCaches) {
  Runtime rt(runtime_config());
  StatelessService svc(rt, StatelessConfig{});
  const std::vector<ChatMessage> msgs = {{"user", "is the trend rising ?"}};
  const auto a = svc.chat(msgs, 4);
  const auto b = svc.chat(msgs, 4);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(svc.render_stats().hits, 1u);
  EXPECT_GE(svc.tokenize_stats().hits, 1u);
}
