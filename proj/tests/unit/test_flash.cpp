// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "streamkv/common/error.hpp"
#include "streamkv/flash/evaluator.hpp"
#include "streamkv/flash/flash_registry.hpp"
#include "streamkv/runtime.hpp"

using namespace streamkv;
using namespace std::chrono_literals;

namespace {

RuntimeConfig small_runtime() {
  RuntimeConfig c;
  c.capacity_cells = 1 << 16;
  c.transient_slots = 4;
  c.session_slots = 2;
  return c;
}

Tokens random_tokens(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<TokenId> d(1, 511);
  Tokens t(n);
  for (auto& x : t) x = d(rng);
  return t;
}

}  // namespace

TEST(FlashRegistry, NormalizesQuestions) {
  EXPECT_EQ(flash::normalize_question("  Is   the TREND\tup ? "), "is the trend up ?");
  EXPECT_EQ(flash::question_hash("Is the trend"), flash::question_hash(" is  the   trend "));
}

TEST(FlashRegistry, CoalescesDuplicates) {
  model::Tokenizer tok(512);
  flash::FlashRegistry reg(4);
  const auto a = reg.add("Is volume rising ?", tok);
  const auto b = reg.add("  is VOLUME rising ?", tok);
  EXPECT_TRUE(a.created);
  EXPECT_FALSE(b.created);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(reg.size(), 1u);
}

TEST(FlashRegistry, CapAndBlank) {
  model::Tokenizer tok(512);
  flash::FlashRegistry reg(2);
  reg.add("one", tok);
  reg.add("two", tok);
  try {
    reg.add("three", tok);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegistryFull);
  }
  try {
    reg.add("   ", tok);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(FlashRegistry, LookupIsVersionChecked) {
  model::Tokenizer tok(512);
  flash::FlashRegistry reg;
  const auto r = reg.add("Is volume rising ?", tok);
  flash::FlashCacheEntry e;
  e.id = r.id;
  e.answer = model::vocab::kYes;
  e.answer_text = "YES";
  e.version = 3;
  reg.store(e);
  EXPECT_TRUE(reg.lookup("is volume rising ?", 3).has_value());
  EXPECT_FALSE(reg.lookup("is volume rising ?", 4).has_value());
  EXPECT_FALSE(reg.lookup("unrelated", 3).has_value());
}

TEST(FlashKMax, Cases) {
  EXPECT_EQ(flash::k_max(1000ns, 100ns, 75ns, 33ns), 25);
  EXPECT_EQ(flash::k_max(1000ns, 0ns, 10ns, 33ns), 30);
  EXPECT_EQ(flash::k_max(100ns, 90ns, 20ns, 5ns), 0);
  EXPECT_EQ(flash::k_max(1000ms, 100ms, 75ms, 33ms), 25);
  EXPECT_THROW(flash::k_max(1000ns, 0ns, 0ns, 0ns), Error);
}

TEST(FlashEvaluator, DigestNeutralAndCostAccounting) {
  Runtime rt(small_runtime());
  std::mt19937 rng(5);
  for (std::size_t k : {0u, 1u, 5u, 25u}) {
    auto seq = rt.sequences.acquire(SequenceKind::kSession, 0ms);
    const Tokens ctx = random_tokens(rng, 40 + rng() % 60);
    const Tokens header = {model::vocab::kAnswer, model::vocab::kColon};
    rt.forward(Priority::kStream, "ctx", {ctx, seq, 0, Priority::kStream, RegionTag::kSliding, false});
    const Position hp = static_cast<Position>(ctx.size());
    rt.forward(Priority::kStream, "hdr", {header, seq, hp, Priority::kStream, RegionTag::kSliding, false});
    std::vector<flash::FlashQuery> qs;
    std::size_t q_tokens = 0;
    for (std::size_t i = 0; i < k; ++i) {
      flash::FlashQuery q;
      q.id = static_cast<flash::FlashId>(i);
      q.tokens = random_tokens(rng, 1 + rng() % 12);
      q_tokens += q.tokens.size();
      qs.push_back(q);
    }
    const auto before = rt.pool.digest(seq);
    const auto flash_before = rt.model.stats().snapshot().total(Priority::kFlash);
    std::size_t seen = 0;
    auto res = flash::evaluate_all(rt, {seq, hp, header, 9}, qs, [&](const flash::FlashCacheEntry&) { ++seen; });
    EXPECT_EQ(rt.pool.digest(seq), before) << "k=" << k;
    EXPECT_EQ(seen, k);
    EXPECT_EQ(res.entries.size(), k);
    const auto flash_tokens = rt.model.stats().snapshot().total(Priority::kFlash) - flash_before;
    EXPECT_EQ(flash_tokens, k == 0 ? 0u : q_tokens + header.size()) << "k=" << k;

    for (std::size_t i = 0; i < k; ++i) {
      Tokens full = ctx;
      full.insert(full.end(), qs[i].tokens.begin(), qs[i].tokens.end());
      const auto ref = rt.model.full_forward_oracle(full).back();
      const auto pick = model::greedy_sample(ref);
      if (pick.gap > 1e-3f) EXPECT_EQ(res.entries[i].answer, pick.token);
      EXPECT_EQ(res.entries[i].version, 9u);
    }
    rt.sequences.release(seq);
  }
}
