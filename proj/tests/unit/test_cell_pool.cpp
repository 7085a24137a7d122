// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "streamkv/common/error.hpp"
#include "streamkv/kv/cell_pool.hpp"
#include "streamkv/model/transformer.hpp"

using namespace streamkv;

namespace {

struct Fixture {
  model::Transformer model{model::ModelConfig{}};
  kv::CellPool pool{4, 64, 1 << 14};

  void fill(SequenceId s, Position from, std::size_t n, RegionTag r) {
    Tokens t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<TokenId>(300 + (i % 100));
    model.forward(pool, {t, s, from, Priority::kPool, r, false});
  }
};

}  // namespace

TEST(CellPool, ModelBytesFormula) {
  EXPECT_EQ(kv::kv_bytes_model(32, 4096, 32768, 2), 17179869184ULL);
  EXPECT_EQ(kv::kv_bytes_model(4, 64, 1, 4), 2048ULL);
}

TEST(CellPool, SeqRemoveCountsAndFreesCells) {
  Fixture f;
  auto s = f.pool.create_sequence(SequenceKind::kTransient);
  f.fill(s, 0, 20, RegionTag::kSliding);
  EXPECT_EQ(f.pool.occupancy().used_cells, 80);
  EXPECT_EQ(f.pool.seq_remove(s, 15), 5u);
  EXPECT_EQ(f.pool.token_count(s), 15u);
  EXPECT_EQ(f.pool.occupancy().used_cells, 60);
  EXPECT_EQ(f.pool.last_position(s), 14);
  EXPECT_EQ(f.pool.seq_remove(s, 100), 0u);
  EXPECT_EQ(f.pool.seq_remove(s, 0), 15u);
  EXPECT_EQ(f.pool.last_position(s), -1);
  EXPECT_EQ(f.pool.occupancy().used_cells, 0);
}

TEST(CellPool, EvictOldestSparesFrozen) {
  Fixture f;
  auto s = f.pool.create_sequence(SequenceKind::kSession);
  f.fill(s, 0, 4, RegionTag::kFrozen);
  f.fill(s, 4, 10, RegionTag::kSliding);
  const auto gone = f.pool.evict_oldest(s, 3);
  EXPECT_EQ(gone, (std::vector<Position>{4, 5, 6}));
  EXPECT_EQ(f.pool.region_count(s, RegionTag::kFrozen), 4u);
  EXPECT_EQ(f.pool.region_count(s, RegionTag::kSliding), 7u);
  const auto pos = f.pool.positions(s);
  EXPECT_EQ(pos.front(), 0);
  EXPECT_EQ(pos[4], 7);  // not re-based
  try {
    f.pool.evict_oldest(s, 100);
    FAIL() << "expected insufficient sliding";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSliding);
  }
  EXPECT_EQ(f.pool.token_count(s), 11u);
  EXPECT_EQ(f.pool.evict_oldest(s, 7).size(), 7u);
  EXPECT_EQ(f.pool.token_count(s), 4u);
}

TEST(CellPool, AliasSharesCellsWithoutNewOccupancy) {
  Fixture f;
  auto donor = f.pool.create_sequence(SequenceKind::kPrefixDonor);
  auto target = f.pool.create_sequence(SequenceKind::kTransient);
  f.fill(donor, 0, 16, RegionTag::kSliding);
  const auto before = f.pool.occupancy().used_cells;
  f.pool.alias_prefix(donor, target, 10);
  EXPECT_EQ(f.pool.occupancy().used_cells, before);
  EXPECT_EQ(f.pool.token_count(target), 10u);
  const auto dc = f.pool.cells(donor);
  const auto tc = f.pool.cells(target);
  for (std::size_t i = 0; i < tc.size(); ++i) {
    EXPECT_EQ(tc[i], dc[i]);
    EXPECT_EQ(f.pool.ref_count(tc[i]), 2u);
  }
  f.pool.destroy_sequence(donor);
  EXPECT_EQ(f.pool.occupancy().used_cells, 40);
  f.pool.destroy_sequence(target);
  EXPECT_EQ(f.pool.occupancy().used_cells, 0);
}

TEST(CellPool, AliasedPrefixContinuesLikeRecompute) {
  Fixture f;
  auto donor = f.pool.create_sequence(SequenceKind::kPrefixDonor);
  auto target = f.pool.create_sequence(SequenceKind::kTransient);
  auto fresh = f.pool.create_sequence(SequenceKind::kTransient);
  f.fill(donor, 0, 12, RegionTag::kSliding);
  f.fill(fresh, 0, 12, RegionTag::kSliding);
  f.pool.alias_prefix(donor, target, 12);
  const Tokens tail = {40, 41, 42};
  auto a = f.model.forward(f.pool, {tail, target, 12});
  auto b = f.model.forward(f.pool, {tail, fresh, 12});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(f.pool.digest(target), f.pool.digest(fresh));
}

TEST(CellPool, DigestRestoresAfterTemporaryAppend) {
  Fixture f;
  auto s = f.pool.create_sequence(SequenceKind::kSession);
  f.fill(s, 0, 30, RegionTag::kSliding);
  const auto d0 = f.pool.digest(s);
  f.fill(s, 30, 5, RegionTag::kEphemeral);
  EXPECT_NE(f.pool.digest(s), d0);
  f.pool.seq_remove(s, 30);
  EXPECT_EQ(f.pool.digest(s), d0);
}

TEST(CellPool, ExhaustionFailsAtomically) {
  model::Transformer m{model::ModelConfig{}};
  kv::CellPool pool(4, 64, 40);
  auto s = pool.create_sequence(SequenceKind::kTransient);
  const Tokens t(11, 300);
  try {
    m.forward(pool, {t, s, 0});
    FAIL() << "expected exhaustion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPoolExhausted);
  }
  EXPECT_EQ(pool.token_count(s), 0u);
  EXPECT_EQ(pool.occupancy().used_cells, 0);
}

TEST(CellPool, UnknownSequenceThrows) {
  kv::CellPool pool(4, 64, 100);
  EXPECT_THROW(pool.token_count(SequenceId{42, SequenceKind::kTransient}), Error);
}

TEST(CellPool, KvBytesMatchesModel) {
  Fixture f;
  auto s = f.pool.create_sequence(SequenceKind::kTransient);
  f.fill(s, 0, 7, RegionTag::kSliding);
  EXPECT_EQ(static_cast<std::uint64_t>(f.pool.kv_bytes(s)), kv::kv_bytes_model(4, 64, 7, 4));
}
