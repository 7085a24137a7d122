// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/sched/planner.hpp"

#include <algorithm>
#include <unordered_map>

#include "streamkv/common/error.hpp"
#include "streamkv/common/hash.hpp"

namespace streamkv::sched {

std::size_t chunk_size(std::size_t n_batch, std::size_t n_prefilling, std::size_t lo, std::size_t hi) {
  if (n_prefilling == 0) throw Error(ErrorCode::kInvalidArgument, "chunk_size needs at least one slot");
  return std::clamp(n_batch / n_prefilling, lo, hi);
}

AdmissionResult admit(std::span<const AdmissionCandidate> pending, std::int64_t committed_cells, int layers,
                      std::int64_t budget_cells) {
  AdmissionResult r;
  r.projected_cells = committed_cells;
  for (const auto& c : pending) {
    const std::int64_t need = projected_cells(c.prompt_tokens, c.max_tokens, layers);
    if (need > budget_cells) {
      r.oversized.push_back(c.id);
      continue;
    }
    if (r.projected_cells + need > budget_cells) break;
    r.projected_cells += need;
    r.admitted.push_back(c.id);
  }
  return r;
}

std::uint64_t group_key(std::span<const TokenId> tokens, std::size_t from, std::size_t window) {
  Fnv1a h;
  const std::size_t end = std::min(tokens.size(), from + window);
  for (std::size_t i = from; i < end; ++i) h.update_u32(static_cast<std::uint32_t>(tokens[i]));
  return h.value();
}

std::size_t draft_cap(const PlannerConfig& cfg, std::size_t n_active, double acceptance_ema) {
  if (acceptance_ema < cfg.ema_floor) return 0;
  if (n_active <= cfg.cap_small_n) return cfg.cap_small;
  if (n_active <= cfg.cap_mid_n) return cfg.cap_mid;
  return cfg.cap_large;
}

bool above_high_water(const kv::Occupancy& occ, double high_water) {
  return static_cast<double>(occ.used_cells) >= high_water * static_cast<double>(occ.capacity_cells);
}

namespace {

bool same_window(const SlotView& a, const SlotView& b, std::size_t window) {
  const auto wa = a.prompt.subspan(a.cursor, std::min(window, a.prompt.size() - a.cursor));
  const auto wb = b.prompt.subspan(b.cursor, std::min(window, b.prompt.size() - b.cursor));
  return std::equal(wa.begin(), wa.end(), wb.begin(), wb.end());
}

}  // namespace

IterationPlan plan_iteration(std::span<const SlotView> slots, const kv::Occupancy& occ, const PlannerConfig& cfg,
                             bool grouping) {
  IterationPlan plan;
  for (const auto& s : slots) {
    if (s.decoding) plan.decode.push_back(s.id);
  }
  for (const auto& s : slots) {
    if (s.decoding) plan.draft_caps.push_back(draft_cap(cfg, plan.decode.size(), s.acceptance_ema));
  }

  std::vector<const SlotView*> prefilling;
  for (const auto& s : slots) {
    if (!s.decoding && s.cursor < s.prompt.size()) prefilling.push_back(&s);
  }
  if (prefilling.empty()) return plan;
  if (above_high_water(occ, cfg.high_water)) {
    plan.prefill_deferred = true;
    return plan;
  }

  // Group fresh slots by their first window; the hash only nominates, the
  // byte comparison decides.
  std::vector<const SlotView*> leaders;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_key;  // key -> indices into plan.groups
  for (const SlotView* s : prefilling) {
    if (!grouping || s->cursor != 0 || s->prompt.size() < 2) {
      leaders.push_back(s);
      continue;
    }
    const std::uint64_t key = group_key(s->prompt, 0, cfg.group_window);
    bool joined = false;
    for (const std::size_t gi : by_key[key]) {
      auto& g = plan.groups[gi];
      const auto leader = std::find_if(slots.begin(), slots.end(), [&](const SlotView& v) { return v.id == g.leader; });
      if (same_window(*leader, *s, cfg.group_window)) {
        g.followers.push_back(s->id);
        joined = true;
        break;
      }
    }
    if (!joined) {
      by_key[key].push_back(plan.groups.size());
      plan.groups.push_back({key, s->id, {}});
      leaders.push_back(s);
    }
  }
  // Singleton groups are plain prefills.
  std::erase_if(plan.groups, [](const PrefillGroup& g) { return g.followers.empty(); });

  plan.chunk = chunk_size(cfg.n_batch, leaders.size(), cfg.chunk_min, cfg.chunk_max);
  for (const SlotView* s : leaders) {
    const std::size_t len = std::min(plan.chunk, s->prompt.size() - s->cursor);
    plan.chunks.push_back({s->id, s->cursor, len});
  }
  return plan;
}

}  // namespace streamkv::sched
