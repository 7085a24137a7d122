// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/sched/batch_engine.hpp"

#include <algorithm>

#include "streamkv/sched/pld.hpp"

namespace streamkv::sched {

BatchEngine::BatchEngine(Runtime& rt, EngineConfig config, pool::RadixCache* radix)
    : rt_(rt), config_(config), radix_(radix), speculation_(config.speculation) {
  stats_.budget_cells = rt_.transient_budget();
  if (config_.start_thread) thread_ = std::thread([this] { loop(); });
}

BatchEngine::~BatchEngine() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  for (auto& s : slots_) fail(*s, std::make_exception_ptr(Error(ErrorCode::kShutdown, "engine stopped")));
  slots_.clear();
  for (auto& r : waiting_) r.done.set_exception(std::make_exception_ptr(Error(ErrorCode::kShutdown, "engine stopped")));
}

std::future<Completion> BatchEngine::submit(Tokens prompt, std::size_t max_tokens) {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt is empty");
  if (prompt.size() + max_tokens > static_cast<std::size_t>(rt_.config().model.max_positions)) {
    throw Error(ErrorCode::kLengthOverflow, "prompt plus max_tokens exceeds max_positions");
  }
  std::promise<Completion> p;
  auto f = p.get_future();
  if (max_tokens == 0) {
    Completion c;
    c.prompt_tokens = prompt.size();
    p.set_value(std::move(c));
    return f;
  }
  {
    std::lock_guard lock(mutex_);
    if (stop_) throw Error(ErrorCode::kShutdown, "engine stopped");
    waiting_.push_back(Request{next_id_++, std::move(prompt), max_tokens, std::move(p)});
  }
  cv_.notify_all();
  return f;
}

void BatchEngine::loop() {
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || has_work_locked(); });
      if (stop_) return;
    }
    bool progressed = false;
    try {
      rt_.dispatcher.run(Priority::kPool, "pool:iteration", [&] {
        iterate();
        progressed = progressed_;
      });
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kShutdown) return;
    }
    // Nothing could move (slots busy elsewhere, pool above high water): back off.
    if (!progressed) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

bool BatchEngine::step() {
  rt_.dispatcher.run(Priority::kPool, "pool:iteration", [&] { iterate(); });
  std::lock_guard lock(mutex_);
  return has_work_locked();
}

void BatchEngine::run_until_idle() {
  while (step()) {
  }
}

BatchEngine::Slot* BatchEngine::find(std::int64_t id) {
  for (auto& s : slots_) {
    if (s->id == id) return s.get();
  }
  return nullptr;
}

void BatchEngine::admit_waiting() {
  std::lock_guard lock(mutex_);
  if (waiting_.empty()) return;
  std::int64_t committed = 0;
  for (const auto& s : slots_) committed += s->projected;

  std::vector<AdmissionCandidate> cands;
  for (const auto& r : waiting_) cands.push_back({r.id, r.prompt.size(), r.max_tokens});
  const auto res = admit(cands, committed, rt_.layers(), rt_.transient_budget());

  for (const std::int64_t id : res.oversized) {
    auto it = std::find_if(waiting_.begin(), waiting_.end(), [&](const Request& r) { return r.id == id; });
    it->done.set_exception(std::make_exception_ptr(
        Error(ErrorCode::kSizing, "request needs more cells than the admission budget")));
    waiting_.erase(it);
    ++stats_.sizing_errors;
    ++stats_.failed;
    progressed_ = true;
  }
  for (const std::int64_t id : res.admitted) {
    SequenceId seq;
    try {
      seq = rt_.sequences.acquire(SequenceKind::kTransient, std::chrono::milliseconds(0));
    } catch (const Error&) {
      break;  // all transient slots busy; keep arrival order
    }
    auto it = std::find_if(waiting_.begin(), waiting_.end(), [&](const Request& r) { return r.id == id; });
    auto slot = std::make_unique<Slot>();
    slot->id = it->id;
    slot->seq = seq;
    slot->prompt = std::move(it->prompt);
    slot->max_tokens = it->max_tokens;
    slot->projected = projected_cells(slot->prompt.size(), slot->max_tokens, rt_.layers());
    slot->done = std::move(it->done);
    slot->out.prompt_tokens = slot->prompt.size();
    waiting_.erase(it);
    committed += slot->projected;

    if (radix_) {
      // The last prompt token is always forwarded so its logits exist.
      const auto m = radix_->match(std::span<const TokenId>(slot->prompt).first(slot->prompt.size() - 1));
      if (m.length > 0) {
        radix_->restore(m, seq);
        slot->cursor = m.length;
        slot->out.restored_tokens = m.length;
        stats_.restored_tokens += m.length;
      }
    }
    slots_.push_back(std::move(slot));
    ++active_count_;
    progressed_ = true;
  }
  stats_.peak_projected_cells = std::max(stats_.peak_projected_cells, committed);
}

void BatchEngine::iterate() {
  progressed_ = false;
  admit_waiting();
  if (slots_.empty()) return;

  if (radix_) {
    while (above_high_water(rt_.pool.occupancy(), config_.planner.high_water) && radix_->evict_one()) {
      std::lock_guard lock(mutex_);
      ++stats_.radix_evictions;
    }
  }

  std::vector<SlotView> views;
  views.reserve(slots_.size());
  for (const auto& s : slots_) views.push_back({s->id, s->prompt, s->cursor, s->decoding, s->ema});
  const IterationPlan plan = plan_iteration(views, rt_.pool.occupancy(), config_.planner, config_.grouping);
  if (plan.prefill_deferred) {
    std::lock_guard lock(mutex_);
    ++stats_.deferred_iterations;
    for (const auto& v : views) {
      if (!v.decoding) ++stats_.deferred_chunks;
    }
  }

  run_prefill(plan);
  run_decode(plan);

  std::vector<std::unique_ptr<Slot>> live;
  std::size_t finished = 0;
  for (auto& s : slots_) {
    if (s) {
      live.push_back(std::move(s));
    } else {
      ++finished;
    }
  }
  slots_ = std::move(live);

  std::lock_guard lock(mutex_);
  active_count_ = slots_.size();
  ++stats_.iterations;
  stats_.peak_used_cells = std::max(stats_.peak_used_cells, rt_.pool.occupancy().used_cells);
  if (finished > 0) progressed_ = true;
}

void BatchEngine::run_prefill(const IterationPlan& plan) {
  for (const auto& c : plan.chunks) {
    Slot* s = find(c.slot);
    const auto chunk = std::span<const TokenId>(s->prompt).subspan(c.start, c.length);
    try {
      auto logits = rt_.model.forward(rt_.pool, {chunk, s->seq, static_cast<Position>(c.start), Priority::kPool,
                                                 RegionTag::kEphemeral, false});
      s->cursor += c.length;
      s->out.prefill_tokens += c.length;
      progressed_ = true;
      {
        std::lock_guard lock(mutex_);
        stats_.prefill_tokens += c.length;
      }
      if (s->cursor == s->prompt.size()) {
        s->logits = std::move(logits);
        s->decoding = true;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPoolExhausted) throw;
      std::lock_guard lock(mutex_);
      ++stats_.deferred_chunks;
    }
  }

  for (const auto& g : plan.groups) {
    Slot* leader = find(g.leader);
    for (const std::int64_t fid : g.followers) {
      Slot* f = find(fid);
      const auto lcp = static_cast<std::size_t>(
          std::mismatch(leader->prompt.begin(), leader->prompt.end(), f->prompt.begin(), f->prompt.end()).first -
          leader->prompt.begin());
      const std::size_t len = std::min({lcp, leader->cursor, f->prompt.size() - 1});
      if (len == 0) continue;
      rt_.pool.alias_prefix(leader->seq, f->seq, len);
      f->cursor = len;
      f->out.aliased_tokens = len;
      progressed_ = true;
      std::lock_guard lock(mutex_);
      stats_.aliased_tokens += len;
      ++stats_.grouped_followers;
    }
  }
}

void BatchEngine::run_decode(const IterationPlan& plan) {
  const bool spec = speculation_.load();
  for (std::size_t i = 0; i < plan.decode.size(); ++i) {
    Slot* s = find(plan.decode[i]);
    progressed_ = true;
    const TokenId tok = model::greedy_sample(*s->logits).token;
    if (tok == model::vocab::kEos) {
      finish(*s);
      continue;
    }
    s->out.tokens.push_back(tok);
    if (s->out.tokens.size() >= s->max_tokens) {
      finish(*s);
      continue;
    }
    const std::size_t remaining = s->max_tokens - s->out.tokens.size();
    Tokens drafts;
    if (spec) {
      Tokens history = s->prompt;
      history.insert(history.end(), s->out.tokens.begin(), s->out.tokens.end());
      drafts = pld_draft(history, config_.planner.max_ngram, std::min(plan.draft_caps[i], remaining));
    }
    const auto pos = static_cast<Position>(s->prompt.size() + s->out.tokens.size() - 1);
    try {
      if (drafts.empty()) {
        s->logits = rt_.model.forward(rt_.pool, {std::span<const TokenId>(&tok, 1), s->seq, pos, Priority::kPool,
                                                 RegionTag::kEphemeral, true});
        std::lock_guard lock(mutex_);
        ++stats_.decode_tokens;
        continue;
      }
      auto vr = verify_drafts(rt_.model, rt_.pool, s->seq, pos, tok, drafts, Priority::kPool);
      s->ema = update_acceptance(s->ema, vr.accepted, drafts.size(), config_.planner.ema_alpha);
      s->out.drafts_proposed += drafts.size();
      s->out.drafts_accepted += vr.accepted;
      {
        std::lock_guard lock(mutex_);
        stats_.decode_tokens += 1 + drafts.size();
        stats_.drafts_proposed += drafts.size();
        stats_.drafts_accepted += vr.accepted;
      }
      s->logits = std::move(vr.next);
      bool done = false;
      for (std::size_t j = 0; j < vr.accepted && !done; ++j) {
        if (drafts[j] == model::vocab::kEos) {
          done = true;
          break;
        }
        s->out.tokens.push_back(drafts[j]);
        done = s->out.tokens.size() >= s->max_tokens;
      }
      if (done) finish(*s);
    } catch (...) {
      fail(*s, std::current_exception());
    }
  }
  // Drop finished slots (they were moved-from in finish/fail).
  for (auto& p : slots_) {
    if (p && !p->seq.valid()) p.reset();
  }
}

void BatchEngine::finish(Slot& s) {
  if (radix_) radix_->insert(s.prompt, s.seq);
  rt_.sequences.release(s.seq);
  s.seq = SequenceId{};
  s.done.set_value(std::move(s.out));
  std::lock_guard lock(mutex_);
  ++stats_.completed;
}

void BatchEngine::fail(Slot& s, std::exception_ptr e) {
  if (s.seq.valid()) rt_.sequences.release(s.seq);
  s.seq = SequenceId{};
  s.done.set_exception(std::move(e));
  std::lock_guard lock(mutex_);
  ++stats_.failed;
}

EngineStats BatchEngine::stats() const {
  std::lock_guard lock(mutex_);
  EngineStats s = stats_;
  s.active = active_count_;
  s.waiting = waiting_.size();
  return s;
}

}  // namespace streamkv::sched
