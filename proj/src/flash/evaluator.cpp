// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/flash/evaluator.hpp"

namespace streamkv::flash {

namespace {

model::Logits restore_header(Runtime& rt, const EvalTarget& t) {
  return rt.forward(Priority::kFlash, "flash:restore_header",
                    {t.header, t.seq, t.header_pos, Priority::kFlash, RegionTag::kSliding, false});
}

}  // namespace

EvalResult evaluate_all(Runtime& rt, const EvalTarget& target, std::span<const FlashQuery> questions,
                        const std::function<void(const FlashCacheEntry&)>& on_entry) {
  EvalResult result;
  if (questions.empty()) return result;

  rt.remove(Priority::kFlash, target.seq, target.header_pos);
  try {
    for (const FlashQuery& q : questions) {
      const model::Logits logits = rt.forward(
          Priority::kFlash, "flash:question",
          {q.tokens, target.seq, target.header_pos, Priority::kFlash, RegionTag::kEphemeral, false});
      rt.remove(Priority::kFlash, target.seq, target.header_pos);
      const auto pick = model::greedy_sample(logits);
      FlashCacheEntry e;
      e.id = q.id;
      e.question = q.question;
      e.answer = pick.token;
      e.answer_text = rt.tokenizer.detokenize(pick.token);
      e.gap = pick.gap;
      e.version = target.version;
      e.evaluated_at = std::chrono::system_clock::now();
      if (on_entry) on_entry(e);
      result.entries.push_back(std::move(e));
    }
  } catch (...) {
    rt.remove(Priority::kFlash, target.seq, target.header_pos);
    restore_header(rt, target);
    throw;
  }
  result.ready = restore_header(rt, target);
  return result;
}

}  // namespace streamkv::flash
