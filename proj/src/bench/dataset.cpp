// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/bench/dataset.hpp"

#include <algorithm>

#include "streamkv/model/weights.hpp"

namespace streamkv::bench {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kUptrend: return "uptrend";
    case Phase::kCorrection: return "correction";
    case Phase::kConsolidation: return "consolidation";
  }
  return "?";
}

std::string OhlcvRecord::text() const {
  return "O " + std::to_string(open) + " H " + std::to_string(high) + " L " + std::to_string(low) + " C " +
         std::to_string(close) + " V " + std::to_string(volume);
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Uniform integer in [lo, hi].
  int between(int lo, int hi) {
    return lo + static_cast<int>(gen_.next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  model::XorShift64Star gen_;
};

}  // namespace

std::vector<OhlcvRecord> gen_dataset(std::uint64_t seed, std::size_t n) {
  std::vector<OhlcvRecord> out;
  out.reserve(n);
  Rng rng(seed);
  Phase phase = Phase::kUptrend;
  int remaining = rng.between(15, 35);
  OhlcvRecord prev{45, 47, 43, 45, 50, Phase::kConsolidation};
  int center = prev.close;

  auto next_phase = [&] {
    phase = phase == Phase::kUptrend      ? Phase::kCorrection
            : phase == Phase::kCorrection ? Phase::kConsolidation
                                          : Phase::kUptrend;
    remaining = phase == Phase::kCorrection ? rng.between(6, 15) : rng.between(15, 35);
    center = prev.close;
  };

  while (out.size() < n) {
    // Switch early when the current phase would leave the value band.
    if (remaining <= 0 || (phase == Phase::kUptrend && prev.high >= kMaxValue - 3) ||
        (phase == Phase::kCorrection && prev.close <= kMinValue + 4)) {
      next_phase();
      continue;
    }
    OhlcvRecord r;
    r.phase = phase;
    r.volume = rng.between(kMinValue, kMaxValue);
    switch (phase) {
      case Phase::kUptrend: {
        r.high = prev.high + rng.between(1, 2);
        r.low = std::min(prev.low + rng.between(0, 2), r.high - 1);
        r.low = std::max(r.low, prev.low);
        r.open = std::clamp(prev.close, r.low, r.high);
        r.close = rng.between(std::max(r.low, r.high - 2), r.high);
        break;
      }
      case Phase::kCorrection: {
        r.open = prev.close;
        r.close = prev.close - rng.between(1, 3);
        r.low = std::max(kMinValue, r.close - rng.between(0, 1));
        r.high = std::min(kMaxValue, r.open + rng.between(0, 1));
        break;
      }
      case Phase::kConsolidation: {
        const int lo = std::max(kMinValue, center - 4);
        const int hi = std::min(kMaxValue, center + 4);
        r.open = std::clamp(prev.close, lo, hi);
        r.close = rng.between(lo, hi);
        r.high = std::min(hi, std::max(r.open, r.close) + rng.between(0, 1));
        r.low = std::max(lo, std::min(r.open, r.close) - rng.between(0, 1));
        break;
      }
    }
    out.push_back(r);
    prev = r;
    --remaining;
  }
  return out;
}

}  // namespace streamkv::bench
