// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_WORKLOAD_HPP
#define VERSIONTREE_HARNESS_WORKLOAD_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "../key.hpp"
#include "history.hpp"

namespace versiontree::harness {

/// Percentages for contains / add / remove / range; must sum to 100.
struct MixSpec {
  int contains = 40;
  int add = 30;
  int remove = 20;
  int range = 10;

  int sum() const noexcept { return contains + add + remove + range; }
};

enum class Mode { stress, lincheck, stepper, bench };

inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "stress") return Mode::stress;
  if (s == "lincheck") return Mode::lincheck;
  if (s == "stepper") return Mode::stepper;
  if (s == "bench") return Mode::bench;
  return std::nullopt;
}

struct WorkloadConfig {
  int threads = 2;
  std::uint64_t ops_per_thread = 100;
  Key key_lo = 0;
  Key key_hi = 7;
  MixSpec mix;
  Key range_width = 4;
  std::uint64_t seed = 1;
  Mode mode = Mode::stress;

  std::vector<std::string> issues() const {
    std::vector<std::string> out;
    if (threads < 1) out.push_back("threads must be at least 1");
    if (ops_per_thread < 1) out.push_back("ops_per_thread must be at least 1");
    if (key_lo > key_hi) out.push_back("key range is empty");
    if (!is_real_key(key_lo) || !is_real_key(key_hi))
      out.push_back("key range touches the reserved sentinel keys");
    if (mix.contains < 0 || mix.add < 0 || mix.remove < 0 || mix.range < 0 ||
        mix.sum() != 100)
      out.push_back("mix percentages must be non-negative and sum to 100");
    if (range_width < 0) out.push_back("range_width must be non-negative");
    return out;
  }
};

/// "LO:HI" -> inclusive key range.
inline std::optional<std::pair<Key, Key>> parse_keys(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    Key lo = std::stoll(s.substr(0, colon), &used);
    if (used != colon) return std::nullopt;
    std::string hi_part = s.substr(colon + 1);
    Key hi = std::stoll(hi_part, &used);
    if (used != hi_part.size() || hi_part.empty()) return std::nullopt;
    return std::make_pair(lo, hi);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// "c:a:r:s" -> mix percentages.
inline std::optional<MixSpec> parse_mix(const std::string& s) {
  MixSpec m;
  int* slots[4] = {&m.contains, &m.add, &m.remove, &m.range};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t end = (i == 3) ? s.size() : s.find(':', pos);
    if (end == std::string::npos) return std::nullopt;
    try {
      std::size_t used = 0;
      std::string part = s.substr(pos, end - pos);
      *slots[i] = std::stoi(part, &used);
      if (part.empty() || used != part.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    pos = end + 1;
  }
  return m;
}

struct PlannedOp {
  OpCode code = OpCode::contains;
  std::vector<Key> args;
};

/// Deterministic per-thread operation stream: the same (config, thread)
/// always produces the same sequence, independent of scheduling.
class OpStream {
 public:
  OpStream(const WorkloadConfig& cfg, int thread)
      : cfg_(cfg), rng_(cfg.seed ^ (0x9e3779b97f4a7c15ull * (thread + 1))) {}

  PlannedOp next() {
    PlannedOp op;
    Key k = cfg_.key_lo + static_cast<Key>(rng_() % span());
    int roll = static_cast<int>(rng_() % 100);
    if (roll < cfg_.mix.contains) {
      op.code = OpCode::contains;
      op.args = {k};
    } else if (roll < cfg_.mix.contains + cfg_.mix.add) {
      op.code = OpCode::add;
      op.args = {k};
    } else if (roll < cfg_.mix.contains + cfg_.mix.add + cfg_.mix.remove) {
      op.code = OpCode::remove;
      op.args = {k};
    } else {
      op.code = OpCode::range;
      Key b = std::min<Key>(std::min(k + cfg_.range_width, cfg_.key_hi), kInf1 - 1);
      op.args = {k, b};
    }
    return op;
  }

 private:
  std::uint64_t span() const noexcept {
    return static_cast<std::uint64_t>(cfg_.key_hi - cfg_.key_lo) + 1;
  }

  WorkloadConfig cfg_;
  std::mt19937_64 rng_;
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_WORKLOAD_HPP
