#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ringmesh/flit.hpp"

namespace ringmesh {

enum class TrafficPattern : uint8_t { UniformRandom, BitReversal, Transpose };
enum class PayloadPolicy : uint8_t { SequentialCounter, RandomNonescape };
enum class InjectionMode : uint8_t { Bernoulli, ExactCount };

struct TrafficConfig {
  TrafficPattern pattern = TrafficPattern::UniformRandom;
  double injection_rate = 1.0;
  uint64_t seed = 1;
  PayloadPolicy payload_policy = PayloadPolicy::SequentialCounter;
  InjectionMode mode = InjectionMode::Bernoulli;
};

inline const char* pattern_name(TrafficPattern p) {
  switch (p) {
    case TrafficPattern::UniformRandom: return "uniform";
    case TrafficPattern::BitReversal: return "bitrev";
    case TrafficPattern::Transpose: return "transpose";
  }
  return "?";
}

inline TrafficPattern pattern_from_name(const std::string& s) {
  if (s == "uniform") return TrafficPattern::UniformRandom;
  if (s == "bitrev") return TrafficPattern::BitReversal;
  if (s == "transpose") return TrafficPattern::Transpose;
  throw ConfigError("unknown traffic pattern '" + s + "'");
}

// Unbiased bounded draw (rejection sampling), deterministic across platforms
// on top of the fully specified mt19937_64 stream.
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  const uint64_t rem = UINT64_MAX % n;
  const uint64_t cutoff = UINT64_MAX - rem;  // multiple of n
  uint64_t x = rng();
  while (x >= cutoff) x = rng();
  return x % n;
}

inline unsigned log2_exact(uint64_t n) {
  unsigned b = 0;
  while ((1ull << b) < n) ++b;
  return b;
}

inline bool is_power_of_two(uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Uniform over all destinations except the source.
inline GlobalPeIndex dest_uniform(std::mt19937_64& rng, GlobalPeIndex src,
                                  uint32_t n_pe) {
  if (n_pe < 2) throw ConfigError("dest_uniform: need at least 2 PEs");
  uint64_t d = uniform_below(rng, n_pe - 1);
  if (d >= src) ++d;
  return static_cast<GlobalPeIndex>(d);
}

// Reverse the log2(N)-bit index. Self-addressed results (palindromes) are
// skipped at injection.
inline GlobalPeIndex dest_bit_reversal(GlobalPeIndex src, uint32_t n_pe) {
  if (!is_power_of_two(n_pe))
    throw ConfigError("bit-reversal requires a power-of-two PE count");
  const unsigned nb = log2_exact(n_pe);
  uint32_t out = 0;
  for (unsigned i = 0; i < nb; ++i)
    if (src & (1u << i)) out |= 1u << (nb - 1 - i);
  return out;
}

// Rotate the log2(N)-bit index left by floor(nb/2); for even bit widths this
// swaps the index halves and is an involution.
inline GlobalPeIndex dest_transpose(GlobalPeIndex src, uint32_t n_pe) {
  if (!is_power_of_two(n_pe))
    throw ConfigError("transpose requires a power-of-two PE count");
  const unsigned nb = log2_exact(n_pe);
  const unsigned h = nb / 2;
  if (h == 0) return src;
  return ((src << h) | (src >> (nb - h))) & (n_pe - 1);
}

// The set of PEs injecting this cycle. Ir = 1 means everyone; below that,
// either an independent Bernoulli trial per node (expected fraction Ir) or an
// exact floor(Ir*N) sample.
inline void select_injectors(std::mt19937_64& rng, uint32_t n_pe, double ir,
                             InjectionMode mode, std::vector<uint32_t>& out) {
  out.clear();
  if (ir <= 0.0) return;
  if (ir >= 1.0) {
    for (uint32_t i = 0; i < n_pe; ++i) out.push_back(i);
    return;
  }
  if (mode == InjectionMode::Bernoulli) {
    const auto threshold = static_cast<uint64_t>(
        ir * 18446744073709551616.0L);  // ir * 2^64
    for (uint32_t i = 0; i < n_pe; ++i)
      if (rng() < threshold) out.push_back(i);
    return;
  }
  const uint32_t k = static_cast<uint32_t>(ir * n_pe);
  std::vector<uint32_t> pool(n_pe);
  for (uint32_t i = 0; i < n_pe; ++i) pool[i] = i;
  for (uint32_t i = 0; i < k; ++i) {
    const uint64_t j = i + uniform_below(rng, n_pe - i);
    std::swap(pool[i], pool[j]);
  }
  out.assign(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
}

// Per-simulation deterministic traffic source.
class TrafficGen {
 public:
  TrafficGen(const TrafficConfig& cfg, uint32_t n_pe)
      : cfg_(cfg), n_(n_pe), rng_(cfg.seed), seq_(n_pe, 0) {
    if (cfg.injection_rate < 0.0 || cfg.injection_rate > 1.0)
      throw ConfigError("injection rate must be in (0, 1], or 0 to disable");
    if (cfg.pattern != TrafficPattern::UniformRandom && !is_power_of_two(n_pe))
      throw ConfigError("bit-reversal/transpose require a power-of-two PE count");
  }

  const std::vector<uint32_t>& injectors_for_cycle() {
    select_injectors(rng_, n_, cfg_.injection_rate, cfg_.mode, injectors_);
    return injectors_;
  }

  // nullopt marks a self-addressed (skipped) injection.
  std::optional<GlobalPeIndex> dest_for(GlobalPeIndex src) {
    GlobalPeIndex d = 0;
    switch (cfg_.pattern) {
      case TrafficPattern::UniformRandom: d = dest_uniform(rng_, src, n_); break;
      case TrafficPattern::BitReversal: d = dest_bit_reversal(src, n_); break;
      case TrafficPattern::Transpose: d = dest_transpose(src, n_); break;
    }
    if (d == src) return std::nullopt;
    return d;
  }

  uint32_t payload_for(GlobalPeIndex src) {
    if (cfg_.payload_policy == PayloadPolicy::SequentialCounter)
      return seq_[src]++;
    const uint32_t v = static_cast<uint32_t>(rng_());
    return v == kEscapeMarker ? 0xFFFFFFFEu : v;  // never the escape marker
  }

 private:
  TrafficConfig cfg_;
  uint32_t n_;
  std::mt19937_64 rng_;
  std::vector<uint32_t> injectors_;
  std::vector<uint32_t> seq_;
};

}  // namespace ringmesh
