#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace ringmesh {

// Weighted round-robin arbiter. The pointer sticks to the current grantee
// until its weight is spent, then moves on; inputs that are not requesting are
// skipped without consuming credit. With continuous requests and weights w_i
// the long-run grant shares are exactly w_i / sum(w).
class WrrArbiter {
 public:
  WrrArbiter() = default;
  explicit WrrArbiter(std::vector<uint8_t> weights)
      : weights_(std::move(weights)) {
    assert(!weights_.empty());
    credit_ = weights_[0];
  }

  std::size_t size() const { return weights_.size(); }

  // requests[i] says input i wants a grant this round. Returns the granted
  // index, or -1 when nothing is requesting.
  int pick(const std::vector<bool>& requests) {
    assert(requests.size() == weights_.size());
    const std::size_t n = weights_.size();
    std::size_t idx = ptr_;
    for (std::size_t scanned = 0; scanned < n; ++scanned) {
      if (requests[idx]) {
        if (idx != ptr_) {
          // Abandon any unspent credit at the old pointer position.
          ptr_ = idx;
          credit_ = weights_[idx];
        }
        --credit_;
        if (credit_ == 0) advance();
        return static_cast<int>(idx);
      }
      idx = (idx + 1) % n;
    }
    return -1;
  }

  uint64_t state_signature() const {
    return (static_cast<uint64_t>(ptr_) << 8) | credit_;
  }

 private:
  void advance() {
    ptr_ = (ptr_ + 1) % weights_.size();
    credit_ = weights_[ptr_];
  }

  std::vector<uint8_t> weights_{1};
  std::size_t ptr_ = 0;
  uint8_t credit_ = 1;
};

}  // namespace ringmesh
