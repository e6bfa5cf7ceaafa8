#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <cstddef>

namespace ringmesh {

// Small fixed-capacity ring buffer used for every queue in the network model.
// Capacity is set at construction and bounded by kMaxDepth so the storage can
// stay inline (no allocation in the cycle loop).
template <typename T>
class FixedFifo {
 public:
  static constexpr std::size_t kMaxDepth = 16;

  FixedFifo() = default;
  explicit FixedFifo(std::size_t capacity) : capacity_(capacity) {
    assert(capacity_ >= 1 && capacity_ <= kMaxDepth);
  }

  void set_capacity(std::size_t capacity) {
    assert(size_ == 0);
    assert(capacity >= 1 && capacity <= kMaxDepth);
    capacity_ = capacity;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool full() const { return size_ == capacity_; }

  void push(const T& v) {
    assert(!full());
    slots_[(head_ + size_) % kMaxDepth] = v;
    ++size_;
  }

  T& front() {
    assert(!empty());
    return slots_[head_];
  }
  const T& front() const {
    assert(!empty());
    return slots_[head_];
  }

  T pop() {
    assert(!empty());
    T v = slots_[head_];
    head_ = (head_ + 1) % kMaxDepth;
    --size_;
    return v;
  }

  void clear() {
    head_ = 0;
    size_ = 0;
  }

  // Index 0 is the front.
  const T& at(std::size_t i) const {
    assert(i < size_);
    return slots_[(head_ + i) % kMaxDepth];
  }

 private:
  std::array<T, kMaxDepth> slots_{};
  std::size_t capacity_ = kMaxDepth;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace ringmesh
