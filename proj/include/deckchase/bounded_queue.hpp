#pragma once

#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace deckchase {

/// Mutex-protected FIFO with a fixed capacity.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns false and drops `value` when full.
  bool try_push(T value) {
    std::lock_guard lock(mutex_);
    if (items_.size() >= capacity_) return false;
    items_.push_back(std::move(value));
    return true;
  }

  /// Always succeeds; evicts the oldest element when full. Returns the
  /// number of evicted elements.
  std::size_t push_evicting(T value) {
    std::lock_guard lock(mutex_);
    std::size_t evicted = 0;
    while (items_.size() >= capacity_) {
      items_.pop_front();
      ++evicted;
    }
    items_.push_back(std::move(value));
    return evicted;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  std::vector<T> drain() {
    std::lock_guard lock(mutex_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<T> items_;
};

}  // namespace deckchase
