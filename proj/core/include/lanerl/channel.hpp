#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace lanerl::dist {

/// Bounded FIFO channel with blocking send/receive and close semantics.
/// Messages transfer value ownership; closing wakes all waiters. Multiple
/// senders and receivers may share one channel.
template <typename T>
class Channel {
 public:
  explicit Channel(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  /// Blocks while full. Returns false (drops the message) once closed.
  bool send(T value) {
    std::unique_lock lock(mu_);
    send_cv_.wait(lock, [&] { return closed_ || queue_.size() < capacity_; });
    if (closed_) return false;
    queue_.push_back(std::move(value));
    recv_cv_.notify_one();
    return true;
  }

  /// Blocks while empty. Returns nullopt once closed and drained.
  std::optional<T> recv() {
    std::unique_lock lock(mu_);
    recv_cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    T value = std::move(queue_.front());
    queue_.pop_front();
    send_cv_.notify_one();
    return value;
  }

  std::optional<T> try_recv() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    T value = std::move(queue_.front());
    queue_.pop_front();
    send_cv_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    send_cv_.notify_all();
    recv_cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

  std::size_t depth() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable send_cv_;
  std::condition_variable recv_cv_;
  std::deque<T> queue_;
  bool closed_ = false;
};

/// Latest-wins single-slot mailbox (parameter snapshots). Writers never
/// block; readers take the newest value if one is present.
template <typename T>
class Mailbox {
 public:
  void put(T value) {
    std::lock_guard lock(mu_);
    slot_ = std::move(value);
  }
  std::optional<T> take() {
    std::lock_guard lock(mu_);
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }

 private:
  std::mutex mu_;
  std::optional<T> slot_;
};

}  // namespace lanerl::dist
