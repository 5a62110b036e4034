#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "lanerl/observation.hpp"
#include "lanerl/rng.hpp"

namespace lanerl::rl {

/// One environment step. `action` has the task's action dimension (steering
/// and throttle for the lane world). `done` marks true terminals only;
/// time-limit truncations keep done = false so bootstrapping continues.
struct Transition {
  Observation s;
  std::vector<double> action;
  double reward = 0.0;
  Observation s2;
  bool done = false;
};

/// Uniform ring buffer. Inserts (collectors) and sampling reads (optimizers)
/// serialize on an internal mutex; storage grows lazily up to capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void insert(Transition t);
  std::size_t size() const;
  std::uint64_t inserted() const;
  std::size_t capacity() const { return capacity_; }

  /// Uniform indices over occupied slots, drawn from the caller's stream.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<Transition> gather(const std::vector<std::size_t>& indices) const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
};

}  // namespace lanerl::rl
