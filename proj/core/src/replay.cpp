#include "lanerl/replay.hpp"

#include <stdexcept>

namespace lanerl::rl {

void ReplayBuffer::insert(Transition t) {
  std::lock_guard lock(mu_);
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mu_);
  return data_.size();
}

std::uint64_t ReplayBuffer::inserted() const {
  std::lock_guard lock(mu_);
  return inserted_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  std::lock_guard lock(mu_);
  if (data_.empty()) throw std::logic_error("replay: sampling from an empty buffer");
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.index(data_.size());
  return out;
}

std::vector<Transition> ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  std::lock_guard lock(mu_);
  std::vector<Transition> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data_.at(i));
  return out;
}

}  // namespace lanerl::rl
