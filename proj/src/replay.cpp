#include "crl/replay.hpp"

#include <sstream>

namespace crl {

ReplayBuffer::ReplayBuffer(long capacity, int obs_dim, int action_dim,
                           int indicator_dim)
    : capacity_(capacity),
      obs_dim_(obs_dim),
      action_dim_(action_dim),
      indicator_dim_(indicator_dim) {
  require(capacity >= 1, "replay capacity must be >= 1");
  storage_.reserve(static_cast<std::size_t>(std::min(capacity, 1L << 16)));
}

void ReplayBuffer::push(TransitionRecord record) {
  require(record.observation.size() == obs_dim_ &&
              record.next_observation.size() == obs_dim_ &&
              record.action.size() == action_dim_ &&
              record.indicators.size() == indicator_dim_,
          "ReplayBuffer::push: record arity mismatch");
  if (count_ < capacity_) {
    storage_.push_back(std::move(record));
    count_ += 1;
  } else {
    storage_[cursor_] = std::move(record);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const TransitionRecord*> ReplayBuffer::sample_uniform(
    long n, Rng& rng) const {
  // With-replacement draws only need a nonempty buffer.
  if (count_ < 1) throw InsufficientData("sample_uniform: buffer is empty");
  std::vector<const TransitionRecord*> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i)
    out.push_back(&storage_[rng.uniform_index(static_cast<std::size_t>(count_))]);
  return out;
}

std::vector<const TransitionRecord*> ReplayBuffer::sample_last(long n) const {
  if (count_ < n) {
    std::ostringstream os;
    os << "sample_last: need " << n << " records, have " << count_;
    throw InsufficientData(os.str());
  }
  std::vector<const TransitionRecord*> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) {
    long slot = (cursor_ - n + i + capacity_) % capacity_;
    if (count_ < capacity_) slot = count_ - n + i;  // not yet wrapped
    out.push_back(&storage_[slot]);
  }
  return out;
}

}  // namespace crl
