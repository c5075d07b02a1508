#pragma once

#include "crl/rng.hpp"
#include "crl/types.hpp"

#include <vector>

namespace crl {

/// One stored transition. `indicators` has the task's arity (behavioral
/// constraints then success) and `done` is the bootstrapping flag: true only
/// for genuinely terminal states, not time-limit truncation. `episode_end`
/// additionally marks truncation, so episode frequencies can be estimated
/// from a window of transitions.
struct TransitionRecord {
  Vec observation;
  Vec action;
  double reward = 0.0;
  Vec next_observation;
  Vec indicators;
  bool done = false;
  bool episode_end = false;
};

/// Fixed-capacity FIFO ring buffer with uniform (with replacement) and
/// last-N sampling. Storage grows lazily up to capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int obs_dim, int action_dim, int indicator_dim);

  void push(TransitionRecord record);

  /// N records drawn i.i.d. uniformly with replacement.
  std::vector<const TransitionRecord*> sample_uniform(long n, Rng& rng) const;

  /// The N most recently pushed records in chronological order.
  std::vector<const TransitionRecord*> sample_last(long n) const;

  long size() const { return count_; }
  long capacity() const { return capacity_; }
  const TransitionRecord& at(long slot) const { return storage_[slot]; }

 private:
  long capacity_ = 0;
  int obs_dim_ = 0;
  int action_dim_ = 0;
  int indicator_dim_ = 0;
  long cursor_ = 0;  // next write position
  long count_ = 0;
  std::vector<TransitionRecord> storage_;
};

}  // namespace crl
