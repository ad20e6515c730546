#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/cbow.hpp"

namespace embench {

struct CBOWAConfig {
  std::size_t dim = 100;
  double lr = 0.01;
  std::size_t negatives = 5;
  std::size_t epochs = 10;
  /// Upper bounds (days, inclusive) of the time-gap buckets. The last bound
  /// is also the context horizon around each target event.
  std::vector<int> time_buckets = {7, 30, 90, 365};
  double unigram_power = 0.75;
  std::uint64_t seed = 0;
};

/// Bucket index of an absolute day gap, or -1 beyond the last bound.
int time_bucket(int gap_days, const std::vector<int>& bounds);

struct CBOWAModel {
  WordVectors vectors;
  Vector code_score;    // a: one scalar per code
  Vector bucket_score;  // b: one scalar per time bucket
};

struct CBOWAGradients {
  Matrix input;
  Matrix output;
  Vector code_score;
  Vector bucket_score;
};

/// One context event: its code and time bucket relative to the target.
struct ContextEvent {
  int code;
  int bucket;
};

/// Softmax over a[code_j] + b[bucket_j].
std::vector<double> attention_weights(const CBOWAModel& m, std::span<const ContextEvent> context);
/// Attention-weighted sum of the context input vectors.
RowVector attention_context(const CBOWAModel& m, std::span<const ContextEvent> context);

double cbowa_loss(const CBOWAModel& m, std::span<const ContextEvent> context, int target,
                  std::span<const int> negatives);
double cbowa_loss_and_gradients(const CBOWAModel& m, std::span<const ContextEvent> context, int target,
                                std::span<const int> negatives, CBOWAGradients& grads);

struct TimedEvent {
  int code;
  int day;
};

/// Per-patient events ordered by day, then code.
std::vector<std::vector<TimedEvent>> timed_events(const Corpus& corpus);

struct CBOWAResult {
  EmbeddingSet embeddings;
  EpochLosses epoch_losses;
  CBOWAModel model;
};

CBOWAResult train_cbowa(const Corpus& corpus, const CBOWAConfig& cfg);

}  // namespace embench
