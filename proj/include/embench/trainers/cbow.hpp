#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/common.hpp"

namespace embench {

struct SequenceSet {
  ConceptVocabulary vocabulary;
  std::uint64_t corpus_fingerprint = 0;
  std::vector<std::vector<int>> sequences;
};

/// One sequence per patient: visits in order, codes within a visit sorted
/// lexicographically.
SequenceSet flatten_sequences(const Corpus& corpus);

/// Draws codes with probability proportional to count^power.
class NegativeSampler {
 public:
  NegativeSampler(const std::vector<std::size_t>& counts, double power);
  int draw(Rng& rng) const;
  double probability(std::size_t code) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

std::vector<std::size_t> code_counts(const std::vector<std::vector<int>>& sequences, std::size_t vocab_size);

struct CBOWConfig {
  std::size_t dim = 110;
  std::size_t window = 5;
  std::size_t negatives = 5;
  double lr = 0.025;
  double min_lr = 1e-4;
  std::size_t epochs = 5;
  std::size_t min_count = 1;
  double subsample_threshold = 0.0;
  double unigram_power = 0.75;
  std::uint64_t seed = 0;
};

/// Input (context) and output (target) tables.
struct WordVectors {
  Matrix input;
  Matrix output;
};

/// Gradient of one negative-sampling step with respect to the context
/// vector and each touched output row.
struct SamplingGradient {
  double loss = 0.0;
  RowVector context;
  std::vector<int> output_rows;  // target first, then negatives
  std::vector<RowVector> output;
};

/// -log s(o_t.h) - sum_n log s(-o_n.h)
SamplingGradient negative_sampling_step(const Matrix& output, const RowVector& context, int target,
                                        std::span<const int> negatives);

/// Mean of the input rows named by `context`.
RowVector mean_context(const Matrix& input, std::span<const int> context);

double cbow_loss(const WordVectors& m, std::span<const int> context, int target, std::span<const int> negatives);

/// Dense gradients for one step, for checking against finite differences.
double cbow_loss_and_gradients(const WordVectors& m, std::span<const int> context, int target,
                               std::span<const int> negatives, WordVectors& grads);

WordVectors init_word_vectors(std::size_t vocab_size, std::size_t dim, Rng& rng);

struct CBOWResult {
  EmbeddingSet embeddings;
  EpochLosses epoch_losses;
  WordVectors model;
};

CBOWResult train_cbow(const SequenceSet& data, const CBOWConfig& cfg);

/// Mean negative-sampling loss over the corpus with windows and negatives
/// drawn from `seed`, so models can be compared on identical samples.
double cbow_corpus_loss(const WordVectors& m, const SequenceSet& data, const CBOWConfig& cfg, std::uint64_t seed);

}  // namespace embench
