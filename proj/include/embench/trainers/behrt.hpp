#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/common.hpp"

namespace embench {

/// Age embeddings use one bucket per year, clamped to this many buckets.
inline constexpr int kAgeBuckets = 150;

/// Extended token ids: disease codes occupy [0, V); specials follow.
struct TokenIds {
  int vocab_size;
  int cls() const { return vocab_size; }
  int sep() const { return vocab_size + 1; }
  int mask() const { return vocab_size + 2; }
  int pad() const { return vocab_size + 3; }
  int total() const { return vocab_size + 4; }
};

struct Token {
  int id = 0;
  int age_days = 0;
  int visit = 0;  // ordinal; 0 for CLS, visits count from 1

  int age_bucket() const;
  int segment() const { return visit == 0 ? 0 : (visit - 1) % 2; }
  bool operator==(const Token&) const = default;
};

struct TokenSequence {
  std::vector<Token> tokens;
};

struct BehrtSequenceSet {
  ConceptVocabulary vocabulary;
  std::uint64_t corpus_fingerprint = 0;
  std::vector<TokenSequence> sequences;

  TokenIds ids() const { return {static_cast<int>(vocabulary.size())}; }
};

/// [CLS, visit 1 codes, SEP, visit 2 codes, SEP, ...]; sequences longer than
/// max_seq keep CLS and the most recent max_seq-1 tokens, with visit
/// ordinals renumbered from 1.
BehrtSequenceSet build_behrt_sequences(const Corpus& corpus, std::size_t max_seq = 256);

struct MaskedSequence {
  TokenSequence input;
  std::vector<int> positions;  // selected positions
  std::vector<int> labels;     // original code at each selected position
};

/// Selects each disease token with probability mask_rate; selected tokens
/// become MASK (80%), a random code (10%) or stay unchanged (10%).
MaskedSequence mask_tokens(const TokenSequence& seq, double mask_rate, TokenIds ids, Rng& rng);
MaskedSequence mask_tokens(const TokenSequence& seq, double mask_rate, TokenIds ids, std::uint64_t seed);

struct BEHRTConfig {
  std::size_t d_model = 100;
  std::size_t heads = 10;
  std::size_t layers = 4;
  std::size_t ff_dim = 400;
  std::size_t max_seq = 256;
  double mask_rate = 0.15;
  double lr = 0.02;
  std::size_t epochs = 3;
  std::size_t batch_size = 16;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct EncoderLayer {
  Matrix wq, wk, wv, wo;      // d x d
  Matrix bq, bk, bv, bo;      // 1 x d
  Matrix ln1_gain, ln1_bias;  // 1 x d
  Matrix w1;                  // d x ff
  Matrix b1;                  // 1 x ff
  Matrix w2;                  // ff x d
  Matrix b2;                  // 1 x d
  Matrix ln2_gain, ln2_bias;  // 1 x d
};

/// Parameters of the encoder; gradient buffers share this layout.
struct BehrtModel {
  std::size_t heads = 1;
  Matrix token, age, position, segment;  // embedding tables, d columns
  Matrix emb_ln_gain, emb_ln_bias;       // 1 x d, applied to the summed embeddings
  std::vector<EncoderLayer> layers;
  Matrix out_w;  // d x V
  Matrix out_b;  // 1 x V

  std::size_t d_model() const { return static_cast<std::size_t>(token.cols()); }
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  /// Same shapes, all zero.
  BehrtModel zeros_like() const;
};

BehrtModel init_behrt_model(const BEHRTConfig& cfg, TokenIds ids);

/// Final hidden states, one row per token.
Matrix behrt_encode(const BehrtModel& m, const TokenSequence& seq);

/// Attention probabilities, indexed [layer][head], each n x n.
std::vector<std::vector<Matrix>> behrt_attention(const BehrtModel& m, const TokenSequence& seq);

/// Mean cross-entropy of the masked positions (0 when none are selected).
double behrt_loss(const BehrtModel& m, const MaskedSequence& ms);
/// Adds this sequence's gradient into `grads` (from zeros_like).
double behrt_loss_and_gradients(const BehrtModel& m, const MaskedSequence& ms, BehrtModel& grads);

struct BEHRTResult {
  EmbeddingSet embeddings;  // token table rows of real codes
  EpochLosses epoch_losses;
  BehrtModel model;
};

/// Called after each epoch with the 1-based epoch number and current model.
using BehrtEpochHook = std::function<void(std::size_t, const BehrtModel&)>;

BEHRTResult train_behrt(const BehrtSequenceSet& data, const BEHRTConfig& cfg, const BehrtEpochHook& on_epoch = {});

/// Mean masked-LM loss over all sequences with masks drawn from `seed`.
double behrt_corpus_loss(const BehrtModel& m, const BehrtSequenceSet& data, double mask_rate, std::uint64_t seed);

}  // namespace embench
