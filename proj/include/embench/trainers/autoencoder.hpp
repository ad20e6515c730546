#pragma once

#include <cstdint>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/common.hpp"

namespace embench {

/// Demographic one-hot block: sex (2), region (10), birth year (111).
inline constexpr int kDemographicWidth = kNumSexes + kNumRegions + kNumBirthYears;  // 123

/// Per-patient diagnosis counts plus demographic one-hots.
struct PatientCountVector {
  std::vector<int> disease_counts;  // length V
  std::vector<int> demo_onehots;    // length 123

  std::size_t width() const { return disease_counts.size() + demo_onehots.size(); }
};

struct CountVectorSet {
  ConceptVocabulary vocabulary;
  std::uint64_t corpus_fingerprint = 0;
  std::vector<PatientCountVector> rows;
};

std::vector<int> demographic_onehots(const PatientRecord& p);
PatientCountVector count_vector(const PatientRecord& p, std::size_t vocab_size);
CountVectorSet build_count_vectors(const Corpus& corpus);

struct AEConfig {
  std::size_t hidden = 10;
  double lr = 0.1;
  double noise_rate = 0.05;
  std::size_t epochs = 7;
  std::uint64_t seed = 0;
};

/// Single-hidden-layer autoencoder with untied encoder and decoder weights.
struct AEModel {
  Matrix encoder;  // hidden x inputs
  Vector encoder_bias;
  Matrix decoder;  // inputs x hidden
  Vector decoder_bias;

  std::size_t inputs() const { return static_cast<std::size_t>(encoder.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(encoder.rows()); }
};

struct AEGradients {
  Matrix encoder;
  Vector encoder_bias;
  Matrix decoder;
  Vector decoder_bias;
};

/// Seeded initial weights; training with epochs=0 returns exactly these.
AEModel init_ae_model(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

/// Mean squared error between the reconstruction of `corrupted` and `target`.
double ae_loss(const AEModel& model, const Vector& corrupted, const Vector& target);
double ae_loss_and_gradients(const AEModel& model, const Vector& corrupted, const Vector& target, AEGradients& grads);

/// Per-feature min-max scaling to [0, 1]; constant features map to 0.
class MinMaxScaler {
 public:
  explicit MinMaxScaler(const std::vector<Vector>& rows);
  Vector transform(const Vector& x) const;

 private:
  Vector min_, range_;
};

Vector to_input(const PatientCountVector& v);

struct AEResult {
  EmbeddingSet diseases;  // row i = encoder weights leaving disease input i
  DemographicEmbeddings demographics;
  EpochLosses epoch_losses;
  AEModel model;
};

AEResult train_ae(const CountVectorSet& vectors, const AEConfig& cfg);

}  // namespace embench
