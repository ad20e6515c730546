#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/common.hpp"

namespace embench {

struct DiagnosisRecord {
  int sex = 0;
  int region = 0;
  int birth_year = kMinBirthYear;
  int age_years = 0;
  int disease = 0;
  bool positive = true;

  bool operator==(const DiagnosisRecord&) const = default;
};

struct DiagnosisRecordSet {
  ConceptVocabulary vocabulary;
  std::uint64_t corpus_fingerprint = 0;
  int min_age = 0;  // observed over positives
  int max_age = 0;
  std::vector<DiagnosisRecord> records;
};

inline constexpr std::size_t kNegativeRetryCap = 1000;

/// One positive per (patient, visit, code), each followed by
/// `negatives_per_positive` negatives that resample (age, disease) and are
/// rejected while they match a positive.
DiagnosisRecordSet build_ncf_records(const Corpus& corpus, std::size_t negatives_per_positive, std::uint64_t seed);

struct NCFConfig {
  std::vector<std::size_t> layer_sizes = {100, 50, 10};
  std::size_t sex_dim = 1;
  std::size_t region_dim = 6;
  std::size_t birth_year_dim = 22;
  std::size_t age_dim = 23;
  std::size_t disease_dim = 110;
  std::size_t negatives_per_positive = 2;
  double lr = 0.01;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
};

/// Lookup tables feeding a ReLU MLP with a single sigmoid output.
struct NCFModel {
  Matrix sex, region, birth_year, age, disease;
  std::vector<Matrix> weights;  // layer l: out x in
  std::vector<Vector> biases;
  int min_age = 0;

  std::size_t input_width() const {
    return static_cast<std::size_t>(sex.cols() + region.cols() + birth_year.cols() + age.cols() + disease.cols());
  }
};

/// Dense gradients with the same shapes as NCFModel.
struct NCFGradients {
  Matrix sex, region, birth_year, age, disease;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

NCFModel init_ncf_model(const NCFConfig& cfg, std::size_t vocab_size, int min_age, int max_age);

/// Probability that the record is a real (positive) diagnosis.
double ncf_predict(const NCFModel& model, const DiagnosisRecord& r);
double ncf_loss(const NCFModel& model, const DiagnosisRecord& r);
/// Binary cross-entropy; `grads` must be zero-initialized with model shapes
/// and is accumulated into.
double ncf_loss_and_gradients(const NCFModel& model, const DiagnosisRecord& r, NCFGradients& grads);
NCFGradients zero_gradients(const NCFModel& model);

struct NCFResult {
  EmbeddingSet diseases;  // disease_dim columns
  DemographicEmbeddings demographics;
  EpochLosses epoch_losses;
  NCFModel model;
};

NCFResult train_ncf(const DiagnosisRecordSet& data, const NCFConfig& cfg);

}  // namespace embench
