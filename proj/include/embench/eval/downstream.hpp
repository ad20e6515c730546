#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"
#include "embench/trainers/common.hpp"

namespace embench {

inline constexpr int kDefaultHorizonDays = 183;

struct TaskExample {
  std::string patient_id;
  int sex = 0;
  int region = 0;
  int birth_year = kMinBirthYear;
  std::vector<std::pair<int, int>> counts;  // (code index, count), sorted by code
  int label = 0;
};

/// Disease-onset task: does `target_code` appear in the final horizon
/// window (last_visit - horizon, last_visit]?
struct PredictionTask {
  ConceptVocabulary vocabulary;
  std::string target_code;
  int horizon_days = kDefaultHorizonDays;
  std::vector<TaskExample> examples;
  std::size_t dropped = 0;  // patients with no visit before the window

  std::size_t positives() const;
};

PredictionTask build_task(const Corpus& corpus, const std::string& target_code,
                          int horizon_days = kDefaultHorizonDays);

/// Step-wise AP over descending unique score thresholds.
double average_precision(std::span<const int> labels, std::span<const double> scores);
/// 2PR/(P+R), 0 when P+R = 0.
double f1_score(std::span<const int> labels, std::span<const int> predictions);

struct ClassifierConfig {
  std::vector<std::size_t> layer_sizes = {100, 50, 10};
  bool fine_tune = true;
  double lr = 0.05;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double train_fraction = 0.64;
  double validation_fraction = 0.16;
  double threshold = 0.5;
  std::size_t random_disease_dim = 110;                 // when no disease embeddings are given
  std::array<std::size_t, 3> random_demo_widths = {1, 6, 22};  // sex, region, birth year
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pre-trained weights for the first layer; null members are initialized randomly.
struct ClassifierInit {
  const EmbeddingSet* disease = nullptr;
  const DemographicEmbeddings* demographics = nullptr;
};

struct ClassifierModel {
  Matrix disease;  // V x d, row i multiplies the count of code i
  Matrix sex, region, birth_year;
  std::vector<Matrix> weights;  // in x out
  std::vector<Matrix> biases;   // 1 x out

  std::size_t input_width() const {
    return static_cast<std::size_t>(disease.cols() + sex.cols() + region.cols() + birth_year.cols());
  }
  std::vector<Matrix*> parameters();
  ClassifierModel zeros_like() const;
};

/// Builds the model; returns the number of task codes missing from `init.disease`.
ClassifierModel init_classifier(const ConceptVocabulary& vocabulary, const ClassifierConfig& cfg,
                                const ClassifierInit& init, std::size_t* missing_codes = nullptr);

double classifier_predict(const ClassifierModel& m, const TaskExample& x);
/// Mean binary cross-entropy over the examples.
double classifier_loss(const ClassifierModel& m, std::span<const TaskExample> batch);
/// Adds the gradient of classifier_loss into `grads` (from zeros_like).
double classifier_loss_and_gradients(const ClassifierModel& m, std::span<const TaskExample> batch,
                                     ClassifierModel& grads);

struct Split {
  std::vector<std::size_t> train, validation, test;
};
/// Stratified by label, seeded; each part keeps task order.
Split split_task(const PredictionTask& task, const ClassifierConfig& cfg);

struct ScoreReport {
  std::string task = "onset";
  std::string target_code;
  std::string disease_emb;
  std::string demo_emb;
  double average_precision = 0.0;
  double f1 = 0.0;
  std::size_t n_test = 0;
  double prevalence = 0.0;
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  std::size_t missing_codes = 0;
  std::vector<double> validation_ap;  // per epoch
};

/// Keeps the epoch with the best validation AP (ties: lower validation loss).
ScoreReport train_classifier(const PredictionTask& task, const ClassifierConfig& cfg, const ClassifierInit& init = {});

inline constexpr const char* kScoreHeader = "task,target_code,disease_emb,demo_emb,ap,f1,n_test,prevalence,seed";
void write_score_row(std::ostream& out, const ScoreReport& r);

}  // namespace embench
