#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <tuple>

#include "embench/generator.hpp"
#include "embench/trainers/autoencoder.hpp"
#include "embench/trainers/ncf.hpp"
#include "gradcheck.hpp"

namespace embench {
namespace {

using testing::check_gradients;

PatientRecord patient(std::string id, int sex, std::vector<std::vector<int>> visits, int gap = 30) {
  PatientRecord p;
  p.id = std::move(id);
  p.sex = sex;
  p.region = 2;
  p.birth_year = 1960;
  int d = 0;
  for (auto& codes : visits) {
    p.visits.push_back({d, std::move(codes)});
    d += gap;
  }
  return p;
}

std::string serialize(const EmbeddingSet& e) {
  std::ostringstream os;
  write_embeddings(e, os);
  return os.str();
}

Corpus small_corpus(std::uint64_t seed, int patients = 60, int vocab = 12) {
  GeneratorConfig g;
  g.n_patients = patients;
  g.vocab_size = vocab;
  g.n_clusters = 3;
  g.mean_visits = 8;
  g.seed = seed;
  return generate_corpus(g).corpus;
}

// ---- count vectors ----

TEST(CountVectors, HandCount) {
  Corpus c;
  c.vocabulary = ConceptVocabulary({"E78", "I10"});
  c.patients.push_back(patient("p1", 1, {{1}, {0, 1}}));
  auto set = build_count_vectors(c);
  ASSERT_EQ(set.rows.size(), 1u);
  EXPECT_EQ(set.rows[0].disease_counts, (std::vector<int>{1, 2}));
  EXPECT_EQ(set.rows[0].demo_onehots[0], 0);
  EXPECT_EQ(set.rows[0].demo_onehots[1], 1);
  EXPECT_EQ(set.rows[0].demo_onehots[kNumSexes + 2], 1);
  EXPECT_EQ(set.rows[0].demo_onehots[kNumSexes + kNumRegions + (1960 - 1888)], 1);
  int total = 0;
  for (int x : set.rows[0].demo_onehots) total += x;
  EXPECT_EQ(total, 3);
}

TEST(CountVectors, EmptyCorpus) { EXPECT_TRUE(build_count_vectors(Corpus{}).rows.empty()); }

TEST(CountVectors, InputWidthFor1899Codes) {
  std::vector<std::string> codes;
  for (int i = 0; i < 1899; ++i) codes.push_back("C" + std::to_string(10000 + i));
  Corpus c;
  c.vocabulary = ConceptVocabulary(codes);
  c.patients.push_back(patient("p1", 0, {{0}, {1898}}));
  auto set = build_count_vectors(c);
  EXPECT_EQ(set.rows[0].width(), 2022u);
  EXPECT_EQ(to_input(set.rows[0]).size(), 2022);
}

// ---- autoencoder ----

TEST(Autoencoder, DefaultsPinned) {
  AEConfig cfg;
  EXPECT_EQ(cfg.hidden, 10u);
  EXPECT_EQ(cfg.lr, 0.1);
  EXPECT_EQ(cfg.noise_rate, 0.05);
  EXPECT_EQ(cfg.epochs, 7u);
}

TEST(Autoencoder, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AEModel m = init_ae_model(6, 3, seed);
    Rng rng(seed + 100);
    init_uniform(m.encoder_bias, 1, rng);
    init_uniform(m.decoder_bias, 1, rng);
    Vector corrupted(6), target(6);
    for (int i = 0; i < 6; ++i) {
      target[i] = rng.uniform();
      corrupted[i] = rng.bernoulli(0.3) ? 0.0 : target[i];
    }
    AEGradients g;
    ae_loss_and_gradients(m, corrupted, target, g);
    Matrix eb = m.encoder_bias, db = m.decoder_bias, geb = g.encoder_bias, gdb = g.decoder_bias;
    auto loss = [&] {
      AEModel t = m;
      t.encoder_bias = eb;
      t.decoder_bias = db;
      return ae_loss(t, corrupted, target);
    };
    auto r = check_gradients({&m.encoder, &m.decoder, &eb, &db}, {&g.encoder, &g.decoder, &geb, &gdb}, loss);
    EXPECT_EQ(r.checked, 18u + 18u + 3u + 6u);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
  }
}

TEST(Autoencoder, SingleExampleLossDescends) {
  AEModel m = init_ae_model(6, 3, 4);
  Vector x(6);
  x << 0.0, 0.2, 1.0, 0.5, 0.9, 0.1;
  const double initial = ae_loss(m, x, x);
  AEGradients g;
  for (int step = 0; step < 500; ++step) {
    ae_loss_and_gradients(m, x, x, g);
    m.encoder -= 0.1 * g.encoder;
    m.encoder_bias -= 0.1 * g.encoder_bias;
    m.decoder -= 0.1 * g.decoder;
    m.decoder_bias -= 0.1 * g.decoder_bias;
  }
  EXPECT_LT(ae_loss(m, x, x), initial);

  // Same check through the trainer: one patient, no corruption.
  Corpus c = small_corpus(1, 1);
  auto set = build_count_vectors(c);
  AEConfig cfg;
  cfg.noise_rate = 0.0;
  cfg.epochs = 500;
  auto result = train_ae(set, cfg);
  EXPECT_LT(result.epoch_losses.back(), result.epoch_losses.front());
}

TEST(Autoencoder, ZeroEpochsReturnsInitialWeights) {
  auto set = build_count_vectors(small_corpus(2));
  AEConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 77;
  auto result = train_ae(set, cfg);
  const AEModel init = init_ae_model(set.vocabulary.size() + kDemographicWidth, 10, 77);
  const Matrix expected = init.encoder.leftCols(set.vocabulary.size()).transpose();
  EXPECT_EQ(result.diseases.vectors(), expected);
  EXPECT_TRUE(result.epoch_losses.empty());
}

TEST(Autoencoder, DimensionsDeterminismAndDemographics) {
  auto set = build_count_vectors(small_corpus(3));
  AEConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  auto a = train_ae(set, cfg);
  auto b = train_ae(set, cfg);
  EXPECT_EQ(a.diseases.dim(), 10u);
  EXPECT_EQ(a.diseases.size(), set.vocabulary.size());
  EXPECT_EQ(a.diseases.meta().method, "AE");
  EXPECT_EQ(serialize(a.diseases), serialize(b.diseases));
  EXPECT_EQ(a.demographics.sex.rows(), 2);
  EXPECT_EQ(a.demographics.region.rows(), 10);
  EXPECT_EQ(a.demographics.birth_year.rows(), 111);
  EXPECT_EQ(a.demographics.width(), 30u);
  cfg.hidden = 4;
  EXPECT_EQ(train_ae(set, cfg).diseases.dim(), 4u);
}

TEST(Autoencoder, DivergenceIsReported) {
  auto set = build_count_vectors(small_corpus(4));
  AEConfig cfg;
  cfg.lr = std::numeric_limits<double>::infinity();
  try {
    train_ae(set, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("divergence"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
  EXPECT_THROW(train_ae(CountVectorSet{}, AEConfig{}), Error);
}

// ---- NCF ----

TEST(NcfRecords, OneCodedVisit) {
  Corpus c;
  c.vocabulary = ConceptVocabulary({"A00", "B00", "C00", "D00"});
  c.patients.push_back(patient("p1", 0, {{2}}));
  auto set = build_ncf_records(c, 2, 9);
  ASSERT_EQ(set.records.size(), 3u);
  EXPECT_TRUE(set.records[0].positive);
  EXPECT_EQ(set.records[0].disease, 2);
  for (int i = 1; i < 3; ++i) {
    EXPECT_FALSE(set.records[i].positive);
    EXPECT_FALSE(set.records[i].age_years == set.records[0].age_years &&
                 set.records[i].disease == set.records[0].disease);
    EXPECT_EQ(set.records[i].sex, 0);
    EXPECT_EQ(set.records[i].birth_year, 1960);
  }
  EXPECT_EQ(build_ncf_records(c, 0, 9).records.size(), 1u);
}

TEST(NcfRecords, SaturatedVocabularyHitsRetryCap) {
  Corpus c;
  c.vocabulary = ConceptVocabulary({"I10"});
  c.patients.push_back(patient("dense", 1, {{0}, {0}, {0}, {0}, {0}}, 0));
  try {
    build_ncf_records(c, 1, 0);
    FAIL() << "expected retry-cap error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dense"), std::string::npos);
  }
}

TEST(NcfRecords, CountsAndNegativeUniqueness) {
  Corpus c = small_corpus(8, 80, 30);
  for (std::size_t k : {0u, 1u, 2u, 3u}) {
    auto set = build_ncf_records(c, k, 3);
    std::set<std::tuple<int, int, int, int, int>> positives;
    std::size_t n_pos = 0;
    for (const auto& r : set.records) {
      if (r.positive) {
        ++n_pos;
        positives.emplace(r.sex, r.region, r.birth_year, r.age_years, r.disease);
      }
    }
    EXPECT_EQ(set.records.size(), (1 + k) * n_pos);
    for (const auto& r : set.records) {
      EXPECT_GE(r.age_years, set.min_age);
      EXPECT_LE(r.age_years, set.max_age);
      if (!r.positive) EXPECT_FALSE(positives.count({r.sex, r.region, r.birth_year, r.age_years, r.disease}));
    }
  }
}

TEST(Ncf, DefaultsPinned) {
  NCFConfig cfg;
  EXPECT_EQ(cfg.layer_sizes, (std::vector<std::size_t>{100, 50, 10}));
  EXPECT_EQ(cfg.sex_dim, 1u);
  EXPECT_EQ(cfg.region_dim, 6u);
  EXPECT_EQ(cfg.birth_year_dim, 22u);
  EXPECT_EQ(cfg.age_dim, 23u);
  EXPECT_EQ(cfg.disease_dim, 110u);
  EXPECT_EQ(cfg.negatives_per_positive, 2u);
}

std::vector<Matrix*> ncf_params(NCFModel& m) {
  std::vector<Matrix*> out = {&m.sex, &m.region, &m.birth_year, &m.age, &m.disease};
  for (auto& w : m.weights) out.push_back(&w);
  return out;
}

TEST(Ncf, GradientMatchesFiniteDifferences) {
  NCFConfig cfg;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.seed = seed;
    NCFModel m = init_ncf_model(cfg, 4, 40, 45);
    Rng rng(seed);
    for (bool positive : {true, false}) {
      DiagnosisRecord r{static_cast<int>(rng.below(2)), static_cast<int>(rng.below(10)),
                        1900 + static_cast<int>(rng.below(90)), 40 + static_cast<int>(rng.below(6)),
                        static_cast<int>(rng.below(4)), positive};
      NCFGradients g = zero_gradients(m);
      ncf_loss_and_gradients(m, r, g);
      std::vector<Matrix> biases, bias_grads;
      for (std::size_t l = 0; l < m.biases.size(); ++l) {
        biases.emplace_back(m.biases[l]);
        bias_grads.emplace_back(g.biases[l]);
      }
      auto params = ncf_params(m);
      std::vector<const Matrix*> grads = {&g.sex, &g.region, &g.birth_year, &g.age, &g.disease};
      for (auto& w : g.weights) grads.push_back(&w);
      for (std::size_t l = 0; l < biases.size(); ++l) {
        params.push_back(&biases[l]);
        grads.push_back(&bias_grads[l]);
      }
      auto loss = [&] {
        NCFModel t = m;
        for (std::size_t l = 0; l < biases.size(); ++l) t.biases[l] = biases[l];
        return ncf_loss(t, r);
      };
      auto res = check_gradients(params, grads, loss);
      EXPECT_LT(res.max_relative_error, 1e-4) << res.worst;
    }
  }
}

DiagnosisRecordSet separable_records() {
  DiagnosisRecordSet set;
  set.vocabulary = ConceptVocabulary({"A00", "B00", "C00", "D00"});
  set.min_age = 30;
  set.max_age = 35;
  for (int age = 30; age <= 35; ++age) {
    for (int d = 0; d < 4; ++d) set.records.push_back({d % 2, 3, 1950, age, d, d < 2});
  }
  return set;
}

double mean_loss(const NCFModel& m, const DiagnosisRecordSet& set) {
  double t = 0;
  for (const auto& r : set.records) t += ncf_loss(m, r);
  return t / static_cast<double>(set.records.size());
}

TEST(Ncf, LossDescendsOnSeparableToy) {
  auto set = separable_records();
  NCFConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 12;
  auto result = train_ncf(set, cfg);
  const NCFModel init = init_ncf_model(cfg, 4, set.min_age, set.max_age);
  EXPECT_LT(mean_loss(result.model, set), mean_loss(init, set));
  for (const auto& r : set.records) {
    const double p = ncf_predict(result.model, r);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Ncf, OutputsDimensionsAndDeterminism) {
  Corpus c = small_corpus(10, 40, 10);
  auto set = build_ncf_records(c, 2, 1);
  NCFConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 4;
  auto a = train_ncf(set, cfg);
  auto b = train_ncf(set, cfg);
  EXPECT_EQ(a.diseases.dim(), 110u);
  EXPECT_EQ(a.diseases.meta().method, "NCF");
  EXPECT_EQ(serialize(a.diseases), serialize(b.diseases));
  EXPECT_EQ(a.demographics.sex.cols(), 1);
  EXPECT_EQ(a.demographics.region.cols(), 6);
  EXPECT_EQ(a.demographics.birth_year.cols(), 22);
}

TEST(Ncf, RejectsSingleClass) {
  auto set = separable_records();
  std::erase_if(set.records, [](const DiagnosisRecord& r) { return !r.positive; });
  EXPECT_THROW(train_ncf(set, NCFConfig{}), Error);
}

}  // namespace
}  // namespace embench
