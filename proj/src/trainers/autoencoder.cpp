#include "embench/trainers/autoencoder.hpp"

#include <numeric>

namespace embench {

std::vector<int> demographic_onehots(const PatientRecord& p) {
  std::vector<int> out(kDemographicWidth, 0);
  out[p.sex] = 1;
  out[kNumSexes + p.region] = 1;
  out[kNumSexes + kNumRegions + (p.birth_year - kMinBirthYear)] = 1;
  return out;
}

PatientCountVector count_vector(const PatientRecord& p, std::size_t vocab_size) {
  PatientCountVector v;
  v.disease_counts.assign(vocab_size, 0);
  for (const auto& visit : p.visits) {
    for (int c : visit.codes) ++v.disease_counts[c];
  }
  v.demo_onehots = demographic_onehots(p);
  return v;
}

CountVectorSet build_count_vectors(const Corpus& corpus) {
  CountVectorSet out;
  out.vocabulary = corpus.vocabulary;
  out.corpus_fingerprint = corpus.fingerprint();
  out.rows.reserve(corpus.patients.size());
  for (const auto& p : corpus.patients) out.rows.push_back(count_vector(p, corpus.vocabulary.size()));
  return out;
}

Vector to_input(const PatientCountVector& v) {
  Vector x(static_cast<Eigen::Index>(v.width()));
  Eigen::Index k = 0;
  for (int c : v.disease_counts) x[k++] = c;
  for (int c : v.demo_onehots) x[k++] = c;
  return x;
}

MinMaxScaler::MinMaxScaler(const std::vector<Vector>& rows) {
  if (rows.empty()) throw Error("MinMaxScaler: no rows");
  min_ = rows.front();
  Vector max = rows.front();
  for (const auto& r : rows) {
    min_ = min_.cwiseMin(r);
    max = max.cwiseMax(r);
  }
  range_ = max - min_;
}

Vector MinMaxScaler::transform(const Vector& x) const {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = range_[i] > 0 ? (x[i] - min_[i]) / range_[i] : 0.0;
  return out;
}

AEModel init_ae_model(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  AEModel m;
  m.encoder.resize(hidden, inputs);
  m.decoder.resize(inputs, hidden);
  init_uniform(m.encoder, inputs, rng);
  init_uniform(m.decoder, hidden, rng);
  m.encoder_bias = Vector::Zero(hidden);
  m.decoder_bias = Vector::Zero(inputs);
  return m;
}

namespace {

Vector sigmoid(const Vector& z) { return z.unaryExpr([](double x) { return embench::sigmoid(x); }); }

}  // namespace

double ae_loss(const AEModel& model, const Vector& corrupted, const Vector& target) {
  const Vector h = sigmoid(model.encoder * corrupted + model.encoder_bias);
  const Vector recon = sigmoid(model.decoder * h + model.decoder_bias);
  return (recon - target).squaredNorm() / static_cast<double>(target.size());
}

double ae_loss_and_gradients(const AEModel& model, const Vector& corrupted, const Vector& target, AEGradients& g) {
  const Vector h = sigmoid(model.encoder * corrupted + model.encoder_bias);
  const Vector recon = sigmoid(model.decoder * h + model.decoder_bias);
  const Vector diff = recon - target;
  const double n = static_cast<double>(target.size());

  const Vector d_out = (2.0 / n) * diff.cwiseProduct(recon.cwiseProduct((1.0 - recon.array()).matrix()));
  g.decoder = d_out * h.transpose();
  g.decoder_bias = d_out;
  const Vector d_hidden = (model.decoder.transpose() * d_out).cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
  g.encoder = d_hidden * corrupted.transpose();
  g.encoder_bias = d_hidden;
  return diff.squaredNorm() / n;
}

AEResult train_ae(const CountVectorSet& vectors, const AEConfig& cfg) {
  if (vectors.rows.empty()) throw Error("train_ae: no input vectors");
  if (cfg.hidden == 0) throw Error("train_ae: hidden must be positive");
  const std::size_t v = vectors.vocabulary.size();
  const std::size_t inputs = v + kDemographicWidth;

  std::vector<Vector> raw;
  raw.reserve(vectors.rows.size());
  for (const auto& r : vectors.rows) raw.push_back(to_input(r));
  const MinMaxScaler scaler(raw);
  raw.clear();

  AEModel model = init_ae_model(inputs, cfg.hidden, cfg.seed);
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(vectors.rows.size());
  std::iota(order.begin(), order.end(), 0);
  AEGradients g;
  EpochLosses losses;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
      const Vector target = scaler.transform(to_input(vectors.rows[order[step]]));
      Vector corrupted = target;
      for (Eigen::Index i = 0; i < corrupted.size(); ++i) {
        if (rng.bernoulli(cfg.noise_rate)) corrupted[i] = 0.0;
      }
      const double loss = ae_loss_and_gradients(model, corrupted, target, g);
      check_divergence(loss, epoch, step);
      total += loss;
      model.encoder -= cfg.lr * g.encoder;
      model.encoder_bias -= cfg.lr * g.encoder_bias;
      model.decoder -= cfg.lr * g.decoder;
      model.decoder_bias -= cfg.lr * g.decoder_bias;
    }
    losses.push_back(total / static_cast<double>(order.size()));
  }

  // Column j of the encoder holds the weights leaving input j.
  Matrix disease = model.encoder.leftCols(v).transpose();
  DemographicEmbeddings demo;
  demo.method = "AE";
  demo.sex = model.encoder.middleCols(v, kNumSexes).transpose();
  demo.region = model.encoder.middleCols(v + kNumSexes, kNumRegions).transpose();
  demo.birth_year = model.encoder.middleCols(v + kNumSexes + kNumRegions, kNumBirthYears).transpose();
  EmbeddingSet emb(vectors.vocabulary, std::move(disease), EmbeddingMeta{"AE", cfg.seed, vectors.corpus_fingerprint});
  return AEResult{std::move(emb), std::move(demo), std::move(losses), std::move(model)};
}

}  // namespace embench
