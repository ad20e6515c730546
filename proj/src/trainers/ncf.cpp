#include "embench/trainers/ncf.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace embench {

namespace {

std::uint64_t record_key(int sex, int region, int birth_year, int age, int disease) {
  return static_cast<std::uint64_t>(static_cast<std::uint32_t>(disease)) |
         (static_cast<std::uint64_t>(age & 0xffff) << 32) |
         (static_cast<std::uint64_t>((birth_year - kMinBirthYear) & 0xff) << 48) |
         (static_cast<std::uint64_t>(region & 0xf) << 56) | (static_cast<std::uint64_t>(sex & 0x1) << 60);
}

struct Forward {
  Vector input;
  std::vector<Vector> activations;  // post-ReLU hidden outputs
  double logit = 0.0;
};

int age_row(const NCFModel& m, int age) {
  return std::clamp(age - m.min_age, 0, static_cast<int>(m.age.rows()) - 1);
}

Forward forward(const NCFModel& m, const DiagnosisRecord& r) {
  Forward f;
  f.input.resize(static_cast<Eigen::Index>(m.input_width()));
  Eigen::Index k = 0;
  auto put = [&](const Matrix& table, int row) {
    f.input.segment(k, table.cols()) = table.row(row).transpose();
    k += table.cols();
  };
  put(m.sex, r.sex);
  put(m.region, r.region);
  put(m.birth_year, r.birth_year - kMinBirthYear);
  put(m.age, age_row(m, r.age_years));
  put(m.disease, r.disease);

  const Vector* x = &f.input;
  const std::size_t hidden = m.weights.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    f.activations.push_back((m.weights[l] * *x + m.biases[l]).cwiseMax(0.0));
    x = &f.activations.back();
  }
  f.logit = (m.weights[hidden] * *x + m.biases[hidden])[0];
  return f;
}

double bce(double logit, bool positive) { return positive ? -log_sigmoid(logit) : -log_sigmoid(-logit); }

/// Backpropagates one record. Fills layer gradients and returns the gradient
/// with respect to the concatenated input.
Vector backward(const NCFModel& m, const DiagnosisRecord& r, const Forward& f, std::vector<Matrix>& dW,
                std::vector<Vector>& db) {
  const std::size_t layers = m.weights.size();
  dW.resize(layers);
  db.resize(layers);
  Vector delta(1);
  delta[0] = sigmoid(f.logit) - (r.positive ? 1.0 : 0.0);
  for (std::size_t l = layers; l-- > 0;) {
    const Vector& in = l == 0 ? f.input : f.activations[l - 1];
    dW[l] = delta * in.transpose();
    db[l] = delta;
    Vector d_in = m.weights[l].transpose() * delta;
    if (l > 0) {
      const Vector& a = f.activations[l - 1];
      for (Eigen::Index i = 0; i < d_in.size(); ++i) {
        if (a[i] <= 0.0) d_in[i] = 0.0;
      }
    }
    delta = std::move(d_in);
  }
  return delta;
}

template <typename Fn>
void for_each_table_slice(const NCFModel& m, const DiagnosisRecord& r, Fn fn) {
  Eigen::Index k = 0;
  auto visit = [&](int which, const Matrix& table, int row) {
    fn(which, row, k, table.cols());
    k += table.cols();
  };
  visit(0, m.sex, r.sex);
  visit(1, m.region, r.region);
  visit(2, m.birth_year, r.birth_year - kMinBirthYear);
  visit(3, m.age, age_row(m, r.age_years));
  visit(4, m.disease, r.disease);
}

}  // namespace

DiagnosisRecordSet build_ncf_records(const Corpus& corpus, std::size_t negatives_per_positive, std::uint64_t seed) {
  DiagnosisRecordSet out;
  out.vocabulary = corpus.vocabulary;
  out.corpus_fingerprint = corpus.fingerprint();

  std::vector<DiagnosisRecord> positives;
  std::vector<std::size_t> owner;
  std::unordered_set<std::uint64_t> keys;
  for (std::size_t pi = 0; pi < corpus.patients.size(); ++pi) {
    const auto& p = corpus.patients[pi];
    for (const auto& visit : p.visits) {
      const int age = age_in_years(p, visit.date_offset_days);
      for (int c : visit.codes) {
        positives.push_back({p.sex, p.region, p.birth_year, age, c, true});
        owner.push_back(pi);
        keys.insert(record_key(p.sex, p.region, p.birth_year, age, c));
      }
    }
  }
  if (positives.empty()) return out;
  auto [lo, hi] = std::minmax_element(positives.begin(), positives.end(),
                                      [](const auto& a, const auto& b) { return a.age_years < b.age_years; });
  out.min_age = lo->age_years;
  out.max_age = hi->age_years;

  Rng rng(seed);
  const auto n_ages = static_cast<std::uint64_t>(out.max_age - out.min_age + 1);
  const auto n_codes = static_cast<std::uint64_t>(corpus.vocabulary.size());
  out.records.reserve(positives.size() * (1 + negatives_per_positive));
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& pos = positives[i];
    out.records.push_back(pos);
    for (std::size_t n = 0; n < negatives_per_positive; ++n) {
      bool found = false;
      for (std::size_t attempt = 0; attempt < kNegativeRetryCap; ++attempt) {
        const int age = out.min_age + static_cast<int>(rng.below(n_ages));
        const int disease = static_cast<int>(rng.below(n_codes));
        if (keys.count(record_key(pos.sex, pos.region, pos.birth_year, age, disease))) continue;
        out.records.push_back({pos.sex, pos.region, pos.birth_year, age, disease, false});
        found = true;
        break;
      }
      if (!found) {
        throw Error("build_ncf_records: patient " + corpus.patients[owner[i]].id + ": no negative record found after " +
                    std::to_string(kNegativeRetryCap) + " attempts (corpus too dense)");
      }
    }
  }
  return out;
}

NCFModel init_ncf_model(const NCFConfig& cfg, std::size_t vocab_size, int min_age, int max_age) {
  if (cfg.layer_sizes.empty()) throw Error("NCF: layer_sizes must not be empty");
  if (max_age < min_age) throw Error("NCF: empty age range");
  Rng rng(cfg.seed);
  NCFModel m;
  m.min_age = min_age;
  m.sex.resize(kNumSexes, cfg.sex_dim);
  m.region.resize(kNumRegions, cfg.region_dim);
  m.birth_year.resize(kNumBirthYears, cfg.birth_year_dim);
  m.age.resize(max_age - min_age + 1, cfg.age_dim);
  m.disease.resize(vocab_size, cfg.disease_dim);
  // Lookup tables act on one-hot inputs (fan_in 1).
  for (Matrix* t : {&m.sex, &m.region, &m.birth_year, &m.age, &m.disease}) init_uniform(*t, 1, rng);
  std::size_t in = m.input_width();
  std::vector<std::size_t> sizes = cfg.layer_sizes;
  sizes.push_back(1);
  for (std::size_t out : sizes) {
    Matrix w(out, in);
    Vector b(out);
    init_uniform(w, in, rng);
    init_uniform(b, in, rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
    in = out;
  }
  return m;
}

double ncf_predict(const NCFModel& model, const DiagnosisRecord& r) { return sigmoid(forward(model, r).logit); }

double ncf_loss(const NCFModel& model, const DiagnosisRecord& r) { return bce(forward(model, r).logit, r.positive); }

NCFGradients zero_gradients(const NCFModel& m) {
  NCFGradients g;
  g.sex = Matrix::Zero(m.sex.rows(), m.sex.cols());
  g.region = Matrix::Zero(m.region.rows(), m.region.cols());
  g.birth_year = Matrix::Zero(m.birth_year.rows(), m.birth_year.cols());
  g.age = Matrix::Zero(m.age.rows(), m.age.cols());
  g.disease = Matrix::Zero(m.disease.rows(), m.disease.cols());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    g.weights.push_back(Matrix::Zero(m.weights[l].rows(), m.weights[l].cols()));
    g.biases.push_back(Vector::Zero(m.biases[l].size()));
  }
  return g;
}

double ncf_loss_and_gradients(const NCFModel& model, const DiagnosisRecord& r, NCFGradients& g) {
  const Forward f = forward(model, r);
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  const Vector dx = backward(model, r, f, dW, db);
  for (std::size_t l = 0; l < dW.size(); ++l) {
    g.weights[l] += dW[l];
    g.biases[l] += db[l];
  }
  Matrix* tables[] = {&g.sex, &g.region, &g.birth_year, &g.age, &g.disease};
  for_each_table_slice(model, r, [&](int which, int row, Eigen::Index offset, Eigen::Index width) {
    tables[which]->row(row) += dx.segment(offset, width).transpose();
  });
  return bce(f.logit, r.positive);
}

NCFResult train_ncf(const DiagnosisRecordSet& data, const NCFConfig& cfg) {
  bool has_pos = false, has_neg = false;
  for (const auto& r : data.records) (r.positive ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw Error("train_ncf: records must contain both positive and negative examples");

  NCFModel model = init_ncf_model(cfg, data.vocabulary.size(), data.min_age, data.max_age);
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(data.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  EpochLosses losses;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
      const auto& r = data.records[order[step]];
      const Forward f = forward(model, r);
      const double loss = bce(f.logit, r.positive);
      check_divergence(loss, epoch, step);
      total += loss;
      const Vector dx = backward(model, r, f, dW, db);
      for (std::size_t l = 0; l < dW.size(); ++l) {
        model.weights[l] -= cfg.lr * dW[l];
        model.biases[l] -= cfg.lr * db[l];
      }
      Matrix* tables[] = {&model.sex, &model.region, &model.birth_year, &model.age, &model.disease};
      for_each_table_slice(model, r, [&](int which, int row, Eigen::Index offset, Eigen::Index width) {
        tables[which]->row(row) -= cfg.lr * dx.segment(offset, width).transpose();
      });
    }
    losses.push_back(total / static_cast<double>(order.size()));
  }

  DemographicEmbeddings demo{"NCF", model.sex, model.region, model.birth_year};
  EmbeddingSet emb(data.vocabulary, model.disease, EmbeddingMeta{"NCF", cfg.seed, data.corpus_fingerprint});
  return NCFResult{std::move(emb), std::move(demo), std::move(losses), std::move(model)};
}

}  // namespace embench
