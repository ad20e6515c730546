#include "embench/eval/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace embench {

std::size_t PredictionTask::positives() const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(), [](const TaskExample& x) { return x.label == 1; }));
}

PredictionTask build_task(const Corpus& corpus, const std::string& target_code, int horizon_days) {
  if (horizon_days <= 0) throw Error("build_task: horizon_days must be positive");
  PredictionTask task;
  task.vocabulary = corpus.vocabulary;
  task.target_code = target_code;
  task.horizon_days = horizon_days;
  const auto target = static_cast<int>(corpus.vocabulary.index(target_code));
  for (const auto& p : corpus.patients) {
    if (p.visits.empty()) {
      ++task.dropped;
      continue;
    }
    const int window_start = p.visits.back().date_offset_days - horizon_days;  // exclusive
    TaskExample x{p.id, p.sex, p.region, p.birth_year, {}, 0};
    std::map<int, int> counts;
    bool history = false;
    for (const auto& v : p.visits) {
      if (v.date_offset_days > window_start) {
        if (std::find(v.codes.begin(), v.codes.end(), target) != v.codes.end()) x.label = 1;
      } else {
        history = true;
        for (int c : v.codes) ++counts[c];
      }
    }
    if (!history) {
      ++task.dropped;
      continue;
    }
    x.counts.assign(counts.begin(), counts.end());
    task.examples.push_back(std::move(x));
  }
  const std::size_t pos = task.positives();
  if (pos == 0 || pos == task.examples.size())
    throw Error("degenerate task: " + std::to_string(pos) + " positive of " + std::to_string(task.examples.size()) +
                " patients for " + target_code);
  return task;
}

double average_precision(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error("average_precision: length mismatch");
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) throw Error("average_precision: no positive labels");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] == 1;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double f1_score(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw Error("f1_score: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] != 1) ++fp;
    if (predictions[i] != 1 && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

void ClassifierConfig::validate() const {
  if (layer_sizes.empty()) throw Error("classifier: layer_sizes must not be empty");
  for (auto s : layer_sizes)
    if (s == 0) throw Error("classifier: layer sizes must be positive");
  if (!(lr > 0.0)) throw Error("classifier: lr must be positive");
  if (batch_size == 0) throw Error("classifier: batch_size must be positive");
  if (!(train_fraction > 0.0 && validation_fraction > 0.0 && train_fraction + validation_fraction < 1.0))
    throw Error("classifier: train/validation fractions must be positive and leave room for a test split");
  if (random_disease_dim == 0) throw Error("classifier: random_disease_dim must be positive");
}

std::vector<Matrix*> ClassifierModel::parameters() {
  std::vector<Matrix*> out = {&disease, &sex, &region, &birth_year};
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

ClassifierModel ClassifierModel::zeros_like() const {
  ClassifierModel z = *this;
  for (Matrix* p : z.parameters()) p->setZero();
  return z;
}

namespace {

Matrix random_block(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

void check_table(const Matrix& t, int rows, const char* name) {
  if (t.rows() != rows || t.cols() == 0)
    throw Error(std::string("classifier: demographic table '") + name + "' must have " + std::to_string(rows) +
                " rows, got " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
}

}  // namespace

ClassifierModel init_classifier(const ConceptVocabulary& vocabulary, const ClassifierConfig& cfg,
                                const ClassifierInit& init, std::size_t* missing_codes) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x636c6173));
  ClassifierModel m;
  const auto v = static_cast<Eigen::Index>(vocabulary.size());
  std::size_t missing = 0;
  if (init.disease) {
    const auto d = static_cast<Eigen::Index>(init.disease->dim());
    m.disease = random_block(v, d, rng);
    for (std::size_t i = 0; i < vocabulary.size(); ++i) {
      const auto row = init.disease->vocabulary().find(vocabulary.code(i));
      if (row) {
        const auto src = init.disease->row(*row);
        for (Eigen::Index k = 0; k < d; ++k) m.disease(i, k) = src[k];
      } else {
        ++missing;
      }
    }
  } else {
    m.disease = random_block(v, static_cast<Eigen::Index>(cfg.random_disease_dim), rng);
  }
  if (init.demographics) {
    check_table(init.demographics->sex, kNumSexes, "sex");
    check_table(init.demographics->region, kNumRegions, "region");
    check_table(init.demographics->birth_year, kNumBirthYears, "birth_year");
    m.sex = init.demographics->sex;
    m.region = init.demographics->region;
    m.birth_year = init.demographics->birth_year;
  } else {
    m.sex = random_block(kNumSexes, static_cast<Eigen::Index>(cfg.random_demo_widths[0]), rng);
    m.region = random_block(kNumRegions, static_cast<Eigen::Index>(cfg.random_demo_widths[1]), rng);
    m.birth_year = random_block(kNumBirthYears, static_cast<Eigen::Index>(cfg.random_demo_widths[2]), rng);
  }
  std::size_t in = m.input_width();
  std::vector<std::size_t> sizes = cfg.layer_sizes;
  sizes.push_back(1);
  for (std::size_t out : sizes) {
    Matrix w(in, out);
    Matrix b(1, out);
    init_uniform(w, in, rng);
    init_uniform(b, in, rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
    in = out;
  }
  if (missing_codes) *missing_codes = missing;
  return m;
}

namespace {

struct Activations {
  RowVector input;
  std::vector<RowVector> pre;  // per layer, before the nonlinearity
  std::vector<RowVector> post;
};

RowVector first_layer(const ClassifierModel& m, const TaskExample& x) {
  const auto d = m.disease.cols();
  RowVector h(m.input_width());
  RowVector dis = RowVector::Zero(d);
  for (const auto& [code, count] : x.counts) dis += static_cast<double>(count) * m.disease.row(code);
  h << dis, m.sex.row(x.sex), m.region.row(x.region), m.birth_year.row(x.birth_year - kMinBirthYear);
  return h;
}

Activations forward(const ClassifierModel& m, const TaskExample& x) {
  Activations a;
  a.input = first_layer(m, x);
  const RowVector* in = &a.input;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    RowVector z = *in * m.weights[l] + m.biases[l];
    a.pre.push_back(z);
    const bool last = l + 1 == m.weights.size();
    a.post.push_back(last ? z.unaryExpr([](double s) { return sigmoid(s); }) : RowVector(z.cwiseMax(0.0)));
    in = &a.post.back();
  }
  return a;
}

/// -log p(label | logit), computed stably.
double bce(double logit, int label) { return label == 1 ? -log_sigmoid(logit) : -log_sigmoid(-logit); }

}  // namespace

double classifier_predict(const ClassifierModel& m, const TaskExample& x) { return forward(m, x).post.back()[0]; }

double classifier_loss(const ClassifierModel& m, std::span<const TaskExample> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& x : batch) total += bce(forward(m, x).pre.back()[0], x.label);
  return total / static_cast<double>(batch.size());
}

double classifier_loss_and_gradients(const ClassifierModel& m, std::span<const TaskExample> batch,
                                     ClassifierModel& g) {
  if (batch.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& x : batch) {
    const Activations a = forward(m, x);
    total += bce(a.pre.back()[0], x.label);
    RowVector delta(1);
    delta[0] = (a.post.back()[0] - x.label) * inv;
    for (std::size_t l = m.weights.size(); l-- > 0;) {
      const RowVector& in = l == 0 ? a.input : a.post[l - 1];
      g.weights[l] += in.transpose() * delta;
      g.biases[l] += delta;
      RowVector back = delta * m.weights[l].transpose();
      if (l > 0) back = back.cwiseProduct((a.pre[l - 1].array() > 0.0).cast<double>().matrix());
      delta = std::move(back);
    }
    const auto d = m.disease.cols();
    const RowVector d_dis = delta.head(d);
    for (const auto& [code, count] : x.counts) g.disease.row(code) += static_cast<double>(count) * d_dis;
    Eigen::Index off = d;
    g.sex.row(x.sex) += delta.segment(off, m.sex.cols());
    off += m.sex.cols();
    g.region.row(x.region) += delta.segment(off, m.region.cols());
    off += m.region.cols();
    g.birth_year.row(x.birth_year - kMinBirthYear) += delta.segment(off, m.birth_year.cols());
  }
  return total * inv;
}

Split split_task(const PredictionTask& task, const ClassifierConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x73706c74));
  Split s;
  for (int label : {1, 0}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < task.examples.size(); ++i)
      if (task.examples[i].label == label) idx.push_back(i);
    rng.shuffle(idx);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * cfg.train_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(n * cfg.validation_fraction));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& part = k < n_train ? s.train : k < n_train + n_val ? s.validation : s.test;
      part.push_back(idx[k]);
    }
  }
  for (auto* part : {&s.train, &s.validation, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

namespace {

std::vector<double> scores_for(const ClassifierModel& m, const PredictionTask& task,
                               const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(classifier_predict(m, task.examples[i]));
  return out;
}

std::vector<int> labels_for(const PredictionTask& task, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(task.examples[i].label);
  return out;
}

void require_both_classes(const std::vector<int>& labels, const char* part) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(labels.size()))
    throw Error(std::string("classifier: ") + part + " split needs both positive and negative patients");
}

}  // namespace

ScoreReport train_classifier(const PredictionTask& task, const ClassifierConfig& cfg, const ClassifierInit& init) {
  cfg.validate();
  ScoreReport report;
  report.target_code = task.target_code;
  report.disease_emb = init.disease ? init.disease->meta().method : "RANDOM";
  report.demo_emb = init.demographics ? init.demographics->method : "RANDOM";
  report.seed = cfg.seed;

  const Split split = split_task(task, cfg);
  const auto val_labels = labels_for(task, split.validation);
  const auto test_labels = labels_for(task, split.test);
  require_both_classes(labels_for(task, split.train), "train");
  require_both_classes(val_labels, "validation");
  require_both_classes(test_labels, "test");

  ClassifierModel m = init_classifier(task.vocabulary, cfg, init, &report.missing_codes);
  ClassifierModel grads = m.zeros_like();
  auto params = m.parameters();
  auto grad_params = grads.parameters();
  const std::size_t first_trainable = cfg.fine_tune ? 0 : 4;

  Rng rng(derive_seed(cfg.seed, 0x74726e));
  std::vector<std::size_t> order = split.train;
  std::vector<TaskExample> validation;
  for (auto i : split.validation) validation.push_back(task.examples[i]);
  ClassifierModel best = m;
  double best_ap = average_precision(val_labels, scores_for(m, task, split.validation));
  double best_loss = classifier_loss(m, validation);
  std::vector<TaskExample> batch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(task.examples[order[k]]);
      const double loss = classifier_loss_and_gradients(m, batch, grads);
      check_divergence(loss, epoch, step++);
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (p >= first_trainable) *params[p] -= cfg.lr * *grad_params[p];
        grad_params[p]->setZero();
      }
    }
    const double ap = average_precision(val_labels, scores_for(m, task, split.validation));
    const double loss = classifier_loss(m, validation);
    report.validation_ap.push_back(ap);
    if (ap > best_ap || (ap == best_ap && loss < best_loss)) {
      best_ap = ap;
      best_loss = loss;
      best = m;
      report.best_epoch = epoch + 1;
    }
  }

  const auto scores = scores_for(best, task, split.test);
  std::vector<int> predictions;
  for (double s : scores) predictions.push_back(s >= cfg.threshold ? 1 : 0);
  report.average_precision = average_precision(test_labels, scores);
  report.f1 = f1_score(test_labels, predictions);
  report.n_test = test_labels.size();
  report.prevalence = static_cast<double>(std::count(test_labels.begin(), test_labels.end(), 1)) /
                      static_cast<double>(test_labels.size());
  return report;
}

void write_score_row(std::ostream& out, const ScoreReport& r) {
  out << r.task << ',' << r.target_code << ',' << r.disease_emb << ',' << r.demo_emb << ','
      << format_double(r.average_precision) << ',' << format_double(r.f1) << ',' << r.n_test << ','
      << format_double(r.prevalence) << ',' << r.seed << '\n';
}

}  // namespace embench
