#include "embench/trainers/cbowa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace embench {

int time_bucket(int gap_days, const std::vector<int>& bounds) {
  const int gap = std::abs(gap_days);
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (gap <= bounds[i]) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> attention_weights(const CBOWAModel& m, std::span<const ContextEvent> context) {
  std::vector<double> w(context.size());
  double top = -INFINITY;
  for (std::size_t j = 0; j < context.size(); ++j) {
    w[j] = m.code_score[context[j].code] + m.bucket_score[context[j].bucket];
    top = std::max(top, w[j]);
  }
  double z = 0.0;
  for (double& x : w) {
    x = std::exp(x - top);
    z += x;
  }
  for (double& x : w) x /= z;
  return w;
}

RowVector attention_context(const CBOWAModel& m, std::span<const ContextEvent> context) {
  const auto alpha = attention_weights(m, context);
  RowVector h = RowVector::Zero(m.vectors.input.cols());
  for (std::size_t j = 0; j < context.size(); ++j) h += alpha[j] * m.vectors.input.row(context[j].code);
  return h;
}

double cbowa_loss(const CBOWAModel& m, std::span<const ContextEvent> context, int target,
                  std::span<const int> negatives) {
  return negative_sampling_step(m.vectors.output, attention_context(m, context), target, negatives).loss;
}

namespace {

/// Backpropagates the context gradient through the attention pooling.
/// Calls on_input(code, grad_row) and on_score(j, d_score) per context event.
template <typename InputFn, typename ScoreFn>
void attention_backward(const CBOWAModel& m, std::span<const ContextEvent> context, const std::vector<double>& alpha,
                        const RowVector& d_context, InputFn on_input, ScoreFn on_score) {
  std::vector<double> proj(context.size());
  double mean = 0.0;
  for (std::size_t j = 0; j < context.size(); ++j) {
    proj[j] = m.vectors.input.row(context[j].code).dot(d_context);
    mean += alpha[j] * proj[j];
  }
  for (std::size_t j = 0; j < context.size(); ++j) {
    on_input(context[j].code, alpha[j] * d_context);
    on_score(j, alpha[j] * (proj[j] - mean));
  }
}

}  // namespace

double cbowa_loss_and_gradients(const CBOWAModel& m, std::span<const ContextEvent> context, int target,
                                std::span<const int> negatives, CBOWAGradients& g) {
  g.input = Matrix::Zero(m.vectors.input.rows(), m.vectors.input.cols());
  g.output = Matrix::Zero(m.vectors.output.rows(), m.vectors.output.cols());
  g.code_score = Vector::Zero(m.code_score.size());
  g.bucket_score = Vector::Zero(m.bucket_score.size());
  const auto alpha = attention_weights(m, context);
  RowVector h = RowVector::Zero(m.vectors.input.cols());
  for (std::size_t j = 0; j < context.size(); ++j) h += alpha[j] * m.vectors.input.row(context[j].code);
  auto step = negative_sampling_step(m.vectors.output, h, target, negatives);
  for (std::size_t i = 0; i < step.output_rows.size(); ++i) g.output.row(step.output_rows[i]) += step.output[i];
  attention_backward(
      m, context, alpha, step.context, [&](int code, const RowVector& d) { g.input.row(code) += d; },
      [&](std::size_t j, double d) {
        g.code_score[context[j].code] += d;
        g.bucket_score[context[j].bucket] += d;
      });
  return step.loss;
}

std::vector<std::vector<TimedEvent>> timed_events(const Corpus& corpus) {
  std::vector<std::vector<TimedEvent>> out;
  out.reserve(corpus.patients.size());
  for (const auto& p : corpus.patients) {
    std::vector<TimedEvent> events;
    for (const auto& visit : p.visits) {
      for (int c : visit.codes) events.push_back({c, visit.date_offset_days});
    }
    std::stable_sort(events.begin(), events.end(), [](const TimedEvent& a, const TimedEvent& b) {
      return a.day != b.day ? a.day < b.day : a.code < b.code;
    });
    out.push_back(std::move(events));
  }
  return out;
}

CBOWAResult train_cbowa(const Corpus& corpus, const CBOWAConfig& cfg) {
  if (corpus.vocabulary.empty()) throw Error("train_cbowa: empty vocabulary");
  if (cfg.time_buckets.empty() || !std::is_sorted(cfg.time_buckets.begin(), cfg.time_buckets.end()) ||
      cfg.time_buckets.front() < 0)
    throw Error("train_cbowa: time_buckets must be non-empty, non-negative and ascending");
  const auto events = timed_events(corpus);
  bool usable = std::any_of(events.begin(), events.end(), [](const auto& e) { return e.size() >= 2; });
  if (!usable) throw Error("train_cbowa: needs a patient with at least 2 coded events");

  std::vector<std::size_t> counts(corpus.vocabulary.size(), 0);
  for (const auto& pe : events)
    for (const auto& e : pe) ++counts[e.code];
  const NegativeSampler sampler(counts, cfg.unigram_power);

  Rng rng(cfg.seed);
  CBOWAModel m;
  m.vectors = init_word_vectors(corpus.vocabulary.size(), cfg.dim, rng);
  m.code_score = Vector::Zero(corpus.vocabulary.size());
  m.bucket_score = Vector::Zero(cfg.time_buckets.size());
  const int horizon = cfg.time_buckets.back();

  std::vector<ContextEvent> context;
  std::vector<int> negatives;
  EpochLosses losses;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    std::size_t steps = 0;
    for (const auto& pe : events) {
      std::size_t lo = 0;
      for (std::size_t t = 0; t < pe.size(); ++t) {
        while (pe[t].day - pe[lo].day > horizon) ++lo;
        context.clear();
        for (std::size_t j = lo; j < pe.size() && pe[j].day - pe[t].day <= horizon; ++j) {
          if (j != t) context.push_back({pe[j].code, time_bucket(pe[j].day - pe[t].day, cfg.time_buckets)});
        }
        if (context.empty()) continue;
        const int target = pe[t].code;
        negatives.clear();
        for (std::size_t n = 0; n < cfg.negatives; ++n) {
          const int neg = sampler.draw(rng);
          if (neg != target) negatives.push_back(neg);
        }

        const auto alpha = attention_weights(m, context);
        RowVector h = RowVector::Zero(cfg.dim);
        for (std::size_t j = 0; j < context.size(); ++j) h += alpha[j] * m.vectors.input.row(context[j].code);
        auto g = negative_sampling_step(m.vectors.output, h, target, negatives);
        check_divergence(g.loss, epoch, steps);
        total += g.loss;
        ++steps;
        // Score and input gradients read the pre-update input rows.
        std::vector<std::pair<int, RowVector>> input_updates;
        std::vector<double> score_updates(context.size());
        attention_backward(
            m, context, alpha, g.context, [&](int code, const RowVector& d) { input_updates.emplace_back(code, d); },
            [&](std::size_t j, double d) { score_updates[j] = d; });
        for (std::size_t i = 0; i < g.output_rows.size(); ++i) m.vectors.output.row(g.output_rows[i]) -= cfg.lr * g.output[i];
        for (const auto& [code, d] : input_updates) m.vectors.input.row(code) -= cfg.lr * d;
        for (std::size_t j = 0; j < context.size(); ++j) {
          m.code_score[context[j].code] -= cfg.lr * score_updates[j];
          m.bucket_score[context[j].bucket] -= cfg.lr * score_updates[j];
        }
      }
    }
    losses.push_back(steps ? total / static_cast<double>(steps) : 0.0);
  }
  EmbeddingSet emb(corpus.vocabulary, m.vectors.input,
                   EmbeddingMeta{"CBOWA(reconstructed)", cfg.seed, corpus.fingerprint()});
  return CBOWAResult{std::move(emb), std::move(losses), std::move(m)};
}

}  // namespace embench
