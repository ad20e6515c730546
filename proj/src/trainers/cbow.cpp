#include "embench/trainers/cbow.hpp"

#include <algorithm>
#include <cmath>

namespace embench {

SequenceSet flatten_sequences(const Corpus& corpus) {
  SequenceSet out;
  out.vocabulary = corpus.vocabulary;
  out.corpus_fingerprint = corpus.fingerprint();
  out.sequences.reserve(corpus.patients.size());
  for (const auto& p : corpus.patients) {
    std::vector<int> seq;
    for (const auto& visit : p.visits) {
      std::vector<int> codes = visit.codes;
      std::sort(codes.begin(), codes.end());
      seq.insert(seq.end(), codes.begin(), codes.end());
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::vector<std::size_t> code_counts(const std::vector<std::vector<int>>& sequences, std::size_t vocab_size) {
  std::vector<std::size_t> counts(vocab_size, 0);
  for (const auto& s : sequences)
    for (int c : s) ++counts.at(c);
  return counts;
}

NegativeSampler::NegativeSampler(const std::vector<std::size_t>& counts, double power) {
  cdf_.resize(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc += counts[i] > 0 ? std::pow(static_cast<double>(counts[i]), power) : 0.0;
    cdf_[i] = acc;
  }
  if (acc <= 0.0) throw Error("negative sampler: empty vocabulary");
  for (double& c : cdf_) c /= acc;
}

int NegativeSampler::draw(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
}

double NegativeSampler::probability(std::size_t code) const {
  return code == 0 ? cdf_[0] : cdf_[code] - cdf_[code - 1];
}

SamplingGradient negative_sampling_step(const Matrix& output, const RowVector& context, int target,
                                        std::span<const int> negatives) {
  SamplingGradient g;
  g.context = RowVector::Zero(context.size());
  auto add = [&](int row, bool positive) {
    const double score = output.row(row).dot(context);
    const double label = positive ? 1.0 : 0.0;
    g.loss -= positive ? log_sigmoid(score) : log_sigmoid(-score);
    // d/dscore of the logistic loss.
    const double d = sigmoid(score) - label;
    g.context += d * output.row(row);
    g.output_rows.push_back(row);
    g.output.push_back(d * context);
  };
  add(target, true);
  for (int n : negatives) add(n, false);
  return g;
}

RowVector mean_context(const Matrix& input, std::span<const int> context) {
  RowVector h = RowVector::Zero(input.cols());
  for (int c : context) h += input.row(c);
  return h / static_cast<double>(context.size());
}

double cbow_loss(const WordVectors& m, std::span<const int> context, int target, std::span<const int> negatives) {
  return negative_sampling_step(m.output, mean_context(m.input, context), target, negatives).loss;
}

double cbow_loss_and_gradients(const WordVectors& m, std::span<const int> context, int target,
                               std::span<const int> negatives, WordVectors& grads) {
  grads.input = Matrix::Zero(m.input.rows(), m.input.cols());
  grads.output = Matrix::Zero(m.output.rows(), m.output.cols());
  auto g = negative_sampling_step(m.output, mean_context(m.input, context), target, negatives);
  for (std::size_t i = 0; i < g.output_rows.size(); ++i) grads.output.row(g.output_rows[i]) += g.output[i];
  const double inv = 1.0 / static_cast<double>(context.size());
  for (int c : context) grads.input.row(c) += inv * g.context;
  return g.loss;
}

WordVectors init_word_vectors(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  WordVectors m;
  m.input.resize(vocab_size, dim);
  const double bound = 0.5 / static_cast<double>(dim);
  for (Eigen::Index i = 0; i < m.input.size(); ++i) m.input.data()[i] = rng.uniform(-bound, bound);
  m.output = Matrix::Zero(vocab_size, dim);
  return m;
}

namespace {

struct Sample {
  std::vector<int> context;
  std::vector<int> negatives;
};

/// Reduced window drawn uniformly from [1, window]; negatives equal to the
/// target are dropped.
bool draw_sample(const std::vector<int>& seq, std::size_t t, const CBOWConfig& cfg, const NegativeSampler& sampler,
                 Rng& rng, Sample& s) {
  const std::size_t reduced = cfg.window - rng.below(cfg.window);
  s.context.clear();
  const std::size_t lo = t >= reduced ? t - reduced : 0;
  const std::size_t hi = std::min(seq.size() - 1, t + reduced);
  for (std::size_t j = lo; j <= hi; ++j) {
    if (j != t) s.context.push_back(seq[j]);
  }
  s.negatives.clear();
  for (std::size_t n = 0; n < cfg.negatives; ++n) {
    const int neg = sampler.draw(rng);
    if (neg != seq[t]) s.negatives.push_back(neg);
  }
  return !s.context.empty();
}

void validate(const SequenceSet& data, const CBOWConfig& cfg) {
  if (data.vocabulary.empty()) throw Error("train_cbow: empty vocabulary");
  if (cfg.window == 0 || cfg.dim == 0) throw Error("train_cbow: window and dim must be positive");
  bool any = std::any_of(data.sequences.begin(), data.sequences.end(), [](const auto& s) { return !s.empty(); });
  if (!any) throw Error("train_cbow: no non-empty sequence");
}

}  // namespace

double cbow_corpus_loss(const WordVectors& m, const SequenceSet& data, const CBOWConfig& cfg, std::uint64_t seed) {
  validate(data, cfg);
  const NegativeSampler sampler(code_counts(data.sequences, data.vocabulary.size()), cfg.unigram_power);
  Rng rng(seed);
  Sample s;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& seq : data.sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (!draw_sample(seq, t, cfg, sampler, rng, s)) continue;
      total += cbow_loss(m, s.context, seq[t], s.negatives);
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

namespace {

/// Drops codes seen fewer than min_count times and reindexes the rest.
SequenceSet apply_min_count(const SequenceSet& data, std::size_t min_count) {
  const auto counts = code_counts(data.sequences, data.vocabulary.size());
  std::vector<int> remap(counts.size(), -1);
  std::vector<std::string> kept;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] >= min_count) {
      remap[c] = static_cast<int>(kept.size());
      kept.push_back(data.vocabulary.code(c));
    }
  }
  SequenceSet out;
  out.vocabulary = ConceptVocabulary(std::move(kept));
  out.corpus_fingerprint = data.corpus_fingerprint;
  for (const auto& seq : data.sequences) {
    std::vector<int> s;
    for (int c : seq) {
      if (remap[c] >= 0) s.push_back(remap[c]);
    }
    out.sequences.push_back(std::move(s));
  }
  return out;
}

}  // namespace

CBOWResult train_cbow(const SequenceSet& input, const CBOWConfig& cfg) {
  const SequenceSet filtered = cfg.min_count > 1 ? apply_min_count(input, cfg.min_count) : SequenceSet{};
  const SequenceSet& data = cfg.min_count > 1 ? filtered : input;
  validate(data, cfg);
  const auto counts = code_counts(data.sequences, data.vocabulary.size());
  const NegativeSampler sampler(counts, cfg.unigram_power);
  Rng rng(cfg.seed);
  WordVectors m = init_word_vectors(data.vocabulary.size(), cfg.dim, rng);

  std::size_t total_tokens = 0;
  for (const auto& s : data.sequences) total_tokens += s.size();
  const double total_work = static_cast<double>(total_tokens * std::max<std::size_t>(cfg.epochs, 1));

  // Frequent-code downsampling keep probabilities; all 1 when disabled.
  std::vector<double> keep(counts.size(), 1.0);
  if (cfg.subsample_threshold > 0.0) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) continue;
      const double f = static_cast<double>(counts[c]) / static_cast<double>(total_tokens);
      const double t = cfg.subsample_threshold;
      keep[c] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
    }
  }

  Sample s;
  EpochLosses losses;
  std::size_t processed = 0;
  std::vector<int> kept_seq;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    std::size_t steps = 0;
    for (const auto& full : data.sequences) {
      const std::vector<int>* seq_ptr = &full;
      if (cfg.subsample_threshold > 0.0) {
        kept_seq.clear();
        for (int c : full) {
          if (keep[c] >= 1.0 || rng.uniform() < keep[c]) kept_seq.push_back(c);
        }
        processed += full.size() - kept_seq.size();
        seq_ptr = &kept_seq;
      }
      const std::vector<int>& seq = *seq_ptr;
      for (std::size_t t = 0; t < seq.size(); ++t, ++processed) {
        const double lr =
            std::max(cfg.min_lr, cfg.lr - (cfg.lr - cfg.min_lr) * static_cast<double>(processed) / total_work);
        if (!draw_sample(seq, t, cfg, sampler, rng, s)) continue;
        const RowVector h = mean_context(m.input, s.context);
        auto g = negative_sampling_step(m.output, h, seq[t], s.negatives);
        check_divergence(g.loss, epoch, steps);
        total += g.loss;
        ++steps;
        for (std::size_t i = 0; i < g.output_rows.size(); ++i) m.output.row(g.output_rows[i]) -= lr * g.output[i];
        const RowVector step = (lr / static_cast<double>(s.context.size())) * g.context;
        for (int c : s.context) m.input.row(c) -= step;
      }
    }
    losses.push_back(steps ? total / static_cast<double>(steps) : 0.0);
  }
  EmbeddingSet emb(data.vocabulary, m.input, EmbeddingMeta{"CBOW", cfg.seed, data.corpus_fingerprint});
  return CBOWResult{std::move(emb), std::move(losses), std::move(m)};
}

}  // namespace embench
