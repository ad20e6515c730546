#include "embench/trainers/behrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace embench {

int Token::age_bucket() const { return std::clamp(age_days * 4 / 1461, 0, kAgeBuckets - 1); }

BehrtSequenceSet build_behrt_sequences(const Corpus& corpus, std::size_t max_seq) {
  if (max_seq < 2) throw Error("build_behrt_sequences: max_seq must be at least 2");
  BehrtSequenceSet out;
  out.vocabulary = corpus.vocabulary;
  out.corpus_fingerprint = corpus.fingerprint();
  const TokenIds ids = out.ids();
  for (const auto& p : corpus.patients) {
    std::vector<Token> body;
    int ordinal = 0;
    for (const auto& visit : p.visits) {
      ++ordinal;
      const int age = age_in_days(p, visit.date_offset_days);
      std::vector<int> codes = visit.codes;
      std::sort(codes.begin(), codes.end());
      for (int c : codes) body.push_back({c, age, ordinal});
      body.push_back({ids.sep(), age, ordinal});
    }
    if (body.size() + 1 > max_seq) {
      body.erase(body.begin(), body.end() - static_cast<std::ptrdiff_t>(max_seq - 1));
      const int first = body.front().visit;
      for (auto& t : body) t.visit -= first - 1;
    }
    TokenSequence seq;
    const int cls_age = body.empty() ? 0 : body.front().age_days;
    seq.tokens.push_back({ids.cls(), cls_age, 0});
    seq.tokens.insert(seq.tokens.end(), body.begin(), body.end());
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

MaskedSequence mask_tokens(const TokenSequence& seq, double mask_rate, TokenIds ids, Rng& rng) {
  MaskedSequence ms{seq, {}, {}};
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const int id = seq.tokens[i].id;
    if (id >= ids.vocab_size) continue;
    if (!rng.bernoulli(mask_rate)) continue;
    ms.positions.push_back(static_cast<int>(i));
    ms.labels.push_back(id);
    const double u = rng.uniform();
    if (u < 0.8) {
      ms.input.tokens[i].id = ids.mask();
    } else if (u < 0.9) {
      ms.input.tokens[i].id = static_cast<int>(rng.below(static_cast<std::uint64_t>(ids.vocab_size)));
    }
  }
  return ms;
}

MaskedSequence mask_tokens(const TokenSequence& seq, double mask_rate, TokenIds ids, std::uint64_t seed) {
  Rng rng(seed);
  return mask_tokens(seq, mask_rate, ids, rng);
}

void BEHRTConfig::validate() const {
  if (d_model == 0 || heads == 0) throw Error("BEHRT: d_model and heads must be positive");
  if (d_model % heads != 0)
    throw Error("BEHRT: heads (" + std::to_string(heads) + ") must divide d_model (" + std::to_string(d_model) + ")");
  if (layers == 0 || ff_dim == 0) throw Error("BEHRT: layers and ff_dim must be positive");
  if (max_seq < 2) throw Error("BEHRT: max_seq must be at least 2");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw Error("BEHRT: mask_rate must be in [0,1]");
  if (batch_size == 0) throw Error("BEHRT: batch_size must be positive");
  if (!(clip_norm >= 0.0)) throw Error("BEHRT: clip_norm must be non-negative");
}

namespace {

std::vector<Matrix*> layer_parameters(EncoderLayer& l) {
  return {&l.wq, &l.wk, &l.wv, &l.wo, &l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_gain, &l.ln1_bias,
          &l.w1, &l.b1, &l.w2, &l.b2, &l.ln2_gain, &l.ln2_bias};
}

}  // namespace

std::vector<Matrix*> BehrtModel::parameters() {
  std::vector<Matrix*> out = {&token, &age, &position, &segment, &emb_ln_gain, &emb_ln_bias};
  for (auto& l : layers) {
    auto lp = layer_parameters(l);
    out.insert(out.end(), lp.begin(), lp.end());
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

std::vector<const Matrix*> BehrtModel::parameters() const {
  auto ps = const_cast<BehrtModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

BehrtModel BehrtModel::zeros_like() const {
  BehrtModel z = *this;
  for (Matrix* p : z.parameters()) p->setZero();
  return z;
}

BehrtModel init_behrt_model(const BEHRTConfig& cfg, TokenIds ids) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto ff = static_cast<Eigen::Index>(cfg.ff_dim);
  auto normal = [&](Eigen::Index r, Eigen::Index c, double sd) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
    return m;
  };
  // Encoder weights use variance 1/fan_in; embeddings and the output layer stay small.
  auto weight = [&](Eigen::Index r, Eigen::Index c) { return normal(r, c, 1.0 / std::sqrt(static_cast<double>(r))); };
  BehrtModel m;
  m.heads = cfg.heads;
  m.token = normal(ids.total(), d, 0.02);
  m.age = normal(kAgeBuckets, d, 0.02);
  m.position = normal(static_cast<Eigen::Index>(cfg.max_seq), d, 0.02);
  m.segment = normal(2, d, 0.02);
  m.emb_ln_gain = Matrix::Ones(1, d);
  m.emb_ln_bias = Matrix::Zero(1, d);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    EncoderLayer l;
    l.wq = weight(d, d);
    l.wk = weight(d, d);
    l.wv = weight(d, d);
    l.wo = weight(d, d);
    l.bq = l.bk = l.bv = l.bo = Matrix::Zero(1, d);
    l.ln1_gain = l.ln2_gain = Matrix::Ones(1, d);
    l.ln1_bias = l.ln2_bias = Matrix::Zero(1, d);
    l.w1 = weight(d, ff);
    l.b1 = Matrix::Zero(1, ff);
    l.w2 = weight(ff, d);
    l.b2 = Matrix::Zero(1, d);
    m.layers.push_back(std::move(l));
  }
  m.out_w = normal(d, ids.vocab_size, 0.02);
  m.out_b = Matrix::Zero(1, ids.vocab_size);
  return m;
}

namespace {

constexpr double kLayerNormEps = 1e-12;

struct LayerNormCache {
  Matrix normalized;
  Vector inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const auto n = x.rows(), d = x.cols();
  cache.normalized.resize(n, d);
  cache.inv_std.resize(n);
  Matrix y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[i] = inv;
    cache.normalized.row(i) = (x.row(i).array() - mean) * inv;
    y.row(i) = cache.normalized.row(i).cwiseProduct(gain.row(0)) + bias.row(0);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache, Matrix& d_gain,
                           Matrix& d_bias) {
  const auto n = dy.rows(), d = dy.cols();
  Matrix dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RowVector xhat = cache.normalized.row(i);
    d_gain.row(0) += dy.row(i).cwiseProduct(xhat);
    d_bias.row(0) += dy.row(i);
    const RowVector dxhat = dy.row(i).cwiseProduct(gain.row(0));
    const double sum = dxhat.sum();
    const double dot = dxhat.dot(xhat);
    dx.row(i) = (cache.inv_std[i] / static_cast<double>(d)) *
                (static_cast<double>(d) * dxhat.array() - sum - xhat.array() * dot).matrix();
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double top = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - top).exp();
    s.row(i) /= s.row(i).sum();
  }
}

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attention;  // per head
  Matrix heads_out;               // n x d, concatenated heads
  Matrix ln1_out;
  LayerNormCache ln1;
  Matrix ff_pre, ff_act;
  LayerNormCache ln2;
};

struct ForwardCache {
  LayerNormCache embedding;
  std::vector<LayerCache> layers;
  Matrix output;  // final hidden states
};

Matrix add_bias(Matrix x, const Matrix& b) {
  x.rowwise() += b.row(0);
  return x;
}

Matrix embed(const BehrtModel& m, const TokenSequence& seq) {
  const auto n = static_cast<Eigen::Index>(seq.tokens.size());
  Matrix x(n, m.token.cols());
  const auto max_pos = static_cast<int>(m.position.rows()) - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Token& t = seq.tokens[i];
    x.row(i) = m.token.row(t.id) + m.age.row(t.age_bucket()) + m.position.row(std::min(t.visit, max_pos)) +
               m.segment.row(t.segment());
  }
  return x;
}

ForwardCache forward(const BehrtModel& m, const TokenSequence& seq) {
  if (seq.tokens.empty()) throw Error("BEHRT: empty token sequence");
  ForwardCache cache;
  Matrix x = layer_norm(embed(m, seq), m.emb_ln_gain, m.emb_ln_bias, cache.embedding);
  const auto d = static_cast<Eigen::Index>(m.d_model());
  const auto heads = static_cast<Eigen::Index>(m.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto n = x.rows();
  for (const auto& layer : m.layers) {
    LayerCache c;
    c.input = x;
    c.q = add_bias(x * layer.wq, layer.bq);
    c.k = add_bias(x * layer.wk, layer.bk);
    c.v = add_bias(x * layer.wv, layer.bv);
    c.heads_out.resize(n, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      Matrix s = scale * (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose());
      softmax_rows(s);
      c.heads_out.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
      c.attention.push_back(std::move(s));
    }
    Matrix res1 = x + add_bias(c.heads_out * layer.wo, layer.bo);
    c.ln1_out = layer_norm(res1, layer.ln1_gain, layer.ln1_bias, c.ln1);
    c.ff_pre = add_bias(c.ln1_out * layer.w1, layer.b1);
    c.ff_act = c.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix res2 = c.ln1_out + add_bias(c.ff_act * layer.w2, layer.b2);
    x = layer_norm(res2, layer.ln2_gain, layer.ln2_bias, c.ln2);
    cache.layers.push_back(std::move(c));
  }
  cache.output = std::move(x);
  return cache;
}

/// Logits of the masked positions, one row each.
Matrix masked_logits(const BehrtModel& m, const Matrix& hidden, const std::vector<int>& positions) {
  Matrix h(static_cast<Eigen::Index>(positions.size()), hidden.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) h.row(i) = hidden.row(positions[i]);
  return add_bias(h * m.out_w, m.out_b);
}

double cross_entropy(Matrix& logits, const std::vector<int>& labels, bool to_gradient) {
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(labels.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double lse = top + std::log((logits.row(i).array() - top).exp().sum());
    loss -= logits(i, labels[i]) - lse;
    if (to_gradient) {
      logits.row(i) = (logits.row(i).array() - lse).exp() * inv;
      logits(i, labels[i]) -= inv;
    }
  }
  return loss * inv;
}

}  // namespace

Matrix behrt_encode(const BehrtModel& m, const TokenSequence& seq) { return forward(m, seq).output; }

std::vector<std::vector<Matrix>> behrt_attention(const BehrtModel& m, const TokenSequence& seq) {
  auto cache = forward(m, seq);
  std::vector<std::vector<Matrix>> out;
  for (auto& c : cache.layers) out.push_back(std::move(c.attention));
  return out;
}

double behrt_loss(const BehrtModel& m, const MaskedSequence& ms) {
  if (ms.positions.empty()) return 0.0;
  const auto cache = forward(m, ms.input);
  Matrix logits = masked_logits(m, cache.output, ms.positions);
  return cross_entropy(logits, ms.labels, false);
}

double behrt_loss_and_gradients(const BehrtModel& m, const MaskedSequence& ms, BehrtModel& g) {
  if (ms.positions.empty()) return 0.0;
  const auto cache = forward(m, ms.input);
  Matrix d_logits = masked_logits(m, cache.output, ms.positions);
  const double loss = cross_entropy(d_logits, ms.labels, true);

  const auto n = cache.output.rows();
  const auto d = static_cast<Eigen::Index>(m.d_model());
  const auto heads = static_cast<Eigen::Index>(m.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = Matrix::Zero(n, d);
  for (std::size_t i = 0; i < ms.positions.size(); ++i) {
    const RowVector h = cache.output.row(ms.positions[i]);
    g.out_w += h.transpose() * d_logits.row(i);
    dx.row(ms.positions[i]) += d_logits.row(i) * m.out_w.transpose();
  }
  g.out_b.row(0) += d_logits.colwise().sum();

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const EncoderLayer& L = m.layers[li];
    EncoderLayer& G = g.layers[li];
    const LayerCache& c = cache.layers[li];

    // Second residual block.
    Matrix d_res2 = layer_norm_backward(dx, L.ln2_gain, c.ln2, G.ln2_gain, G.ln2_bias);
    G.w2 += c.ff_act.transpose() * d_res2;
    G.b2.row(0) += d_res2.colwise().sum();
    Matrix d_pre = (d_res2 * L.w2.transpose()).cwiseProduct(c.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    G.w1 += c.ln1_out.transpose() * d_pre;
    G.b1.row(0) += d_pre.colwise().sum();
    Matrix d_ln1_out = d_res2 + d_pre * L.w1.transpose();

    // First residual block.
    Matrix d_res1 = layer_norm_backward(d_ln1_out, L.ln1_gain, c.ln1, G.ln1_gain, G.ln1_bias);
    G.wo += c.heads_out.transpose() * d_res1;
    G.bo.row(0) += d_res1.colwise().sum();
    const Matrix d_heads = d_res1 * L.wo.transpose();
    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Matrix& a = c.attention[h];
      const Matrix d_out = d_heads.middleCols(h * dh, dh);
      const Matrix d_att = d_out * c.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * d_out;
      Matrix d_scores = a.cwiseProduct(d_att);
      const Vector row_dot = d_scores.rowwise().sum();
      d_scores -= a.cwiseProduct(row_dot.replicate(1, n));
      d_scores *= scale;
      dq.middleCols(h * dh, dh) = d_scores * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = d_scores.transpose() * c.q.middleCols(h * dh, dh);
    }
    G.wq += c.input.transpose() * dq;
    G.wk += c.input.transpose() * dk;
    G.wv += c.input.transpose() * dv;
    G.bq.row(0) += dq.colwise().sum();
    G.bk.row(0) += dk.colwise().sum();
    G.bv.row(0) += dv.colwise().sum();
    dx = d_res1 + dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
  }

  dx = layer_norm_backward(dx, m.emb_ln_gain, cache.embedding, g.emb_ln_gain, g.emb_ln_bias);
  const int max_pos = static_cast<int>(m.position.rows()) - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Token& t = ms.input.tokens[i];
    g.token.row(t.id) += dx.row(i);
    g.age.row(t.age_bucket()) += dx.row(i);
    g.position.row(std::min(t.visit, max_pos)) += dx.row(i);
    g.segment.row(t.segment()) += dx.row(i);
  }
  return loss;
}

double behrt_corpus_loss(const BehrtModel& m, const BehrtSequenceSet& data, double mask_rate, std::uint64_t seed) {
  Rng rng(seed);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& seq : data.sequences) {
    auto ms = mask_tokens(seq, mask_rate, data.ids(), rng);
    if (ms.positions.empty()) continue;
    total += behrt_loss(m, ms);
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

BEHRTResult train_behrt(const BehrtSequenceSet& data, const BEHRTConfig& cfg, const BehrtEpochHook& on_epoch) {
  cfg.validate();
  if (data.sequences.empty()) throw Error("train_behrt: no sequences");
  if (data.vocabulary.empty()) throw Error("train_behrt: empty vocabulary");
  for (const auto& s : data.sequences) {
    if (s.tokens.size() > cfg.max_seq)
      throw Error("train_behrt: sequence longer than max_seq; rebuild sequences with the same max_seq");
  }
  const TokenIds ids = data.ids();
  BehrtModel m = init_behrt_model(cfg, ids);
  BehrtModel grads = m.zeros_like();
  auto params = m.parameters();
  auto grad_params = grads.parameters();

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(data.sequences.size());
  std::iota(order.begin(), order.end(), 0);
  EpochLosses losses;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::size_t in_batch = 0;
      for (std::size_t i = start; i < end; ++i) {
        auto ms = mask_tokens(data.sequences[order[i]], cfg.mask_rate, ids, rng);
        if (ms.positions.empty()) continue;
        const double loss = behrt_loss_and_gradients(m, ms, grads);
        check_divergence(loss, epoch, step);
        total += loss;
        ++counted;
        ++in_batch;
      }
      if (in_batch > 0) {
        double rate = cfg.lr / static_cast<double>(in_batch);
        if (cfg.clip_norm > 0.0) {
          double sq = 0.0;
          for (const Matrix* g : grad_params) sq += g->squaredNorm();
          const double norm = std::sqrt(sq) / static_cast<double>(in_batch);
          if (norm > cfg.clip_norm) rate *= cfg.clip_norm / norm;
        }
        for (std::size_t p = 0; p < params.size(); ++p) {
          *params[p] -= rate * *grad_params[p];
          grad_params[p]->setZero();
        }
      }
      ++step;
    }
    losses.push_back(counted ? total / static_cast<double>(counted) : 0.0);
    if (on_epoch) on_epoch(epoch + 1, m);
  }
  Matrix codes = m.token.topRows(ids.vocab_size);
  EmbeddingSet emb(data.vocabulary, std::move(codes), EmbeddingMeta{"BEHRT", cfg.seed, data.corpus_fingerprint});
  return BEHRTResult{std::move(emb), std::move(losses), std::move(m)};
}

}  // namespace embench
