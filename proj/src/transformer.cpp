#include "datalabel/transformer.hpp"

#include <algorithm>

namespace datalabel {

ModelVocabulary::ModelVocabulary()
    : tokens_{"<pad>", "<bos>", "<eos>", "<to_text>", "<to_data>"} {
  for (int i = 0; i < kSpecialCount; ++i) ids_.emplace(tokens_[static_cast<std::size_t>(i)], i);
}

std::optional<int> ModelVocabulary::find(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int ModelVocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::vector<int> ModelVocabulary::encode(const TokenList& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = ids_.find(t);
    if (it == ids_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown token '" + t + "'");
    ids.push_back(it->second);
  }
  return ids;
}

TokenList ModelVocabulary::decode(std::span<const int> ids) const {
  TokenList out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token(id));
  return out;
}

void ModelDims::validate() const {
  if (model_dim < 1 || layers < 0 || heads < 1 || ff_dim < 1 || max_len < 3) {
    throw Error(ErrorCode::kConfig, "model dimensions must be positive (max_len >= 3)");
  }
  if (model_dim % heads != 0) throw Error(ErrorCode::kConfig, "model_dim must be divisible by heads");
}

ModelLayout ModelLayout::build(const ModelDims& dims, int vocab_size) {
  ModelLayout layout;
  Eigen::Index next = 0;
  auto block = [&](Eigen::Index rows, Eigen::Index cols) {
    Block b{next, rows, cols};
    next += rows * cols;
    return b;
  };
  const Eigen::Index d = dims.model_dim;
  auto linear = [&](Eigen::Index in, Eigen::Index out) { return LinearBlocks{block(in, out), block(out, 1)}; };
  auto norm = [&]() { return NormBlocks{block(d, 1), block(d, 1)}; };
  auto attention = [&]() { return AttentionBlocks{linear(d, d), linear(d, d), linear(d, d), linear(d, d)}; };
  auto feed_forward = [&]() { return FeedForwardBlocks{linear(d, dims.ff_dim), linear(dims.ff_dim, d)}; };

  layout.embedding = block(vocab_size, d);
  for (int l = 0; l < dims.layers; ++l) {
    EncoderLayerBlocks e;
    e.norm1 = norm();
    e.attention = attention();
    e.norm2 = norm();
    e.feed_forward = feed_forward();
    layout.encoder.push_back(e);
  }
  layout.encoder_norm = norm();
  for (int l = 0; l < dims.layers; ++l) {
    DecoderLayerBlocks dl;
    dl.norm1 = norm();
    dl.self_attention = attention();
    dl.norm2 = norm();
    dl.cross_attention = attention();
    dl.norm3 = norm();
    dl.feed_forward = feed_forward();
    layout.decoder.push_back(dl);
  }
  layout.decoder_norm = norm();
  layout.output = linear(d, vocab_size);
  layout.total = next;
  return layout;
}

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

constexpr double kNormEpsilon = 1e-5;

// Parameter and gradient views over the flat vectors for one pass.
template <typename Scalar>
class Pass {
 public:
  using ConstMap = Eigen::Map<const Mat<Scalar>>;
  using GradMap = Eigen::Map<Mat<Scalar>>;

  Pass(const Vec<Scalar>& params, Vec<Scalar>* grad, Scalar weight)
      : params_(params), grad_(grad), weight_(weight) {}

  ConstMap p(const Block& b) const { return ConstMap(params_.data() + b.offset, b.rows, b.cols); }
  GradMap g(const Block& b) const { return GradMap(grad_->data() + b.offset, b.rows, b.cols); }
  bool training() const { return grad_ != nullptr; }
  Scalar weight() const { return weight_; }

  // ---- linear -----------------------------------------------------------
  Mat<Scalar> linear(const LinearBlocks& lb, const Mat<Scalar>& x) const {
    Mat<Scalar> y = x * p(lb.weight);
    y.rowwise() += p(lb.bias).col(0).transpose();
    return y;
  }
  Mat<Scalar> linear_backward(const LinearBlocks& lb, const Mat<Scalar>& x, const Mat<Scalar>& dy) const {
    g(lb.weight).noalias() += weight_ * (x.transpose() * dy);
    g(lb.bias).col(0) += weight_ * dy.colwise().sum().transpose();
    return dy * p(lb.weight).transpose();
  }

  // ---- layer norm (row-wise) -------------------------------------------
  struct NormCache {
    Mat<Scalar> xhat;
    Vec<Scalar> rstd;
  };
  Mat<Scalar> norm(const NormBlocks& nb, const Mat<Scalar>& x, NormCache* cache) const {
    const Eigen::Index cols = x.cols();
    Vec<Scalar> mean = x.rowwise().mean();
    Mat<Scalar> centered = x.colwise() - mean;
    Vec<Scalar> var = centered.rowwise().squaredNorm() / static_cast<Scalar>(cols);
    Vec<Scalar> rstd = (var.array() + static_cast<Scalar>(kNormEpsilon)).rsqrt().matrix();
    Mat<Scalar> xhat = centered.array().colwise() * rstd.array();
    Mat<Scalar> y = xhat.array().rowwise() * p(nb.gamma).col(0).transpose().array();
    y.rowwise() += p(nb.beta).col(0).transpose();
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->rstd = std::move(rstd);
    }
    return y;
  }
  Mat<Scalar> norm_backward(const NormBlocks& nb, const NormCache& c, const Mat<Scalar>& dy) const {
    g(nb.gamma).col(0) += weight_ * (dy.array() * c.xhat.array()).colwise().sum().transpose().matrix();
    g(nb.beta).col(0) += weight_ * dy.colwise().sum().transpose();
    Mat<Scalar> dxhat = dy.array().rowwise() * p(nb.gamma).col(0).transpose().array();
    const Scalar inv_cols = Scalar(1) / static_cast<Scalar>(dy.cols());
    Vec<Scalar> mean_dxhat = dxhat.rowwise().sum() * inv_cols;
    Vec<Scalar> mean_dxhat_xhat = (dxhat.array() * c.xhat.array()).rowwise().sum().matrix() * inv_cols;
    Mat<Scalar> dx = dxhat;
    dx.colwise() -= mean_dxhat;
    dx -= (c.xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
    return dx.array().colwise() * c.rstd.array();
  }

  // ---- multi-head attention ----------------------------------------------
  struct AttentionCache {
    Mat<Scalar> xq, xkv, q, k, v, o;
    std::vector<Mat<Scalar>> probs;
  };
  Mat<Scalar> attention(const AttentionBlocks& ab, const Mat<Scalar>& xq, const Mat<Scalar>& xkv,
                        int heads, bool causal, AttentionCache* cache) const {
    Mat<Scalar> q = linear(ab.query, xq);
    Mat<Scalar> k = linear(ab.key, xkv);
    Mat<Scalar> v = linear(ab.value, xkv);
    const Eigen::Index dh = q.cols() / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Mat<Scalar> o(q.rows(), q.cols());
    if (cache) cache->probs.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Mat<Scalar> s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
      softmax_rows(s, causal);
      o.middleCols(h * dh, dh).noalias() = s * v.middleCols(h * dh, dh);
      if (cache) cache->probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    Mat<Scalar> y = linear(ab.output, o);
    if (cache) {
      cache->xq = xq;
      cache->xkv = xkv;
      cache->q = std::move(q);
      cache->k = std::move(k);
      cache->v = std::move(v);
      cache->o = std::move(o);
    }
    return y;
  }
  // Returns (dxq, dxkv).
  std::pair<Mat<Scalar>, Mat<Scalar>> attention_backward(const AttentionBlocks& ab, const AttentionCache& c,
                                                         int heads, const Mat<Scalar>& dy) const {
    Mat<Scalar> d_o = linear_backward(ab.output, c.o, dy);
    const Eigen::Index dh = c.q.cols() / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Mat<Scalar> dq(c.q.rows(), c.q.cols());
    Mat<Scalar> dk(c.k.rows(), c.k.cols());
    Mat<Scalar> dv(c.v.rows(), c.v.cols());
    for (int h = 0; h < heads; ++h) {
      const Mat<Scalar>& prob = c.probs[static_cast<std::size_t>(h)];
      const auto doh = d_o.middleCols(h * dh, dh);
      Mat<Scalar> dprob = doh * c.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh).noalias() = prob.transpose() * doh;
      Vec<Scalar> row_dot = (dprob.array() * prob.array()).rowwise().sum().matrix();
      Mat<Scalar> ds = (prob.array() * (dprob.colwise() - row_dot).array()).matrix() * scale;
      dq.middleCols(h * dh, dh).noalias() = ds * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * c.q.middleCols(h * dh, dh);
    }
    Mat<Scalar> dxq = linear_backward(ab.query, c.xq, dq);
    Mat<Scalar> dxkv = linear_backward(ab.key, c.xkv, dk);
    dxkv += linear_backward(ab.value, c.xkv, dv);
    return {std::move(dxq), std::move(dxkv)};
  }

  // ---- position-wise feed-forward with tanh-GELU ----------------------
  struct FeedForwardCache {
    Mat<Scalar> x, pre, act;
  };
  Mat<Scalar> feed_forward(const FeedForwardBlocks& fb, const Mat<Scalar>& x, FeedForwardCache* cache) const {
    Mat<Scalar> pre = linear(fb.in, x);
    Mat<Scalar> act = pre.unaryExpr([](Scalar u) { return gelu(u); });
    Mat<Scalar> y = linear(fb.out, act);
    if (cache) {
      cache->x = x;
      cache->pre = std::move(pre);
      cache->act = std::move(act);
    }
    return y;
  }
  Mat<Scalar> feed_forward_backward(const FeedForwardBlocks& fb, const FeedForwardCache& c,
                                    const Mat<Scalar>& dy) const {
    Mat<Scalar> dact = linear_backward(fb.out, c.act, dy);
    Mat<Scalar> dpre = dact.cwiseProduct(c.pre.unaryExpr([](Scalar u) { return gelu_grad(u); }));
    return linear_backward(fb.in, c.x, dpre);
  }

  static Scalar gelu(Scalar u) {
    const Scalar c = static_cast<Scalar>(0.7978845608028654);
    return Scalar(0.5) * u * (Scalar(1) + std::tanh(c * (u + Scalar(0.044715) * u * u * u)));
  }
  static Scalar gelu_grad(Scalar u) {
    const Scalar c = static_cast<Scalar>(0.7978845608028654);
    const Scalar t = std::tanh(c * (u + Scalar(0.044715) * u * u * u));
    return Scalar(0.5) * (Scalar(1) + t) +
           Scalar(0.5) * u * (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3 * 0.044715) * u * u);
  }

  static void softmax_rows(Mat<Scalar>& s, bool causal) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const Eigen::Index visible = causal ? std::min<Eigen::Index>(i + 1, s.cols()) : s.cols();
      auto row = s.row(i).head(visible);
      const Scalar m = row.maxCoeff();
      row = (row.array() - m).exp().matrix();
      row /= row.sum();
      if (visible < s.cols()) s.row(i).tail(s.cols() - visible).setZero();
    }
  }

 private:
  const Vec<Scalar>& params_;
  Vec<Scalar>* grad_;
  Scalar weight_;
};

template <typename Scalar>
struct EncoderLayerCache {
  typename Pass<Scalar>::NormCache norm1, norm2;
  typename Pass<Scalar>::AttentionCache attention;
  typename Pass<Scalar>::FeedForwardCache feed_forward;
};

template <typename Scalar>
struct DecoderLayerCache {
  typename Pass<Scalar>::NormCache norm1, norm2, norm3;
  typename Pass<Scalar>::AttentionCache self_attention, cross_attention;
  typename Pass<Scalar>::FeedForwardCache feed_forward;
};

}  // namespace

template <typename Scalar>
Seq2SeqModel<Scalar>::Seq2SeqModel(ModelVocabulary vocab, ModelDims dims, std::uint64_t seed)
    : vocab_(std::move(vocab)), dims_(dims) {
  dims_.validate();
  layout_ = ModelLayout::build(dims_, vocab_.size());
  params_ = Vector::Zero(layout_.total);
  init_positional();
  initialize(seed);
}

template <typename Scalar>
Seq2SeqModel<Scalar>::Seq2SeqModel(ModelVocabulary vocab, ModelDims dims, Vector parameters,
                                   std::uint64_t version)
    : vocab_(std::move(vocab)), dims_(dims), params_(std::move(parameters)), version_(version) {
  dims_.validate();
  layout_ = ModelLayout::build(dims_, vocab_.size());
  if (params_.size() != layout_.total) {
    throw Error(ErrorCode::kInvalidArgument, "parameter count does not match model layout");
  }
  init_positional();
}

template <typename Scalar>
void Seq2SeqModel<Scalar>::init_positional() {
  positional_.resize(dims_.max_len, dims_.model_dim);
  for (int pos = 0; pos < dims_.max_len; ++pos) {
    for (int i = 0; i < dims_.model_dim; ++i) {
      const double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / dims_.model_dim);
      positional_(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
}

template <typename Scalar>
void Seq2SeqModel<Scalar>::initialize(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5EED));
  auto fill = [&](const Block& b, double stddev) {
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      params_(b.offset + i) = static_cast<Scalar>(stddev * standard_normal(rng));
    }
  };
  auto ones = [&](const Block& b) { params_.segment(b.offset, b.size()).setOnes(); };
  auto linear = [&](const LinearBlocks& lb) { fill(lb.weight, 1.0 / std::sqrt(static_cast<double>(lb.weight.rows))); };
  auto attention = [&](const AttentionBlocks& ab) {
    linear(ab.query);
    linear(ab.key);
    linear(ab.value);
    linear(ab.output);
  };

  fill(layout_.embedding, 0.5);
  for (const auto& e : layout_.encoder) {
    ones(e.norm1.gamma);
    attention(e.attention);
    ones(e.norm2.gamma);
    linear(e.feed_forward.in);
    linear(e.feed_forward.out);
  }
  ones(layout_.encoder_norm.gamma);
  for (const auto& d : layout_.decoder) {
    ones(d.norm1.gamma);
    attention(d.self_attention);
    ones(d.norm2.gamma);
    attention(d.cross_attention);
    ones(d.norm3.gamma);
    linear(d.feed_forward.in);
    linear(d.feed_forward.out);
  }
  ones(layout_.decoder_norm.gamma);
  linear(layout_.output);
}

template <typename Scalar>
Seq2SeqModel<Scalar> Seq2SeqModel<Scalar>::with_vocabulary(const ModelVocabulary& extended,
                                                           std::uint64_t seed) const {
  const int old_v = vocab_.size();
  for (int i = 0; i < old_v; ++i) {
    if (i >= extended.size() || extended.token(i) != vocab_.token(i)) {
      throw Error(ErrorCode::kInvalidArgument, "extended vocabulary must keep existing ids");
    }
  }
  Seq2SeqModel out;
  out.vocab_ = extended;
  out.dims_ = dims_;
  out.layout_ = ModelLayout::build(dims_, extended.size());
  out.params_ = Vector::Zero(out.layout_.total);
  out.positional_ = positional_;
  out.version_ = version_;

  // Everything between the embedding and the output projection is
  // vocabulary-independent and laid out identically.
  const Eigen::Index body_begin = layout_.embedding.offset + layout_.embedding.size();
  const Eigen::Index body_size = layout_.output.weight.offset - body_begin;
  const Eigen::Index new_body_begin = out.layout_.embedding.offset + out.layout_.embedding.size();
  out.params_.segment(new_body_begin, body_size) = params_.segment(body_begin, body_size);

  using ConstMap = Eigen::Map<const Matrix>;
  using MutMap = Eigen::Map<Matrix>;
  const int d = dims_.model_dim;
  ConstMap old_emb(params_.data() + layout_.embedding.offset, old_v, d);
  MutMap new_emb(out.params_.data() + out.layout_.embedding.offset, extended.size(), d);
  new_emb.topRows(old_v) = old_emb;
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(extended.size())));
  for (int r = old_v; r < extended.size(); ++r) {
    for (int c = 0; c < d; ++c) new_emb(r, c) = static_cast<Scalar>(0.5 * standard_normal(rng));
  }
  ConstMap old_w(params_.data() + layout_.output.weight.offset, d, old_v);
  MutMap new_w(out.params_.data() + out.layout_.output.weight.offset, d, extended.size());
  new_w.leftCols(old_v) = old_w;
  out.params_.segment(out.layout_.output.bias.offset, old_v) =
      params_.segment(layout_.output.bias.offset, old_v);
  return out;
}

template <typename Scalar>
std::vector<int> Seq2SeqModel<Scalar>::encoder_input(Direction direction,
                                                     std::span<const int> source) const {
  const std::size_t keep = std::min<std::size_t>(source.size(), static_cast<std::size_t>(dims_.max_len - 2));
  std::vector<int> ids;
  ids.reserve(keep + 2);
  ids.push_back(direction_token(direction));
  ids.insert(ids.end(), source.begin(), source.begin() + static_cast<std::ptrdiff_t>(keep));
  ids.push_back(kEos);
  for (int id : ids) {
    if (id < 0 || id >= vocab_.size()) throw Error(ErrorCode::kInvalidArgument, "token id out of range");
  }
  return ids;
}

template <typename Scalar>
Scalar Seq2SeqModel<Scalar>::sequence_loss(Direction direction, std::span<const int> source,
                                           std::span<const int> target, Vector* grad,
                                           Scalar weight) const {
  Pass<Scalar> pass(params_, grad, weight);
  const int heads = dims_.heads;
  const std::vector<int> src = encoder_input(direction, source);

  const std::size_t keep = std::min<std::size_t>(target.size(), static_cast<std::size_t>(dims_.max_len - 1));
  std::vector<int> dec_in{kBos};
  std::vector<int> dec_out;
  for (std::size_t i = 0; i < keep; ++i) {
    const int id = target[i];
    if (id < 0 || id >= vocab_.size()) throw Error(ErrorCode::kInvalidArgument, "token id out of range");
    dec_in.push_back(id);
    dec_out.push_back(id);
  }
  dec_out.push_back(kEos);

  const auto embedding = pass.p(layout_.embedding);
  auto embed = [&](const std::vector<int>& ids) {
    Matrix x(static_cast<Eigen::Index>(ids.size()), dims_.model_dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = embedding.row(ids[i]) + positional_.row(static_cast<Eigen::Index>(i));
    }
    return x;
  };

  const bool training = grad != nullptr;
  // Encoder.
  std::vector<EncoderLayerCache<Scalar>> enc_cache(training ? layout_.encoder.size() : 0);
  Matrix x = embed(src);
  for (std::size_t l = 0; l < layout_.encoder.size(); ++l) {
    const auto& lb = layout_.encoder[l];
    auto* c = training ? &enc_cache[l] : nullptr;
    Matrix n1 = pass.norm(lb.norm1, x, c ? &c->norm1 : nullptr);
    x += pass.attention(lb.attention, n1, n1, heads, false, c ? &c->attention : nullptr);
    Matrix n2 = pass.norm(lb.norm2, x, c ? &c->norm2 : nullptr);
    x += pass.feed_forward(lb.feed_forward, n2, c ? &c->feed_forward : nullptr);
  }
  typename Pass<Scalar>::NormCache enc_norm_cache;
  const Matrix memory = pass.norm(layout_.encoder_norm, x, training ? &enc_norm_cache : nullptr);

  // Decoder.
  std::vector<DecoderLayerCache<Scalar>> dec_cache(training ? layout_.decoder.size() : 0);
  Matrix y = embed(dec_in);
  for (std::size_t l = 0; l < layout_.decoder.size(); ++l) {
    const auto& lb = layout_.decoder[l];
    auto* c = training ? &dec_cache[l] : nullptr;
    Matrix n1 = pass.norm(lb.norm1, y, c ? &c->norm1 : nullptr);
    y += pass.attention(lb.self_attention, n1, n1, heads, true, c ? &c->self_attention : nullptr);
    Matrix n2 = pass.norm(lb.norm2, y, c ? &c->norm2 : nullptr);
    y += pass.attention(lb.cross_attention, n2, memory, heads, false, c ? &c->cross_attention : nullptr);
    Matrix n3 = pass.norm(lb.norm3, y, c ? &c->norm3 : nullptr);
    y += pass.feed_forward(lb.feed_forward, n3, c ? &c->feed_forward : nullptr);
  }
  typename Pass<Scalar>::NormCache dec_norm_cache;
  const Matrix z = pass.norm(layout_.decoder_norm, y, training ? &dec_norm_cache : nullptr);
  Matrix logits = pass.linear(layout_.output, z);

  // Cross-entropy; logits become d(loss)/d(logits) in place.
  const Eigen::Index steps = logits.rows();
  const Scalar inv_steps = Scalar(1) / static_cast<Scalar>(steps);
  double loss = 0.0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto row = logits.row(t);
    const Scalar m = row.maxCoeff();
    row = (row.array() - m).exp().matrix();
    const Scalar total = row.sum();
    const int gold = dec_out[static_cast<std::size_t>(t)];
    loss -= std::log(static_cast<double>(row(gold)) / static_cast<double>(total));
    if (training) {
      row /= total;
      row(gold) -= Scalar(1);
      row *= inv_steps;
    }
  }
  loss /= static_cast<double>(steps);
  if (!training) return static_cast<Scalar>(loss);

  // Backward.
  Matrix dz = pass.linear_backward(layout_.output, z, logits);
  Matrix dy = pass.norm_backward(layout_.decoder_norm, dec_norm_cache, dz);
  Matrix dmemory = Matrix::Zero(memory.rows(), memory.cols());
  for (std::size_t l = layout_.decoder.size(); l-- > 0;) {
    const auto& lb = layout_.decoder[l];
    const auto& c = dec_cache[l];
    Matrix dn3 = pass.feed_forward_backward(lb.feed_forward, c.feed_forward, dy);
    dy += pass.norm_backward(lb.norm3, c.norm3, dn3);
    auto [dn2, dmem] = pass.attention_backward(lb.cross_attention, c.cross_attention, heads, dy);
    dmemory += dmem;
    dy += pass.norm_backward(lb.norm2, c.norm2, dn2);
    auto [dq, dkv] = pass.attention_backward(lb.self_attention, c.self_attention, heads, dy);
    dq += dkv;
    dy += pass.norm_backward(lb.norm1, c.norm1, dq);
  }
  Matrix dx = pass.norm_backward(layout_.encoder_norm, enc_norm_cache, dmemory);
  for (std::size_t l = layout_.encoder.size(); l-- > 0;) {
    const auto& lb = layout_.encoder[l];
    const auto& c = enc_cache[l];
    Matrix dn2 = pass.feed_forward_backward(lb.feed_forward, c.feed_forward, dx);
    dx += pass.norm_backward(lb.norm2, c.norm2, dn2);
    auto [dq, dkv] = pass.attention_backward(lb.attention, c.attention, heads, dx);
    dq += dkv;
    dx += pass.norm_backward(lb.norm1, c.norm1, dq);
  }

  auto demb = pass.g(layout_.embedding);
  for (std::size_t i = 0; i < dec_in.size(); ++i) demb.row(dec_in[i]) += weight * dy.row(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < src.size(); ++i) demb.row(src[i]) += weight * dx.row(static_cast<Eigen::Index>(i));
  return static_cast<Scalar>(loss);
}

template <typename Scalar>
std::vector<int> Seq2SeqModel<Scalar>::greedy_decode(Direction direction,
                                                     std::span<const int> source) const {
  Pass<Scalar> pass(params_, nullptr, Scalar(1));
  const int heads = dims_.heads;
  const int d = dims_.model_dim;
  const Eigen::Index dh = d / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const std::vector<int> src = encoder_input(direction, source);
  const auto embedding = pass.p(layout_.embedding);

  Matrix x(static_cast<Eigen::Index>(src.size()), d);
  for (std::size_t i = 0; i < src.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = embedding.row(src[i]) + positional_.row(static_cast<Eigen::Index>(i));
  }
  for (const auto& lb : layout_.encoder) {
    Matrix n1 = pass.norm(lb.norm1, x, nullptr);
    x += pass.attention(lb.attention, n1, n1, heads, false, nullptr);
    Matrix n2 = pass.norm(lb.norm2, x, nullptr);
    x += pass.feed_forward(lb.feed_forward, n2, nullptr);
  }
  const Matrix memory = pass.norm(layout_.encoder_norm, x, nullptr);

  const std::size_t layers = layout_.decoder.size();
  const int cap = dims_.max_len - 1;
  std::vector<Matrix> cross_k(layers), cross_v(layers), self_k(layers), self_v(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    cross_k[l] = pass.linear(layout_.decoder[l].cross_attention.key, memory);
    cross_v[l] = pass.linear(layout_.decoder[l].cross_attention.value, memory);
    self_k[l].resize(cap + 1, d);
    self_v[l].resize(cap + 1, d);
  }

  // Attention of one query row over the first `len` rows of (keys, values).
  auto attend = [&](const Matrix& q, const Matrix& keys, const Matrix& values, Eigen::Index len) {
    Matrix o(1, d);
    for (int h = 0; h < heads; ++h) {
      Matrix s = (q.middleCols(h * dh, dh) * keys.topRows(len).middleCols(h * dh, dh).transpose()) * scale;
      Pass<Scalar>::softmax_rows(s, false);
      o.middleCols(h * dh, dh).noalias() = s * values.topRows(len).middleCols(h * dh, dh);
    }
    return o;
  };

  std::vector<int> out;
  int token = kBos;
  for (int pos = 0; pos < cap; ++pos) {
    Matrix y = embedding.row(token) + positional_.row(pos);
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& lb = layout_.decoder[l];
      Matrix n1 = pass.norm(lb.norm1, y, nullptr);
      self_k[l].row(pos) = pass.linear(lb.self_attention.key, n1);
      self_v[l].row(pos) = pass.linear(lb.self_attention.value, n1);
      Matrix q = pass.linear(lb.self_attention.query, n1);
      y += pass.linear(lb.self_attention.output, attend(q, self_k[l], self_v[l], pos + 1));
      Matrix n2 = pass.norm(lb.norm2, y, nullptr);
      Matrix q2 = pass.linear(lb.cross_attention.query, n2);
      y += pass.linear(lb.cross_attention.output, attend(q2, cross_k[l], cross_v[l], cross_k[l].rows()));
      Matrix n3 = pass.norm(lb.norm3, y, nullptr);
      y += pass.feed_forward(lb.feed_forward, n3, nullptr);
    }
    const Matrix z = pass.norm(layout_.decoder_norm, y, nullptr);
    const Matrix logits = pass.linear(layout_.output, z);
    int best = kEos;
    for (int v = kSpecialCount; v < vocab_.size(); ++v) {
      if (logits(0, v) > logits(0, best)) best = v;
    }
    if (best == kEos) break;
    out.push_back(best);
    token = best;
  }
  return out;
}

template class Seq2SeqModel<float>;
template class Seq2SeqModel<double>;

}  // namespace datalabel
