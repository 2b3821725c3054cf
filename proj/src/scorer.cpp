#include "datalabel/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace datalabel {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size < 1 || epochs < 0 || !(clip_norm > 0.0) ||
      unlabeled_per_epoch < 0) {
    throw Error(ErrorCode::kConfig, "invalid training configuration");
  }
}

template <typename Scalar>
TokenList reconstruct(const Seq2SeqModel<Scalar>& model, const LinearizedData& d) {
  const auto& vocab = model.vocabulary();
  const std::vector<int> data = vocab.encode(d.tokens);
  const std::vector<int> text = model.greedy_decode(Direction::kToText, data);
  return vocab.decode(model.greedy_decode(Direction::kToData, text));
}

template <typename Scalar>
UncertaintyScore uncertainty(const Seq2SeqModel<Scalar>& model, const LinearizedData& d) {
  const std::vector<int> data = model.vocabulary().encode(d.tokens);
  const std::vector<int> text = model.greedy_decode(Direction::kToText, data);
  const double loss = static_cast<double>(model.sequence_loss(Direction::kToData, text, data));
  if (!std::isfinite(loss)) throw Error(ErrorCode::kNumeric, "non-finite uncertainty score");
  return {d.record_id, std::max(loss, 0.0), model.version()};
}

template <typename Scalar>
ScoreTable score_all(const Seq2SeqModel<Scalar>& model, std::span<const LinearizedData> data) {
  ScoreTable out;
  for (const auto& d : data) out.emplace(d.record_id, uncertainty(model, d));
  return out;
}

template <typename Scalar>
Seq2SeqModel<Scalar> extend_vocabulary(const Seq2SeqModel<Scalar>& model,
                                       std::span<const LabeledExample> labeled, std::uint64_t seed) {
  ModelVocabulary vocab = model.vocabulary();
  const int before = vocab.size();
  for (const auto& ex : labeled) {
    for (const auto& t : ex.label.tokens) vocab.add(t);
    for (const auto& t : ex.data.tokens) vocab.add(t);
  }
  if (vocab.size() == before) return model;
  return model.with_vocabulary(vocab, seed);
}

template <typename Scalar>
Scalar batch_loss(const Seq2SeqModel<Scalar>& model, std::span<const TrainingExample> batch,
                  typename Seq2SeqModel<Scalar>::Vector* grad) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (grad) grad->setZero(model.parameters().size());
  const Scalar weight = Scalar(1) / static_cast<Scalar>(batch.size());
  Scalar total = 0;
  for (const auto& ex : batch) total += model.sequence_loss(ex.direction, ex.source, ex.target, grad, weight);
  return total * weight;
}

template <typename Scalar>
TrainResult<Scalar> train_round_trip(const Seq2SeqModel<Scalar>& model,
                                     std::span<const LinearizedData> unlabeled,
                                     std::span<const LabeledExample> labeled, const TrainConfig& cfg,
                                     const ProgressCallback& progress) {
  cfg.validate();
  if (unlabeled.empty() && labeled.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "nothing to train on");
  }
  if (cfg.epochs == 0) {
    TrainResult<Scalar> unchanged{model, {}};
    unchanged.model.set_version(model.version() + 1);
    if (progress) progress(1.0);
    return unchanged;
  }
  TrainResult<Scalar> result{extend_vocabulary(model, labeled, cfg.seed), {}};
  Seq2SeqModel<Scalar>& m = result.model;
  const auto& vocab = m.vocabulary();

  std::vector<TrainingExample> supervised;
  for (const auto& ex : labeled) {
    const auto data = vocab.encode(ex.data.tokens);
    const auto text = vocab.encode(ex.label.tokens);
    supervised.push_back({Direction::kToText, data, text});
    supervised.push_back({Direction::kToData, text, data});
  }
  std::vector<std::vector<int>> pool;
  pool.reserve(unlabeled.size());
  for (const auto& d : unlabeled) pool.push_back(vocab.encode(d.tokens));

  const std::size_t cycle_count =
      cfg.unlabeled_per_epoch == 0 ? pool.size()
                                   : std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.unlabeled_per_epoch));
  const std::size_t per_epoch = supervised.size() + cycle_count;
  const double total_work = static_cast<double>(per_epoch) * cfg.epochs;
  double done = 0;

  Rng rng(mix_seed(cfg.seed, 0x7A1));
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
  };

  using Vector = typename Seq2SeqModel<Scalar>::Vector;
  Vector grad(m.parameters().size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // (kind, index): kind 0 = supervised example, 1 = cycle on pool entry.
    std::vector<std::pair<int, std::size_t>> order;
    for (std::size_t i = 0; i < supervised.size(); ++i) order.emplace_back(0, i);
    std::vector<std::size_t> picks(pool.size());
    std::iota(picks.begin(), picks.end(), 0);
    shuffle(picks);
    for (std::size_t i = 0; i < cycle_count; ++i) order.emplace_back(1, picks[i]);
    shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainingExample> batch;
      for (std::size_t i = start; i < end; ++i) {
        const auto [kind, idx] = order[i];
        if (kind == 0) {
          batch.push_back(supervised[idx]);
        } else {
          // Gradient is stopped at the intermediate text decode.
          auto text = m.greedy_decode(Direction::kToText, pool[idx]);
          batch.push_back({Direction::kToData, std::move(text), pool[idx]});
        }
      }
      const double loss = static_cast<double>(batch_loss<Scalar>(m, batch, &grad));
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Error(ErrorCode::kNumeric, "non-finite loss in epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      const double norm = static_cast<double>(grad.norm());
      double scale = cfg.learning_rate;
      if (norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
      m.parameters() -= static_cast<Scalar>(scale) * grad;
      done += static_cast<double>(batch.size());
      if (progress) progress(total_work > 0 ? done / total_work : 1.0);
    }
    result.epoch_losses.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
  }
  m.set_version(model.version() + 1);
  if (progress) progress(1.0);
  return result;
}

double gradient_check(const Seq2SeqModel<double>& model, std::span<const TrainingExample> batch,
                      int samples, std::uint64_t seed, double step) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "empty sample");
  Eigen::VectorXd analytic;
  batch_loss<double>(model, batch, &analytic);

  Seq2SeqModel<double> probe = model;
  Rng rng(mix_seed(seed, 0x6C));
  const auto n = static_cast<std::uint64_t>(model.parameters().size());
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto i = static_cast<Eigen::Index>(uniform_index(rng, n));
    const double original = probe.parameters()(i);
    probe.parameters()(i) = original + step;
    const double plus = batch_loss<double>(probe, batch, nullptr);
    probe.parameters()(i) = original - step;
    const double minus = batch_loss<double>(probe, batch, nullptr);
    probe.parameters()(i) = original;
    const double numeric = (plus - minus) / (2.0 * step);
    const double a = analytic(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

#define DATALABEL_SCORER_INSTANTIATE(S)                                                             \
  template TokenList reconstruct(const Seq2SeqModel<S>&, const LinearizedData&);                    \
  template UncertaintyScore uncertainty(const Seq2SeqModel<S>&, const LinearizedData&);             \
  template ScoreTable score_all(const Seq2SeqModel<S>&, std::span<const LinearizedData>);           \
  template Seq2SeqModel<S> extend_vocabulary(const Seq2SeqModel<S>&, std::span<const LabeledExample>, \
                                             std::uint64_t);                                        \
  template S batch_loss(const Seq2SeqModel<S>&, std::span<const TrainingExample>,                   \
                        Seq2SeqModel<S>::Vector*);                                                  \
  template TrainResult<S> train_round_trip(const Seq2SeqModel<S>&, std::span<const LinearizedData>, \
                                           std::span<const LabeledExample>, const TrainConfig&,     \
                                           const ProgressCallback&);

DATALABEL_SCORER_INSTANTIATE(float)
DATALABEL_SCORER_INSTANTIATE(double)

}  // namespace datalabel
