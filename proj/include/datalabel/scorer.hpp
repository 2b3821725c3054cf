#pragma once

// Round-trip (data -> text -> data) training and reconstruction-loss
// uncertainty on top of Seq2SeqModel.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "datalabel/corpus.hpp"
#include "datalabel/transformer.hpp"

namespace datalabel {

struct TrainConfig {
  double learning_rate = 0.05;
  int batch_size = 8;
  int epochs = 1;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  /// Unlabeled records drawn (without replacement) per epoch for the cycle
  /// loss; 0 uses the whole pool.
  int unlabeled_per_epoch = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct UncertaintyScore {
  RecordId record_id = 0;
  double score = 0.0;
  std::uint64_t model_version = 0;

  bool operator==(const UncertaintyScore&) const = default;
};

using ScoreTable = std::map<RecordId, UncertaintyScore>;

/// One teacher-forced sequence pair in model ids.
struct TrainingExample {
  Direction direction = Direction::kToText;
  std::vector<int> source;
  std::vector<int> target;
};

struct LabeledExample {
  LinearizedData data;
  TextLabel label;
};

template <typename Scalar>
struct TrainResult {
  Seq2SeqModel<Scalar> model;
  std::vector<double> epoch_losses;
};

/// Fraction in [0, 1] of the training run completed so far.
using ProgressCallback = std::function<void(double)>;

/// d' : greedy data->text decode followed by greedy text->data decode.
template <typename Scalar>
TokenList reconstruct(const Seq2SeqModel<Scalar>& model, const LinearizedData& d);

/// Mean per-token cross-entropy of reconstructing d from the model's own
/// text decode t-hat (teacher forced on d).
template <typename Scalar>
UncertaintyScore uncertainty(const Seq2SeqModel<Scalar>& model, const LinearizedData& d);

template <typename Scalar>
ScoreTable score_all(const Seq2SeqModel<Scalar>& model, std::span<const LinearizedData> data);

/// Adds any label tokens missing from the model vocabulary (in first-seen
/// order). Returns the input model unchanged when nothing is new.
template <typename Scalar>
Seq2SeqModel<Scalar> extend_vocabulary(const Seq2SeqModel<Scalar>& model,
                                       std::span<const LabeledExample> labeled, std::uint64_t seed);

/// SGD with global-norm clipping over supervised pairs (both directions)
/// and the cycle loss on unlabeled data. Throws Error(kNumeric) on a
/// non-finite loss; the input model is never modified.
template <typename Scalar>
TrainResult<Scalar> train_round_trip(const Seq2SeqModel<Scalar>& model,
                                     std::span<const LinearizedData> unlabeled,
                                     std::span<const LabeledExample> labeled, const TrainConfig& cfg,
                                     const ProgressCallback& progress = {});

/// Mean loss over `batch` and its gradient with respect to all parameters.
template <typename Scalar>
Scalar batch_loss(const Seq2SeqModel<Scalar>& model, std::span<const TrainingExample> batch,
                  typename Seq2SeqModel<Scalar>::Vector* grad);

/// Max relative error between analytic and central-difference gradients on
/// `samples` randomly chosen parameters.
double gradient_check(const Seq2SeqModel<double>& model, std::span<const TrainingExample> batch,
                      int samples, std::uint64_t seed, double step = 1e-4);

extern template TokenList reconstruct(const Seq2SeqModel<float>&, const LinearizedData&);
extern template TokenList reconstruct(const Seq2SeqModel<double>&, const LinearizedData&);
extern template UncertaintyScore uncertainty(const Seq2SeqModel<float>&, const LinearizedData&);
extern template UncertaintyScore uncertainty(const Seq2SeqModel<double>&, const LinearizedData&);

}  // namespace datalabel
