#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <string>
#include <vector>

#include "datalabel/scorer.hpp"

namespace fixtures {

using namespace datalabel;

inline ModelVocabulary small_vocabulary() {
  ModelVocabulary v;
  for (const char* t : {"a", "b", "c", ":", ",", "x", "y"}) v.add(t);
  return v;
}

inline ModelDims tiny_dims() { return ModelDims{8, 2, 2, 8, 12}; }

inline std::vector<TrainingExample> gradient_batch() {
  return {{Direction::kToText, {5, 8, 6}, {10, 11, 5}}, {Direction::kToData, {10, 11}, {5, 8, 7, 9, 6}}};
}

struct PairSet {
  ModelVocabulary vocab;
  std::vector<LabeledExample> labeled;
};

inline PairSet restaurant_pairs(std::size_t count = 4) {
  const Tokenizer tok{TokenizerConfig{}};
  const std::vector<std::string> data{"name : Clowns , eatType : pub", "name : Aromi , food : Italian",
                                      "name : Zizzi , area : riverside", "name : Clowns , food : French"};
  const std::vector<std::string> text{"Clowns is a pub .", "Aromi serves Italian food .",
                                      "Zizzi is by the riverside .", "Clowns serves French food ."};
  PairSet out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto d = tok.tokenize(data[i]);
    for (const auto& t : d) out.vocab.add(t);
    out.labeled.push_back({LinearizedData{static_cast<RecordId>(i), d},
                           make_label(static_cast<RecordId>(i), text[i], tok, LabelSource::kHuman)});
  }
  return out;
}

inline ModelDims overfit_dims() {
  ModelDims d;
  d.model_dim = 64;
  d.ff_dim = 128;
  d.max_len = 32;
  return d;
}

inline bool reproduces(const Seq2SeqModel<float>& m, const std::vector<LabeledExample>& labeled) {
  const auto& v = m.vocabulary();
  for (const auto& e : labeled) {
    if (v.decode(m.greedy_decode(Direction::kToText, v.encode(e.data.tokens))) != e.label.tokens) return false;
    if (v.decode(m.greedy_decode(Direction::kToData, v.encode(e.label.tokens))) != e.data.tokens) return false;
  }
  return true;
}

/// SGD steps (one full batch of both directions per step) until greedy
/// decoding reproduces every pair in both directions; -1 if not within
/// `max_steps`.
inline int steps_to_reproduce(std::uint64_t seed, int max_steps = 2000, std::size_t pairs = 4) {
  const auto set = restaurant_pairs(pairs);
  Seq2SeqModel<float> m(set.vocab, overfit_dims(), seed);
  m = extend_vocabulary(m, std::span<const LabeledExample>(set.labeled), seed);
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = static_cast<int>(2 * pairs);
  cfg.seed = seed;
  const int chunk = 25;
  cfg.epochs = chunk;
  for (int steps = chunk; steps <= max_steps; steps += chunk) {
    m = train_round_trip(m, {}, std::span<const LabeledExample>(set.labeled), cfg).model;
    if (reproduces(m, set.labeled)) return steps;
  }
  return -1;
}

/// Uncertainty of one instance before and after training on it.
inline std::pair<double, double> uncertainty_before_after(std::uint64_t seed) {
  const auto set = restaurant_pairs(1);
  ModelDims dims;
  dims.model_dim = 32;
  dims.layers = 1;
  dims.ff_dim = 64;
  dims.max_len = 32;
  Seq2SeqModel<float> m(set.vocab, dims, seed);
  m = extend_vocabulary(m, std::span<const LabeledExample>(set.labeled), seed);
  const double before = uncertainty(m, set.labeled[0].data).score;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 30;
  cfg.seed = seed;
  const auto trained = train_round_trip(m, {}, std::span<const LabeledExample>(set.labeled), cfg).model;
  return {before, uncertainty(trained, set.labeled[0].data).score};
}

}  // namespace fixtures
