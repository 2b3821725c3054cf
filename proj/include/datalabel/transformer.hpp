#pragma once

// Small pre-LayerNorm Transformer encoder-decoder with hand-written
// reverse-mode gradients. One parameter set serves both directions; the
// first encoder token (kToText / kToData) selects the direction.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "datalabel/corpus.hpp"
#include "datalabel/error.hpp"
#include "datalabel/random.hpp"

namespace datalabel {

enum SpecialToken : int { kPad = 0, kBos = 1, kEos = 2, kToText = 3, kToData = 4 };
inline constexpr int kSpecialCount = 5;

enum class Direction { kToText, kToData };

inline int direction_token(Direction d) { return d == Direction::kToText ? kToText : kToData; }

/// Shared data/text vocabulary with the special tokens at ids 0..4.
class ModelVocabulary {
 public:
  ModelVocabulary();

  int size() const { return static_cast<int>(tokens_.size()); }
  std::optional<int> find(const std::string& token) const;
  int add(const std::string& token);
  const std::string& token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Throws Error(kInvalidArgument) naming the first unknown token.
  std::vector<int> encode(const TokenList& tokens) const;
  TokenList decode(std::span<const int> ids) const;

  bool operator==(const ModelVocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct ModelDims {
  int model_dim = 64;
  int layers = 2;
  int heads = 2;
  int ff_dim = 128;
  int max_len = 64;

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

/// Contiguous slice of the flat parameter vector viewed as a rows x cols matrix.
struct Block {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

struct LinearBlocks {
  Block weight;  // in x out
  Block bias;    // out x 1
};
struct NormBlocks {
  Block gamma;
  Block beta;
};
struct AttentionBlocks {
  LinearBlocks query, key, value, output;
};
struct FeedForwardBlocks {
  LinearBlocks in, out;
};
struct EncoderLayerBlocks {
  NormBlocks norm1;
  AttentionBlocks attention;
  NormBlocks norm2;
  FeedForwardBlocks feed_forward;
};
struct DecoderLayerBlocks {
  NormBlocks norm1;
  AttentionBlocks self_attention;
  NormBlocks norm2;
  AttentionBlocks cross_attention;
  NormBlocks norm3;
  FeedForwardBlocks feed_forward;
};

struct ModelLayout {
  Block embedding;  // vocab x model_dim
  std::vector<EncoderLayerBlocks> encoder;
  NormBlocks encoder_norm;
  std::vector<DecoderLayerBlocks> decoder;
  NormBlocks decoder_norm;
  LinearBlocks output;  // model_dim x vocab
  Eigen::Index total = 0;

  static ModelLayout build(const ModelDims& dims, int vocab_size);
};

template <typename Scalar>
class Seq2SeqModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Seq2SeqModel() = default;
  Seq2SeqModel(ModelVocabulary vocab, ModelDims dims, std::uint64_t seed);
  /// Restores a model from serialized parameters; sizes must match the layout.
  Seq2SeqModel(ModelVocabulary vocab, ModelDims dims, Vector parameters, std::uint64_t version);

  const ModelVocabulary& vocabulary() const { return vocab_; }
  const ModelDims& dims() const { return dims_; }
  const ModelLayout& layout() const { return layout_; }
  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  /// Copy with a larger vocabulary: existing rows/columns are kept, new
  /// embedding rows are drawn from the seeded initializer and new output
  /// columns start at zero.
  Seq2SeqModel with_vocabulary(const ModelVocabulary& extended, std::uint64_t seed) const;

  /// Teacher-forced mean per-token cross-entropy (nats) of emitting
  /// `target` followed by EOS given `source`. When `grad` is non-null,
  /// `weight` * d(loss)/d(params) is accumulated into it.
  Scalar sequence_loss(Direction direction, std::span<const int> source,
                       std::span<const int> target, Vector* grad = nullptr,
                       Scalar weight = Scalar(1)) const;

  /// Greedy decode (no structural specials emitted), capped at max_len - 1
  /// tokens; the returned ids exclude EOS.
  std::vector<int> greedy_decode(Direction direction, std::span<const int> source) const;

  /// Source ids as fed to the encoder: [direction, source..., EOS], truncated.
  std::vector<int> encoder_input(Direction direction, std::span<const int> source) const;

  bool operator==(const Seq2SeqModel& other) const {
    return vocab_ == other.vocab_ && dims_ == other.dims_ && version_ == other.version_ &&
           params_.size() == other.params_.size() && params_ == other.params_;
  }

 private:
  void init_positional();
  void initialize(std::uint64_t seed);

  ModelVocabulary vocab_;
  ModelDims dims_;
  ModelLayout layout_;
  Vector params_;
  Matrix positional_;
  std::uint64_t version_ = 0;
};

extern template class Seq2SeqModel<float>;
extern template class Seq2SeqModel<double>;

}  // namespace datalabel
