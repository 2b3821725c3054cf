#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "datalabel/bpe.hpp"

namespace datalabel {

using RecordId = std::uint64_t;
using TokenList = std::vector<std::string>;

enum class RecordKind { kAttributeValue, kGraph };

std::string_view record_kind_name(RecordKind kind);

/// One row of structured input: attribute-value pairs or a tagged graph
/// token sequence, plus an optional gold label (used by the simulator).
struct StructuredRecord {
  RecordId id = 0;
  RecordKind kind = RecordKind::kAttributeValue;
  std::vector<std::pair<std::string, std::string>> pairs;
  TokenList graph_tokens;
  std::optional<std::string> gold_label;

  bool operator==(const StructuredRecord&) const = default;
};

struct DelimiterConfig {
  std::string pair_delimiter = ",";
  std::string attribute_tag_delimiter = "__";
  std::string attribute_value_separator = ":";

  /// Throws Error(kConfig) when a delimiter is empty or the pair delimiter
  /// collides with the attribute-value separator.
  void validate() const;

  bool operator==(const DelimiterConfig&) const = default;
};

enum class TokenizerMode { kWord, kChar, kBpe };

std::string_view tokenizer_mode_name(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view name);

struct TokenizerConfig {
  TokenizerMode mode = TokenizerMode::kWord;
  int bpe_vocab_size = 500;
  bool lowercase = false;

  bool operator==(const TokenizerConfig&) const = default;
};

/// Tokenizer configuration bound to its (possibly empty) BPE merge table.
class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(TokenizerConfig config);
  Tokenizer(TokenizerConfig config, BpeMerges merges);

  const TokenizerConfig& config() const { return config_; }
  const BpeMerges& merges() const { return merges_; }
  bool ready() const { return config_.mode != TokenizerMode::kBpe || trained_; }

  /// Throws Error(kEmptyText) on empty/whitespace-only input and
  /// Error(kConfig) when bpe mode has no trained merge table.
  TokenList tokenize(std::string_view text) const;

 private:
  TokenizerConfig config_;
  BpeMerges merges_;
  BpeRanks ranks_;
  bool trained_ = false;
};

TokenList tokenize(std::string_view text, const Tokenizer& tokenizer);

/// Joins word-mode tokens with single spaces; the inverse of word
/// tokenization on already-normalized text.
std::string detokenize(const TokenList& tokens);

/// Splits a UTF-8 string into code points (each returned as its byte string).
TokenList utf8_characters(std::string_view text);

struct LinearizedData {
  RecordId record_id = 0;
  TokenList tokens;

  bool operator==(const LinearizedData&) const = default;
};

enum class LabelSource { kHuman, kSuggestedAccepted, kSuggestedCorrected, kPredicted };

std::string_view label_source_name(LabelSource source);
LabelSource parse_label_source(std::string_view name);

struct TextLabel {
  RecordId record_id = 0;
  std::string text;
  TokenList tokens;
  LabelSource source = LabelSource::kHuman;

  bool operator==(const TextLabel&) const = default;
};

TextLabel make_label(RecordId id, std::string text, const Tokenizer& tokenizer,
                     LabelSource source);

class Corpus {
 public:
  Corpus() = default;
  Corpus(RecordKind kind, bool explicit_ids, std::vector<StructuredRecord> records);

  RecordKind kind() const { return kind_; }
  bool explicit_ids() const { return explicit_ids_; }
  const std::vector<StructuredRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool contains(RecordId id) const { return index_.count(id) != 0; }
  /// Throws Error(kUnknownRecord).
  const StructuredRecord& at(RecordId id) const;
  std::size_t position(RecordId id) const;

  bool operator==(const Corpus& other) const {
    return kind_ == other.kind_ && explicit_ids_ == other.explicit_ids_ &&
           records_ == other.records_;
  }

 private:
  RecordKind kind_ = RecordKind::kAttributeValue;
  bool explicit_ids_ = false;
  std::vector<StructuredRecord> records_;
  std::unordered_map<RecordId, std::size_t> index_;
};

/// Parses the line-oriented corpus format. `#kind=graph` / `#kind=attribute_value`
/// switch the record kind; `#ids` declares a leading integer id column.
/// Columns are tab separated: [id] data [label [source]].
Corpus parse_corpus(std::string_view raw, const DelimiterConfig& delim,
                    RecordKind kind = RecordKind::kAttributeValue);

/// Data column of a record in the corpus file format.
std::string format_record_data(const StructuredRecord& record, const DelimiterConfig& delim);

/// Full corpus file (directives plus one line per record, gold labels included).
std::string format_corpus(const Corpus& corpus, const DelimiterConfig& delim);

bool is_attribute_tag(std::string_view token, const DelimiterConfig& delim);

/// Attribute names of a record: pair attributes, or the tag tokens of a graph.
std::vector<std::string> record_attributes(const StructuredRecord& record,
                                           const DelimiterConfig& delim);

LinearizedData linearize(const StructuredRecord& record, const DelimiterConfig& delim,
                         const Tokenizer& tokenizer);

/// Raw strings the BPE trainer sees for a corpus: attributes, values and
/// graph tokens.
std::vector<std::string> corpus_texts(const Corpus& corpus, const DelimiterConfig& delim);

}  // namespace datalabel
