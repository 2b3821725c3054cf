#include "datalabel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "datalabel/error.hpp"

namespace datalabel {
namespace {

constexpr std::string_view kTerminalPunctuation = ".,!?;";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, std::string_view delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

void append_word_tokens(std::string_view word, TokenList& out) {
  std::size_t end = word.size();
  while (end > 0 && kTerminalPunctuation.find(word[end - 1]) != std::string_view::npos) --end;
  if (end > 0) out.emplace_back(word.substr(0, end));
  for (std::size_t i = end; i < word.size(); ++i) out.emplace_back(1, word[i]);
}

}  // namespace

std::string_view record_kind_name(RecordKind kind) {
  return kind == RecordKind::kGraph ? "graph" : "attribute_value";
}

std::string_view tokenizer_mode_name(TokenizerMode mode) {
  switch (mode) {
    case TokenizerMode::kWord: return "word";
    case TokenizerMode::kChar: return "char";
    case TokenizerMode::kBpe: return "bpe";
  }
  return "word";
}

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "word") return TokenizerMode::kWord;
  if (name == "char") return TokenizerMode::kChar;
  if (name == "bpe") return TokenizerMode::kBpe;
  throw Error(ErrorCode::kConfig, "unknown tokenizer mode '" + std::string(name) + "'");
}

std::string_view label_source_name(LabelSource source) {
  switch (source) {
    case LabelSource::kHuman: return "human";
    case LabelSource::kSuggestedAccepted: return "suggested_accepted";
    case LabelSource::kSuggestedCorrected: return "suggested_corrected";
    case LabelSource::kPredicted: return "predicted";
  }
  return "human";
}

LabelSource parse_label_source(std::string_view name) {
  if (name == "human") return LabelSource::kHuman;
  if (name == "suggested_accepted") return LabelSource::kSuggestedAccepted;
  if (name == "suggested_corrected") return LabelSource::kSuggestedCorrected;
  if (name == "predicted") return LabelSource::kPredicted;
  throw Error(ErrorCode::kParse, "unknown label source '" + std::string(name) + "'");
}

void DelimiterConfig::validate() const {
  if (pair_delimiter.empty() || attribute_tag_delimiter.empty() ||
      attribute_value_separator.empty()) {
    throw Error(ErrorCode::kConfig, "delimiters must be non-empty");
  }
  if (pair_delimiter == attribute_value_separator) {
    throw Error(ErrorCode::kConfig, "pair delimiter must differ from attribute-value separator");
  }
}

TokenList utf8_characters(std::string_view text) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Tokenizer::Tokenizer(TokenizerConfig config) : config_(config) {
  if (config_.bpe_vocab_size <= 0) throw Error(ErrorCode::kConfig, "bpe_vocab_size must be positive");
}

Tokenizer::Tokenizer(TokenizerConfig config, BpeMerges merges)
    : config_(config), merges_(std::move(merges)), ranks_(bpe_ranks(merges_)), trained_(true) {
  if (config_.bpe_vocab_size <= 0) throw Error(ErrorCode::kConfig, "bpe_vocab_size must be positive");
}

TokenList Tokenizer::tokenize(std::string_view text) const {
  const std::string normalized = config_.lowercase ? lowercase_ascii(text) : std::string(text);
  const auto words = split_whitespace(normalized);
  if (words.empty()) throw Error(ErrorCode::kEmptyText, "empty text");

  TokenList out;
  switch (config_.mode) {
    case TokenizerMode::kWord:
      for (auto w : words) append_word_tokens(w, out);
      break;
    case TokenizerMode::kChar:
      for (auto w : words) {
        for (auto& c : utf8_characters(w)) out.push_back(std::move(c));
      }
      break;
    case TokenizerMode::kBpe:
      if (!trained_) throw Error(ErrorCode::kConfig, "bpe tokenizer used before training");
      for (auto w : words) {
        for (auto& s : apply_bpe(w, ranks_)) out.push_back(std::move(s));
      }
      break;
  }
  return out;
}

TokenList tokenize(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer.tokenize(text);
}

std::string detokenize(const TokenList& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

TextLabel make_label(RecordId id, std::string text, const Tokenizer& tokenizer,
                     LabelSource source) {
  TextLabel label;
  label.record_id = id;
  label.tokens = tokenizer.tokenize(text);
  label.text = std::move(text);
  label.source = source;
  return label;
}

Corpus::Corpus(RecordKind kind, bool explicit_ids, std::vector<StructuredRecord> records)
    : kind_(kind), explicit_ids_(explicit_ids), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::kParse, "duplicate record id " + std::to_string(records_[i].id));
    }
  }
}

const StructuredRecord& Corpus::at(RecordId id) const { return records_[position(id)]; }

std::size_t Corpus::position(RecordId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownRecord, "unknown record id " + std::to_string(id));
  }
  return it->second;
}

Corpus parse_corpus(std::string_view raw, const DelimiterConfig& delim, RecordKind kind) {
  delim.validate();
  std::vector<StructuredRecord> records;
  std::set<RecordId> seen;
  bool explicit_ids = false;
  std::size_t line_no = 0;

  for (std::string_view line : split(raw, "\n")) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto directive = trim(line.substr(1));
      if (directive == "kind=graph") kind = RecordKind::kGraph;
      else if (directive == "kind=attribute_value") kind = RecordKind::kAttributeValue;
      else if (directive == "ids") explicit_ids = true;
      continue;
    }

    auto columns = split(line, "\t");
    StructuredRecord record;
    record.kind = kind;
    std::size_t c = 0;
    if (explicit_ids) {
      const auto field = trim(columns[0]);
      RecordId id = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        parse_error(line_no, "invalid record id '" + std::string(field) + "'");
      }
      if (!seen.insert(id).second) parse_error(line_no, "duplicate record id " + std::to_string(id));
      record.id = id;
      c = 1;
    } else {
      record.id = records.size();
    }
    if (columns.size() < c + 1 || columns.size() > c + 3) {
      parse_error(line_no, "expected data[<TAB>label[<TAB>source]] columns");
    }

    const std::string_view data = columns[c];
    if (kind == RecordKind::kAttributeValue) {
      for (auto piece : split(data, delim.pair_delimiter)) {
        const std::size_t sep = piece.find(delim.attribute_value_separator);
        if (sep == std::string_view::npos) {
          parse_error(line_no, "missing attribute-value separator '" +
                                   delim.attribute_value_separator + "' in '" +
                                   std::string(trim(piece)) + "'");
        }
        const auto attribute = trim(piece.substr(0, sep));
        const auto value = trim(piece.substr(sep + delim.attribute_value_separator.size()));
        if (attribute.empty()) parse_error(line_no, "empty attribute name");
        if (value.empty()) parse_error(line_no, "empty value for attribute '" + std::string(attribute) + "'");
        record.pairs.emplace_back(std::string(attribute), std::string(value));
      }
    } else {
      for (auto token : split_whitespace(data)) record.graph_tokens.emplace_back(token);
      if (record.graph_tokens.empty()) parse_error(line_no, "empty graph record");
    }

    if (columns.size() > c + 1) {
      const auto label = trim(columns[c + 1]);
      if (!label.empty()) record.gold_label = std::string(label);
    }
    if (columns.size() > c + 2) parse_label_source(trim(columns[c + 2]));
    records.push_back(std::move(record));
  }

  if (records.empty()) throw Error(ErrorCode::kParse, "empty corpus");
  return Corpus(kind, explicit_ids, std::move(records));
}

std::string format_record_data(const StructuredRecord& record, const DelimiterConfig& delim) {
  std::string out;
  if (record.kind == RecordKind::kAttributeValue) {
    for (std::size_t i = 0; i < record.pairs.size(); ++i) {
      if (i > 0) out += delim.pair_delimiter;
      out += record.pairs[i].first;
      out += delim.attribute_value_separator;
      out += record.pairs[i].second;
    }
  } else {
    out = detokenize(record.graph_tokens);
  }
  return out;
}

std::string format_corpus(const Corpus& corpus, const DelimiterConfig& delim) {
  std::ostringstream out;
  if (corpus.kind() == RecordKind::kGraph) out << "#kind=graph\n";
  if (corpus.explicit_ids()) out << "#ids\n";
  for (const auto& r : corpus.records()) {
    if (corpus.explicit_ids()) out << r.id << '\t';
    out << format_record_data(r, delim);
    if (r.gold_label) out << '\t' << *r.gold_label;
    out << '\n';
  }
  return out.str();
}

bool is_attribute_tag(std::string_view token, const DelimiterConfig& delim) {
  const auto& d = delim.attribute_tag_delimiter;
  return token.size() > 2 * d.size() && token.starts_with(d) && token.ends_with(d);
}

std::vector<std::string> record_attributes(const StructuredRecord& record,
                                           const DelimiterConfig& delim) {
  std::vector<std::string> out;
  if (record.kind == RecordKind::kAttributeValue) {
    for (const auto& [attribute, value] : record.pairs) out.push_back(attribute);
  } else {
    for (const auto& token : record.graph_tokens) {
      if (is_attribute_tag(token, delim)) out.push_back(token);
    }
  }
  return out;
}

LinearizedData linearize(const StructuredRecord& record, const DelimiterConfig& delim,
                         const Tokenizer& tokenizer) {
  LinearizedData out;
  out.record_id = record.id;
  auto append = [&](std::string_view text) {
    for (auto& t : tokenizer.tokenize(text)) out.tokens.push_back(std::move(t));
  };
  if (record.kind == RecordKind::kAttributeValue) {
    for (std::size_t i = 0; i < record.pairs.size(); ++i) {
      if (i > 0) out.tokens.push_back(delim.pair_delimiter);
      append(record.pairs[i].first);
      out.tokens.push_back(delim.attribute_value_separator);
      append(record.pairs[i].second);
    }
  } else {
    for (const auto& token : record.graph_tokens) {
      if (is_attribute_tag(token, delim)) out.tokens.push_back(token);
      else append(token);
    }
  }
  if (out.tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "record linearizes to no tokens");
  return out;
}

std::vector<std::string> corpus_texts(const Corpus& corpus, const DelimiterConfig& delim) {
  std::vector<std::string> texts;
  for (const auto& r : corpus.records()) {
    if (r.kind == RecordKind::kAttributeValue) {
      for (const auto& [a, v] : r.pairs) {
        texts.push_back(a);
        texts.push_back(v);
      }
    } else {
      for (const auto& t : r.graph_tokens) {
        if (!is_attribute_tag(t, delim)) texts.push_back(t);
      }
    }
  }
  return texts;
}

}  // namespace datalabel
