#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "datalabel/corpus.hpp"

namespace datalabel {

inline constexpr int kDefaultMsttrSegment = 50;

struct QualityReport {
  std::uint64_t unique_tokens = 0;
  std::uint64_t unique_trigrams = 0;
  std::uint64_t total_tokens = 0;
  double shannon_token_entropy = 0.0;       // bits
  double conditional_bigram_entropy = 0.0;  // bits
  double ttr = 0.0;                         // 0 when there are no tokens
  std::optional<double> msttr;              // unset below one full segment
  std::uint64_t labeled_count = 0;
  std::map<std::string, double> per_signature_coverage;

  bool operator==(const QualityReport&) const = default;
};

/// (labeled, total) record counts per attribute signature.
using CoverageCounts = std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>;

/// Streaming statistics over the concatenated label token stream.
class QualityAccumulator {
 public:
  explicit QualityAccumulator(int segment_length = kDefaultMsttrSegment);

  void add(const TokenList& tokens);
  QualityReport report(const CoverageCounts& coverage = {}) const;
  std::uint64_t label_count() const { return labels_; }

 private:
  int segment_length_;
  std::uint64_t labels_ = 0;
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> unigrams_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigrams_;
  std::map<std::tuple<std::string, std::string, std::string>, std::uint64_t> trigrams_;
  std::string prev1_, prev2_;  // prev1_ is the most recent token
  std::map<std::string, int> segment_types_;
  int segment_fill_ = 0;
  double segment_ttr_sum_ = 0.0;
  std::uint64_t segments_ = 0;
};

QualityReport compute_report(std::span<const TextLabel> labels, const CoverageCounts& coverage = {},
                             int segment_length = kDefaultMsttrSegment);

struct StoppingThresholds {
  std::optional<std::uint64_t> min_labeled;
  std::optional<double> min_msttr;
  std::optional<double> min_ttr;

  bool empty() const { return !min_labeled && !min_msttr && !min_ttr; }
  bool operator==(const StoppingThresholds&) const = default;
};

struct StopDecision {
  bool stop = false;
  /// Thresholds that were met when stopping, otherwise the unmet ones.
  std::vector<std::string> reasons;
};

StopDecision should_stop(const QualityReport& report, const StoppingThresholds& thresholds);

/// Flat numeric view (msttr is absent while undefined); coverage entries
/// are keyed "coverage.<signature>".
std::vector<std::pair<std::string, std::optional<double>>> flatten(const QualityReport& report);

/// key=value lines of flatten(); an undefined value prints as "undefined".
std::string to_key_value_text(const QualityReport& report);

}  // namespace datalabel
