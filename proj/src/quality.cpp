#include "datalabel/quality.hpp"

#include <cmath>
#include <sstream>

#include "datalabel/error.hpp"

namespace datalabel {

QualityAccumulator::QualityAccumulator(int segment_length) : segment_length_(segment_length) {
  if (segment_length < 1) throw Error(ErrorCode::kConfig, "segment length must be >= 1");
}

void QualityAccumulator::add(const TokenList& tokens) {
  ++labels_;
  for (const auto& t : tokens) {
    ++unigrams_[t];
    if (total_ >= 1) ++bigrams_[{prev1_, t}];
    if (total_ >= 2) ++trigrams_[{prev2_, prev1_, t}];
    prev2_ = std::move(prev1_);
    prev1_ = t;
    ++total_;

    ++segment_types_[t];
    if (++segment_fill_ == segment_length_) {
      segment_ttr_sum_ += static_cast<double>(segment_types_.size()) / segment_length_;
      ++segments_;
      segment_types_.clear();
      segment_fill_ = 0;
    }
  }
}

QualityReport QualityAccumulator::report(const CoverageCounts& coverage) const {
  QualityReport r;
  r.labeled_count = labels_;
  r.total_tokens = total_;
  r.unique_tokens = unigrams_.size();
  r.unique_trigrams = trigrams_.size();
  if (total_ > 0) {
    const double n = static_cast<double>(total_);
    for (const auto& [token, count] : unigrams_) {
      const double p = static_cast<double>(count) / n;
      r.shannon_token_entropy -= p * std::log2(p);
    }
    r.ttr = static_cast<double>(r.unique_tokens) / n;
  }
  if (!bigrams_.empty()) {
    std::map<std::string, std::uint64_t> first;
    std::uint64_t pairs = 0;
    for (const auto& [bigram, count] : bigrams_) {
      first[bigram.first] += count;
      pairs += count;
    }
    for (const auto& [bigram, count] : bigrams_) {
      const double joint = static_cast<double>(count) / static_cast<double>(pairs);
      const double conditional = static_cast<double>(count) / static_cast<double>(first[bigram.first]);
      r.conditional_bigram_entropy -= joint * std::log2(conditional);
    }
    r.conditional_bigram_entropy = std::max(r.conditional_bigram_entropy, 0.0);
  }
  if (segments_ > 0) r.msttr = segment_ttr_sum_ / static_cast<double>(segments_);
  for (const auto& [signature, counts] : coverage) {
    r.per_signature_coverage[signature] =
        counts.second == 0 ? 0.0 : static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return r;
}

QualityReport compute_report(std::span<const TextLabel> labels, const CoverageCounts& coverage,
                             int segment_length) {
  QualityAccumulator acc(segment_length);
  for (const auto& l : labels) acc.add(l.tokens);
  return acc.report(coverage);
}

StopDecision should_stop(const QualityReport& report, const StoppingThresholds& thresholds) {
  StopDecision d;
  if (thresholds.empty()) return d;
  std::vector<std::string> met, unmet;
  auto check = [&](const char* name, bool ok) { (ok ? met : unmet).emplace_back(name); };
  if (thresholds.min_labeled) check("labeled", report.labeled_count >= *thresholds.min_labeled);
  if (thresholds.min_msttr) check("msttr", report.msttr && *report.msttr >= *thresholds.min_msttr);
  if (thresholds.min_ttr) check("ttr", report.total_tokens > 0 && report.ttr >= *thresholds.min_ttr);
  d.stop = unmet.empty();
  d.reasons = d.stop ? met : unmet;
  return d;
}

std::vector<std::pair<std::string, std::optional<double>>> flatten(const QualityReport& r) {
  std::vector<std::pair<std::string, std::optional<double>>> out{
      {"labeled_count", static_cast<double>(r.labeled_count)},
      {"total_tokens", static_cast<double>(r.total_tokens)},
      {"unique_tokens", static_cast<double>(r.unique_tokens)},
      {"unique_trigrams", static_cast<double>(r.unique_trigrams)},
      {"shannon_token_entropy", r.shannon_token_entropy},
      {"conditional_bigram_entropy", r.conditional_bigram_entropy},
      {"ttr", r.ttr},
      {"msttr", r.msttr},
  };
  for (const auto& [signature, fraction] : r.per_signature_coverage) {
    out.emplace_back("coverage." + signature, fraction);
  }
  return out;
}

std::string to_key_value_text(const QualityReport& report) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [key, value] : flatten(report)) {
    out << key << '=';
    if (value) out << *value;
    else out << "undefined";
    out << '\n';
  }
  return out.str();
}

}  // namespace datalabel
