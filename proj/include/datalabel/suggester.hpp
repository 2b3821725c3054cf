#pragma once

#include <map>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "datalabel/clustering.hpp"

namespace datalabel {

struct PoolEntry {
  RecordId id = 0;
  BowVector bow;
  TextLabel label;

  bool operator==(const PoolEntry&) const = default;
};

/// Labeled (data, text) pairs in insertion order.
class LabeledPool {
 public:
  /// Throws on a duplicate id or a zero vector.
  void add(RecordId id, BowVector bow, TextLabel label);

  const std::vector<PoolEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(RecordId id) const { return ids_.count(id) != 0; }

 private:
  std::vector<PoolEntry> entries_;
  std::unordered_set<RecordId> ids_;
};

/// Label of the most cosine-similar pool entry (ties: smallest id). The
/// returned label keeps the matched entry's record id.
std::optional<TextLabel> suggest(const BowVector& query, const LabeledPool& pool);
std::optional<TextLabel> suggest(const LinearizedData& d, const TokenVocabulary& vocab,
                                 const LabeledPool& pool);

struct PredictionQuery {
  RecordId id = 0;
  BowVector bow;
};

/// Suggestion for every query, relabeled with the query id and source
/// `predicted`. Throws when the pool is empty.
std::map<RecordId, TextLabel> predict_all(std::span<const PredictionQuery> queries,
                                          const LabeledPool& pool);

}  // namespace datalabel
