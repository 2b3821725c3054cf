#include "datalabel/suggester.hpp"

#include <cstdint>

namespace datalabel {

void LabeledPool::add(RecordId id, BowVector bow, TextLabel label) {
  if (bow.norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "pool vectors must be non-zero");
  if (!ids_.insert(id).second) throw Error(ErrorCode::kAlreadyLabeled, "record " + std::to_string(id) + " already in pool");
  entries_.push_back({id, std::move(bow), std::move(label)});
}

namespace {

// Cosine similarity up to the shared query norm, kept as exact integers:
// sim = dot / sqrt(sq).
struct Similarity {
  std::int64_t dot = 0;
  std::int64_t sq = 1;
};

Similarity similarity(const BowVector& query, const BowVector& entry) {
  Similarity s{0, 0};
  auto i = query.entries.begin();
  for (const auto& [id, count] : entry.entries) {
    s.sq += static_cast<std::int64_t>(count) * count;
    while (i != query.entries.end() && i->first < id) ++i;
    if (i != query.entries.end() && i->first == id) s.dot += static_cast<std::int64_t>(i->second) * count;
  }
  return s;
}

// Compares a.dot / sqrt(a.sq) with b.dot / sqrt(b.sq) without rounding.
int compare(const Similarity& a, const Similarity& b) {
  using Wide = __int128;
  const Wide lhs = static_cast<Wide>(a.dot) * a.dot * b.sq;
  const Wide rhs = static_cast<Wide>(b.dot) * b.dot * a.sq;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

}  // namespace

std::optional<TextLabel> suggest(const BowVector& query, const LabeledPool& pool) {
  if (pool.empty() || query.norm == 0.0) return std::nullopt;
  const PoolEntry* best = nullptr;
  Similarity best_sim;
  for (const auto& e : pool.entries()) {
    const Similarity sim = similarity(query, e.bow);
    const int order = best ? compare(sim, best_sim) : 1;
    if (order > 0 || (order == 0 && e.id < best->id)) {
      best = &e;
      best_sim = sim;
    }
  }
  return best->label;
}

std::optional<TextLabel> suggest(const LinearizedData& d, const TokenVocabulary& vocab,
                                 const LabeledPool& pool) {
  if (d.tokens.empty()) return std::nullopt;
  return suggest(vectorize(d, vocab), pool);
}

std::map<RecordId, TextLabel> predict_all(std::span<const PredictionQuery> queries,
                                          const LabeledPool& pool) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to predict from");
  std::map<RecordId, TextLabel> out;
  for (const auto& q : queries) {
    auto label = suggest(q.bow, pool);
    if (!label) continue;
    label->record_id = q.id;
    label->source = LabelSource::kPredicted;
    out.emplace(q.id, std::move(*label));
  }
  return out;
}

}  // namespace datalabel
