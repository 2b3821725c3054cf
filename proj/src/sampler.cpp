#include "datalabel/sampler.hpp"

#include <algorithm>

namespace datalabel {

std::vector<RecordId> Batch::ids() const {
  std::vector<RecordId> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.id);
  return out;
}

std::vector<std::vector<RecordId>> rank_within_subtypes(const SamplerState& state) {
  std::vector<std::vector<RecordId>> ranked;
  for (const auto& [signature, clusters] : state.index.groups) {
    for (const auto& cluster : clusters) {
      std::vector<std::pair<const UncertaintyScore*, RecordId>> members;
      for (RecordId id : cluster.member_ids) {
        if (state.labeled.count(id)) continue;
        auto it = state.scores.find(id);
        members.emplace_back(it == state.scores.end() ? nullptr : &it->second, id);
      }
      std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
        if ((a.first != nullptr) != (b.first != nullptr)) return a.first != nullptr;
        if (a.first && a.first->score != b.first->score) return a.first->score > b.first->score;
        return a.second < b.second;
      });
      std::vector<RecordId> ids;
      ids.reserve(members.size());
      for (const auto& m : members) ids.push_back(m.second);
      ranked.push_back(std::move(ids));
    }
  }
  return ranked;
}

Batch next_batch(SamplerState& state, int size, const std::set<RecordId>& skip) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  const auto ranked = rank_within_subtypes(state);
  Batch batch;
  if (ranked.empty()) return batch;

  // Flat position of the cursor.
  std::vector<std::size_t> group_start;
  std::size_t flat = 0;
  for (const auto& [signature, clusters] : state.index.groups) {
    group_start.push_back(flat);
    flat += clusters.size();
  }
  std::size_t pos = 0;
  if (state.cursor.group < group_start.size()) {
    const std::size_t in_group = std::next(state.index.groups.begin(), static_cast<std::ptrdiff_t>(state.cursor.group))->second.size();
    pos = group_start[state.cursor.group] + std::min(state.cursor.cluster, in_group - 1);
  }

  std::vector<std::size_t> next(ranked.size(), 0);
  std::set<RecordId> taken;
  std::size_t idle = 0;  // consecutive sub-clusters with nothing to give
  while (static_cast<int>(batch.items.size()) < size && idle < ranked.size()) {
    const auto& list = ranked[pos];
    std::size_t& i = next[pos];
    while (i < list.size() && (skip.count(list[i]) || taken.count(list[i]))) ++i;
    if (i < list.size()) {
      taken.insert(list[i]);
      batch.items.push_back({list[i], std::nullopt});
      ++i;
      idle = 0;
    } else {
      ++idle;
    }
    pos = (pos + 1) % ranked.size();
  }

  const auto g = std::upper_bound(group_start.begin(), group_start.end(), pos) - group_start.begin() - 1;
  state.cursor = {static_cast<std::size_t>(g), pos - group_start[static_cast<std::size_t>(g)]};
  return batch;
}

Batch random_batch(const SamplerState& state, int size, std::uint64_t seed,
                   const std::set<RecordId>& skip) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  std::vector<RecordId> pool;
  for (const auto& [signature, clusters] : state.index.groups) {
    for (const auto& cluster : clusters) {
      for (RecordId id : cluster.member_ids) {
        if (!state.labeled.count(id) && !skip.count(id)) pool.push_back(id);
      }
    }
  }
  std::sort(pool.begin(), pool.end());
  Rng rng(mix_seed(seed, 0x4A));
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(size));
  Batch batch;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
    batch.items.push_back({pool[i], std::nullopt});
  }
  return batch;
}

}  // namespace datalabel
