#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "datalabel/clustering.hpp"
#include "datalabel/scorer.hpp"

namespace datalabel {

/// Round-robin position: the next (group, sub-cluster) to draw from.
/// Groups are visited in signature order.
struct SamplerCursor {
  std::size_t group = 0;
  std::size_t cluster = 0;

  bool operator==(const SamplerCursor&) const = default;
};

struct SamplerState {
  ClusterIndex index;
  ScoreTable scores;
  std::set<RecordId> labeled;
  SamplerCursor cursor;
  std::uint64_t rng_seed = 0;

  bool operator==(const SamplerState&) const = default;
};

struct BatchItem {
  RecordId id = 0;
  std::optional<TextLabel> suggestion;

  bool operator==(const BatchItem&) const = default;
};

struct Batch {
  std::vector<BatchItem> items;

  std::vector<RecordId> ids() const;
};

/// Unlabeled members of every sub-cluster (flattened in visiting order),
/// highest uncertainty first; unscored ids follow in ascending id order.
std::vector<std::vector<RecordId>> rank_within_subtypes(const SamplerState& state);

/// Takes the best remaining id of each sub-cluster in turn, starting at the
/// cursor, until `size` ids are collected or nothing is left. Ids in `skip`
/// (e.g. issued but not yet answered) are passed over.
Batch next_batch(SamplerState& state, int size, const std::set<RecordId>& skip = {});

/// Uniform draw without replacement from the unlabeled ids not in `skip`.
Batch random_batch(const SamplerState& state, int size, std::uint64_t seed,
                   const std::set<RecordId>& skip = {});

}  // namespace datalabel
