#pragma once

// Generated sampler states and a round-robin oracle, shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "datalabel/sampler.hpp"

namespace sampler_cases {

using namespace datalabel;

struct Case {
  SamplerState state;
  std::set<RecordId> skip;
  int size = 1;
};

inline Case generate(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5A));
  Case c;
  RecordId next_id = uniform_index(rng, 5);
  const auto groups = 1 + uniform_index(rng, 4);
  for (std::uint64_t g = 0; g < groups; ++g) {
    const auto clusters = 1 + uniform_index(rng, 3);
    for (std::uint64_t k = 0; k < clusters; ++k) {
      std::vector<RecordId> members;
      const auto n = 1 + uniform_index(rng, 6);
      for (std::uint64_t i = 0; i < n; ++i) {
        members.push_back(next_id);
        next_id += 1 + uniform_index(rng, 3);
      }
      // Members are not necessarily in id order.
      for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
      c.state.index.groups["sig" + std::to_string(g)].push_back({Eigen::VectorXd(), members});
    }
  }
  for (const auto& [sig, subs] : c.state.index.groups) {
    for (const auto& s : subs) {
      for (auto id : s.member_ids) {
        const auto roll = uniform_index(rng, 10);
        if (roll < 2) c.state.labeled.insert(id);
        else if (roll < 3) c.skip.insert(id);
        if (uniform_index(rng, 3) != 0) {
          // Coarse scores so ties occur.
          c.state.scores[id] = UncertaintyScore{id, static_cast<double>(uniform_index(rng, 4)) * 0.5, 1};
        }
      }
    }
  }
  const auto g = uniform_index(rng, c.state.index.groups.size());
  c.state.cursor.group = g;
  c.state.cursor.cluster = uniform_index(rng, std::next(c.state.index.groups.begin(), static_cast<long>(g))->second.size());
  c.size = 1 + static_cast<int>(uniform_index(rng, 25));
  return c;
}

// Clusters in visiting order with their eligible members best-first.
inline std::vector<std::vector<RecordId>> oracle_ranking(const SamplerState& s, const std::set<RecordId>& skip) {
  std::vector<std::vector<RecordId>> out;
  for (const auto& [sig, subs] : s.index.groups) {
    for (const auto& sub : subs) {
      std::vector<RecordId> scored, unscored;
      for (auto id : sub.member_ids) {
        if (s.labeled.count(id) || skip.count(id)) continue;
        (s.scores.count(id) ? scored : unscored).push_back(id);
      }
      std::stable_sort(scored.begin(), scored.end(), [&](RecordId a, RecordId b) {
        const double sa = s.scores.at(a).score, sb = s.scores.at(b).score;
        return sa != sb ? sa > sb : a < b;
      });
      std::sort(unscored.begin(), unscored.end());
      scored.insert(scored.end(), unscored.begin(), unscored.end());
      out.push_back(scored);
    }
  }
  return out;
}

inline std::size_t flat_cursor(const SamplerState& s) {
  std::size_t flat = 0, g = 0;
  for (const auto& [sig, subs] : s.index.groups) {
    if (g++ == s.cursor.group) return flat + s.cursor.cluster;
    flat += subs.size();
  }
  return 0;
}

// One pass per round over the clusters starting at the cursor.
inline std::vector<RecordId> oracle_round_robin(const SamplerState& s, const std::set<RecordId>& skip, int size) {
  auto lists = oracle_ranking(s, skip);
  std::size_t remaining = 0;
  for (const auto& l : lists) remaining += l.size();
  std::vector<RecordId> out;
  std::vector<std::size_t> taken(lists.size(), 0);
  std::size_t pos = flat_cursor(s);
  while (static_cast<int>(out.size()) < size && out.size() < remaining) {
    if (taken[pos] < lists[pos].size()) out.push_back(lists[pos][taken[pos]++]);
    pos = (pos + 1) % lists.size();
  }
  return out;
}

/// Empty when the sampler behaves on case `c`, otherwise the first violated
/// property.
inline std::string check_case(int c) {
  const auto gen = generate(static_cast<std::uint64_t>(c));
  const auto lists = oracle_ranking(gen.state, gen.skip);
  std::size_t eligible = 0;
  for (const auto& l : lists) eligible += l.size();
  SamplerState state = gen.state;
  const auto ids = next_batch(state, gen.size, gen.skip).ids();
  if (ids != oracle_round_robin(gen.state, gen.skip, gen.size)) return "round-robin order";
  if (ids.size() != std::min<std::size_t>(eligible, static_cast<std::size_t>(gen.size))) return "batch size";
  if (std::set<RecordId>(ids.begin(), ids.end()).size() != ids.size()) return "duplicate id";
  for (auto id : ids) {
    if (gen.state.labeled.count(id) || gen.skip.count(id)) return "excluded id issued";
  }
  std::vector<std::size_t> taken(lists.size(), 0);
  for (auto id : ids) {
    for (std::size_t k = 0; k < lists.size(); ++k) {
      if (std::find(lists[k].begin(), lists[k].end(), id) != lists[k].end()) ++taken[k];
    }
  }
  for (std::size_t a = 0; a < lists.size(); ++a) {
    for (std::size_t b = 0; b < lists.size(); ++b) {
      if (taken[a] < lists[a].size() && taken[b] > taken[a] + 1) return "fairness";
    }
  }
  SamplerState drain = gen.state;
  std::multiset<RecordId> seen;
  for (int round = 0; round < 1000; ++round) {
    const auto b = next_batch(drain, gen.size, gen.skip).ids();
    if (b.empty()) break;
    for (auto id : b) {
      seen.insert(id);
      drain.labeled.insert(id);
    }
  }
  std::multiset<RecordId> expected;
  for (const auto& l : lists) expected.insert(l.begin(), l.end());
  if (seen != expected) return "drain coverage";
  return {};
}

}  // namespace sampler_cases
