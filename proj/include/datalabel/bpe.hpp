#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace datalabel {

/// End-of-word marker attached to the final symbol of every word.
inline constexpr std::string_view kEndOfWord = "</w>";

struct BpeMerges {
  std::vector<std::pair<std::string, std::string>> merges;

  bool operator==(const BpeMerges&) const = default;
};

/// Number of distinct initial symbols (characters, with the end-of-word
/// marker fused onto each word-final character).
std::size_t bpe_alphabet_size(std::span<const std::string> texts);

/// Learns merges by repeatedly fusing the most frequent adjacent pair
/// (ties: lexicographically smallest pair) until the symbol inventory
/// reaches `vocab_size` or no pair occurs at least twice.
BpeMerges train_bpe(std::span<const std::string> texts, int vocab_size);

using BpeRanks = std::map<std::pair<std::string, std::string>, std::size_t>;

BpeRanks bpe_ranks(const BpeMerges& merges);

/// Segments one whitespace-free word by applying merges in rank order.
std::vector<std::string> apply_bpe(std::string_view word, const BpeRanks& ranks);
std::vector<std::string> apply_bpe(std::string_view word, const BpeMerges& merges);

}  // namespace datalabel
