#include "datalabel/bpe.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "datalabel/corpus.hpp"
#include "datalabel/error.hpp"

namespace datalabel {
namespace {

std::vector<std::string> initial_symbols(std::string_view word) {
  std::vector<std::string> symbols = utf8_characters(word);
  if (!symbols.empty()) symbols.back() += kEndOfWord;
  return symbols;
}

std::map<std::string, long> word_counts(std::span<const std::string> texts) {
  std::map<std::string, long> counts;
  for (const auto& text : texts) {
    std::istringstream in(text);
    std::string word;
    while (in >> word) ++counts[word];
  }
  return counts;
}

}  // namespace

std::size_t bpe_alphabet_size(std::span<const std::string> texts) {
  std::set<std::string> alphabet;
  for (const auto& [word, count] : word_counts(texts)) {
    for (auto& s : initial_symbols(word)) alphabet.insert(std::move(s));
  }
  return alphabet.size();
}

BpeMerges train_bpe(std::span<const std::string> texts, int vocab_size) {
  if (texts.empty()) throw Error(ErrorCode::kInvalidArgument, "bpe: empty training text collection");
  const auto counts = word_counts(texts);
  if (counts.empty()) throw Error(ErrorCode::kInvalidArgument, "bpe: training texts contain no words");

  std::vector<std::vector<std::string>> words;
  std::vector<long> freq;
  std::set<std::string> alphabet;
  for (const auto& [word, count] : counts) {
    words.push_back(initial_symbols(word));
    freq.push_back(count);
    alphabet.insert(words.back().begin(), words.back().end());
  }
  if (vocab_size <= 0 || static_cast<std::size_t>(vocab_size) <= alphabet.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bpe: vocab_size " + std::to_string(vocab_size) + " must exceed alphabet size " +
                    std::to_string(alphabet.size()));
  }

  BpeMerges result;
  std::size_t symbols = alphabet.size();
  while (symbols < static_cast<std::size_t>(vocab_size)) {
    std::map<std::pair<std::string, std::string>, long> pairs;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& s = words[w];
      for (std::size_t i = 0; i + 1 < s.size(); ++i) pairs[{s[i], s[i + 1]}] += freq[w];
    }
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pairs.end();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (best == pairs.end() || it->second > best->second) best = it;
    }
    if (best == pairs.end() || best->second < 2) break;

    const auto [left, right] = best->first;
    const std::string fused = left + right;
    for (auto& s : words) {
      std::vector<std::string> merged;
      merged.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          merged.push_back(fused);
          ++i;
        } else {
          merged.push_back(s[i]);
        }
      }
      s = std::move(merged);
    }
    result.merges.emplace_back(left, right);
    ++symbols;
  }
  return result;
}

BpeRanks bpe_ranks(const BpeMerges& merges) {
  BpeRanks rank;
  for (std::size_t i = 0; i < merges.merges.size(); ++i) rank.emplace(merges.merges[i], i);
  return rank;
}

std::vector<std::string> apply_bpe(std::string_view word, const BpeRanks& ranks) {
  std::vector<std::string> symbols = initial_symbols(word);
  const std::size_t none = ranks.size();
  while (symbols.size() > 1) {
    std::size_t best_rank = none;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = ranks.find({symbols[i], symbols[i + 1]});
      if (it != ranks.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = i;
      }
    }
    if (best_rank == none) break;
    symbols[best_pos] += symbols[best_pos + 1];
    symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
  return symbols;
}

std::vector<std::string> apply_bpe(std::string_view word, const BpeMerges& merges) {
  return apply_bpe(word, bpe_ranks(merges));
}

}  // namespace datalabel
