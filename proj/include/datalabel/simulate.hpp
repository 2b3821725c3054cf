#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "datalabel/quality.hpp"
#include "datalabel/session.hpp"

namespace datalabel {

/// Corpus BLEU-4: clipped n-gram precisions with uniform weights, add-one
/// smoothing for n >= 2, closest-reference-length brevity penalty.
double bleu(std::span<const TokenList> candidates, std::span<const std::vector<TokenList>> references);

struct SyntheticShape {
  int catalog_size = 400;
  int signature_count = 30;
  double signature_zipf = 0.5;
  double record_zipf = 0.5;
};

/// Restaurant-style attribute-value corpus (with gold labels) in the corpus
/// file format. Records are drawn from a fixed catalog of meaning
/// representations with Zipfian popularity, so different seeds sample the
/// same population.
std::string make_synthetic_dataset(int n, std::uint64_t seed, const SyntheticShape& shape = {});

/// Session settings sized so a 2000-record, five-seed campaign runs in
/// minutes on one core: a small single-layer model, short training runs
/// every 50 labels and a capped replay of older labels.
SessionConfig simulation_session_defaults();

enum class SimStrategy { kSampler, kRandom, kAll };

std::string_view sim_strategy_name(SimStrategy s);
SimStrategy parse_sim_strategy(std::string_view name);

struct SimulationConfig {
  std::vector<SimStrategy> strategies{SimStrategy::kSampler};
  std::vector<int> budgets{200, 500, 1000, 2000};
  int batch_size = 20;
  std::vector<std::uint64_t> seeds{1};
  /// Template for every campaign; strategy, seed and k are overridden.
  SessionConfig session = simulation_session_defaults();
  int k = 5;
};

struct SimulationRow {
  SimStrategy strategy = SimStrategy::kSampler;
  std::uint64_t seed = 0;
  int budget = 0;
  double bleu = 0.0;
  double runtime_s = 0.0;
  QualityReport quality;
};

struct SimulationResult {
  std::vector<SimulationRow> rows;

  std::string csv() const;
};

/// Replays gold labels (oracle annotator) under each strategy and scores
/// retrieval predictions for `test_text` by BLEU at every budget.
SimulationResult run_simulation(const std::string& pool_text, const std::string& test_text,
                                const SimulationConfig& cfg, std::ostream* log = nullptr);

/// BLEU of nearest-neighbour retrieval from the session's labeled pool.
double evaluate_retrieval(const Session& session, const Corpus& test);

}  // namespace datalabel
