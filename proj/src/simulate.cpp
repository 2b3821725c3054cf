#include "datalabel/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace datalabel {

// ---------------------------------------------------------------------------
// BLEU

double bleu(std::span<const TokenList> candidates, std::span<const std::vector<TokenList>> references) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "bleu: empty candidate list");
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bleu: candidate and reference counts differ");
  }
  constexpr int kOrder = 4;
  std::uint64_t matches[kOrder] = {0, 0, 0, 0};
  std::uint64_t totals[kOrder] = {0, 0, 0, 0};
  std::uint64_t cand_len = 0;
  std::uint64_t ref_len = 0;

  using Ngram = std::vector<std::string>;
  auto count_ngrams = [](const TokenList& tokens, int n) {
    std::map<Ngram, std::uint64_t> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return counts;
  };

  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const TokenList& cand = candidates[s];
    const auto& refs = references[s];
    if (refs.empty()) throw Error(ErrorCode::kInvalidArgument, "bleu: candidate without reference");
    cand_len += cand.size();
    // Closest reference length; ties go to the shorter reference.
    std::size_t best = refs[0].size();
    for (const auto& r : refs) {
      const auto diff = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
      if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) best = r.size();
    }
    ref_len += best;

    for (int n = 1; n <= kOrder; ++n) {
      const auto cand_counts = count_ngrams(cand, n);
      std::map<Ngram, std::uint64_t> max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, c] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
      }
      for (const auto& [g, c] : cand_counts) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matches[n - 1] += std::min(c, it->second);
      }
      if (cand.size() >= static_cast<std::size_t>(n)) totals[n - 1] += cand.size() - static_cast<std::size_t>(n) + 1;
    }
  }

  if (cand_len == 0 || matches[0] == 0) return 0.0;
  double log_precision = std::log(static_cast<double>(matches[0]) / static_cast<double>(totals[0]));
  for (int n = 1; n < kOrder; ++n) {
    log_precision += std::log(static_cast<double>(matches[n] + 1) / static_cast<double>(totals[n] + 1));
  }
  const double c = static_cast<double>(cand_len);
  const double r = static_cast<double>(ref_len);
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_precision / kOrder);
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

constexpr std::uint64_t kCatalogSeed = 0xE2E0CA7A;

const std::vector<std::string> kNames = {
    "Alimentum", "Aromi", "Bibimbap House", "Blue Spice", "Browns Cambridge", "Clowns", "Cocum",
    "Cotto", "Fitzbillies", "Giraffe", "Green Man", "Loch Fyne", "Midsummer House", "Strada",
    "Taste of Cambridge", "The Cambridge Blue", "The Cricketers", "The Dumpling Tree", "The Eagle",
    "The Golden Curry", "The Mill", "The Olive Grove", "The Phoenix", "The Plough", "The Punter",
    "The Rice Boat", "The Twenty Two", "The Vaults", "The Waterman", "Wildwood", "Zizzi"};

const std::vector<std::pair<std::string, std::vector<std::string>>> kAttributes = {
    {"area", {"city centre", "riverside"}},
    {"customerRating", {"low", "average", "high", "1 out of 5", "3 out of 5", "5 out of 5"}},
    {"eatType", {"restaurant", "pub", "coffee shop"}},
    {"familyFriendly", {"yes", "no"}},
    {"food", {"Italian", "French", "Chinese", "Indian", "Japanese", "English", "Fast food"}},
    {"near", {"Café Rouge", "Burger King", "Raja Indian Cuisine", "The Bakers", "Crowne Plaza Hotel",
              "All Bar One", "Express by Holiday Inn", "Rainbow Vegetarian Café"}},
    {"priceRange", {"cheap", "moderate", "high", "less than £20", "£20-25", "more than £30"}},
};

std::vector<std::string> realizations(const std::string& attribute, const std::string& v) {
  if (attribute == "eatType") return {"is a " + v, "is a " + v + " venue", "is a nice " + v};
  if (attribute == "food") return {"serves " + v + " food", "offers " + v + " cuisine", "provides " + v + " dishes"};
  if (attribute == "priceRange") return {"has a " + v + " price range", "is priced " + v, "costs " + v};
  if (attribute == "customerRating") {
    return {"has a " + v + " customer rating", "is rated " + v + " by customers", "has " + v + " reviews"};
  }
  if (attribute == "area") return {"is located in the " + v, "is in the " + v + " area", "can be found in the " + v};
  if (attribute == "familyFriendly") {
    if (v == "yes") return {"is family friendly", "welcomes children", "is kid friendly"};
    return {"is not family friendly", "does not welcome children", "is not kid friendly"};
  }
  return {"is near " + v, "is close to " + v, "is located near " + v};
}

std::size_t weighted_pick(Rng& rng, const std::vector<double>& cumulative) {
  const double u = uniform_real(rng) * cumulative.back();
  return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
}

std::vector<double> zipf_cumulative(std::size_t n, double exponent) {
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    cumulative[i] = total;
  }
  return cumulative;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

using Mr = std::vector<std::pair<std::string, std::string>>;

std::vector<Mr> catalog(const SyntheticShape& shape) {
    Rng rng(kCatalogSeed);
    std::set<std::vector<std::size_t>> signature_set;
    while (signature_set.size() < static_cast<std::size_t>(shape.signature_count)) {
      const std::size_t size = 3 + static_cast<std::size_t>(uniform_index(rng, 3));
      std::vector<std::size_t> attrs(kAttributes.size());
      for (std::size_t i = 0; i < attrs.size(); ++i) attrs[i] = i;
      shuffle(attrs, rng);
      attrs.resize(size);
      std::sort(attrs.begin(), attrs.end());
      signature_set.insert(attrs);
    }
    std::vector<std::vector<std::size_t>> signatures(signature_set.begin(), signature_set.end());
    shuffle(signatures, rng);
    const auto sig_weights = zipf_cumulative(signatures.size(), shape.signature_zipf);

    std::set<Mr> mrs;
    while (mrs.size() < static_cast<std::size_t>(shape.catalog_size)) {
      const auto& sig = signatures[weighted_pick(rng, sig_weights)];
      Mr mr{{"name", kNames[uniform_index(rng, kNames.size())]}};
      for (std::size_t a : sig) {
        const auto& [attribute, values] = kAttributes[a];
        mr.emplace_back(attribute, values[uniform_index(rng, values.size())]);
      }
      mrs.insert(std::move(mr));
    }
    std::vector<Mr> out(mrs.begin(), mrs.end());
    shuffle(out, rng);
    return out;
}

}  // namespace

SessionConfig simulation_session_defaults() {
  SessionConfig c;
  c.background_training = false;
  c.retrain_interval = 50;
  c.replay_per_run = 150;
  c.model = ModelDims{32, 1, 2, 64, 40};
  c.training.learning_rate = 0.3;
  c.training.epochs = 5;
  c.training.unlabeled_per_epoch = 1;
  return c;
}

std::string make_synthetic_dataset(int n, std::uint64_t seed, const SyntheticShape& shape) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "dataset size must be positive");
  const auto cat = catalog(shape);
  const auto popularity = zipf_cumulative(cat.size(), shape.record_zipf);
  Rng rng(mix_seed(seed, 0xDA7A));
  std::ostringstream out;
  for (int i = 0; i < n; ++i) {
    const Mr& mr = cat[weighted_pick(rng, popularity)];
    std::vector<std::string> clauses;
    for (std::size_t a = 1; a < mr.size(); ++a) {
      const auto options = realizations(mr[a].first, mr[a].second);
      clauses.push_back(options[uniform_index(rng, options.size())]);
    }
    shuffle(clauses, rng);
    std::string text = mr[0].second + " ";
    for (std::size_t c = 0; c + 1 < clauses.size(); ++c) {
      text += clauses[c];
      text += c + 2 < clauses.size() ? ", " : " and ";
    }
    text += clauses.back() + " .";

    for (std::size_t a = 0; a < mr.size(); ++a) {
      if (a > 0) out << ',';
      out << mr[a].first << ':' << mr[a].second;
    }
    out << '\t' << text << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Simulation

std::string_view sim_strategy_name(SimStrategy s) {
  switch (s) {
    case SimStrategy::kSampler: return "sampler";
    case SimStrategy::kRandom: return "random";
    case SimStrategy::kAll: return "all";
  }
  return "sampler";
}

SimStrategy parse_sim_strategy(std::string_view name) {
  if (name == "sampler") return SimStrategy::kSampler;
  if (name == "random") return SimStrategy::kRandom;
  if (name == "all") return SimStrategy::kAll;
  throw Error(ErrorCode::kConfig, "unknown strategy '" + std::string(name) + "'");
}

std::string SimulationResult::csv() const {
  std::ostringstream out;
  out << "strategy,seed,budget,bleu,runtime_s\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << sim_strategy_name(r.strategy) << ',' << r.seed << ',' << r.budget << ',' << r.bleu << ','
        << r.runtime_s << '\n';
  }
  return out.str();
}

double evaluate_retrieval(const Session& session, const Corpus& test) {
  const auto& delim = session.config().delimiters;
  const auto& tokenizer = session.tokenizer();
  std::vector<TokenList> candidates;
  std::vector<std::vector<TokenList>> references;
  for (const auto& r : test.records()) {
    if (!r.gold_label) throw Error(ErrorCode::kInvalidArgument, "test record " + std::to_string(r.id) + " has no label");
    const auto query = vectorize(linearize(r, delim, tokenizer), session.bow_vocabulary());
    auto prediction = suggest(query, session.pool());
    candidates.push_back(prediction ? prediction->tokens : TokenList{});
    references.push_back({tokenizer.tokenize(*r.gold_label)});
  }
  return bleu(candidates, references);
}

SimulationResult run_simulation(const std::string& pool_text, const std::string& test_text,
                                const SimulationConfig& cfg, std::ostream* log) {
  if (cfg.seeds.empty()) throw Error(ErrorCode::kConfig, "no seeds given");
  if (cfg.budgets.empty()) throw Error(ErrorCode::kConfig, "no budgets given");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  std::vector<int> budgets = cfg.budgets;
  std::sort(budgets.begin(), budgets.end());

  const Corpus pool = parse_corpus(pool_text, cfg.session.delimiters, cfg.session.kind);
  const Corpus test = parse_corpus(test_text, cfg.session.delimiters, cfg.session.kind);
  if (budgets.front() < 1 || static_cast<std::size_t>(budgets.back()) > pool.size()) {
    throw Error(ErrorCode::kConfig, "budgets must lie in [1, " + std::to_string(pool.size()) + "]");
  }
  for (const auto& r : pool.records()) {
    if (!r.gold_label) throw Error(ErrorCode::kConfig, "pool record " + std::to_string(r.id) + " has no gold label");
  }

  SimulationResult result;
  using Clock = std::chrono::steady_clock;
  for (SimStrategy strategy : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      const auto start = Clock::now();
      SessionConfig sc = cfg.session;
      sc.seed = seed;
      sc.k = cfg.k;
      sc.background_training = false;
      sc.strategy = strategy == SimStrategy::kSampler ? Strategy::kSampler : Strategy::kRandom;
      Session session = Session::create(pool_text, sc);

      auto answer = [&](RecordId id) { session.submit_label(id, *session.corpus().at(id).gold_label); };
      if (strategy == SimStrategy::kAll) {
        for (const auto& r : session.corpus().records()) answer(r.id);
        const double score = evaluate_retrieval(session, test);
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        for (int b : budgets) result.rows.push_back({strategy, seed, b, score, elapsed, session.quality()});
        if (log) *log << sim_strategy_name(strategy) << " seed=" << seed << " bleu=" << score << '\n';
        continue;
      }

      for (int budget : budgets) {
        while (session.labeled_count() < static_cast<std::size_t>(budget)) {
          const int want = std::min<int>(cfg.batch_size, budget - static_cast<int>(session.labeled_count()));
          const Batch batch = session.request_batch(want);
          if (batch.items.empty()) break;
          for (const auto& item : batch.items) answer(item.id);
        }
        const double score = evaluate_retrieval(session, test);
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        result.rows.push_back({strategy, seed, budget, score, elapsed, session.quality()});
        if (log) {
          *log << sim_strategy_name(strategy) << " seed=" << seed << " budget=" << budget << " bleu=" << score
               << " t=" << elapsed << "s\n";
        }
      }
    }
  }
  return result;
}

}  // namespace datalabel
