// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any
// fails.

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "datalabel/clustering.hpp"
#include "datalabel/quality.hpp"
#include "datalabel/service.hpp"
#include "datalabel/session.hpp"
#include "datalabel/simulate.hpp"
#include "datalabel/suggester.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sampler_cases.hpp"

#include "httplib.h"

using namespace datalabel;
using nlohmann::json;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

// Runs `body` and reports an exception as a failure of `name`.
template <typename F>
void guarded(const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

std::string temp_path(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("datalabel_acceptance_" + name);
  std::filesystem::remove(p);
  return p.string();
}

std::vector<TextLabel> as_labels(const std::vector<TokenList>& streams) {
  std::vector<TextLabel> out;
  for (std::size_t i = 0; i < streams.size(); ++i) out.push_back({static_cast<RecordId>(i), "", streams[i], LabelSource::kHuman});
  return out;
}

double quality_deviation(const std::vector<TokenList>& streams) {
  const auto got = compute_report(as_labels(streams));
  const auto want = oracle::quality(streams, kDefaultMsttrSegment);
  double dev = 0.0;
  if (got.unique_tokens != want.unique_tokens || got.unique_trigrams != want.unique_trigrams ||
      got.total_tokens != want.total_tokens || got.msttr.has_value() != want.msttr.has_value()) {
    return INFINITY;
  }
  dev = std::max(dev, std::abs(got.shannon_token_entropy - want.shannon));
  dev = std::max(dev, std::abs(got.conditional_bigram_entropy - want.conditional));
  dev = std::max(dev, std::abs(got.ttr - want.ttr));
  if (got.msttr) dev = std::max(dev, std::abs(*got.msttr - *want.msttr));
  return dev;
}

void quality_checks() {
  guarded("quality.oracle_fixtures", [] {
    double worst = 0.0;
    std::size_t largest = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto streams = oracle::random_labels(seed, 1000);
      std::size_t tokens = 0;
      for (const auto& s : streams) tokens += s.size();
      largest = std::max(largest, tokens);
      worst = std::max(worst, quality_deviation(streams));
    }
    report("quality.oracle_fixtures", worst <= 1e-9 && largest <= 1000,
           "10 fixtures, max deviation " + sci(worst) + ", largest " + std::to_string(largest) + " tokens");
  });
  guarded("quality.hand_fixture", [] {
    const std::vector<TokenList> streams{{"the", "cat", "sat", "on", "the", "mat"}};
    const auto r = compute_report(as_labels(streams));
    const bool pass = r.unique_tokens == 5 && r.total_tokens == 6 && std::abs(r.ttr - 0.8333) < 1e-4 &&
                      quality_deviation(streams) <= 1e-9;
    report("quality.hand_fixture", pass, "ttr " + fmt(r.ttr));
  });
}

void scorer_checks() {
  guarded("scorer.gradient_check", [] {
    const Seq2SeqModel<double> m(fixtures::small_vocabulary(), fixtures::tiny_dims(), 3);
    const double err = gradient_check(m, fixtures::gradient_batch(), 200, 1);
    report("scorer.gradient_check", err < 1e-4, "max relative error " + sci(err));
  });
  guarded("scorer.uniform_cross_entropy", [] {
    const auto vocab = fixtures::small_vocabulary();
    const Seq2SeqModel<double> shape(vocab, fixtures::tiny_dims(), 1);
    const Seq2SeqModel<double> zero(vocab, fixtures::tiny_dims(), Eigen::VectorXd::Zero(shape.parameters().size()), 0);
    const std::vector<int> src{5, 6}, tgt{7, 8, 9};
    const double diff = std::abs(zero.sequence_loss(Direction::kToText, src, tgt) - std::log(vocab.size()));
    report("scorer.uniform_cross_entropy", diff <= 1e-9, "|loss - ln V| = " + sci(diff));
  });
  guarded("scorer.overfit", [] {
    const int steps = fixtures::steps_to_reproduce(1, 2000, 4);
    report("scorer.overfit", steps > 0 && steps <= 2000,
           steps > 0 ? "4 pairs reproduced after " + std::to_string(steps) + " steps" : "not reproduced in 2000 steps");
  });
  guarded("scorer.uncertainty_drops", [] {
    int lower = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto [before, after] = fixtures::uncertainty_before_after(seed);
      if (after < before) ++lower;
    }
    report("scorer.uncertainty_drops", lower >= 4, std::to_string(lower) + " of 5 seeds");
  });
}

void clustering_checks() {
  guarded("clustering.partition", [] {
    SessionConfig cfg;
    cfg.background_training = false;
    const auto s = Session::create(make_synthetic_dataset(500, 3), cfg);
    std::multiset<RecordId> seen;
    bool nonempty = true;
    for (const auto& [sig, subs] : s.index().groups) {
      for (const auto& sub : subs) {
        nonempty = nonempty && !sub.member_ids.empty();
        seen.insert(sub.member_ids.begin(), sub.member_ids.end());
      }
    }
    bool exact = seen.size() == 500;
    for (RecordId id = 0; id < 500 && exact; ++id) exact = seen.count(id) == 1;
    report("clustering.partition", exact && nonempty,
           std::to_string(s.index().groups.size()) + " groups cover 500 records exactly once");
  });
  guarded("clustering.exhaustive_min_wcss", [] {
    const std::vector<std::vector<double>> pts{{0.0, 0.1}, {0.2, -0.1}, {-0.1, 0.0},
                                               {5.0, 5.2}, {5.1, 4.9}, {4.8, 5.0}};
    Eigen::MatrixXd m(6, 2);
    for (int i = 0; i < 6; ++i) m.row(i) << pts[static_cast<std::size_t>(i)][0], pts[static_cast<std::size_t>(i)][1];
    const auto [best_cost, best_assignment] = oracle::min_wcss(pts, 2);
    int matched = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto km = kmeans<double>(m, 2, seed);
      const double cost = within_cluster_sum_of_squares<double>(m, km.centroids, km.assignment);
      if (oracle::partition_of(km.assignment) == oracle::partition_of(best_assignment) &&
          std::abs(cost - best_cost) <= 1e-12 * std::max(1.0, best_cost)) {
        ++matched;
      }
    }
    report("clustering.exhaustive_min_wcss", matched == 20, std::to_string(matched) + " of 20 seeds reach WCSS " + fmt(best_cost, 6));
  });
  guarded("clustering.deterministic", [] {
    SessionConfig cfg;
    cfg.background_training = false;
    const auto text = make_synthetic_dataset(500, 4);
    const auto a = Session::create(text, cfg);
    const auto b = Session::create(text, cfg);
    report("clustering.deterministic", a.index() == b.index(), "same seed gives an identical index");
  });
}

void sampler_checks() {
  guarded("sampler.properties", [] {
    const int cases = 300;
    int failed = 0;
    std::string first;
    for (int c = 0; c < cases; ++c) {
      const auto why = sampler_cases::check_case(c);
      if (!why.empty()) {
        if (failed++ == 0) first = " (case " + std::to_string(c) + ": " + why + ")";
      }
    }
    report("sampler.properties", failed == 0, std::to_string(cases - failed) + " of " + std::to_string(cases) + " generated cases" + first);
  });
}

void suggester_checks() {
  guarded("suggester.nearest_neighbour", [] {
    int agree = 0, total = 0;
    for (std::uint64_t fixture = 0; fixture < 50; ++fixture) {
      Rng rng(mix_seed(fixture, 0x55));
      const std::size_t n = 20;
      const std::size_t alphabet = 3 + uniform_index(rng, 6);
      TokenVocabulary vocab;
      std::vector<TokenList> all_tokens;
      for (std::size_t i = 0; i < n; ++i) {
        TokenList tokens;
        const auto len = 1 + uniform_index(rng, 5);
        for (std::uint64_t t = 0; t < len; ++t) tokens.push_back("t" + std::to_string(uniform_index(rng, alphabet)));
        for (const auto& t : tokens) vocab.add(t);
        all_tokens.push_back(tokens);
      }
      std::vector<RecordId> ids(n);
      for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<RecordId>(i);
      for (std::size_t i = n - 1; i > 0; --i) std::swap(ids[i], ids[uniform_index(rng, i + 1)]);
      const std::size_t labeled = 1 + uniform_index(rng, n - 1);
      LabeledPool pool;
      std::vector<std::pair<std::int64_t, std::map<std::string, int>>> bags;
      for (std::size_t i = 0; i < labeled; ++i) {
        const auto id = ids[i];
        const std::string text = "L" + std::to_string(id);
        pool.add(id, vectorize({id, all_tokens[id]}, vocab), {id, text, {text}, LabelSource::kHuman});
        bags.emplace_back(static_cast<std::int64_t>(id), oracle::bag(all_tokens[id]));
      }
      bool ok = true;
      for (std::size_t i = labeled; i < n; ++i) {
        const auto id = ids[i];
        const auto got = suggest(vectorize({id, all_tokens[id]}, vocab), pool);
        const auto expect = bags[oracle::nearest(oracle::bag(all_tokens[id]), bags)].first;
        ok = ok && got && got->text == "L" + std::to_string(expect);
      }
      ++total;
      if (ok) ++agree;
    }
    report("suggester.nearest_neighbour", agree == 50 && total == 50, std::to_string(agree) + " of 50 fixtures");
  });
}

SessionConfig persistence_config() {
  SessionConfig c;
  c.k = 3;
  c.retrain_interval = 10;
  c.background_training = false;
  c.model = ModelDims{16, 1, 2, 32, 32};
  c.training.epochs = 1;
  c.training.unlabeled_per_epoch = 10;
  return c;
}

class Running {
 public:
  explicit Running(const std::string& session_path) {
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.session_path = session_path;
    service_ = std::make_unique<Service>(cfg);
    service_->bind();
    thread_ = std::thread([this] { service_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", service_->port());
    for (int i = 0; i < 100 && !client_->Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Running() {
    service_->stop();
    thread_.join();
  }
  httplib::Client& client() { return *client_; }

 private:
  std::unique_ptr<Service> service_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json session_json() {
  return json{{"k", 3},
              {"seed", 3},
              {"retrain_interval", 10},
              {"background_training", false},
              {"model", {{"model_dim", 16}, {"layers", 1}, {"heads", 2}, {"ff_dim", 32}, {"max_len", 32}}},
              {"training", {{"epochs", 1}, {"unlabeled_per_epoch", 10}}}};
}

json get_json(httplib::Client& c, const std::string& path) {
  const auto r = c.Get(path);
  if (!r || r->status != 200) throw std::runtime_error("GET " + path + " failed");
  return json::parse(r->body);
}

int post_label(httplib::Client& c, RecordId id, const std::string& text) {
  const auto r = c.Post("/labels", json{{"id", id}, {"text", text}}.dump(), "application/json");
  return r ? r->status : 0;
}

void persistence_checks() {
  guarded("persistence.next_batch", [] {
    auto s = Session::create(make_synthetic_dataset(200, 8), persistence_config());
    for (int round = 0; round < 4; ++round) {
      for (auto id : s.request_batch(10).ids()) s.submit_label(id, *s.corpus().at(id).gold_label);
    }
    const auto path = temp_path("resume.dls");
    s.save(path);
    auto loaded = Session::load(path);
    const bool same_bytes = loaded.to_bytes() == s.to_bytes();
    const auto expect = s.request_batch(20).items;
    const auto got = loaded.request_batch(20).items;
    std::filesystem::remove(path);
    report("persistence.next_batch", same_bytes && got == expect && s.training_status().completed_runs >= 4,
           "reloaded session issues the same batch of " + std::to_string(got.size()) + " after " +
               std::to_string(s.training_status().completed_runs) + " training runs");
  });
  guarded("persistence.kill", [] {
    const auto path = temp_path("crash.dls");
    const auto corpus = make_synthetic_dataset(200, 5);
    int port_pipe[2];
    if (::pipe(port_pipe) != 0) throw std::runtime_error("pipe failed");
    const pid_t child = ::fork();
    if (child < 0) throw std::runtime_error("fork failed");
    if (child == 0) {
      ::close(port_pipe[0]);
      try {
        ServiceConfig cfg;
        cfg.port = 0;
        cfg.session_path = path;
        Service service(cfg);
        service.bind();
        const int port = service.port();
        if (::write(port_pipe[1], &port, sizeof port) != sizeof port) ::_exit(2);
        service.listen();
      } catch (...) {
        ::_exit(3);
      }
      ::_exit(0);
    }
    ::close(port_pipe[1]);
    int port = 0;
    const bool got_port = ::read(port_pipe[0], &port, sizeof port) == sizeof port;
    ::close(port_pipe[0]);
    std::map<RecordId, std::string> acknowledged;
    if (got_port) {
      httplib::Client c("127.0.0.1", port);
      auto cfg = session_json();
      cfg["background_training"] = true;
      cfg["retrain_interval"] = 15;
      const auto created = c.Post("/corpus", json{{"corpus", corpus}, {"config", cfg}}.dump(), "application/json");
      if (!created || created->status != 200) throw std::runtime_error("POST /corpus failed");
      const auto gold = parse_corpus(corpus, DelimiterConfig{});
      for (int round = 0; round < 6; ++round) {
        const auto batch = get_json(c, "/batch?size=8");
        for (const auto& item : batch["batch"]) {
          const RecordId id = item["id"];
          if (post_label(c, id, *gold.at(id).gold_label) == 200) acknowledged[id] = *gold.at(id).gold_label;
        }
      }
    }
    ::kill(child, SIGKILL);
    int wstatus = 0;
    ::waitpid(child, &wstatus, 0);
    std::size_t kept = 0;
    const auto restored = Session::load(path);
    std::map<RecordId, std::string> stored;
    for (const auto& e : restored.pool().entries()) stored[e.id] = e.label.text;
    for (const auto& [id, text] : acknowledged) {
      if (stored.count(id) && stored[id] == text) ++kept;
    }
    std::filesystem::remove(path);
    report("persistence.kill", WIFSIGNALED(wstatus) && acknowledged.size() == 48 && kept == acknowledged.size(),
           std::to_string(kept) + " of " + std::to_string(acknowledged.size()) + " acknowledged labels survive SIGKILL");
  });
}

void service_checks() {
  guarded("service.parity", [] {
    const auto corpus = make_synthetic_dataset(80, 21);
    const auto path = temp_path("parity.dls");
    std::string remote_export, remote_stats;
    auto local = Session::create(corpus, session_config_from_json(session_json()));
    bool batches_match = true;
    {
      Running svc(path);
      auto& c = svc.client();
      const auto created = c.Post("/corpus", json{{"corpus", corpus}, {"config", session_json()}}.dump(), "application/json");
      if (!created || created->status != 200) throw std::runtime_error("POST /corpus failed");
      const std::vector<int> sizes{6, 6, 5, 7, 3, 10};
      for (std::size_t round = 0; round < sizes.size(); ++round) {
        const auto remote = get_json(c, "/batch?size=" + std::to_string(sizes[round]));
        const auto batch = local.request_batch(sizes[round]);
        if (remote["batch"].size() != batch.items.size()) batches_match = false;
        for (std::size_t i = 0; i < batch.items.size() && batches_match; ++i) {
          const RecordId id = batch.items[i].id;
          if (remote["batch"][i]["id"] != id) batches_match = false;
          std::string text = *local.corpus().at(id).gold_label;
          if (batch.items[i].suggestion && i % 2 == 0) text = batch.items[i].suggestion->text;
          local.submit_label(id, text);
          if (post_label(c, id, text) != 200) batches_match = false;
        }
      }
      remote_export = c.Get("/export")->body;
      remote_stats = c.Get("/export/stats")->body;
    }
    std::filesystem::remove(path);
    const bool pass = batches_match && remote_export == local.export_records_text() &&
                      remote_stats == local.export_stats_text() && local.training_status().completed_runs >= 2;
    report("service.parity", pass,
           "HTTP export of " + std::to_string(remote_export.size()) + " bytes " +
               (remote_export == local.export_records_text() ? "matches" : "differs from") + " the in-process run");
  });
}

void simulation_checks() {
  const auto start = std::chrono::steady_clock::now();
  SimulationConfig cfg;
  cfg.strategies = {SimStrategy::kSampler, SimStrategy::kRandom, SimStrategy::kAll};
  cfg.budgets = {200, 500, 1000, 2000};
  cfg.batch_size = 20;
  cfg.k = 5;
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto pool = make_synthetic_dataset(2000, 7);
  const auto test = make_synthetic_dataset(500, 1007);
  SimulationResult result;
  try {
    result = run_simulation(pool, test, cfg, &std::cerr);
  } catch (const std::exception& e) {
    for (const char* name : {"simulation.ordering", "simulation.runtime", "simulation.budget_efficiency", "simulation.exhaustion"}) {
      report(name, false, std::string("exception: ") + e.what());
    }
    return;
  }
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;

  std::map<std::pair<SimStrategy, int>, double> mean;
  std::map<std::pair<SimStrategy, std::uint64_t>, std::map<int, double>> per_seed;
  for (const auto& row : result.rows) {
    mean[{row.strategy, row.budget}] += row.bleu / static_cast<double>(cfg.seeds.size());
    per_seed[{row.strategy, row.seed}][row.budget] = row.bleu;
  }
  std::string table;
  for (int b : cfg.budgets) {
    table += " " + std::to_string(b) + ":" + fmt(mean[{SimStrategy::kSampler, b}]) + "/" + fmt(mean[{SimStrategy::kRandom, b}]);
  }

  int strictly = 0;
  bool never_worse = true;
  for (int b : {200, 500, 1000}) {
    const double s = mean[{SimStrategy::kSampler, b}], r = mean[{SimStrategy::kRandom, b}];
    if (s < r) never_worse = false;
    if (s > r) ++strictly;
  }
  report("simulation.ordering", never_worse && strictly >= 2,
         "sampler/random seed-mean BLEU" + table + "; strictly better at " + std::to_string(strictly) + " of 3");
  report("simulation.runtime", minutes < 30.0, fmt(minutes, 1) + " min for 5 seeds x 3 strategies");

  const double all = mean[{SimStrategy::kAll, 2000}];
  const double half = mean[{SimStrategy::kSampler, 1000}];
  report("simulation.budget_efficiency", all - half <= 0.02,
         "sampler at 1000 labels " + fmt(half) + " vs all " + fmt(all) + " (gap " + fmt(all - half) + ")");

  bool equal = true;
  for (std::uint64_t seed : cfg.seeds) {
    const double a = per_seed[{SimStrategy::kAll, seed}].at(2000);
    equal = equal && per_seed[{SimStrategy::kSampler, seed}].at(2000) == a && per_seed[{SimStrategy::kRandom, seed}].at(2000) == a;
  }
  report("simulation.exhaustion", equal, "BLEU at budget 2000 identical across strategies for every seed: " + fmt(all, 6));
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_simulation = argc > 1 && std::string(argv[1]) == "--skip-simulation";
  quality_checks();
  scorer_checks();
  clustering_checks();
  sampler_checks();
  suggester_checks();
  persistence_checks();
  service_checks();
  if (!skip_simulation) simulation_checks();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
