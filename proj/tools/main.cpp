#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "datalabel/archive.hpp"
#include "datalabel/service.hpp"
#include "datalabel/simulate.hpp"

namespace {

using namespace datalabel;

template <class T>
std::vector<T> split_list(const std::string& raw, const char* what) {
  std::vector<T> out;
  std::stringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream parse(item);
    T value{};
    if (!(parse >> value) || !parse.eof()) throw CLI::ValidationError(what, "bad list element '" + item + "'");
    out.push_back(value);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning annotation engine for data-to-text corpora"};
  app.require_subcommand(1);

  int synth_n = 2000;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  SyntheticShape shape;
  auto* synth = app.add_subcommand("synth", "Write a synthetic attribute-value corpus with gold labels");
  synth->add_option("--n", synth_n, "Record count")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Sampling seed");
  synth->add_option("--out", synth_out, "Output path (stdout when omitted)");
  synth->add_option("--catalog-size", shape.catalog_size, "Distinct meaning representations");
  synth->add_option("--signatures", shape.signature_count, "Distinct attribute signatures");
  synth->add_option("--signature-zipf", shape.signature_zipf, "Zipf exponent over signatures");
  synth->add_option("--record-zipf", shape.record_zipf, "Zipf exponent over catalog entries");

  std::string sim_data, sim_test, sim_out, sim_strategy = "sampler,random,all", sim_budgets = "200,500,1000,2000",
                                               sim_seeds = "1,2,3,4,5";
  SimulationConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Replay gold labels under a strategy and score BLEU per budget");
  simulate->add_option("--data", sim_data, "Pool corpus with gold labels")->required()->check(CLI::ExistingFile);
  simulate->add_option("--test", sim_test, "Held-out corpus with gold labels")->required()->check(CLI::ExistingFile);
  simulate->add_option("--strategy", sim_strategy, "Comma-separated strategies: sampler, random, all");
  simulate->add_option("--budgets", sim_budgets, "Comma-separated label budgets");
  simulate->add_option("--batch-size", sim.batch_size, "Batch size")->check(CLI::PositiveNumber);
  simulate->add_option("--k", sim.k, "Sub-clusters per signature")->check(CLI::PositiveNumber);
  simulate->add_option("--seeds", sim_seeds, "Comma-separated seeds");
  simulate->add_option("--out", sim_out, "CSV output path (stdout when omitted)");
  simulate->add_option("--retrain-interval", sim.session.retrain_interval, "Labels between training runs");
  simulate->add_option("--replay", sim.session.replay_per_run, "Older labels replayed per training run (0 = all)");
  simulate->add_option("--epochs", sim.session.training.epochs, "Epochs per training run");
  simulate->add_option("--learning-rate", sim.session.training.learning_rate, "SGD learning rate");
  simulate->add_option("--model-dim", sim.session.model.model_dim, "Transformer width");
  simulate->add_option("--layers", sim.session.model.layers, "Transformer depth");
  bool sim_quiet = false;
  simulate->add_flag("--quiet", sim_quiet, "No progress log on stderr");

  ServiceConfig service;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--bind", service.bind_address, "Bind address");
  serve_cmd->add_option("--port", service.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--session", service.session_path, "Session file");
  serve_cmd->add_option("--cors", service.cors_origins, "Allowed CORS origin ('*' for any)");
  serve_cmd->add_option("--max-request-bytes", service.max_request_bytes, "Request body limit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      write_output(synth_out, make_synthetic_dataset(synth_n, synth_seed, shape));
    } else if (*simulate) {
      sim.strategies.clear();
      for (const auto& name : split_list<std::string>(sim_strategy, "--strategy")) {
        sim.strategies.push_back(parse_sim_strategy(name));
      }
      sim.budgets = split_list<int>(sim_budgets, "--budgets");
      sim.seeds = split_list<std::uint64_t>(sim_seeds, "--seeds");
      const auto result = run_simulation(read_file(sim_data), read_file(sim_test), sim,
                                         sim_quiet ? nullptr : &std::cerr);
      write_output(sim_out, result.csv());
    } else if (*serve_cmd) {
      Service server(service);
      server.bind();
      std::cerr << "listening on " << service.bind_address << ":" << server.port() << "\n";
      serve(server);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
