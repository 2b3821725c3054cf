#include "datalabel/session.hpp"

#include <mutex>
#include <sstream>

#include "datalabel/archive.hpp"

namespace datalabel {
namespace {

constexpr std::string_view kMagic = "DLSESS01";

struct TrainingCancelled {};

std::string trim_copy(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

void write_optional_u64(ArchiveWriter& w, const std::optional<std::uint64_t>& v) {
  w.boolean(v.has_value());
  if (v) w.u64(*v);
}
void write_optional_f64(ArchiveWriter& w, const std::optional<double>& v) {
  w.boolean(v.has_value());
  if (v) w.f64(*v);
}
std::optional<std::uint64_t> read_optional_u64(ArchiveReader& r) {
  if (!r.boolean()) return std::nullopt;
  return r.u64();
}
std::optional<double> read_optional_f64(ArchiveReader& r) {
  if (!r.boolean()) return std::nullopt;
  return r.f64();
}

void write_report(ArchiveWriter& w, const QualityReport& q) {
  w.u64(q.unique_tokens);
  w.u64(q.unique_trigrams);
  w.u64(q.total_tokens);
  w.f64(q.shannon_token_entropy);
  w.f64(q.conditional_bigram_entropy);
  w.f64(q.ttr);
  write_optional_f64(w, q.msttr);
  w.u64(q.labeled_count);
  w.u64(q.per_signature_coverage.size());
  for (const auto& [signature, fraction] : q.per_signature_coverage) {
    w.str(signature);
    w.f64(fraction);
  }
}

QualityReport read_report(ArchiveReader& r) {
  QualityReport q;
  q.unique_tokens = r.u64();
  q.unique_trigrams = r.u64();
  q.total_tokens = r.u64();
  q.shannon_token_entropy = r.f64();
  q.conditional_bigram_entropy = r.f64();
  q.ttr = r.f64();
  q.msttr = read_optional_f64(r);
  q.labeled_count = r.u64();
  for (std::size_t n = r.count(16); n > 0; --n) {
    std::string signature = r.str();
    q.per_signature_coverage[std::move(signature)] = r.f64();
  }
  return q;
}

}  // namespace

std::string_view strategy_name(Strategy s) { return s == Strategy::kRandom ? "random" : "sampler"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "sampler") return Strategy::kSampler;
  if (name == "random") return Strategy::kRandom;
  throw Error(ErrorCode::kConfig, "unknown strategy '" + std::string(name) + "'");
}

std::string_view training_phase_name(TrainingPhase phase) {
  switch (phase) {
    case TrainingPhase::kIdle: return "idle";
    case TrainingPhase::kRunning: return "running";
    case TrainingPhase::kFailed: return "failed";
  }
  return "idle";
}

void SessionConfig::validate() const {
  delimiters.validate();
  if (k < 1) throw Error(ErrorCode::kConfig, "k must be >= 1");
  if (retrain_interval < 1) throw Error(ErrorCode::kConfig, "retrain_interval must be >= 1");
  if (replay_per_run < 0) throw Error(ErrorCode::kConfig, "replay_per_run must be >= 0");
  if (tokenizer.bpe_vocab_size < 1) throw Error(ErrorCode::kConfig, "bpe_vocab_size must be positive");
  if (msttr_segment < 1) throw Error(ErrorCode::kConfig, "msttr_segment must be >= 1");
  model.validate();
  training.validate();
}

// ---------------------------------------------------------------------------
// Background training

struct Session::TrainingJob {
  std::thread thread;
  std::atomic<double> progress{0.0};
  std::atomic<bool> finished{false};
  std::atomic<bool> cancel{false};
  std::mutex mutex;
  std::optional<TrainResult<float>> result;
  ScoreTable scores;
  std::string error;

  ~TrainingJob() {
    cancel = true;
    if (thread.joinable()) thread.join();
  }

  void run(Seq2SeqModel<float> model, std::vector<LinearizedData> unlabeled,
           std::vector<LabeledExample> labeled, TrainConfig cfg) {
    try {
      auto trained = train_round_trip<float>(model, unlabeled, labeled, cfg, [this](double p) {
        if (cancel) throw TrainingCancelled{};
        progress = std::min(p, 1.0);
      });
      ScoreTable table = score_all<float>(trained.model, unlabeled);
      std::lock_guard lock(mutex);
      result = std::move(trained);
      scores = std::move(table);
    } catch (const TrainingCancelled&) {
      std::lock_guard lock(mutex);
      error = "cancelled";
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex);
      error = e.what();
    }
    finished = true;
  }
};

Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;
Session::~Session() = default;

// ---------------------------------------------------------------------------
// Construction

void Session::prepare_derived() {
  linearized_.clear();
  signatures_.clear();
  bows_.clear();
  bow_vocab_ = TokenVocabulary();
  linearized_.reserve(corpus_.size());
  for (const auto& r : corpus_.records()) {
    linearized_.push_back(linearize(r, config_.delimiters, tokenizer_));
    signatures_.push_back(attribute_signature(r, config_.delimiters));
    for (const auto& t : linearized_.back().tokens) bow_vocab_.add(t);
  }
  for (const auto& d : linearized_) bows_.push_back(vectorize(d, bow_vocab_));
  coverage_.clear();
  for (const auto& s : signatures_) ++coverage_[s].second;
}

Session Session::create(std::string_view corpus_text, const SessionConfig& config) {
  config.validate();
  Session s;
  s.config_ = config;
  s.corpus_ = parse_corpus(corpus_text, config.delimiters, config.kind);
  s.config_.kind = s.corpus_.kind();

  if (config.tokenizer.mode == TokenizerMode::kBpe) {
    const auto texts = corpus_texts(s.corpus_, config.delimiters);
    s.tokenizer_ = Tokenizer(config.tokenizer, train_bpe(texts, config.tokenizer.bpe_vocab_size));
  } else {
    s.tokenizer_ = Tokenizer(config.tokenizer);
  }
  s.prepare_derived();

  std::vector<IndexedRecord> indexed;
  indexed.reserve(s.corpus_.size());
  for (std::size_t i = 0; i < s.corpus_.size(); ++i) {
    indexed.push_back({s.corpus_.records()[i].id, s.signatures_[i], s.bows_[i]});
  }
  s.sampler_.index = build_index(indexed, s.bow_vocab_.size(), config.k, config.seed);
  s.sampler_.rng_seed = config.seed;

  ModelVocabulary vocab;
  for (const auto& d : s.linearized_) {
    for (const auto& t : d.tokens) vocab.add(t);
  }
  s.model_ = Seq2SeqModel<float>(std::move(vocab), config.model, config.seed);
  s.quality_acc_ = QualityAccumulator(config.msttr_segment);
  return s;
}

// ---------------------------------------------------------------------------
// Annotation loop

Batch Session::request_batch(int size) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  adopt_finished();
  Batch batch = config_.strategy == Strategy::kSampler
                    ? next_batch(sampler_, size, in_flight_)
                    : random_batch(sampler_, size, mix_seed(sampler_.rng_seed, batches_issued_), in_flight_);
  ++batches_issued_;
  for (auto& item : batch.items) {
    item.suggestion = suggest(bows_[corpus_.position(item.id)], pool_);
    suggestions_[item.id] = item.suggestion ? std::optional<std::string>(item.suggestion->text) : std::nullopt;
    in_flight_.insert(item.id);
  }
  return batch;
}

LabelSource Session::submit_label(RecordId id, const std::string& raw_text) {
  adopt_finished();
  const std::size_t pos = corpus_.position(id);
  if (pool_.contains(id)) throw Error(ErrorCode::kAlreadyLabeled, "record " + std::to_string(id) + " already labeled");
  if (raw_text.find_first_of("\t\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "label text must be a single line without tabs");
  }
  const std::string text = trim_copy(raw_text);
  if (text.empty()) throw Error(ErrorCode::kEmptyText, "empty text");

  LabelSource source = LabelSource::kHuman;
  if (auto it = suggestions_.find(id); it != suggestions_.end() && it->second) {
    source = *it->second == text ? LabelSource::kSuggestedAccepted : LabelSource::kSuggestedCorrected;
  }
  TextLabel label = make_label(id, text, tokenizer_, source);
  quality_acc_.add(label.tokens);
  pool_.add(id, bows_[pos], std::move(label));
  sampler_.labeled.insert(id);
  in_flight_.erase(id);
  ++coverage_[signatures_[pos]].first;
  history_.emplace_back(pool_.size(), quality());
  ++labels_since_training_;

  if (config_.strategy == Strategy::kSampler &&
      labels_since_training_ >= static_cast<std::uint64_t>(config_.retrain_interval) && !job_) {
    launch_training();
  }
  return source;
}

// ---------------------------------------------------------------------------
// Training

bool Session::start_training() {
  adopt_finished();
  if (job_) return false;
  launch_training();
  return true;
}

void Session::launch_training() {
  std::vector<LinearizedData> unlabeled;
  for (std::size_t i = 0; i < linearized_.size(); ++i) {
    if (!pool_.contains(corpus_.records()[i].id)) unlabeled.push_back(linearized_[i]);
  }
  TrainConfig cfg = config_.training;
  cfg.seed = mix_seed(config_.training.seed, completed_runs_);

  // Pool entries are in submission order, so the newest labels are last.
  const auto& entries = pool_.entries();
  std::vector<std::size_t> chosen;
  const std::size_t fresh = std::min<std::size_t>(entries.size(), labels_since_training_);
  const std::size_t older = entries.size() - fresh;
  if (config_.replay_per_run == 0 || older <= static_cast<std::size_t>(config_.replay_per_run)) {
    for (std::size_t i = 0; i < entries.size(); ++i) chosen.push_back(i);
  } else {
    std::vector<std::size_t> old_ids(older);
    for (std::size_t i = 0; i < older; ++i) old_ids[i] = i;
    Rng rng(mix_seed(cfg.seed, 0x5E));
    for (std::size_t i = 0; i < static_cast<std::size_t>(config_.replay_per_run); ++i) {
      std::swap(old_ids[i], old_ids[i + uniform_index(rng, older - i)]);
    }
    chosen.assign(old_ids.begin(), old_ids.begin() + config_.replay_per_run);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i = older; i < entries.size(); ++i) chosen.push_back(i);
  }
  std::vector<LabeledExample> labeled;
  for (std::size_t i : chosen) labeled.push_back({linearized_[corpus_.position(entries[i].id)], entries[i].label});
  if (unlabeled.empty() && labeled.empty()) return;
  labels_since_training_ = 0;
  job_ = std::make_unique<TrainingJob>();
  if (config_.background_training) {
    TrainingJob* job = job_.get();
    job->thread = std::thread([job, model = model_, u = std::move(unlabeled), l = std::move(labeled), cfg]() mutable {
      job->run(std::move(model), std::move(u), std::move(l), cfg);
    });
  } else {
    job_->run(model_, std::move(unlabeled), std::move(labeled), cfg);
    adopt_finished();
  }
}

void Session::adopt_finished() {
  if (!job_ || !job_->finished) return;
  if (job_->thread.joinable()) job_->thread.join();
  {
    std::lock_guard lock(job_->mutex);
    if (job_->result) {
      model_ = std::move(job_->result->model);
      // Scores only cover records that were unlabeled at launch.
      sampler_.scores = std::move(job_->scores);
      ++completed_runs_;
      last_failure_.clear();
    } else {
      last_failure_ = job_->error;
    }
  }
  job_.reset();
}

void Session::wait_for_training() {
  if (job_ && job_->thread.joinable()) job_->thread.join();
  adopt_finished();
}

TrainingStatus Session::training_status() const {
  TrainingStatus s;
  s.model_version = model_.version();
  s.completed_runs = completed_runs_;
  s.labels_since_training = labels_since_training_;
  if (job_) {
    s.phase = TrainingPhase::kRunning;
    s.progress = job_->progress;
  } else if (!last_failure_.empty()) {
    s.phase = TrainingPhase::kFailed;
    s.failure = last_failure_;
  } else {
    // Fraction of the way to the next automatic run.
    s.progress = std::min(1.0, static_cast<double>(labels_since_training_) / config_.retrain_interval);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reporting and export

CoverageCounts Session::coverage() const { return coverage_; }

QualityReport Session::quality() const { return quality_acc_.report(coverage_); }

ExportBundle Session::export_bundle() const {
  ExportBundle b;
  b.kind = corpus_.kind();
  b.explicit_ids = corpus_.explicit_ids();
  b.delimiters = config_.delimiters;
  b.quality = quality();

  std::map<RecordId, const TextLabel*> labeled;
  for (const auto& e : pool_.entries()) labeled.emplace(e.id, &e.label);
  std::vector<PredictionQuery> queries;
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    const RecordId id = corpus_.records()[i].id;
    if (!labeled.count(id)) queries.push_back({id, bows_[i]});
  }
  std::map<RecordId, TextLabel> predictions;
  if (!pool_.empty()) predictions = predict_all(queries, pool_);

  for (const auto& r : corpus_.records()) {
    if (auto it = labeled.find(r.id); it != labeled.end()) {
      b.annotated.push_back({r, *it->second});
    } else if (auto p = predictions.find(r.id); p != predictions.end()) {
      b.predicted.push_back({r, p->second});
    } else {
      b.unlabeled.push_back(r);
    }
  }

  std::ostringstream seed;
  seed << config_.seed;
  b.config = {
      {"kind", std::string(record_kind_name(corpus_.kind()))},
      {"tokenizer", std::string(tokenizer_mode_name(config_.tokenizer.mode))},
      {"lowercase", config_.tokenizer.lowercase ? "true" : "false"},
      {"pair_delimiter", config_.delimiters.pair_delimiter},
      {"attribute_value_separator", config_.delimiters.attribute_value_separator},
      {"attribute_tag_delimiter", config_.delimiters.attribute_tag_delimiter},
      {"k", std::to_string(config_.k)},
      {"seed", seed.str()},
      {"strategy", std::string(strategy_name(config_.strategy))},
      {"retrain_interval", std::to_string(config_.retrain_interval)},
      {"replay_per_run", std::to_string(config_.replay_per_run)},
      {"model_version", std::to_string(model_.version())},
  };
  return b;
}

std::string ExportBundle::records_text(const Corpus& corpus) const {
  std::map<RecordId, const TextLabel*> labels;
  for (const auto& e : annotated) labels.emplace(e.record.id, &e.label);
  for (const auto& e : predicted) labels.emplace(e.record.id, &e.label);

  std::ostringstream out;
  if (kind == RecordKind::kGraph) out << "#kind=graph\n";
  if (explicit_ids) out << "#ids\n";
  for (const auto& r : corpus.records()) {
    if (explicit_ids) out << r.id << '\t';
    out << format_record_data(r, delimiters);
    if (auto it = labels.find(r.id); it != labels.end()) {
      out << '\t' << it->second->text << '\t' << label_source_name(it->second->source);
    }
    out << '\n';
  }
  return out.str();
}

std::string ExportBundle::stats_text() const {
  std::string out = to_key_value_text(quality);
  out += "annotated=" + std::to_string(annotated.size()) + "\n";
  out += "predicted=" + std::to_string(predicted.size()) + "\n";
  for (const auto& [key, value] : config) out += "config." + key + "=" + value + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string Session::to_bytes() {
  adopt_finished();
  ArchiveWriter w;
  w.raw(kMagic);
  w.u32(kSessionFormatVersion);

  const auto& c = config_;
  w.u8(c.kind == RecordKind::kGraph ? 1 : 0);
  w.str(c.delimiters.pair_delimiter);
  w.str(c.delimiters.attribute_tag_delimiter);
  w.str(c.delimiters.attribute_value_separator);
  w.str(tokenizer_mode_name(c.tokenizer.mode));
  w.u64(static_cast<std::uint64_t>(c.tokenizer.bpe_vocab_size));
  w.boolean(c.tokenizer.lowercase);
  w.u64(static_cast<std::uint64_t>(c.k));
  w.u64(c.seed);
  w.u64(static_cast<std::uint64_t>(c.retrain_interval));
  w.u64(static_cast<std::uint64_t>(c.replay_per_run));
  w.str(strategy_name(c.strategy));
  w.boolean(c.background_training);
  for (int v : {c.model.model_dim, c.model.layers, c.model.heads, c.model.ff_dim, c.model.max_len}) {
    w.u64(static_cast<std::uint64_t>(v));
  }
  w.f64(c.training.learning_rate);
  w.u64(static_cast<std::uint64_t>(c.training.batch_size));
  w.u64(static_cast<std::uint64_t>(c.training.epochs));
  w.f64(c.training.clip_norm);
  w.u64(c.training.seed);
  w.u64(static_cast<std::uint64_t>(c.training.unlabeled_per_epoch));
  write_optional_u64(w, c.thresholds.min_labeled);
  write_optional_f64(w, c.thresholds.min_msttr);
  write_optional_f64(w, c.thresholds.min_ttr);
  w.u64(static_cast<std::uint64_t>(c.msttr_segment));

  w.str(format_corpus(corpus_, c.delimiters));
  w.u64(tokenizer_.merges().merges.size());
  for (const auto& [a, b] : tokenizer_.merges().merges) {
    w.str(a);
    w.str(b);
  }
  w.boolean(tokenizer_.config().mode == TokenizerMode::kBpe);

  const auto& index = sampler_.index;
  w.u64(static_cast<std::uint64_t>(index.k));
  w.u64(index.seed);
  w.u64(static_cast<std::uint64_t>(index.dimension));
  w.u64(index.groups.size());
  for (const auto& [signature, clusters] : index.groups) {
    w.str(signature);
    w.u64(clusters.size());
    for (const auto& cl : clusters) {
      for (Eigen::Index i = 0; i < cl.centroid.size(); ++i) w.f64(cl.centroid(i));
      w.u64(cl.member_ids.size());
      for (RecordId id : cl.member_ids) w.u64(id);
    }
  }
  w.u64(sampler_.cursor.group);
  w.u64(sampler_.cursor.cluster);
  w.u64(sampler_.rng_seed);
  w.u64(sampler_.scores.size());
  for (const auto& [id, s] : sampler_.scores) {
    w.u64(id);
    w.f64(s.score);
    w.u64(s.model_version);
  }

  w.u64(pool_.size());
  for (const auto& e : pool_.entries()) {
    w.u64(e.id);
    w.str(e.label.text);
    w.str(label_source_name(e.label.source));
  }
  w.u64(suggestions_.size());
  for (const auto& [id, text] : suggestions_) {
    w.u64(id);
    w.boolean(text.has_value());
    if (text) w.str(*text);
  }

  const auto& vocab = model_.vocabulary().tokens();
  w.u64(vocab.size());
  for (const auto& t : vocab) w.str(t);
  w.u64(model_.version());
  const auto& params = model_.parameters();
  w.u64(static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) w.f32(params(i));

  w.u64(labels_since_training_);
  w.u64(batches_issued_);
  w.u64(completed_runs_);
  w.str(last_failure_);
  w.u64(history_.size());
  for (const auto& [count, report] : history_) {
    w.u64(count);
    write_report(w, report);
  }
  w.raw("END!");
  return w.bytes();
}

void Session::save(const std::string& path) { write_file_atomic(path, to_bytes()); }

Session Session::load(const std::string& path) { return from_bytes(read_file(path)); }

Session Session::from_bytes(std::string_view bytes) {
  ArchiveReader r(bytes);
  if (bytes.size() < kMagic.size() || r.raw(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kIo, "not a session file");
  }
  const std::uint32_t version = r.u32();
  if (version != kSessionFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "session file version " + std::to_string(version) +
                                                 " is not supported (expected version " +
                                                 std::to_string(kSessionFormatVersion) + ")");
  }

  Session s;
  auto& c = s.config_;
  c.kind = r.u8() == 1 ? RecordKind::kGraph : RecordKind::kAttributeValue;
  c.delimiters.pair_delimiter = r.str();
  c.delimiters.attribute_tag_delimiter = r.str();
  c.delimiters.attribute_value_separator = r.str();
  c.tokenizer.mode = parse_tokenizer_mode(r.str());
  c.tokenizer.bpe_vocab_size = static_cast<int>(r.u64());
  c.tokenizer.lowercase = r.boolean();
  c.k = static_cast<int>(r.u64());
  c.seed = r.u64();
  c.retrain_interval = static_cast<int>(r.u64());
  c.replay_per_run = static_cast<int>(r.u64());
  c.strategy = parse_strategy(r.str());
  c.background_training = r.boolean();
  for (int* v : {&c.model.model_dim, &c.model.layers, &c.model.heads, &c.model.ff_dim, &c.model.max_len}) {
    *v = static_cast<int>(r.u64());
  }
  c.training.learning_rate = r.f64();
  c.training.batch_size = static_cast<int>(r.u64());
  c.training.epochs = static_cast<int>(r.u64());
  c.training.clip_norm = r.f64();
  c.training.seed = r.u64();
  c.training.unlabeled_per_epoch = static_cast<int>(r.u64());
  c.thresholds.min_labeled = read_optional_u64(r);
  c.thresholds.min_msttr = read_optional_f64(r);
  c.thresholds.min_ttr = read_optional_f64(r);
  c.msttr_segment = static_cast<int>(r.u64());
  c.validate();

  s.corpus_ = parse_corpus(r.str(), c.delimiters, c.kind);
  BpeMerges merges;
  for (std::size_t n = r.count(16); n > 0; --n) {
    std::string a = r.str();
    merges.merges.emplace_back(std::move(a), r.str());
  }
  s.tokenizer_ = r.boolean() ? Tokenizer(c.tokenizer, std::move(merges)) : Tokenizer(c.tokenizer);
  s.prepare_derived();

  auto& index = s.sampler_.index;
  index.k = static_cast<int>(r.u64());
  index.seed = r.u64();
  index.dimension = static_cast<int>(r.u64());
  if (index.dimension != s.bow_vocab_.size()) throw Error(ErrorCode::kIo, "archive corrupt: index dimension");
  for (std::size_t g = r.count(9); g > 0; --g) {
    std::string signature = r.str();
    std::vector<SubCluster> clusters(r.count(8));
    for (auto& cl : clusters) {
      cl.centroid.resize(index.dimension);
      for (Eigen::Index i = 0; i < index.dimension; ++i) cl.centroid(i) = r.f64();
      cl.member_ids.resize(r.count(8));
      for (auto& id : cl.member_ids) id = r.u64();
    }
    index.groups.emplace(std::move(signature), std::move(clusters));
  }
  s.sampler_.cursor.group = r.u64();
  s.sampler_.cursor.cluster = r.u64();
  s.sampler_.rng_seed = r.u64();
  for (std::size_t n = r.count(24); n > 0; --n) {
    UncertaintyScore score;
    score.record_id = r.u64();
    score.score = r.f64();
    score.model_version = r.u64();
    s.sampler_.scores.emplace(score.record_id, score);
  }

  s.quality_acc_ = QualityAccumulator(c.msttr_segment);
  for (std::size_t n = r.count(24); n > 0; --n) {
    const RecordId id = r.u64();
    std::string text = r.str();
    const LabelSource source = parse_label_source(r.str());
    const std::size_t pos = s.corpus_.position(id);
    TextLabel label = make_label(id, std::move(text), s.tokenizer_, source);
    s.quality_acc_.add(label.tokens);
    s.pool_.add(id, s.bows_[pos], std::move(label));
    s.sampler_.labeled.insert(id);
    ++s.coverage_[s.signatures_[pos]].first;
  }
  for (std::size_t n = r.count(9); n > 0; --n) {
    const RecordId id = r.u64();
    std::optional<std::string> text;
    if (r.boolean()) text = r.str();
    s.suggestions_.emplace(id, std::move(text));
  }

  ModelVocabulary vocab;
  for (std::size_t n = r.count(8); n > 0; --n) vocab.add(r.str());
  const std::uint64_t model_version = r.u64();
  Eigen::VectorXf params(static_cast<Eigen::Index>(r.count(4)));
  for (Eigen::Index i = 0; i < params.size(); ++i) params(i) = r.f32();
  s.model_ = Seq2SeqModel<float>(std::move(vocab), c.model, std::move(params), model_version);

  s.labels_since_training_ = r.u64();
  s.batches_issued_ = r.u64();
  s.completed_runs_ = r.u64();
  s.last_failure_ = r.str();
  for (std::size_t n = r.count(8); n > 0; --n) {
    const std::uint64_t count = r.u64();
    s.history_.emplace_back(count, read_report(r));
  }
  if (r.raw(4) != "END!" || !r.at_end()) throw Error(ErrorCode::kIo, "archive corrupt: bad trailer");
  return s;
}

}  // namespace datalabel
