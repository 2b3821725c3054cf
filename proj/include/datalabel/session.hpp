#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "datalabel/clustering.hpp"
#include "datalabel/corpus.hpp"
#include "datalabel/quality.hpp"
#include "datalabel/sampler.hpp"
#include "datalabel/scorer.hpp"
#include "datalabel/suggester.hpp"

namespace datalabel {

inline constexpr std::uint32_t kSessionFormatVersion = 1;

enum class Strategy { kSampler, kRandom };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct SessionConfig {
  RecordKind kind = RecordKind::kAttributeValue;
  DelimiterConfig delimiters;
  TokenizerConfig tokenizer;
  int k = 5;
  std::uint64_t seed = 1;
  int retrain_interval = 50;
  /// Older labels replayed per training run next to the labels added since
  /// the previous run (seeded sample); 0 trains on every label.
  int replay_per_run = 0;
  Strategy strategy = Strategy::kSampler;
  /// false runs training inline inside the submission that triggers it.
  bool background_training = true;
  ModelDims model;
  TrainConfig training;
  StoppingThresholds thresholds;
  int msttr_segment = kDefaultMsttrSegment;

  void validate() const;
  bool operator==(const SessionConfig&) const = default;
};

enum class TrainingPhase { kIdle, kRunning, kFailed };

std::string_view training_phase_name(TrainingPhase phase);

struct TrainingStatus {
  TrainingPhase phase = TrainingPhase::kIdle;
  double progress = 0.0;
  std::string failure;
  std::uint64_t model_version = 0;
  std::uint64_t completed_runs = 0;
  std::uint64_t labels_since_training = 0;
};

struct ExportEntry {
  StructuredRecord record;
  TextLabel label;
};

struct ExportBundle {
  std::vector<ExportEntry> annotated;
  std::vector<ExportEntry> predicted;
  /// Records left without a label because the labeled pool is empty.
  std::vector<StructuredRecord> unlabeled;
  QualityReport quality;
  std::vector<std::pair<std::string, std::string>> config;
  RecordKind kind = RecordKind::kAttributeValue;
  bool explicit_ids = false;
  DelimiterConfig delimiters;

  /// Corpus-format lines `data<TAB>label<TAB>source` in corpus order.
  std::string records_text(const Corpus& corpus) const;
  /// key=value sidecar: quality report followed by the config echo.
  std::string stats_text() const;
};

class Session {
 public:
  static Session create(std::string_view corpus_text, const SessionConfig& config);
  static Session load(const std::string& path);
  static Session from_bytes(std::string_view bytes);

  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  ~Session();

  void save(const std::string& path);
  std::string to_bytes();

  /// Next ids to annotate with suggestions attached; ids already issued
  /// and unanswered are not issued again until the session is reloaded.
  Batch request_batch(int size);
  /// Records a label and returns its provenance. May start training.
  LabelSource submit_label(RecordId id, const std::string& text);

  /// Starts a training run now (no-op returning false if one is running).
  bool start_training();
  /// Blocks until a running background job finishes, then adopts it.
  void wait_for_training();
  /// Adopts a finished background run, if any.
  void poll_training() { adopt_finished(); }
  TrainingStatus training_status() const;

  ExportBundle export_bundle() const;
  std::string export_records_text() const { return export_bundle().records_text(corpus_); }
  std::string export_stats_text() const { return export_bundle().stats_text(); }

  QualityReport quality() const;
  const std::vector<std::pair<std::uint64_t, QualityReport>>& quality_history() const { return history_; }
  StopDecision stop_decision() const { return should_stop(quality(), config_.thresholds); }

  const SessionConfig& config() const { return config_; }
  const Corpus& corpus() const { return corpus_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const TokenVocabulary& bow_vocabulary() const { return bow_vocab_; }
  const ClusterIndex& index() const { return sampler_.index; }
  const SamplerState& sampler() const { return sampler_; }
  const LabeledPool& pool() const { return pool_; }
  const Seq2SeqModel<float>& model() const { return model_; }
  const LinearizedData& linearized(RecordId id) const { return linearized_[corpus_.position(id)]; }
  const std::string& signature(RecordId id) const { return signatures_[corpus_.position(id)]; }
  const std::set<RecordId>& in_flight() const { return in_flight_; }

  std::size_t labeled_count() const { return pool_.size(); }
  std::size_t unlabeled_count() const { return corpus_.size() - pool_.size(); }

 private:
  struct TrainingJob;

  Session() = default;
  void prepare_derived();
  void adopt_finished();
  void launch_training();
  CoverageCounts coverage() const;

  SessionConfig config_;
  Corpus corpus_;
  Tokenizer tokenizer_;
  std::vector<LinearizedData> linearized_;
  std::vector<std::string> signatures_;
  TokenVocabulary bow_vocab_;
  std::vector<BowVector> bows_;

  SamplerState sampler_;
  LabeledPool pool_;
  Seq2SeqModel<float> model_;
  std::map<RecordId, std::optional<std::string>> suggestions_;
  std::set<RecordId> in_flight_;
  QualityAccumulator quality_acc_;
  std::vector<std::pair<std::uint64_t, QualityReport>> history_;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> coverage_;

  std::uint64_t labels_since_training_ = 0;
  std::uint64_t batches_issued_ = 0;
  std::uint64_t completed_runs_ = 0;
  std::string last_failure_;
  std::unique_ptr<TrainingJob> job_;
};

}  // namespace datalabel
