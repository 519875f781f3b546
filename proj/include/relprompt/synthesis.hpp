#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relprompt/corpus.hpp"
#include "relprompt/errors.hpp"
#include "relprompt/evaluation.hpp"
#include "relprompt/lm_backend.hpp"
#include "relprompt/triplet_search.hpp"

namespace relprompt {

struct SynthesisConfig {
  std::size_t n_per_label = 250;
  SamplingParams sampling;
  // Attempts allowed per requested sample before giving up on a label.
  std::size_t max_attempts_factor = 20;
  // Mixed into every per-attempt sampling seed.
  std::uint64_t seed = 0;
  // Labels generated concurrently.
  std::size_t workers = 1;

  void validate() const;
};

struct LabelGenerationStats {
  std::size_t valid = 0;
  std::size_t discarded = 0;

  friend bool operator==(const LabelGenerationStats&, const LabelGenerationStats&) = default;
};

using GenerationStats = std::map<std::string, LabelGenerationStats>;

class GenerationExhausted : public Error {
 public:
  GenerationExhausted(std::string label, LabelGenerationStats stats);
  const std::string& label() const { return label_; }
  const LabelGenerationStats& stats() const { return stats_; }

 private:
  std::string label_;
  LabelGenerationStats stats_;
};

struct SyntheticData {
  Dataset data;
  GenerationStats stats;
};

// Samples continuations of "Relation: <label>. Context:" until n_per_label outputs per
// label decode into valid single-triplet samples; undecodable outputs are
// discarded and counted. Attempt a of label l uses seed
// attempt_seed(config.seed, l, a). Samples are ordered by label, then
// acceptance order.
SyntheticData generate_synthetic(const LabelSet& labels, const LanguageModel& generator, const SynthesisConfig& config);

enum class DecodeMode { Single, Multi, Both };

struct PipelineConfig {
  SynthesisConfig synthesis;
  BranchParams branch;
  TrainConfig train;
  DecodeMode mode = DecodeMode::Both;
  // Train the extractor on seen data only and mask labels to the unseen set.
  bool no_gen = false;
  // Ablation: skip extractor fine-tuning on seen relations.
  bool skip_extractor_seen = false;
  // Train the final extractor on synthetic plus seen data.
  bool mix_seen_into_synthetic = false;
  bool zerorc = true;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct CandidateRecord {
  std::string sentence_id;
  TripletCandidate candidate;
};

struct PipelineReport {
  std::int64_t fold_seed = 0;
  LabelSet unseen_labels;
  Dataset synthetic;
  GenerationStats generation;
  std::vector<StageTiming> timings;
  MetricsBundle metrics;
  // Unfiltered search candidates on multi-triplet test sentences.
  std::vector<CandidateRecord> candidates;
  // Predictions on every test sentence, keyed like the test set ("0", "1", ...).
  SentenceTriplets predictions;

  std::optional<std::string> failed_stage;
  std::string error;
  bool transport_failure = false;

  bool ok() const { return !failed_stage; }
};

inline constexpr const char* kStageTrainGenerator = "train_generator";
inline constexpr const char* kStageTrainExtractor = "train_extractor";
inline constexpr const char* kStageGenerate = "generate";
inline constexpr const char* kStageTrainSynthetic = "train_extractor_synthetic";
inline constexpr const char* kStagePredict = "predict";

std::vector<std::string> generator_training_texts(const Dataset& data);
std::vector<std::string> extractor_training_texts(const Dataset& data);

// Sentence ids of a dataset: position as a decimal string.
SentenceTriplets gold_by_id(const Dataset& data);

// Runs the five stages in order: train generator on seen data, train
// extractor on seen data, generate for unseen labels, train extractor on the
// synthetic data, predict on the test sentences. A failing stage ends the
// run; the report names it and keeps everything computed before it.
PipelineReport run_relation_prompt(const FoldSplit& fold, LanguageModel& generator, LanguageModel& extractor,
                                   const PipelineConfig& config);

}  // namespace relprompt
