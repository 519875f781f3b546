#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "relprompt/corpus.hpp"
#include "relprompt/ngram_model.hpp"
#include "relprompt/synthesis.hpp"

namespace relprompt {

using json = nlohmann::ordered_json;

struct BackendSpec {
  enum class Kind { Ngram, Remote };
  Kind kind = Kind::Ngram;
  std::string url;  // Remote only

  // "ngram" or "remote:<url>"; anything else is a ConfigError.
  static BackendSpec parse(const std::string& text);
  std::string str() const;
};

// N-gram settings for the prompt templates: copying on, the four field
// markers as anchors, every marker word protected from copying.
NgramOptions template_ngram_options(double k = 0.01);

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output_dir = "runs";
  std::size_t m = 5;
  std::size_t v = 5;
  std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4};
  PipelineConfig pipeline;
  BackendSpec backend;
  NgramOptions ngram = template_ngram_options();
  std::size_t parallel_folds = 1;

  // Throws ConfigError.
  void validate() const;
};

// Settings for the lexical-cue corpus: m=4, v=2, threshold -3.
RunConfig desk_config();

// Overlays the keys present in `doc` onto `config`. Unknown keys raise
// ConfigError so typos do not pass silently.
void apply_json(RunConfig& config, const json& doc);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
json to_json(const RunConfig& config);

// Fresh model for one pipeline role ("generator" or "extractor").
// `vocabulary_source` seeds the n-gram vocabulary.
std::unique_ptr<LanguageModel> make_backend(const RunConfig& config, const std::string& role,
                                            const Dataset& vocabulary_source);

// Builds fresh backends and runs one fold.
PipelineReport run_fold(const RunConfig& config, const FoldSplit& fold, const Dataset& vocabulary_source);

json to_json(const MetricsBundle& metrics);
json to_json(const GenerationStats& stats);
// Everything except the synthetic samples and candidates, which go to
// their own files.
json to_json(const PipelineReport& report);

// Candidate dump: one {sentence_id, head, tail, label, log_p_head,
// log_p_tail, log_p_rel, score} object per line.
std::string candidates_to_jsonl(const std::vector<CandidateRecord>& candidates);
std::vector<ScoredTriplet> parse_candidates_jsonl(const std::string& content);
std::vector<ScoredTriplet> load_candidates(const std::filesystem::path& path);

// label,f1 rows sorted by label.
std::string per_label_csv(const std::map<std::string, double>& per_label_f1);

// Means over the successful reports.
json aggregate_metrics(const std::vector<PipelineReport>& reports);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace relprompt
