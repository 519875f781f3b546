#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "relprompt/lm_backend.hpp"

namespace relprompt {

// Test double whose next-token distributions come from a lookup table keyed
// by the full prefix, or from a callback. Training is recorded, not applied.
class ScriptedModel final : public LanguageModel {
 public:
  using Rule = std::function<std::vector<double>(std::span<const std::string> prefix)>;
  using Table = std::map<Tokens, std::map<std::string, double>>;

  // Prefixes missing from the table put all mass on EOS.
  ScriptedModel(std::vector<std::string> tokens, Table table);
  ScriptedModel(std::vector<std::string> tokens, Rule rule);

  const Vocabulary& vocabulary() const override { return vocab_; }
  TokenDistribution next_distribution(std::span<const std::string> prefix) const override;
  void train(std::span<const std::string> sequences, const TrainConfig& config) override;

  std::size_t train_calls() const;

 private:
  Vocabulary vocab_;
  Rule rule_;
  mutable std::mutex mutex_;
  std::size_t train_calls_ = 0;
};

struct CallRecord {
  std::string model;  // role name given to RecordingModel
  std::string kind;   // "train", "sample", "greedy" or "distribution"
  std::string detail; // joined prefix, or the number of training sequences
  std::vector<std::string> sequences;  // training sequences for "train"
};

// Shared, thread-safe call log.
class CallLog {
 public:
  void append(CallRecord record);
  std::vector<CallRecord> records() const;
  std::vector<CallRecord> of_kind(std::string_view kind) const;

 private:
  mutable std::mutex mutex_;
  std::vector<CallRecord> records_;
};

// Decorator that forwards to `inner` and logs each call under `role`.
class RecordingModel final : public LanguageModel {
 public:
  RecordingModel(LanguageModel& inner, std::string role, std::shared_ptr<CallLog> log,
                 bool log_distributions = false);

  const Vocabulary& vocabulary() const override { return inner_.vocabulary(); }
  TokenDistribution next_distribution(std::span<const std::string> prefix) const override;
  void train(std::span<const std::string> sequences, const TrainConfig& config) override;
  Tokens greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                      std::size_t max_len) const override;
  Tokens sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                         std::span<const std::string> stop, std::uint64_t seed) const override;

 private:
  LanguageModel& inner_;
  std::string role_;
  std::shared_ptr<CallLog> log_;
  bool log_distributions_;
};

}  // namespace relprompt
