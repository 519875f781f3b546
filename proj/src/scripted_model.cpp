#include "relprompt/scripted_model.hpp"

#include "relprompt/errors.hpp"

namespace relprompt {

ScriptedModel::ScriptedModel(std::vector<std::string> tokens, Table table) : vocab_(std::move(tokens)) {
  const auto eos = vocab_.find(kEos);
  if (!eos) throw ContractError("scripted vocabulary needs an EOS token");
  for (const auto& [prefix, probs] : table)
    for (const auto& [tok, p] : probs)
      if (!vocab_.find(tok)) throw ContractError("scripted token \"" + tok + "\" is not in the vocabulary");
  rule_ = [this, table = std::move(table), eos = *eos](std::span<const std::string> prefix) {
    std::vector<double> probs(vocab_.size(), 0.0);
    auto it = table.find(Tokens(prefix.begin(), prefix.end()));
    if (it == table.end()) {
      probs[eos] = 1.0;
    } else {
      for (const auto& [tok, p] : it->second) probs[*vocab_.find(tok)] = p;
    }
    return probs;
  };
}

ScriptedModel::ScriptedModel(std::vector<std::string> tokens, Rule rule)
    : vocab_(std::move(tokens)), rule_(std::move(rule)) {}

TokenDistribution ScriptedModel::next_distribution(std::span<const std::string> prefix) const {
  TokenDistribution d{rule_(prefix)};
  if (d.size() != vocab_.size()) throw BackendError("scripted rule returned the wrong width");
  return d;
}

void ScriptedModel::train(std::span<const std::string> sequences, const TrainConfig& config) {
  config.validate();
  if (sequences.empty()) throw ConfigError("training corpus is empty");
  std::lock_guard lock(mutex_);
  ++train_calls_;
}

std::size_t ScriptedModel::train_calls() const {
  std::lock_guard lock(mutex_);
  return train_calls_;
}

void CallLog::append(CallRecord record) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<CallRecord> CallLog::of_kind(std::string_view kind) const {
  std::lock_guard lock(mutex_);
  std::vector<CallRecord> out;
  for (const auto& r : records_)
    if (r.kind == kind) out.push_back(r);
  return out;
}

RecordingModel::RecordingModel(LanguageModel& inner, std::string role, std::shared_ptr<CallLog> log,
                               bool log_distributions)
    : inner_(inner), role_(std::move(role)), log_(std::move(log)), log_distributions_(log_distributions) {}

TokenDistribution RecordingModel::next_distribution(std::span<const std::string> prefix) const {
  if (log_distributions_) log_->append({role_, "distribution", join_words(prefix), {}});
  return inner_.next_distribution(prefix);
}

void RecordingModel::train(std::span<const std::string> sequences, const TrainConfig& config) {
  log_->append({role_, "train", std::to_string(sequences.size()), {sequences.begin(), sequences.end()}});
  inner_.train(sequences, config);
}

Tokens RecordingModel::greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                                    std::size_t max_len) const {
  log_->append({role_, "greedy", join_words(prefix), {}});
  return inner_.greedy_until(prefix, stop, max_len);
}

Tokens RecordingModel::sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                                       std::span<const std::string> stop, std::uint64_t seed) const {
  log_->append({role_, "sample", join_words(prefix), {}});
  return inner_.sample_sequence(prefix, params, stop, seed);
}

}  // namespace relprompt
