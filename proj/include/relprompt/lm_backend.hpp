#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relprompt/text.hpp"

namespace relprompt {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// Returned by sequence_log_prob when some step has probability zero.
inline constexpr double kLogZero = std::numeric_limits<double>::lowest();

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws ContractError on duplicates or fewer than two tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::optional<std::size_t> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Probabilities aligned with a Vocabulary.
struct TokenDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  // Lowest index among the maximal entries.
  std::size_t argmax() const;
  // Throws BackendError unless entries are non-negative and sum to 1 +- tol.
  void check(double tol = 1e-9) const;
};

struct SamplingParams {
  double temperature = 1.0;
  std::size_t top_k = 50;
  std::size_t max_len = 128;

  void validate() const;
};

// Forwarded verbatim to remote backends; the n-gram model reads only epochs.
struct TrainConfig {
  int epochs = 5;
  double learning_rate = 3e-5;
  double warmup_fraction = 0.2;
  int batch_size = 128;
  double dropout = 0.1;

  void validate() const;
};

// Temperature-scaled softmax over logits, then top-k truncation (ties keep
// the lower index) and renormalization.
TokenDistribution apply_temperature_topk(std::span<const double> logits, const SamplingParams& params);
// Same, treating log(p) as the logits; zero entries stay zero.
TokenDistribution apply_temperature_topk(const TokenDistribution& dist, const SamplingParams& params);

// Word-level autoregressive language model. Inference calls are const and
// may run concurrently; train() needs exclusive access.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual TokenDistribution next_distribution(std::span<const std::string> prefix) const = 0;
  virtual void train(std::span<const std::string> sequences, const TrainConfig& config) = 0;

  // Argmax decoding. Stops after emitting `stop` (kept in the output), on
  // EOS (not kept) or after max_len tokens.
  virtual Tokens greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                              std::size_t max_len) const;

  // Ancestral sampling from apply_temperature_topk(next_distribution(.)),
  // same stopping rules as greedy_until with params.max_len.
  virtual Tokens sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                                 std::span<const std::string> stop, std::uint64_t seed) const;
};

// Sum of log p(token_i | prefix + continuation_<i); kLogZero on a zero step.
double sequence_log_prob(const LanguageModel& model, std::span<const std::string> prefix,
                         std::span<const std::string> continuation);

}  // namespace relprompt
