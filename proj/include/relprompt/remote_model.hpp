#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>

#include "relprompt/lm_backend.hpp"

namespace relprompt {

struct RemoteOptions {
  std::chrono::milliseconds poll_interval{200};
  std::chrono::seconds train_timeout{24 * 3600};
  std::chrono::seconds request_timeout{300};
};

// Client for a model server speaking the JSON-over-HTTP protocol:
//
//   POST /v1/distribution  {"model","prefix"}                -> {"probs":{token:prob}}
//   POST /v1/generate      {"model","prefix","mode","temperature","top_k",
//                           "max_len","stop","seed"}         -> {"tokens":[...]}
//   POST /v1/train         {"model","sequences","config"}    -> {"job_id"}
//   GET  /v1/train/<id>                                      -> {"status":"running"|"done"|"failed"}
//   GET  /v1/vocab?model=<role>                              -> {"tokens":[...]}
//
// Transport failures and non-2xx replies raise TransportError.
class RemoteModel final : public LanguageModel {
 public:
  RemoteModel(std::string base_url, std::string model, RemoteOptions options = {});

  const Vocabulary& vocabulary() const override;
  TokenDistribution next_distribution(std::span<const std::string> prefix) const override;
  // Blocks until the server reports the job done; a failed job raises
  // TransportError carrying the job id.
  void train(std::span<const std::string> sequences, const TrainConfig& config) override;
  Tokens greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                      std::size_t max_len) const override;
  Tokens sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                         std::span<const std::string> stop, std::uint64_t seed) const override;

  const std::string& model() const { return model_; }
  std::optional<std::string> last_job_id() const;

 private:
  std::string post(const std::string& path, const std::string& body) const;
  std::string get(const std::string& path) const;
  Tokens generate(std::span<const std::string> prefix, const std::string& mode, double temperature,
                  std::size_t top_k, std::size_t max_len, std::span<const std::string> stop,
                  std::uint64_t seed) const;

  std::string base_url_;
  std::string model_;
  RemoteOptions options_;
  mutable std::mutex mutex_;
  mutable std::optional<Vocabulary> vocab_;
  std::optional<std::string> last_job_;
};

}  // namespace relprompt
