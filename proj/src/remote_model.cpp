#include "relprompt/remote_model.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "relprompt/errors.hpp"

namespace relprompt {

using nlohmann::json;

namespace {

json parse_reply(const std::string& body, const std::string& path) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(path + ": malformed reply: " + e.what());
  }
}

}  // namespace

RemoteModel::RemoteModel(std::string base_url, std::string model, RemoteOptions options)
    : base_url_(std::move(base_url)), model_(std::move(model)), options_(options) {
  if (model_ != "generator" && model_ != "extractor")
    throw ConfigError("remote model role must be \"generator\" or \"extractor\", got \"" + model_ + "\"");
}

std::string RemoteModel::post(const std::string& path, const std::string& body) const {
  httplib::Client cli(base_url_);
  cli.set_read_timeout(options_.request_timeout);
  cli.set_write_timeout(options_.request_timeout);
  auto res = cli.Post(path, body, "application/json");
  if (!res) throw TransportError("POST " + base_url_ + path + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("POST " + base_url_ + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
  return res->body;
}

std::string RemoteModel::get(const std::string& path) const {
  httplib::Client cli(base_url_);
  cli.set_read_timeout(options_.request_timeout);
  auto res = cli.Get(path);
  if (!res) throw TransportError("GET " + base_url_ + path + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("GET " + base_url_ + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
  return res->body;
}

const Vocabulary& RemoteModel::vocabulary() const {
  std::lock_guard lock(mutex_);
  if (!vocab_) {
    const std::string path = "/v1/vocab?model=" + model_;
    auto reply = parse_reply(get(path), path);
    try {
      vocab_.emplace(reply.at("tokens").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw TransportError(path + ": " + e.what());
    }
  }
  return *vocab_;
}

TokenDistribution RemoteModel::next_distribution(std::span<const std::string> prefix) const {
  const auto& vocab = vocabulary();
  json req = {{"model", model_}, {"prefix", Tokens(prefix.begin(), prefix.end())}};
  auto reply = parse_reply(post("/v1/distribution", req.dump()), "/v1/distribution");
  TokenDistribution dist{std::vector<double>(vocab.size(), 0.0)};
  try {
    for (const auto& [tok, p] : reply.at("probs").items()) {
      const auto id = vocab.find(tok);
      if (!id) throw BackendError("server returned unknown token \"" + tok + "\"");
      dist.probs[*id] = p.get<double>();
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("/v1/distribution: ") + e.what());
  }
  // Servers guarantee 1e-6; tighten to the library-wide 1e-9.
  dist.check(1e-6);
  double sum = 0.0;
  for (double p : dist.probs) sum += p;
  for (double& p : dist.probs) p /= sum;
  return dist;
}

Tokens RemoteModel::generate(std::span<const std::string> prefix, const std::string& mode, double temperature,
                             std::size_t top_k, std::size_t max_len, std::span<const std::string> stop,
                             std::uint64_t seed) const {
  json req = {{"model", model_},
              {"prefix", Tokens(prefix.begin(), prefix.end())},
              {"mode", mode},
              {"temperature", temperature},
              {"top_k", top_k},
              {"max_len", max_len},
              {"stop", Tokens(stop.begin(), stop.end())},
              {"seed", seed}};
  auto reply = parse_reply(post("/v1/generate", req.dump()), "/v1/generate");
  try {
    return reply.at("tokens").get<Tokens>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("/v1/generate: ") + e.what());
  }
}

Tokens RemoteModel::greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                                 std::size_t max_len) const {
  return generate(prefix, "greedy", 1.0, vocabulary().size(), max_len, stop, 0);
}

Tokens RemoteModel::sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                                    std::span<const std::string> stop, std::uint64_t seed) const {
  params.validate();
  return generate(prefix, "sample", params.temperature, params.top_k, params.max_len, stop, seed);
}

void RemoteModel::train(std::span<const std::string> sequences, const TrainConfig& config) {
  config.validate();
  if (sequences.empty()) throw ConfigError("training corpus is empty");
  json req = {{"model", model_},
              {"sequences", std::vector<std::string>(sequences.begin(), sequences.end())},
              {"config",
               {{"epochs", config.epochs},
                {"learning_rate", config.learning_rate},
                {"warmup_fraction", config.warmup_fraction},
                {"batch_size", config.batch_size},
                {"dropout", config.dropout}}}};
  auto reply = parse_reply(post("/v1/train", req.dump()), "/v1/train");
  std::string job;
  try {
    job = reply.at("job_id").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("/v1/train: ") + e.what());
  }
  {
    std::lock_guard lock(mutex_);
    last_job_ = job;
  }

  const auto deadline = std::chrono::steady_clock::now() + options_.train_timeout;
  for (;;) {
    const std::string path = "/v1/train/" + job;
    auto status = parse_reply(get(path), path);
    const std::string state = status.value("status", "");
    if (state == "done") break;
    if (state == "failed") throw TransportError("training job " + job + " failed");
    if (state != "running") throw TransportError("training job " + job + " reported status \"" + state + "\"");
    if (std::chrono::steady_clock::now() > deadline)
      throw TransportError("training job " + job + " timed out");
    std::this_thread::sleep_for(options_.poll_interval);
  }

  std::lock_guard lock(mutex_);
  vocab_.reset();
}

std::optional<std::string> RemoteModel::last_job_id() const {
  std::lock_guard lock(mutex_);
  return last_job_;
}

}  // namespace relprompt
