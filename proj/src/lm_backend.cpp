#include "relprompt/lm_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relprompt/errors.hpp"
#include "relprompt/random.hpp"

namespace relprompt {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2) throw ContractError("vocabulary needs at least two tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw ContractError("duplicate vocabulary token \"" + tokens_[i] + "\"");
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TokenDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

void TokenDistribution::check(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw BackendError("distribution has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) throw BackendError("distribution sums to " + std::to_string(sum));
}

void SamplingParams::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("warmup_fraction must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

TokenDistribution apply_temperature_topk(std::span<const double> logits, const SamplingParams& params) {
  params.validate();
  const std::size_t n = logits.size();
  TokenDistribution out{std::vector<double>(n, 0.0)};
  if (n == 0) return out;

  const double top = *std::max_element(logits.begin(), logits.end());
  if (top == -std::numeric_limits<double>::infinity()) throw BackendError("all logits are -inf");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min(params.top_k, n);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });

  double z = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    const double e = std::exp((logits[i] - top) / params.temperature);
    out.probs[i] = e;
    z += e;
  }
  for (double& p : out.probs) p /= z;
  return out;
}

TokenDistribution apply_temperature_topk(const TokenDistribution& dist, const SamplingParams& params) {
  std::vector<double> logits(dist.size());
  std::transform(dist.probs.begin(), dist.probs.end(), logits.begin(), [](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
  auto out = apply_temperature_topk(logits, params);
  // Truncation must not resurrect zero-probability tokens.
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist.probs[i] <= 0.0) out.probs[i] = 0.0;
  return out;
}

Tokens LanguageModel::greedy_until(std::span<const std::string> prefix, std::span<const std::string> stop,
                                   std::size_t max_len) const {
  const auto& vocab = vocabulary();
  Tokens context(prefix.begin(), prefix.end());
  Tokens out;
  while (out.size() < max_len) {
    const auto id = next_distribution(context).argmax();
    const std::string& tok = vocab.token(id);
    if (tok == kEos) break;
    out.push_back(tok);
    context.push_back(tok);
    if (!stop.empty() && ends_with(out, stop)) break;
  }
  return out;
}

Tokens LanguageModel::sample_sequence(std::span<const std::string> prefix, const SamplingParams& params,
                                      std::span<const std::string> stop, std::uint64_t seed) const {
  params.validate();
  const auto& vocab = vocabulary();
  SplitMix64 rng(seed);
  Tokens context(prefix.begin(), prefix.end());
  Tokens out;
  while (out.size() < params.max_len) {
    const auto dist = apply_temperature_topk(next_distribution(context), params);
    const double u = rng.unit();
    double acc = 0.0;
    std::size_t pick = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] <= 0.0) continue;
      acc += dist[i];
      pick = i;
      if (u < acc) break;
    }
    const std::string& tok = vocab.token(pick);
    if (tok == kEos) break;
    out.push_back(tok);
    context.push_back(tok);
    if (!stop.empty() && ends_with(out, stop)) break;
  }
  return out;
}

double sequence_log_prob(const LanguageModel& model, std::span<const std::string> prefix,
                         std::span<const std::string> continuation) {
  const auto& vocab = model.vocabulary();
  Tokens context(prefix.begin(), prefix.end());
  double total = 0.0;
  for (const auto& tok : continuation) {
    const auto dist = model.next_distribution(context);
    const auto id = vocab.find(tok);
    const double p = id ? dist[*id] : 0.0;
    if (p <= 0.0) return kLogZero;
    total += std::log(p);
    context.push_back(tok);
  }
  return total;
}

}  // namespace relprompt
