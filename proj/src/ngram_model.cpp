#include "relprompt/ngram_model.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "relprompt/errors.hpp"
#include "relprompt/random.hpp"
#include "relprompt/template_codec.hpp"

namespace relprompt {

namespace {

std::string key2(const std::string& u, const std::string& v) { return u + '\x1f' + v; }

bool reserved(const std::string& w) { return w == kBos || w == kEos || w == kUnk; }

Vocabulary build_vocab(const std::set<std::string>& words) {
  std::vector<std::string> tokens = {std::string(kBos), std::string(kEos), std::string(kUnk)};
  for (const auto& w : words)
    if (!reserved(w)) tokens.push_back(w);
  return Vocabulary(std::move(tokens));
}

}  // namespace

NgramModel::NgramModel(NgramOptions options, std::vector<std::string> base_vocabulary)
    : options_(options), words_(base_vocabulary.begin(), base_vocabulary.end()), vocab_(build_vocab(words_)) {
  if (!(options_.k > 0.0)) throw ConfigError("add-k constant must be positive");
  if (!(options_.copy_prior > 0.0)) throw ConfigError("copy prior must be positive");
  protected_.insert(options_.protected_tokens.begin(), options_.protected_tokens.end());
  anchors_.insert(options_.anchor_tokens.begin(), options_.anchor_tokens.end());
  index_stems();
}

std::string_view word_stem(std::string_view word) {
  std::size_t n = word.size();
  while (n > 0 && (word[n - 1] == '.' || word[n - 1] == ',' || word[n - 1] == ';' || word[n - 1] == ':')) --n;
  return n == 0 ? word : word.substr(0, n);
}

void NgramModel::index_stems() {
  stem_members_.clear();
  for (std::size_t i = 3; i < vocab_.size(); ++i) {
    if (protected_.contains(vocab_.token(i))) continue;
    stem_members_[std::string(word_stem(vocab_.token(i)))].push_back(i);
  }
}

std::size_t NgramModel::copy_source_end(std::span<const std::string> prefix) const {
  for (std::size_t j = prefix.size(); j-- > 0;)
    if (anchors_.contains(prefix[j])) return j;
  return prefix.size();
}

bool NgramModel::copyable(const std::string& w) const {
  return !reserved(w) && !protected_.contains(w);
}

void NgramModel::apply_copy(TokenDistribution& dist, const Followers& f,
                            std::span<const std::string> prefix) const {
  const std::size_t n = prefix.size();
  const std::size_t source = copy_source_end(prefix);
  std::set<std::string_view> context, follow;
  const std::string_view last = word_stem(prefix[n - 1]);
  for (std::size_t j = 0; j < source; ++j) {
    if (!copyable(prefix[j])) continue;
    const std::string_view st = word_stem(prefix[j]);
    if (!stem_members_.contains(std::string(st))) continue;
    context.insert(st);
    if (j + 1 < source && st == last && copyable(prefix[j + 1]) &&
        stem_members_.contains(std::string(word_stem(prefix[j + 1]))))
      follow.insert(word_stem(prefix[j + 1]));
  }
  const auto& candidates = follow.empty() ? context : follow;
  if (candidates.empty()) return;

  std::vector<double> copy(dist.probs.size(), 0.0);
  double z = 0.0;
  for (auto st : candidates)
    for (std::size_t id : stem_members_.at(std::string(st))) {
      copy[id] = dist.probs[id];
      z += dist.probs[id];
    }
  const double a = options_.copy_prior;
  const double g = (static_cast<double>(f.copies) + a) / (static_cast<double>(f.total) + 2.0 * a);
  for (std::size_t i = 0; i < copy.size(); ++i) dist.probs[i] = (1.0 - g) * dist.probs[i] + g * copy[i] / z;
}

bool NgramModel::trained() const {
  std::shared_lock lock(mutex_);
  return unigram_.total > 0;
}

void NgramModel::train(std::span<const std::string> sequences, const TrainConfig& config) {
  config.validate();
  if (sequences.empty()) throw ConfigError("training corpus is empty");
  std::unique_lock lock(mutex_);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& seq : sequences) {
      Tokens toks = split_words(seq);
      toks.emplace_back(kEos);
      std::string u(kBos), v(kBos), a(kBos);
      // Stems before the most recent anchor, and those after it.
      std::set<std::string_view> source;
      std::vector<std::string_view> segment;
      for (const auto& w : toks) {
        const bool copied = options_.copy && copyable(w) &&
                            (source.contains(word_stem(w)) ||
                             (anchors_.empty() && std::find(segment.begin(), segment.end(), word_stem(w)) != segment.end()));
        if (!anchors_.empty()) {
          auto& an = anchored_[key2(a, key2(u, v))];
          ++an.total;
          an.copies += copied;
          ++an.next[w];
          if (anchors_.contains(w)) a = w;
        }
        auto& tri = trigram_[key2(u, v)];
        ++tri.total;
        tri.copies += copied;
        ++tri.next[w];
        auto& bi = bigram_[v];
        ++bi.total;
        bi.copies += copied;
        ++bi.next[w];
        ++unigram_.total;
        unigram_.copies += copied;
        ++unigram_.next[w];
        if (anchors_.contains(w)) {
          source.insert(segment.begin(), segment.end());
          segment.clear();
        } else if (copyable(w)) {
          segment.push_back(word_stem(w));
        }
        if (epoch == 0) words_.insert(w);
        u = std::move(v);
        v = w;
      }
    }
  }

  vocab_ = build_vocab(words_);
  index_stems();
}

std::vector<double> NgramModel::estimate(const Followers& f) const {
  const std::size_t n = vocab_.size();
  const double k = options_.k;
  // BOS is context-only and never predicted.
  const double denom = static_cast<double>(f.total) + k * static_cast<double>(n - 1);
  std::vector<double> probs(n, k / denom);
  probs[0] = 0.0;
  for (const auto& [w, c] : f.next) probs[*vocab_.find(w)] = (static_cast<double>(c) + k) / denom;
  return probs;
}

TokenDistribution NgramModel::next_distribution(std::span<const std::string> prefix) const {
  std::shared_lock lock(mutex_);
  if (unigram_.total == 0) throw BackendError("n-gram model has not been trained");

  auto mapped = [&](const std::string& w) -> std::string {
    return vocab_.find(w) ? w : std::string(kUnk);
  };
  const std::size_t n = prefix.size();
  const std::string v = n >= 1 ? mapped(prefix[n - 1]) : std::string(kBos);
  const std::string u = n >= 2 ? mapped(prefix[n - 2]) : std::string(kBos);

  std::string anchor(kBos);
  if (!anchors_.empty()) {
    for (std::size_t j = n; j-- > 0;)
      if (anchors_.contains(prefix[j])) {
        anchor = prefix[j];
        break;
      }
  }

  const Followers* used = &unigram_;
  if (auto at = anchors_.empty() ? anchored_.end() : anchored_.find(key2(anchor, key2(u, v))); at != anchored_.end())
    used = &at->second;
  else if (auto it = trigram_.find(key2(u, v)); it != trigram_.end())
    used = &it->second;
  else if (auto jt = bigram_.find(v); jt != bigram_.end())
    used = &jt->second;

  TokenDistribution dist;
  dist.probs = estimate(*used);
  if (options_.copy && n > 0) apply_copy(dist, *used, prefix);
  return dist;
}

std::uint64_t NgramModel::fingerprint() const {
  std::shared_lock lock(mutex_);
  std::vector<std::uint64_t> parts;
  auto add_table = [&](const std::unordered_map<std::string, Followers>& table, std::uint64_t salt) {
    for (const auto& [ctx, f] : table) {
      for (const auto& [w, c] : f.next)
        parts.push_back(SplitMix64::mix(fnv1a64(ctx + '\x1e' + w) ^ salt) ^ SplitMix64::mix(c));
    }
  };
  add_table(anchored_, 4);
  add_table(trigram_, 3);
  add_table(bigram_, 2);
  for (const auto& [w, c] : unigram_.next) parts.push_back(SplitMix64::mix(fnv1a64(w) ^ 1) ^ SplitMix64::mix(c));
  std::sort(parts.begin(), parts.end());
  std::uint64_t h = 0;
  for (auto p : parts) h = SplitMix64::mix(h ^ p);
  return h;
}

std::vector<std::string> pretraining_vocabulary(const Dataset& data) {
  std::set<std::string> words;
  for (const auto& s : data.samples()) {
    for (const auto& w : split_words(s.sentence)) {
      for (const std::string& form : {w, std::string(word_stem(w))}) {
        words.insert(form);
        words.insert(form + ",");
        words.insert(form + ".");
      }
    }
  }
  for (const auto& label : data.labels())
    for (auto& w : label_continuation(label)) words.insert(std::move(w));
  for (auto marker : kMarkers)
    for (auto& w : split_words(marker)) words.insert(std::move(w));
  return {words.begin(), words.end()};
}

}  // namespace relprompt
