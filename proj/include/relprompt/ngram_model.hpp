#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "relprompt/corpus.hpp"
#include "relprompt/lm_backend.hpp"

namespace relprompt {

struct NgramOptions {
  // Add-k pseudo-count.
  double k = 0.1;
  // Copy mechanism, off by default (plain trigram). Let stem(w) be w without
  // trailing ".,;:". With copying on,
  //   p(w) = (1 - g) p_trigram(w) + g p_copy(w)
  // where p_copy is p_trigram restricted to the candidate stems and
  // renormalised. The copy source is the prefix up to its most recent anchor
  // token (the whole prefix if it has none). Candidates are the source stems
  // that followed an occurrence of the last token's stem, or every source
  // stem if there are none.
  // The gate g is estimated from the same context counts as p_trigram: the
  // fraction of training tokens in that context whose stem occurs in their
  // copy source, with `copy_prior` pseudo-counts on each side.
  // Tokens in `protected_tokens` are never copied.
  bool copy = false;
  double copy_prior = 0.5;
  std::vector<std::string> protected_tokens;
  // When non-empty, the most recent anchor token in the prefix (or BOS if
  // there is none) is added to the trigram context as a first backoff level.
  std::vector<std::string> anchor_tokens;
};

// Add-k smoothed trigram model over whitespace tokens. Sequences are padded
// with two BOS markers and closed with EOS. A context that was never
// observed falls back to the bigram estimate, then the unigram estimate.
// The vocabulary is kept sorted (reserved markers first) so the model
// depends only on the multiset of training sequences.
class NgramModel final : public LanguageModel {
 public:
  // `base_vocabulary` lists words known before any training, the way a
  // pretrained tokenizer covers text the model has not been tuned on.
  explicit NgramModel(NgramOptions options = {}, std::vector<std::string> base_vocabulary = {});

  const Vocabulary& vocabulary() const override { return vocab_; }
  TokenDistribution next_distribution(std::span<const std::string> prefix) const override;
  // Adds one pass of counts per epoch; repeated calls accumulate.
  void train(std::span<const std::string> sequences, const TrainConfig& config) override;

  bool trained() const;
  // Order-independent hash of all counts.
  std::uint64_t fingerprint() const;
  const NgramOptions& options() const { return options_; }

 private:
  struct Followers {
    std::uint64_t total = 0;
    std::uint64_t copies = 0;
    std::map<std::string, std::uint64_t> next;
  };

  std::vector<double> estimate(const Followers& f) const;

  NgramOptions options_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Followers> anchored_;  // key "a\x1fu\x1fv"
  std::unordered_map<std::string, Followers> trigram_;  // key "u\x1fv"
  std::unordered_map<std::string, Followers> bigram_;   // key "v"
  Followers unigram_;
  void index_stems();
  bool copyable(const std::string& w) const;
  std::size_t copy_source_end(std::span<const std::string> prefix) const;
  void apply_copy(TokenDistribution& dist, const Followers& f, std::span<const std::string> prefix) const;

  std::set<std::string> words_;
  Vocabulary vocab_;
  std::unordered_map<std::string, std::vector<std::size_t>> stem_members_;
  std::set<std::string> protected_;
  std::set<std::string> anchors_;
};

// `word` without its trailing run of ".,;:" (unchanged if that leaves nothing).
std::string_view word_stem(std::string_view word);

// Word-level vocabulary covering a dataset's sentences (each word and its
// stem, also with a trailing ',' and '.'), its label spellings and the
// template markers.
std::vector<std::string> pretraining_vocabulary(const Dataset& data);

}  // namespace relprompt
