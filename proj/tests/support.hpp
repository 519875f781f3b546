// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "relprompt/corpus.hpp"
#include "relprompt/lm_backend.hpp"
#include "relprompt/random.hpp"
#include "relprompt/scripted_model.hpp"
#include "relprompt/text.hpp"
#include "relprompt/triplet_search.hpp"

namespace relprompt::fixtures {

inline std::string eos() { return std::string(kEos); }

// Position just after the last "Head Entity:" pair, i.e. where the
// extractor's output begins.
inline std::size_t output_start(std::span<const std::string> prefix) {
  for (std::size_t i = prefix.size(); i-- > 1;)
    if (prefix[i - 1] == "Head" && prefix[i] == "Entity:") return i + 1;
  return prefix.size();
}

// Random scripted extractor over an 8-token vocabulary. Each prefix gets
// its own pseudo-random distribution; a loose grammar biases it toward
// well-formed outputs so that some branches parse and others loop, stop
// early or name entities that are not in the sentence.
inline std::shared_ptr<ScriptedModel> random_extractor(std::uint64_t seed) {
  std::vector<std::string> tokens = {eos(), "Tail", "Entity:", "Relation:", "A", "A,", "B,", "r."};
  auto rule = [tokens, seed](std::span<const std::string> prefix) {
    const std::size_t start = output_start(prefix);
    std::string key;
    for (std::size_t i = start; i < prefix.size(); ++i) key += prefix[i] + ' ';
    SplitMix64 rng(seed ^ fnv1a64(key));
    std::vector<double> w(tokens.size());
    for (auto& x : w) {
      const double u = rng.unit();
      x = u < 0.25 ? 0.0 : u * u * u;
    }
    const std::string last = prefix.empty() ? "" : prefix.back();
    bool in_tail = false;
    for (std::size_t i = start; i < prefix.size(); ++i) in_tail = in_tail || prefix[i] == "Tail";
    std::size_t expected;
    if (last == "Tail") expected = 2;
    else if (last == "r.") expected = 0;
    else if (!last.empty() && last.back() == ',') expected = in_tail ? 3 : 1;
    else if (last == "Entity:" || last == "Relation:" || last == "A") expected = 4 + rng.below(4);
    else expected = rng.below(tokens.size());
    w[expected] += 1.5 * rng.unit();
    double z = 0.0;
    for (double x : w) z += x;
    if (z == 0.0) {
      w[0] = 1.0;
      z = 1.0;
    }
    for (auto& x : w) x /= z;
    return w;
  };
  return std::make_shared<ScriptedModel>(tokens, rule);
}

inline const char* kRandomSentence = "A B A B";

// Brute-force triplet search written against next_distribution only: rank
// every token at each stage by (probability desc, id asc), keep the first b
// non-zero ones, extend each by argmax stepping, parse with a regex.
struct OracleCandidate {
  std::string head, tail, label;
  double score;
};

inline std::vector<std::size_t> oracle_rank(const TokenDistribution& d, std::size_t b) {
  std::vector<std::size_t> ids(d.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  std::sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) {
    return d[x] != d[y] ? d[x] > d[y] : x < y;
  });
  std::vector<std::size_t> out;
  for (auto id : ids)
    if (d[id] > 0.0 && out.size() < b) out.push_back(id);
  return out;
}

// Appends argmax tokens until the appended tokens end with `stop` (true),
// EOS or the budget (false). An empty stop succeeds only on EOS.
inline bool oracle_extend(const LanguageModel& m, Tokens& ctx, const Tokens& stop, std::size_t budget) {
  const auto& v = m.vocabulary();
  const std::size_t begin = ctx.size();
  for (std::size_t n = 0; n < budget; ++n) {
    const auto d = m.next_distribution(ctx);
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
      if (d[i] > d[best]) best = i;
    const std::string tok = v.token(best);
    if (tok == kEos) return stop.empty();
    ctx.push_back(tok);
    if (!stop.empty() && ctx.size() - begin >= stop.size() &&
        std::equal(stop.begin(), stop.end(), ctx.end() - static_cast<std::ptrdiff_t>(stop.size())))
      return true;
  }
  return false;
}

inline std::vector<OracleCandidate> oracle_search(const std::string& sentence, const LanguageModel& m, std::size_t b,
                                                  std::size_t budget = 128) {
  const auto& v = m.vocabulary();
  Tokens root = split_words("Context: " + sentence + ". Head Entity:");
  const std::size_t out_begin = root.size() - 2;
  std::map<std::tuple<std::string, std::string, std::string>, double> best;

  for (auto h : oracle_rank(m.next_distribution(root), b)) {
    const double ph = m.next_distribution(root)[h];
    if (v.token(h) == kEos) continue;
    Tokens c1 = root;
    c1.push_back(v.token(h));
    if (!oracle_extend(m, c1, {"Tail", "Entity:"}, budget)) continue;
    for (auto t : oracle_rank(m.next_distribution(c1), b)) {
      const double pt = m.next_distribution(c1)[t];
      if (v.token(t) == kEos) continue;
      Tokens c2 = c1;
      c2.push_back(v.token(t));
      if (!oracle_extend(m, c2, {"Relation:"}, budget)) continue;
      for (auto r : oracle_rank(m.next_distribution(c2), b)) {
        const double pr = m.next_distribution(c2)[r];
        if (v.token(r) == kEos) continue;
        Tokens c3 = c2;
        c3.push_back(v.token(r));
        if (!oracle_extend(m, c3, {}, budget)) continue;
        std::string text;
        for (std::size_t i = out_begin; i < c3.size(); ++i) text += (i > out_begin ? " " : "") + c3[i];
        static const std::regex re(R"(^Head Entity: (.+?),? Tail Entity: (.+?),? Relation: (.+?)\.?$)");
        std::smatch mt;
        if (!std::regex_match(text, mt, re)) continue;
        const std::string head = mt[1], tail = mt[2], label = mt[3];
        if (head.empty() || tail.empty() || label.empty()) continue;
        static const std::regex marker(R"(Context:|Head Entity:|Tail Entity:|Relation:)");
        if (std::regex_search(head, marker) || std::regex_search(tail, marker) || std::regex_search(label, marker))
          continue;
        if (sentence.find(head) == std::string::npos || sentence.find(tail) == std::string::npos) continue;
        const double score = std::log(ph) + std::log(pt) + std::log(pr);
        auto key = std::make_tuple(head, tail, label);
        auto it = best.find(key);
        if (it == best.end() || score > it->second) best[key] = score;
      }
    }
  }
  std::vector<OracleCandidate> out;
  for (const auto& [k, s] : best) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), s});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b2) {
    if (a.score != b2.score) return a.score > b2.score;
    return std::tie(a.head, a.tail, a.label) < std::tie(b2.head, b2.tail, b2.label);
  });
  return out;
}

// Extractor whose three first-token distributions are given per stage and
// whose intermediate greedy steps always put `filler` on the right token.
// The head choice is remembered through the branch: tail_given_head maps
// head token -> distribution over tail tokens.
struct StagedExtractorSpec {
  std::map<std::string, double> head;
  std::map<std::string, std::map<std::string, double>> tail_given_head;
  std::map<std::string, double> rel;
  double filler = 1.0;
};

inline std::shared_ptr<ScriptedModel> staged_extractor(const StagedExtractorSpec& spec) {
  std::vector<std::string> tokens = {eos(), "Tail", "Entity:", "Relation:", "junk"};
  auto add = [&](const std::string& t) {
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  };
  for (const auto& [t, p] : spec.head) add(t);
  for (const auto& [h, d] : spec.tail_given_head)
    for (const auto& [t, p] : d) add(t);
  for (const auto& [t, p] : spec.rel) add(t);

  auto rule = [tokens, spec](std::span<const std::string> prefix) {
    std::vector<double> w(tokens.size(), 0.0);
    auto id = [&](const std::string& t) {
      return static_cast<std::size_t>(std::find(tokens.begin(), tokens.end(), t) - tokens.begin());
    };
    auto fill = [&](const std::map<std::string, double>& d) {
      double used = 0.0;
      for (const auto& [t, p] : d) {
        w[id(t)] = p;
        used += p;
      }
      w[id("junk")] += 1.0 - used;
    };
    // Intermediate step: `next` with probability `filler`, rest on "junk".
    auto step = [&](const std::string& next) {
      w[id(next)] = spec.filler;
      w[id("junk")] += 1.0 - spec.filler;
    };
    const std::size_t s = output_start(prefix);
    const std::size_t n = prefix.size() - s;
    if (n == 0) fill(spec.head);
    else if (n == 1) step("Tail");
    else if (n == 2) step("Entity:");
    else if (n == 3) fill(spec.tail_given_head.at(prefix[s]));
    else if (n == 4) step("Relation:");
    else if (n == 5) fill(spec.rel);
    else step(eos());
    return w;
  };
  return std::make_shared<ScriptedModel>(tokens, rule);
}

}  // namespace relprompt::fixtures

namespace relprompt::fixtures {

// `labels` relations "rel00".."relNN", `per_label` sentences each; every
// fifth sentence also states a triplet of the next relation, so some
// sentences straddle label sets.
inline Dataset label_corpus(std::size_t labels = 20, std::size_t per_label = 6) {
  std::vector<Sample> out;
  auto name = [](std::size_t i) {
    std::string s = "rel" + std::to_string(i);
    if (i < 10) s.insert(3, "0");
    return s;
  };
  for (std::size_t l = 0; l < labels; ++l) {
    for (std::size_t k = 0; k < per_label; ++k) {
      const std::string a = "E" + std::to_string(l) + "x" + std::to_string(k);
      const std::string b = "F" + std::to_string(l) + "x" + std::to_string(k);
      Sample s{a + " relates to " + b + " and " + b + " returns.", {{a, b, name(l)}}};
      if (k % 5 == 4) s.triplets.push_back({b, a, name((l + 1) % labels)});
      out.push_back(std::move(s));
    }
  }
  return Dataset(std::move(out));
}

}  // namespace relprompt::fixtures

namespace relprompt::fixtures {

// Random marker-free words, some with trailing punctuation.
inline std::string random_phrase(SplitMix64& rng, std::size_t max_words) {
  static const char* pieces[] = {"Ab", "cd", "Efg", "h", "Ij-k", "lmn", "O'p", "q1", "rs", "Tu", "v.w", "xyz",
                                 "Ent", "Rel", "Tail", "Head", "Context", "ation", "é", "東京"};
  std::string out;
  const std::size_t n = 1 + rng.below(max_words);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += pieces[rng.below(std::size(pieces))];
    if (rng.below(6) == 0 && i + 1 < n) out += ',';
  }
  return out;
}

// Generator that ignores the distribution machinery: attempt n of a label
// (counted per label) is invalid when `invalid(n)` holds.
class CountingGenerator final : public LanguageModel {
 public:
  explicit CountingGenerator(std::function<bool(std::size_t)> invalid)
      : vocab_({std::string(kEos), "x"}), invalid_(std::move(invalid)) {}

  const Vocabulary& vocabulary() const override { return vocab_; }
  TokenDistribution next_distribution(std::span<const std::string>) const override { return {{1.0, 0.0}}; }
  void train(std::span<const std::string>, const TrainConfig&) override {}

  Tokens sample_sequence(std::span<const std::string> prefix, const SamplingParams&, std::span<const std::string>,
                         std::uint64_t) const override {
    // prefix: Relation: <label words> Context:
    std::string label = join_words(prefix.subspan(1, prefix.size() - 2));
    label.pop_back();
    std::size_t n;
    {
      std::lock_guard lock(mutex_);
      n = counter_[label]++;
    }
    const std::string a = "Ann" + std::to_string(n), b = "Bo" + std::to_string(n);
    if (invalid_(n)) return split_words(a + " met " + b + ". Head Entity: Zed, Tail Entity: " + b + ".");
    return split_words(a + " met " + b + " today. Head Entity: " + a + ", Tail Entity: " + b + ".");
  }

 private:
  Vocabulary vocab_;
  std::function<bool(std::size_t)> invalid_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::size_t> counter_;
};

}  // namespace relprompt::fixtures
