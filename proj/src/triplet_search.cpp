#include "relprompt/triplet_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "relprompt/errors.hpp"
#include "relprompt/template_codec.hpp"

namespace relprompt {

void BranchParams::validate() const {
  if (branches < 1) throw ConfigError("branch width must be at least 1");
  if (std::isnan(threshold) || threshold == std::numeric_limits<double>::infinity())
    throw ConfigError("threshold must be finite or -inf");
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
}

bool candidate_order(const TripletCandidate& a, const TripletCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.triplet < b.triplet;
}

bool mask_label_start(TokenDistribution& dist, const Vocabulary& vocab, const LabelSet& labels) {
  std::vector<bool> allowed(dist.size(), false);
  for (const auto& label : labels) {
    const auto first = label_continuation(label);
    if (first.empty()) continue;
    if (auto id = vocab.find(first.front())) allowed[*id] = true;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!allowed[i]) dist.probs[i] = 0.0;
    z += dist.probs[i];
  }
  if (z <= 0.0) return false;
  for (double& p : dist.probs) p /= z;
  return true;
}

namespace {

// Ids of the `b` most probable non-zero tokens, ties to the lower id.
std::vector<std::size_t> top_tokens(const TokenDistribution& dist, std::size_t b) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] > 0.0) ids.push_back(i);
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) { return dist[x] > dist[y]; });
  if (ids.size() > b) ids.resize(b);
  return ids;
}

struct Branch {
  Tokens context;  // model input so far
  Tokens output;   // decoder output so far, starting with "Head Entity:"
  double log_p_head = 0.0;
  double log_p_tail = 0.0;
};

// Appends `first` and greedily extends; false when the extension does not end
// with `stop` (stop empty means "must end on EOS within budget").
bool extend(const LanguageModel& model, Tokens& context, Tokens& output, const std::string& first,
            const Tokens& stop, std::size_t max_len) {
  if (first == kEos) return false;
  context.push_back(first);
  output.push_back(first);
  const Tokens more = model.greedy_until(context, stop, max_len);
  context.insert(context.end(), more.begin(), more.end());
  output.insert(output.end(), more.begin(), more.end());
  if (stop.empty()) return more.size() < max_len;
  return ends_with(more, stop);
}

std::optional<RelationTriplet> parse_output(const Tokens& output, const std::string& sentence) {
  auto decoded = decode_extractor_output(join_words(output));
  if (!decoded) return std::nullopt;
  const auto& t = decoded.value();
  if (sentence.find(t.head) == std::string::npos || sentence.find(t.tail) == std::string::npos) return std::nullopt;
  return t;
}

Tokens decoder_start(std::string_view sentence) {
  Tokens ctx = split_words(render_extractor_input(sentence));
  const Tokens head = head_marker_tokens();
  ctx.insert(ctx.end(), head.begin(), head.end());
  return ctx;
}

}  // namespace

std::optional<RelationTriplet> decode_single(std::string_view sentence, const LanguageModel& extractor,
                                             const LabelSet* label_mask, std::size_t max_len) {
  const std::string canon = collapse_whitespace(sentence);
  const auto& vocab = extractor.vocabulary();
  Tokens context = decoder_start(canon);
  Tokens output = head_marker_tokens();

  auto dist = extractor.next_distribution(context);
  if (!extend(extractor, context, output, vocab.token(dist.argmax()), tail_marker_tokens(), max_len))
    return std::nullopt;
  dist = extractor.next_distribution(context);
  if (!extend(extractor, context, output, vocab.token(dist.argmax()), relation_marker_tokens(), max_len))
    return std::nullopt;
  dist = extractor.next_distribution(context);
  if (label_mask && !mask_label_start(dist, vocab, *label_mask)) return std::nullopt;
  if (!extend(extractor, context, output, vocab.token(dist.argmax()), {}, max_len)) return std::nullopt;
  return parse_output(output, canon);
}

std::string classify_zerorc(std::string_view sentence, std::string_view head, std::string_view tail,
                            const LanguageModel& extractor, const LabelSet& candidate_labels) {
  if (candidate_labels.empty()) throw ContractError("classify_zerorc needs at least one candidate label");
  const std::string canon = collapse_whitespace(sentence);
  const Tokens prefix = split_words(encode_zerorc_prefix(Sample{canon, {}}, head, tail));

  std::vector<std::pair<std::string, Tokens>> live;
  for (const auto& l : candidate_labels) live.emplace_back(l, label_continuation(l));

  const auto& vocab = extractor.vocabulary();
  Tokens context = prefix;
  for (std::size_t depth = 0; live.size() > 1; ++depth) {
    // Candidates fully spelled at this depth cannot be extended further;
    // continuations never nest because the last word carries the period.
    const auto dist = extractor.next_distribution(context);
    std::map<std::string, double> options;
    for (const auto& [label, toks] : live) {
      if (depth >= toks.size()) continue;
      const auto id = vocab.find(toks[depth]);
      options[toks[depth]] = id ? dist[*id] : 0.0;
    }
    double best_p = -1.0;
    for (const auto& [tok, p] : options) best_p = std::max(best_p, p);
    std::vector<std::string> tied;
    for (const auto& [tok, p] : options)
      if (p == best_p) tied.push_back(tok);

    std::string chosen = tied.front();
    if (tied.size() > 1) {
      // Tie: best full-label likelihood, then lowest vocabulary index.
      double best_lp = 0.0;
      std::size_t best_rank = SIZE_MAX;
      bool first = true;
      for (const auto& tok : tied) {
        double lp = kLogZero;
        for (const auto& [label, toks] : live) {
          if (depth < toks.size() && toks[depth] == tok) {
            std::span<const std::string> rest(toks.begin() + static_cast<std::ptrdiff_t>(depth), toks.end());
            lp = std::max(lp, sequence_log_prob(extractor, context, rest));
          }
        }
        const auto id = vocab.find(tok);
        const std::size_t rank = id ? *id : vocab.size();
        if (first || lp > best_lp || (lp == best_lp && rank < best_rank)) {
          best_lp = lp;
          best_rank = rank;
          chosen = tok;
          first = false;
        }
      }
    }
    std::erase_if(live, [&](const auto& c) { return depth >= c.second.size() || c.second[depth] != chosen; });
    context.push_back(chosen);
  }
  return live.front().first;
}

std::vector<TripletCandidate> triplet_search_candidates(std::string_view sentence, const LanguageModel& extractor,
                                                        const BranchParams& params, const LabelSet* label_mask) {
  params.validate();
  const std::string canon = collapse_whitespace(sentence);
  const auto& vocab = extractor.vocabulary();
  const Tokens tail_stop = tail_marker_tokens();
  const Tokens rel_stop = relation_marker_tokens();

  Branch root{decoder_start(canon), head_marker_tokens()};

  std::vector<Branch> heads;
  {
    const auto dist = extractor.next_distribution(root.context);
    for (auto id : top_tokens(dist, params.branches)) {
      Branch br = root;
      br.log_p_head = std::log(dist[id]);
      if (extend(extractor, br.context, br.output, vocab.token(id), tail_stop, params.max_len))
        heads.push_back(std::move(br));
    }
  }

  std::vector<Branch> pairs;
  for (const auto& h : heads) {
    const auto dist = extractor.next_distribution(h.context);
    for (auto id : top_tokens(dist, params.branches)) {
      Branch br = h;
      br.log_p_tail = std::log(dist[id]);
      if (extend(extractor, br.context, br.output, vocab.token(id), rel_stop, params.max_len))
        pairs.push_back(std::move(br));
    }
  }

  std::map<RelationTriplet, TripletCandidate> best;
  for (const auto& pr : pairs) {
    auto dist = extractor.next_distribution(pr.context);
    if (label_mask && !mask_label_start(dist, vocab, *label_mask)) continue;
    for (auto id : top_tokens(dist, params.branches)) {
      Branch br = pr;
      const double log_p_rel = std::log(dist[id]);
      if (!extend(extractor, br.context, br.output, vocab.token(id), {}, params.max_len)) continue;
      auto triplet = parse_output(br.output, canon);
      if (!triplet) continue;
      TripletCandidate cand{*triplet, br.log_p_head, br.log_p_tail, log_p_rel,
                            br.log_p_head + br.log_p_tail + log_p_rel};
      const auto key = canonical(*triplet);
      auto it = best.find(key);
      if (it == best.end() || cand.score > it->second.score) best[key] = std::move(cand);
    }
  }

  std::vector<TripletCandidate> out;
  out.reserve(best.size());
  for (auto& [key, cand] : best) out.push_back(std::move(cand));
  std::sort(out.begin(), out.end(), candidate_order);
  return out;
}

std::vector<TripletCandidate> filter_by_threshold(const std::vector<TripletCandidate>& candidates, double threshold) {
  std::vector<TripletCandidate> out;
  for (const auto& c : candidates)
    if (c.score >= threshold) out.push_back(c);
  return out;
}

std::vector<TripletCandidate> triplet_search_decode(std::string_view sentence, const LanguageModel& extractor,
                                                    const BranchParams& params, const LabelSet* label_mask) {
  return filter_by_threshold(triplet_search_candidates(sentence, extractor, params, label_mask), params.threshold);
}

}  // namespace relprompt
