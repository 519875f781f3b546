#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relprompt/corpus.hpp"
#include "relprompt/lm_backend.hpp"

namespace relprompt {

struct BranchParams {
  // Branch width b per stage; at most b^3 candidates.
  std::size_t branches = 4;
  // Natural-log cutoff on the aggregated score; -inf keeps everything.
  double threshold = -0.9906;
  // Token budget for every greedy extension.
  std::size_t max_len = 128;

  void validate() const;
};

struct TripletCandidate {
  RelationTriplet triplet;
  double log_p_head = 0.0;
  double log_p_tail = 0.0;
  double log_p_rel = 0.0;
  double score = 0.0;  // log_p_head + log_p_tail + log_p_rel
};

// Zero every entry whose token does not start one of `labels`, then
// renormalize. Returns false (and leaves zeros) when nothing survives.
bool mask_label_start(TokenDistribution& dist, const Vocabulary& vocab, const LabelSet& labels);

// Greedy extraction of one triplet. Parse failures and entities missing from
// the sentence give std::nullopt. With a label mask, the first relation token
// is restricted to tokens that start a masked label.
std::optional<RelationTriplet> decode_single(std::string_view sentence, const LanguageModel& extractor,
                                             const LabelSet* label_mask = nullptr, std::size_t max_len = 128);

// Relation label for a given entity pair, decoded greedily from the
// entity-conditioned prefix with every step restricted to tokens that keep
// some candidate label reachable.
std::string classify_zerorc(std::string_view sentence, std::string_view head, std::string_view tail,
                            const LanguageModel& extractor, const LabelSet& candidate_labels);

// Every parsed branch of the three-stage search, deduplicated (max score
// wins), in canonical order: score descending, then (head, tail, label).
std::vector<TripletCandidate> triplet_search_candidates(std::string_view sentence, const LanguageModel& extractor,
                                                        const BranchParams& params,
                                                        const LabelSet* label_mask = nullptr);

// triplet_search_candidates filtered to score >= params.threshold.
std::vector<TripletCandidate> triplet_search_decode(std::string_view sentence, const LanguageModel& extractor,
                                                    const BranchParams& params,
                                                    const LabelSet* label_mask = nullptr);

std::vector<TripletCandidate> filter_by_threshold(const std::vector<TripletCandidate>& candidates, double threshold);

bool candidate_order(const TripletCandidate& a, const TripletCandidate& b);

}  // namespace relprompt
