#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relprompt/corpus.hpp"

namespace relprompt {

// Triplets per sentence id.
using SentenceTriplets = std::map<std::string, std::vector<RelationTriplet>>;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2PR/(P+R), or 0 when P+R is 0.
double f1_score(double precision, double recall);

struct MetricsBundle {
  double single_accuracy = 0.0;
  double multi_precision = 0.0;
  double multi_recall = 0.0;
  double multi_f1 = 0.0;
  double zerorc_macro_f1 = 0.0;
  std::map<std::string, double> per_label_f1;
};

// Exact match after whitespace canonicalization, case-sensitive. Each
// sentence's predictions are deduplicated first; every gold triplet matches
// at most once. Throws ConfigError when the id sets differ.
PRF micro_prf(const SentenceTriplets& gold, const SentenceTriplets& pred);

// Fraction of sentences whose prediction equals the single gold triplet;
// std::nullopt counts as wrong.
double single_accuracy(const SentenceTriplets& gold,
                       const std::map<std::string, std::optional<RelationTriplet>>& pred);

// Unweighted mean over the gold label set of one-vs-rest P/R/F1.
PRF zerorc_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

// Micro F1 restricted to each gold label's triplets.
std::map<std::string, double> per_label_breakdown(const SentenceTriplets& gold, const SentenceTriplets& pred);

struct ScoredTriplet {
  std::string sentence_id;
  RelationTriplet triplet;
  double score = 0.0;
};

// Fifty evenly spaced values from min to max score.
std::vector<double> threshold_grid(const std::vector<ScoredTriplet>& candidates);

// Grid threshold that maximizes micro F1 of {candidates with score >= t};
// ties go to the higher threshold. Throws ConfigError on no candidates.
double tune_threshold(const std::vector<ScoredTriplet>& candidates, const SentenceTriplets& gold);

// Micro F1 of the candidates kept at `threshold` (gold ids define the
// sentence set; sentences without candidates predict nothing).
PRF thresholded_prf(const std::vector<ScoredTriplet>& candidates, const SentenceTriplets& gold, double threshold);

}  // namespace relprompt
