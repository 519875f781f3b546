#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace relprompt {

using LabelSet = std::set<std::string>;

struct RelationTriplet {
  std::string head;
  std::string tail;
  std::string label;

  friend bool operator==(const RelationTriplet&, const RelationTriplet&) = default;
  friend auto operator<=>(const RelationTriplet&, const RelationTriplet&) = default;
};

// Whitespace-collapsed copy; two triplets are the same triplet iff their
// canonical forms compare equal.
RelationTriplet canonical(const RelationTriplet& t);

struct Sample {
  std::string sentence;
  std::vector<RelationTriplet> triplets;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Throws ContractError naming the first broken invariant (empty field,
// entity not a substring of the sentence, duplicate triplet).
void validate_sample(const Sample& sample);

class Dataset {
 public:
  Dataset() = default;
  // Validates every sample.
  explicit Dataset(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const { return samples_; }
  const LabelSet& labels() const { return labels_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.samples_ == b.samples_; }

 private:
  std::vector<Sample> samples_;
  LabelSet labels_;
};

Dataset load_jsonl(const std::filesystem::path& path);
Dataset parse_jsonl(const std::string& content);
void write_jsonl(const Dataset& data, const std::filesystem::path& path);
std::string to_jsonl(const Dataset& data);

struct FoldSplit {
  std::int64_t seed = 0;
  LabelSet unseen_labels;
  LabelSet validation_labels;
  LabelSet seen_labels;  // every label not unseen; includes validation_labels
  Dataset train;
  Dataset validation;
  Dataset test;

  LabelSet train_labels() const;
};

// Zero-shot fold: m unseen labels then v validation labels drawn without
// replacement from the sorted label list with SplitMix64(seed).
FoldSplit split_zero_shot(const Dataset& data, std::size_t m, std::size_t v, std::int64_t seed);

// Writes <dir>/fold_<seed>/{train,validation,test}.jsonl and returns the
// path of the manifest <dir>/fold_<seed>.json.
std::filesystem::path write_fold(const FoldSplit& fold, const std::filesystem::path& dir);
FoldSplit read_fold(const std::filesystem::path& manifest);

struct DatasetStats {
  std::size_t samples = 0;
  std::size_t unique_entities = 0;
  std::size_t relations = 0;
  double mean_sentence_length = 0.0;
};

struct DiversityStats {
  std::size_t samples = 0;
  std::size_t unique_entities = 0;
  std::size_t unique_words = 0;
};

DatasetStats dataset_stats(const Dataset& data);
DiversityStats diversity_stats(const Dataset& data);

}  // namespace relprompt
