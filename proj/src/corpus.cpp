#include "relprompt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relprompt/errors.hpp"
#include "relprompt/random.hpp"
#include "relprompt/text.hpp"

namespace relprompt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

RelationTriplet canonical(const RelationTriplet& t) {
  return {collapse_whitespace(t.head), collapse_whitespace(t.tail), collapse_whitespace(t.label)};
}

void validate_sample(const Sample& sample) {
  if (trim(sample.sentence).empty()) throw ContractError("empty sentence");
  std::set<RelationTriplet> seen;
  for (const auto& t : sample.triplets) {
    if (trim(t.head).empty()) throw ContractError("empty head entity");
    if (trim(t.tail).empty()) throw ContractError("empty tail entity");
    if (trim(t.label).empty()) throw ContractError("empty relation label");
    if (sample.sentence.find(t.head) == std::string::npos)
      throw ContractError("head entity \"" + t.head + "\" is not a substring of the sentence");
    if (sample.sentence.find(t.tail) == std::string::npos)
      throw ContractError("tail entity \"" + t.tail + "\" is not a substring of the sentence");
    if (!seen.insert(canonical(t)).second)
      throw ContractError("duplicate triplet (" + t.head + ", " + t.tail + ", " + t.label + ")");
  }
}

Dataset::Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (const auto& s : samples_) {
    validate_sample(s);
    for (const auto& t : s.triplets) labels_.insert(t.label);
  }
}

namespace {

Sample sample_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
  Sample s;
  s.sentence = obj.at("sentence").get<std::string>();
  for (const auto& t : obj.at("triplets")) {
    s.triplets.push_back({t.at("head").get<std::string>(), t.at("tail").get<std::string>(),
                          t.at("label").get<std::string>()});
  }
  return s;
}

ordered_json sample_to_json(const Sample& s) {
  ordered_json obj;
  obj["sentence"] = s.sentence;
  obj["triplets"] = ordered_json::array();
  for (const auto& t : s.triplets) {
    ordered_json tj;
    tj["head"] = t.head;
    tj["tail"] = t.tail;
    tj["label"] = t.label;
    obj["triplets"].push_back(std::move(tj));
  }
  return obj;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Dataset parse_jsonl(const std::string& content) {
  std::vector<Sample> samples;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    Sample s;
    try {
      s = sample_from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (s.triplets.empty()) throw ValidationError(lineno, "sample has no triplets");
    try {
      validate_sample(s);
    } catch (const ContractError& e) {
      throw ValidationError(lineno, e.what());
    }
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples));
}

Dataset load_jsonl(const fs::path& path) { return parse_jsonl(read_file(path)); }

std::string to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& s : data.samples()) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const Dataset& data, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_jsonl(data);
}

LabelSet FoldSplit::train_labels() const {
  LabelSet out;
  std::set_difference(seen_labels.begin(), seen_labels.end(), validation_labels.begin(),
                      validation_labels.end(), std::inserter(out, out.end()));
  return out;
}

namespace {

Sample restrict_to(const Sample& s, const LabelSet& labels) {
  Sample out{s.sentence, {}};
  for (const auto& t : s.triplets)
    if (labels.contains(t.label)) out.triplets.push_back(t);
  return out;
}

bool mentions_any(const Sample& s, const LabelSet& labels) {
  return std::any_of(s.triplets.begin(), s.triplets.end(),
                     [&](const RelationTriplet& t) { return labels.contains(t.label); });
}

}  // namespace

FoldSplit split_zero_shot(const Dataset& data, std::size_t m, std::size_t v, std::int64_t seed) {
  const auto& labels = data.labels();
  if (m < 1) throw ConfigError("need at least one unseen label");
  if (m + v >= labels.size())
    throw ConfigError("m + v = " + std::to_string(m + v) + " must be below the label count " +
                      std::to_string(labels.size()));

  std::vector<std::string> pool(labels.begin(), labels.end());
  SplitMix64 rng(static_cast<std::uint64_t>(seed));
  // Partial Fisher-Yates: positions [0, m) become unseen, [m, m+v) validation.
  for (std::size_t i = 0; i < m + v; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }

  FoldSplit fold;
  fold.seed = seed;
  fold.unseen_labels.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  fold.validation_labels.insert(pool.begin() + static_cast<std::ptrdiff_t>(m),
                                pool.begin() + static_cast<std::ptrdiff_t>(m + v));
  for (const auto& l : labels)
    if (!fold.unseen_labels.contains(l)) fold.seen_labels.insert(l);

  std::vector<Sample> train, validation, test;
  for (const auto& s : data.samples()) {
    if (mentions_any(s, fold.unseen_labels)) {
      test.push_back(restrict_to(s, fold.unseen_labels));
    } else if (mentions_any(s, fold.validation_labels)) {
      validation.push_back(restrict_to(s, fold.validation_labels));
    } else {
      train.push_back(s);
    }
  }
  fold.train = Dataset(std::move(train));
  fold.validation = Dataset(std::move(validation));
  fold.test = Dataset(std::move(test));
  return fold;
}

fs::path write_fold(const FoldSplit& fold, const fs::path& dir) {
  const std::string name = "fold_" + std::to_string(fold.seed);
  const fs::path sub = dir / name;
  fs::create_directories(sub);
  write_jsonl(fold.train, sub / "train.jsonl");
  write_jsonl(fold.validation, sub / "validation.jsonl");
  write_jsonl(fold.test, sub / "test.jsonl");

  ordered_json manifest;
  manifest["seed"] = fold.seed;
  manifest["unseen_labels"] = fold.unseen_labels;
  manifest["validation_labels"] = fold.validation_labels;
  manifest["train"] = (fs::path(name) / "train.jsonl").string();
  manifest["validation"] = (fs::path(name) / "validation.jsonl").string();
  manifest["test"] = (fs::path(name) / "test.jsonl").string();
  const fs::path manifest_path = dir / (name + ".json");
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

FoldSplit read_fold(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ParseError(1, manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& key) {
    fs::path p = manifest.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  FoldSplit fold;
  try {
    fold.seed = manifest.at("seed").get<std::int64_t>();
    fold.unseen_labels = manifest.at("unseen_labels").get<LabelSet>();
    fold.validation_labels = manifest.at("validation_labels").get<LabelSet>();
  } catch (const json::exception& e) {
    throw ParseError(1, manifest_path.string() + ": " + e.what());
  }
  fold.train = load_jsonl(resolve("train"));
  fold.validation = load_jsonl(resolve("validation"));
  fold.test = load_jsonl(resolve("test"));
  fold.seen_labels = fold.validation_labels;
  fold.seen_labels.insert(fold.train.labels().begin(), fold.train.labels().end());
  return fold;
}

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats st;
  st.samples = data.size();
  st.relations = data.labels().size();
  std::set<std::string> entities;
  std::size_t words = 0;
  for (const auto& s : data.samples()) {
    words += split_words(s.sentence).size();
    for (const auto& t : s.triplets) {
      entities.insert(t.head);
      entities.insert(t.tail);
    }
  }
  st.unique_entities = entities.size();
  st.mean_sentence_length = data.empty() ? 0.0 : static_cast<double>(words) / static_cast<double>(data.size());
  return st;
}

DiversityStats diversity_stats(const Dataset& data) {
  DiversityStats st;
  st.samples = data.size();
  std::set<std::string> entities;
  std::set<std::string> words;
  for (const auto& s : data.samples()) {
    for (auto& w : split_words(s.sentence)) words.insert(to_lower(w));
    for (const auto& t : s.triplets) {
      entities.insert(t.head);
      entities.insert(t.tail);
    }
  }
  st.unique_entities = entities.size();
  st.unique_words = words.size();
  return st;
}

}  // namespace relprompt
