#include "relprompt/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "relprompt/errors.hpp"
#include "relprompt/remote_model.hpp"
#include "relprompt/template_codec.hpp"

namespace relprompt {

namespace fs = std::filesystem;

BackendSpec BackendSpec::parse(const std::string& text) {
  if (text == "ngram") return {};
  constexpr std::string_view prefix = "remote:";
  if (text.starts_with(prefix) && text.size() > prefix.size())
    return {Kind::Remote, text.substr(prefix.size())};
  throw ConfigError("backend must be \"ngram\" or \"remote:<url>\", got \"" + text + "\"");
}

std::string BackendSpec::str() const { return kind == Kind::Ngram ? "ngram" : "remote:" + url; }

NgramOptions template_ngram_options(double k) {
  NgramOptions o;
  o.k = k;
  o.copy = true;
  for (auto marker : kMarkers) {
    const Tokens words = split_words(marker);
    o.anchor_tokens.push_back(words.front());
    for (const auto& w : words)
      if (std::find(o.protected_tokens.begin(), o.protected_tokens.end(), w) == o.protected_tokens.end())
        o.protected_tokens.push_back(w);
  }
  return o;
}

void RunConfig::validate() const {
  if (m < 1) throw ConfigError("m must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::int64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (parallel_folds < 1) throw ConfigError("parallel_folds must be at least 1");
  pipeline.synthesis.validate();
  pipeline.branch.validate();
  pipeline.train.validate();
  if (!(ngram.k > 0.0)) throw ConfigError("ngram.k must be positive");
  if (!(ngram.copy_prior > 0.0)) throw ConfigError("ngram.copy_prior must be positive");
}

RunConfig desk_config() {
  RunConfig c;
  c.m = 4;
  c.v = 2;
  c.pipeline.branch.threshold = -3.0;
  return c;
}

namespace {

const char* mode_name(DecodeMode m) {
  switch (m) {
    case DecodeMode::Single: return "single";
    case DecodeMode::Multi: return "multi";
    case DecodeMode::Both: return "both";
  }
  return "both";
}

DecodeMode parse_mode(const std::string& s) {
  if (s == "single") return DecodeMode::Single;
  if (s == "multi") return DecodeMode::Multi;
  if (s == "both") return DecodeMode::Both;
  throw ConfigError("mode must be single, multi or both, got \"" + s + "\"");
}

// -inf has no JSON spelling; null stands for it.
json threshold_json(double t) { return std::isinf(t) && t < 0 ? json(nullptr) : json(t); }

double threshold_from(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key " + where + "." + key);
  }
}

}  // namespace

void apply_json(RunConfig& c, const json& doc) {
  try {
    check_keys(doc, "config",
               {"dataset", "output_dir", "m", "v", "seeds", "backend", "parallel_folds", "ngram", "synthesis",
                "sampling", "branch", "train", "mode", "no_gen", "skip_extractor_seen", "mix_seen_into_synthetic",
                "zerorc"});
    if (doc.contains("dataset")) c.dataset = doc["dataset"].get<std::string>();
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
    read(doc, "m", c.m);
    read(doc, "v", c.v);
    read(doc, "seeds", c.seeds);
    if (doc.contains("backend")) c.backend = BackendSpec::parse(doc["backend"].get<std::string>());
    read(doc, "parallel_folds", c.parallel_folds);

    if (auto it = doc.find("ngram"); it != doc.end()) {
      check_keys(*it, "ngram", {"k", "copy", "copy_prior", "anchor_tokens", "protected_tokens"});
      read(*it, "k", c.ngram.k);
      read(*it, "copy", c.ngram.copy);
      read(*it, "copy_prior", c.ngram.copy_prior);
      read(*it, "anchor_tokens", c.ngram.anchor_tokens);
      read(*it, "protected_tokens", c.ngram.protected_tokens);
    }
    auto& p = c.pipeline;
    if (auto it = doc.find("synthesis"); it != doc.end()) {
      check_keys(*it, "synthesis", {"n_per_label", "max_attempts_factor", "workers"});
      read(*it, "n_per_label", p.synthesis.n_per_label);
      read(*it, "max_attempts_factor", p.synthesis.max_attempts_factor);
      read(*it, "workers", p.synthesis.workers);
    }
    if (auto it = doc.find("sampling"); it != doc.end()) {
      check_keys(*it, "sampling", {"temperature", "top_k", "max_len"});
      read(*it, "temperature", p.synthesis.sampling.temperature);
      read(*it, "top_k", p.synthesis.sampling.top_k);
      read(*it, "max_len", p.synthesis.sampling.max_len);
    }
    if (auto it = doc.find("branch"); it != doc.end()) {
      check_keys(*it, "branch", {"branches", "threshold", "max_len"});
      read(*it, "branches", p.branch.branches);
      if (it->contains("threshold")) p.branch.threshold = threshold_from((*it)["threshold"]);
      read(*it, "max_len", p.branch.max_len);
    }
    if (auto it = doc.find("train"); it != doc.end()) {
      check_keys(*it, "train", {"epochs", "learning_rate", "warmup_fraction", "batch_size", "dropout"});
      read(*it, "epochs", p.train.epochs);
      read(*it, "learning_rate", p.train.learning_rate);
      read(*it, "warmup_fraction", p.train.warmup_fraction);
      read(*it, "batch_size", p.train.batch_size);
      read(*it, "dropout", p.train.dropout);
    }
    if (doc.contains("mode")) p.mode = parse_mode(doc["mode"].get<std::string>());
    read(doc, "no_gen", p.no_gen);
    read(doc, "skip_extractor_seen", p.skip_extractor_seen);
    read(doc, "mix_seen_into_synthetic", p.mix_seen_into_synthetic);
    read(doc, "zerorc", p.zerorc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_json(base, doc);
  return base;
}

json to_json(const RunConfig& c) {
  const auto& p = c.pipeline;
  json j;
  j["dataset"] = c.dataset.string();
  j["output_dir"] = c.output_dir.string();
  j["m"] = c.m;
  j["v"] = c.v;
  j["seeds"] = c.seeds;
  j["backend"] = c.backend.str();
  j["parallel_folds"] = c.parallel_folds;
  j["ngram"] = {{"k", c.ngram.k},
                {"copy", c.ngram.copy},
                {"copy_prior", c.ngram.copy_prior},
                {"anchor_tokens", c.ngram.anchor_tokens},
                {"protected_tokens", c.ngram.protected_tokens}};
  j["synthesis"] = {{"n_per_label", p.synthesis.n_per_label},
                    {"max_attempts_factor", p.synthesis.max_attempts_factor},
                    {"workers", p.synthesis.workers}};
  j["sampling"] = {{"temperature", p.synthesis.sampling.temperature},
                   {"top_k", p.synthesis.sampling.top_k},
                   {"max_len", p.synthesis.sampling.max_len}};
  j["branch"] = {{"branches", p.branch.branches},
                 {"threshold", threshold_json(p.branch.threshold)},
                 {"max_len", p.branch.max_len}};
  j["train"] = {{"epochs", p.train.epochs},
                {"learning_rate", p.train.learning_rate},
                {"warmup_fraction", p.train.warmup_fraction},
                {"batch_size", p.train.batch_size},
                {"dropout", p.train.dropout}};
  j["mode"] = mode_name(p.mode);
  j["no_gen"] = p.no_gen;
  j["skip_extractor_seen"] = p.skip_extractor_seen;
  j["mix_seen_into_synthetic"] = p.mix_seen_into_synthetic;
  j["zerorc"] = p.zerorc;
  return j;
}

std::unique_ptr<LanguageModel> make_backend(const RunConfig& config, const std::string& role,
                                            const Dataset& vocabulary_source) {
  if (config.backend.kind == BackendSpec::Kind::Remote)
    return std::make_unique<RemoteModel>(config.backend.url, role);
  return std::make_unique<NgramModel>(config.ngram, pretraining_vocabulary(vocabulary_source));
}

PipelineReport run_fold(const RunConfig& config, const FoldSplit& fold, const Dataset& vocabulary_source) {
  auto generator = make_backend(config, "generator", vocabulary_source);
  auto extractor = make_backend(config, "extractor", vocabulary_source);
  return run_relation_prompt(fold, *generator, *extractor, config.pipeline);
}

json to_json(const MetricsBundle& m) {
  json j;
  j["single_accuracy"] = m.single_accuracy;
  j["multi_precision"] = m.multi_precision;
  j["multi_recall"] = m.multi_recall;
  j["multi_f1"] = m.multi_f1;
  j["zerorc_macro_f1"] = m.zerorc_macro_f1;
  j["per_label_f1"] = json::object();
  for (const auto& [label, f1] : m.per_label_f1) j["per_label_f1"][label] = f1;
  return j;
}

json to_json(const GenerationStats& stats) {
  json j = json::object();
  for (const auto& [label, s] : stats) j[label] = {{"valid", s.valid}, {"discarded", s.discarded}};
  return j;
}

json to_json(const PipelineReport& r) {
  json j;
  j["fold_seed"] = r.fold_seed;
  j["unseen_labels"] = r.unseen_labels;
  j["ok"] = r.ok();
  if (r.failed_stage) {
    j["failed_stage"] = *r.failed_stage;
    j["error"] = r.error;
    j["transport_failure"] = r.transport_failure;
  }
  j["synthetic_samples"] = r.synthetic.size();
  j["generation"] = to_json(r.generation);
  j["timings"] = json::array();
  for (const auto& t : r.timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["metrics"] = to_json(r.metrics);
  return j;
}

std::string candidates_to_jsonl(const std::vector<CandidateRecord>& candidates) {
  std::string out;
  for (const auto& [id, c] : candidates) {
    json j;
    j["sentence_id"] = id;
    j["head"] = c.triplet.head;
    j["tail"] = c.triplet.tail;
    j["label"] = c.triplet.label;
    j["log_p_head"] = c.log_p_head;
    j["log_p_tail"] = c.log_p_tail;
    j["log_p_rel"] = c.log_p_rel;
    j["score"] = c.score;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ScoredTriplet> parse_candidates_jsonl(const std::string& content) {
  std::vector<ScoredTriplet> out;
  std::istringstream in(content);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("sentence_id").get<std::string>(),
                     {j.at("head").get<std::string>(), j.at("tail").get<std::string>(), j.at("label").get<std::string>()},
                     j.at("score").get<double>()});
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

std::vector<ScoredTriplet> load_candidates(const fs::path& path) { return parse_candidates_jsonl(read_text(path)); }

std::string per_label_csv(const std::map<std::string, double>& per_label_f1) {
  std::string out = "label,f1\n";
  for (const auto& [label, f1] : per_label_f1) {
    std::string field = label;
    if (field.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : field) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      field = quoted + "\"";
    }
    std::ostringstream row;
    row.precision(6);
    row << std::fixed << f1;
    out += field + "," + row.str() + "\n";
  }
  return out;
}

json aggregate_metrics(const std::vector<PipelineReport>& reports) {
  MetricsBundle sum;
  std::size_t n = 0;
  for (const auto& r : reports) {
    if (!r.ok()) continue;
    ++n;
    sum.single_accuracy += r.metrics.single_accuracy;
    sum.multi_precision += r.metrics.multi_precision;
    sum.multi_recall += r.metrics.multi_recall;
    sum.multi_f1 += r.metrics.multi_f1;
    sum.zerorc_macro_f1 += r.metrics.zerorc_macro_f1;
  }
  json j;
  j["folds"] = reports.size();
  j["completed"] = n;
  const double d = n == 0 ? 1.0 : static_cast<double>(n);
  j["single_accuracy"] = sum.single_accuracy / d;
  j["multi_precision"] = sum.multi_precision / d;
  j["multi_recall"] = sum.multi_recall / d;
  j["multi_f1"] = sum.multi_f1 / d;
  j["zerorc_macro_f1"] = sum.zerorc_macro_f1 / d;
  return j;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace relprompt
