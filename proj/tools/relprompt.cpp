// relprompt command-line interface.
//
// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 pipeline,
// 4 remote backend.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "relprompt/corpus.hpp"
#include "relprompt/cue_corpus.hpp"
#include "relprompt/errors.hpp"
#include "relprompt/evaluation.hpp"
#include "relprompt/run_config.hpp"
#include "relprompt/synthesis.hpp"

namespace fs = std::filesystem;
using namespace relprompt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kPipeline = 3, kRemote = 4 };

// Flags shared by the commands that build a RunConfig.
struct ConfigFlags {
  std::string config_file;
  bool desk = false;
  std::optional<std::string> dataset, output_dir, backend;
  std::optional<std::size_t> m, v, n_per_label, branches, parallel_folds, workers;
  std::optional<double> threshold, temperature;
  std::optional<std::vector<std::int64_t>> seeds;
  bool no_gen = false, single = false, multi = false;

  void add_to(CLI::App* cmd, bool pipeline_flags) {
    cmd->add_option("--config", config_file, "JSON config file; flags override its values");
    cmd->add_flag("--desk", desk, "start from the desk-scale settings (m=4, v=2, threshold -3)");
    cmd->add_option("--dataset", dataset, "dataset JSONL");
    cmd->add_option("--out", output_dir, "output directory");
    cmd->add_option("--m", m, "number of unseen labels");
    cmd->add_option("--v", v, "number of validation labels");
    cmd->add_option("--seeds", seeds, "fold seeds")->delimiter(',');
    if (!pipeline_flags) return;
    cmd->add_option("--backend", backend, "ngram | remote:<url>");
    cmd->add_option("--n-per-label", n_per_label, "synthetic samples per unseen label");
    cmd->add_option("--branches", branches, "triplet search branch width");
    cmd->add_option("--threshold", threshold, "triplet search log-probability threshold");
    cmd->add_option("--temperature", temperature, "generator sampling temperature");
    cmd->add_option("--workers", workers, "labels generated concurrently");
    cmd->add_option("--parallel-folds", parallel_folds, "folds run concurrently");
    cmd->add_flag("--no-gen", no_gen, "skip synthesis; extractor sees only seen relations");
    auto* s = cmd->add_flag("--single", single, "single-triplet decoding only");
    auto* mu = cmd->add_flag("--multi", multi, "multi-triplet decoding only");
    s->excludes(mu);
  }

  RunConfig build() const {
    RunConfig c = desk ? desk_config() : RunConfig{};
    if (!config_file.empty()) c = load_run_config(config_file, c);
    if (dataset) c.dataset = *dataset;
    if (output_dir) c.output_dir = *output_dir;
    if (backend) c.backend = BackendSpec::parse(*backend);
    if (m) c.m = *m;
    if (v) c.v = *v;
    if (seeds) c.seeds = *seeds;
    if (n_per_label) c.pipeline.synthesis.n_per_label = *n_per_label;
    if (branches) c.pipeline.branch.branches = *branches;
    if (threshold) c.pipeline.branch.threshold = *threshold;
    if (temperature) c.pipeline.synthesis.sampling.temperature = *temperature;
    if (workers) c.pipeline.synthesis.workers = *workers;
    if (parallel_folds) c.parallel_folds = *parallel_folds;
    if (no_gen) c.pipeline.no_gen = true;
    if (single) c.pipeline.mode = DecodeMode::Single;
    if (multi) c.pipeline.mode = DecodeMode::Multi;
    c.validate();
    return c;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

Dataset require_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("no dataset given (--dataset or \"dataset\" in the config)");
  return load_jsonl(c.dataset);
}

int cmd_split(const RunConfig& c) {
  const Dataset data = require_dataset(c);
  const fs::path dir = c.output_dir / "folds";
  json manifests = json::array();
  for (auto seed : c.seeds) {
    const FoldSplit fold = split_zero_shot(data, c.m, c.v, seed);
    if (fold.test.empty()) std::cerr << "warning: fold " << seed << " has no test sentences\n";
    manifests.push_back(write_fold(fold, dir).string());
  }
  print_json({{"manifests", manifests}});
  return kOk;
}

// Folds from <folds_dir>/fold_<seed>.json when given, else split in memory.
std::vector<FoldSplit> load_folds(const RunConfig& c, const std::string& folds_dir, Dataset& vocabulary_source) {
  std::vector<FoldSplit> folds;
  if (folds_dir.empty()) {
    vocabulary_source = require_dataset(c);
    for (auto seed : c.seeds) folds.push_back(split_zero_shot(vocabulary_source, c.m, c.v, seed));
    return folds;
  }
  std::vector<Sample> all;
  for (auto seed : c.seeds) {
    const fs::path manifest = fs::path(folds_dir) / ("fold_" + std::to_string(seed) + ".json");
    if (!fs::exists(manifest)) throw IoError("missing fold manifest " + manifest.string());
    folds.push_back(read_fold(manifest));
  }
  if (!c.dataset.empty()) {
    vocabulary_source = load_jsonl(c.dataset);
  } else {
    const auto& f = folds.front();
    for (const Dataset* d : {&f.train, &f.validation, &f.test}) all.insert(all.end(), d->samples().begin(), d->samples().end());
    vocabulary_source = Dataset(std::move(all));
  }
  return folds;
}

void write_fold_outputs(const fs::path& dir, const PipelineReport& r) {
  write_text(dir / "report.json", to_json(r).dump(2) + "\n");
  write_jsonl(r.synthetic, dir / "synthetic.jsonl");
  write_text(dir / "synthetic_stats.json", to_json(r.generation).dump(2) + "\n");
  write_text(dir / "candidates.jsonl", candidates_to_jsonl(r.candidates));
  write_text(dir / "per_label.csv", per_label_csv(r.metrics.per_label_f1));
}

int cmd_run(const RunConfig& c, const std::string& folds_dir) {
  Dataset vocabulary_source;
  const auto folds = load_folds(c, folds_dir, vocabulary_source);
  fs::create_directories(c.output_dir);
  write_text(c.output_dir / "config.json", to_json(c).dump(2) + "\n");

  std::vector<PipelineReport> reports(folds.size());
  for (std::size_t start = 0; start < folds.size(); start += c.parallel_folds) {
    const std::size_t end = std::min(folds.size(), start + c.parallel_folds);
    std::vector<std::future<PipelineReport>> jobs;
    for (std::size_t i = start; i < end; ++i)
      jobs.push_back(std::async(end - start == 1 ? std::launch::deferred : std::launch::async, run_fold,
                                std::cref(c), std::cref(folds[i]), std::cref(vocabulary_source)));
    for (std::size_t i = start; i < end; ++i) reports[i] = jobs[i - start].get();
  }

  json summary;
  summary["folds"] = json::array();
  bool failed = false, remote_failed = false;
  for (const auto& r : reports) {
    write_fold_outputs(c.output_dir / ("fold_" + std::to_string(r.fold_seed)), r);
    summary["folds"].push_back(to_json(r));
    if (!r.ok()) {
      failed = true;
      remote_failed = remote_failed || r.transport_failure;
      std::cerr << "fold " << r.fold_seed << " failed in " << *r.failed_stage << ": " << r.error << '\n';
    }
  }
  summary["mean"] = aggregate_metrics(reports);
  write_text(c.output_dir / "summary.json", summary.dump(2) + "\n");
  print_json(summary["mean"]);
  if (remote_failed) return kRemote;
  return failed ? kPipeline : kOk;
}

SentenceTriplets gold_from(const fs::path& path) { return gold_by_id(load_jsonl(path)); }

int cmd_tune(const std::string& candidates, const std::string& gold, const std::string& config_file,
             const std::string& overlay_out) {
  const double t = tune_threshold(load_candidates(candidates), gold_from(gold));
  json overlay = json::object();
  if (!config_file.empty()) overlay = json::parse(read_text(config_file));
  overlay["branch"]["threshold"] = t;
  if (!overlay_out.empty()) write_text(overlay_out, overlay.dump(2) + "\n");
  print_json({{"threshold", t}});
  return kOk;
}

// Prediction file: one JSON object per gold line with a "triplets" array
// (possibly empty).
SentenceTriplets predictions_from(const fs::path& path) {
  SentenceTriplets pred;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t id = 0;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    auto& list = pred[std::to_string(id++)];
    try {
      const json doc = json::parse(line);
      for (const auto& t : doc.at("triplets"))
        list.push_back({t.at("head").get<std::string>(), t.at("tail").get<std::string>(), t.at("label").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    }
  }
  return pred;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path, const std::string& csv_out) {
  const SentenceTriplets gold = gold_from(gold_path);
  const SentenceTriplets pred = predictions_from(pred_path);
  const PRF micro = micro_prf(gold, pred);

  SentenceTriplets single_gold;
  std::map<std::string, std::optional<RelationTriplet>> single_pred;
  for (const auto& [id, g] : gold) {
    if (g.size() != 1) continue;
    single_gold[id] = g;
    const auto& p = pred.at(id);
    single_pred[id] = p.empty() ? std::nullopt : std::optional<RelationTriplet>(p.front());
  }
  const auto per_label = per_label_breakdown(gold, pred);
  json j;
  j["sentences"] = gold.size();
  j["precision"] = micro.precision;
  j["recall"] = micro.recall;
  j["f1"] = micro.f1;
  j["single_accuracy"] = single_accuracy(single_gold, single_pred);
  j["per_label_f1"] = per_label;
  if (!csv_out.empty()) write_text(csv_out, per_label_csv(per_label));
  print_json(j);
  return kOk;
}

int cmd_synth(const RunConfig& c, const std::string& manifest, std::int64_t seed) {
  const FoldSplit fold = read_fold(manifest);
  Dataset vocabulary_source = c.dataset.empty() ? fold.train : load_jsonl(c.dataset);
  auto generator = make_backend(c, "generator", vocabulary_source);
  generator->train(generator_training_texts(fold.train), c.pipeline.train);
  SynthesisConfig sc = c.pipeline.synthesis;
  sc.seed = static_cast<std::uint64_t>(seed);
  const SyntheticData out = generate_synthetic(fold.unseen_labels, *generator, sc);
  write_jsonl(out.data, c.output_dir / "synthetic.jsonl");
  const json stats = to_json(out.stats);
  write_text(c.output_dir / "synthetic_stats.json", stats.dump(2) + "\n");
  print_json({{"samples", out.data.size()}, {"generation", stats}});
  return kOk;
}

int cmd_stats(const std::string& path) {
  const Dataset data = load_jsonl(path);
  const auto s = dataset_stats(data);
  const auto d = diversity_stats(data);
  print_json({{"dataset",
               {{"samples", s.samples},
                {"unique_entities", s.unique_entities},
                {"relations", s.relations},
                {"mean_sentence_length", s.mean_sentence_length}}},
              {"diversity",
               {{"samples", d.samples}, {"unique_entities", d.unique_entities}, {"unique_words", d.unique_words}}}});
  return kOk;
}

int cmd_make_corpus(const std::string& out, std::uint64_t seed, std::size_t per_relation) {
  const Dataset data = make_cue_corpus(seed, per_relation);
  write_jsonl(data, out);
  print_json({{"path", out}, {"samples", data.size()}, {"relations", data.labels().size()}});
  return kOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Zero-shot relation triplet extraction with synthetic data from a relation generator."};
  app.require_subcommand(1);

  ConfigFlags split_flags, run_flags, synth_flags;
  auto* split = app.add_subcommand("split", "write zero-shot fold manifests");
  split_flags.add_to(split, false);

  auto* run = app.add_subcommand("run", "train, generate, extract and score every fold");
  run_flags.add_to(run, true);
  std::string folds_dir;
  run->add_option("--folds", folds_dir, "directory of fold_<seed>.json manifests (default: split in memory)");

  auto* tune = app.add_subcommand("tune", "pick the triplet search threshold on a candidate dump");
  std::string cand_path, gold_path, tune_config, overlay_out;
  tune->add_option("--candidates", cand_path, "candidate dump JSONL")->required();
  tune->add_option("--gold", gold_path, "gold dataset JSONL the dump was produced on")->required();
  tune->add_option("--config", tune_config, "config to overlay the threshold onto");
  tune->add_option("--write", overlay_out, "where to write the overlaid config");

  auto* eval = app.add_subcommand("eval", "score predictions against gold");
  std::string eval_gold, eval_pred, eval_csv;
  eval->add_option("--gold", eval_gold, "gold dataset JSONL")->required();
  eval->add_option("--pred", eval_pred, "predictions JSONL, one {\"triplets\":[...]} per gold line")->required();
  eval->add_option("--csv", eval_csv, "write the per-label table here");

  auto* synth = app.add_subcommand("synth", "train the generator on a fold and sample synthetic data");
  synth_flags.add_to(synth, true);
  std::string synth_manifest;
  std::int64_t synth_seed = 0;
  synth->add_option("--fold", synth_manifest, "fold manifest JSON")->required();
  synth->add_option("--seed", synth_seed, "sampling seed");

  auto* stats = app.add_subcommand("stats", "dataset and diversity statistics");
  std::string stats_path;
  stats->add_option("dataset", stats_path, "dataset JSONL")->required();

  auto* corpus = app.add_subcommand("make-corpus", "write the lexical-cue corpus");
  std::string corpus_out;
  std::uint64_t corpus_seed = 0;
  std::size_t per_relation = 40;
  corpus->add_option("--out", corpus_out, "output JSONL")->required();
  corpus->add_option("--seed", corpus_seed, "entity sampling seed");
  corpus->add_option("--per-relation", per_relation, "sentences per relation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*split) return cmd_split(split_flags.build());
  if (*run) return cmd_run(run_flags.build(), folds_dir);
  if (*tune) return cmd_tune(cand_path, gold_path, tune_config, overlay_out);
  if (*eval) return cmd_eval(eval_gold, eval_pred, eval_csv);
  if (*synth) return cmd_synth(synth_flags.build(), synth_manifest, synth_seed);
  if (*stats) return cmd_stats(stats_path);
  if (*corpus) return cmd_make_corpus(corpus_out, corpus_seed, per_relation);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TransportError& e) {
    std::cerr << "remote backend error: " << e.what() << '\n';
    return kRemote;
  } catch (const Error& e) {
    std::cerr << "pipeline error: " << e.what() << '\n';
    return kPipeline;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
}
