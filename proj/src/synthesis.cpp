#include "relprompt/synthesis.hpp"

#include <chrono>
#include <future>

#include "relprompt/random.hpp"
#include "relprompt/template_codec.hpp"

namespace relprompt {

void SynthesisConfig::validate() const {
  if (n_per_label < 1) throw ConfigError("n_per_label must be at least 1");
  if (max_attempts_factor < 1) throw ConfigError("max_attempts_factor must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  sampling.validate();
}

GenerationExhausted::GenerationExhausted(std::string label, LabelGenerationStats stats)
    : Error("generation exhausted for \"" + label + "\": " + std::to_string(stats.valid) + " valid, " +
            std::to_string(stats.discarded) + " discarded"),
      label_(std::move(label)),
      stats_(stats) {}

namespace {

struct LabelBatch {
  std::vector<Sample> samples;
  LabelGenerationStats stats;
};

LabelBatch generate_label(const std::string& label, const LanguageModel& generator, const SynthesisConfig& config) {
  // The target always opens with "Context:", so decoding starts after it.
  Tokens prompt = split_words(render_generator_prompt(label));
  prompt.emplace_back(kContextMarker);
  const std::size_t budget = config.n_per_label * config.max_attempts_factor;
  LabelBatch batch;
  for (std::size_t attempt = 0; batch.samples.size() < config.n_per_label; ++attempt) {
    if (attempt >= budget) throw GenerationExhausted(label, batch.stats);
    const Tokens out =
        generator.sample_sequence(prompt, config.sampling, {}, attempt_seed(config.seed, label, attempt));
    auto decoded = decode_generator_output(std::string(kContextMarker) + " " + join_words(out), label);
    bool valid = decoded.ok();
    if (valid) {
      const auto& s = decoded.value();
      const auto& t = s.triplets.front();
      valid = !contains_marker(s.sentence) && !contains_marker(t.head) && !contains_marker(t.tail);
    }
    if (!valid) {
      ++batch.stats.discarded;
      continue;
    }
    batch.samples.push_back(decoded.value());
    ++batch.stats.valid;
  }
  return batch;
}

}  // namespace

SyntheticData generate_synthetic(const LabelSet& labels, const LanguageModel& generator,
                                 const SynthesisConfig& config) {
  config.validate();
  const std::vector<std::string> order(labels.begin(), labels.end());
  std::vector<LabelBatch> batches(order.size());

  for (std::size_t start = 0; start < order.size(); start += config.workers) {
    const std::size_t end = std::min(order.size(), start + config.workers);
    if (end - start == 1) {
      batches[start] = generate_label(order[start], generator, config);
      continue;
    }
    std::vector<std::future<LabelBatch>> jobs;
    for (std::size_t i = start; i < end; ++i)
      jobs.push_back(std::async(std::launch::async, generate_label, std::cref(order[i]), std::cref(generator),
                                std::cref(config)));
    for (std::size_t i = start; i < end; ++i) batches[i] = jobs[i - start].get();
  }

  SyntheticData out;
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.stats[order[i]] = batches[i].stats;
    for (auto& s : batches[i].samples) samples.push_back(std::move(s));
  }
  out.data = Dataset(std::move(samples));
  return out;
}

std::vector<std::string> generator_training_texts(const Dataset& data) {
  std::vector<std::string> texts;
  for (const auto& s : data.samples())
    for (const auto& t : s.triplets) texts.push_back(encode_generator_example(t.label, Sample{s.sentence, {t}}).text());
  return texts;
}

std::vector<std::string> extractor_training_texts(const Dataset& data) {
  std::vector<std::string> texts;
  for (const auto& s : data.samples())
    for (const auto& t : s.triplets) texts.push_back(encode_extractor_example(s, t).text());
  return texts;
}

SentenceTriplets gold_by_id(const Dataset& data) {
  SentenceTriplets gold;
  for (std::size_t i = 0; i < data.size(); ++i) gold[std::to_string(i)] = data.samples()[i].triplets;
  return gold;
}

namespace {

class StageClock {
 public:
  StageClock(PipelineReport& report, const char* stage)
      : report_(report), stage_(stage), start_(std::chrono::steady_clock::now()) {}
  ~StageClock() {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    report_.timings.push_back({stage_, dt.count()});
  }

 private:
  PipelineReport& report_;
  const char* stage_;
  std::chrono::steady_clock::time_point start_;
};

void predict(const FoldSplit& fold, const LanguageModel& extractor, const PipelineConfig& config,
             PipelineReport& report) {
  const LabelSet* mask = config.no_gen ? &fold.unseen_labels : nullptr;
  const auto gold = gold_by_id(fold.test);
  const bool run_single = config.mode != DecodeMode::Multi;
  const bool run_multi = config.mode != DecodeMode::Single;

  SentenceTriplets single_gold, multi_gold, multi_pred;
  std::map<std::string, std::optional<RelationTriplet>> single_pred;
  SentenceTriplets all_pred;
  std::vector<std::string> zerorc_gold, zerorc_pred;

  for (std::size_t i = 0; i < fold.test.size(); ++i) {
    const auto& sample = fold.test.samples()[i];
    const std::string id = std::to_string(i);
    auto& preds = all_pred[id];
    if (sample.triplets.size() == 1) {
      single_gold[id] = sample.triplets;
      std::optional<RelationTriplet> p;
      if (run_single) p = decode_single(sample.sentence, extractor, mask, config.branch.max_len);
      single_pred[id] = p;
      if (p) preds.push_back(*p);
    } else {
      multi_gold[id] = sample.triplets;
      auto& mp = multi_pred[id];
      if (run_multi) {
        for (auto& c : triplet_search_candidates(sample.sentence, extractor, config.branch, mask)) {
          if (c.score >= config.branch.threshold) mp.push_back(c.triplet);
          report.candidates.push_back({id, std::move(c)});
        }
      }
      preds.insert(preds.end(), mp.begin(), mp.end());
    }
    if (config.zerorc) {
      for (const auto& t : sample.triplets) {
        zerorc_gold.push_back(t.label);
        zerorc_pred.push_back(classify_zerorc(sample.sentence, t.head, t.tail, extractor, fold.unseen_labels));
      }
    }
  }

  auto& m = report.metrics;
  m.single_accuracy = single_accuracy(single_gold, single_pred);
  const PRF multi = micro_prf(multi_gold, multi_pred);
  m.multi_precision = multi.precision;
  m.multi_recall = multi.recall;
  m.multi_f1 = multi.f1;
  m.zerorc_macro_f1 = zerorc_macro_f1(zerorc_gold, zerorc_pred).f1;
  m.per_label_f1 = per_label_breakdown(gold, all_pred);
  report.predictions = std::move(all_pred);
}

}  // namespace

PipelineReport run_relation_prompt(const FoldSplit& fold, LanguageModel& generator, LanguageModel& extractor,
                                   const PipelineConfig& config) {
  PipelineReport report;
  report.fold_seed = fold.seed;
  report.unseen_labels = fold.unseen_labels;

  const char* stage = kStageTrainGenerator;
  try {
    config.synthesis.validate();
    config.branch.validate();
    config.train.validate();

    {
      StageClock clock(report, stage);
      generator.train(generator_training_texts(fold.train), config.train);
    }

    stage = kStageTrainExtractor;
    if (!config.skip_extractor_seen) {
      StageClock clock(report, stage);
      extractor.train(extractor_training_texts(fold.train), config.train);
    }

    if (!config.no_gen) {
      stage = kStageGenerate;
      {
        StageClock clock(report, stage);
        SynthesisConfig synth = config.synthesis;
        synth.seed = static_cast<std::uint64_t>(fold.seed);
        auto generated = generate_synthetic(fold.unseen_labels, generator, synth);
        report.synthetic = std::move(generated.data);
        report.generation = std::move(generated.stats);
      }

      stage = kStageTrainSynthetic;
      {
        StageClock clock(report, stage);
        auto texts = extractor_training_texts(report.synthetic);
        if (config.mix_seen_into_synthetic) {
          auto seen = extractor_training_texts(fold.train);
          texts.insert(texts.end(), seen.begin(), seen.end());
        }
        extractor.train(texts, config.train);
      }
    }

    stage = kStagePredict;
    {
      StageClock clock(report, stage);
      predict(fold, extractor, config, report);
    }
  } catch (const GenerationExhausted& e) {
    report.failed_stage = stage;
    report.error = e.what();
    report.generation[e.label()] = e.stats();
  } catch (const TransportError& e) {
    report.failed_stage = stage;
    report.error = e.what();
    report.transport_failure = true;
  } catch (const Error& e) {
    report.failed_stage = stage;
    report.error = e.what();
  }
  return report;
}

}  // namespace relprompt
