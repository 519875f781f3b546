#include "relprompt/evaluation.hpp"

#include <set>

#include "relprompt/errors.hpp"

namespace relprompt {

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

std::set<RelationTriplet> as_set(const std::vector<RelationTriplet>& triplets) {
  std::set<RelationTriplet> out;
  for (const auto& t : triplets) out.insert(canonical(t));
  return out;
}

template <typename A, typename B>
void require_same_ids(const std::map<std::string, A>& gold, const std::map<std::string, B>& pred) {
  bool same = gold.size() == pred.size();
  for (auto g = gold.begin(), p = pred.begin(); same && g != gold.end(); ++g, ++p) same = g->first == p->first;
  if (!same) throw ConfigError("gold and prediction sentence ids differ");
}

struct Counts {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  PRF prf() const {
    PRF r;
    r.precision = predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
    r.recall = gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
    r.f1 = f1_score(r.precision, r.recall);
    return r;
  }
};

Counts count(const SentenceTriplets& gold, const SentenceTriplets& pred) {
  Counts c;
  for (const auto& [id, g] : gold) {
    const auto gs = as_set(g);
    const auto ps = as_set(pred.at(id));
    c.gold += gs.size();
    c.predicted += ps.size();
    for (const auto& t : ps) c.correct += gs.count(t);
  }
  return c;
}

}  // namespace

PRF micro_prf(const SentenceTriplets& gold, const SentenceTriplets& pred) {
  require_same_ids(gold, pred);
  return count(gold, pred).prf();
}

double single_accuracy(const SentenceTriplets& gold,
                       const std::map<std::string, std::optional<RelationTriplet>>& pred) {
  require_same_ids(gold, pred);
  if (gold.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [id, g] : gold) {
    if (g.size() != 1) throw ConfigError("sentence " + id + " has " + std::to_string(g.size()) + " gold triplets");
    const auto& p = pred.at(id);
    if (p && canonical(*p) == canonical(g.front())) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

PRF zerorc_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) throw ConfigError("gold and predicted label lists differ in length");
  const std::set<std::string> labels(gold.begin(), gold.end());
  PRF macro;
  if (labels.empty()) return macro;
  for (const auto& label : labels) {
    Counts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == label;
      const bool p = pred[i] == label;
      c.gold += g;
      c.predicted += p;
      c.correct += g && p;
    }
    const PRF r = c.prf();
    macro.precision += r.precision;
    macro.recall += r.recall;
    macro.f1 += r.f1;
  }
  const double n = static_cast<double>(labels.size());
  macro.precision /= n;
  macro.recall /= n;
  macro.f1 /= n;
  return macro;
}

std::map<std::string, double> per_label_breakdown(const SentenceTriplets& gold, const SentenceTriplets& pred) {
  require_same_ids(gold, pred);
  std::set<std::string> labels;
  for (const auto& [id, g] : gold)
    for (const auto& t : g) labels.insert(canonical(t).label);

  std::map<std::string, double> out;
  for (const auto& label : labels) {
    SentenceTriplets g_only, p_only;
    for (const auto& [id, g] : gold) {
      auto& gs = g_only[id];
      for (const auto& t : g)
        if (canonical(t).label == label) gs.push_back(t);
      auto& ps = p_only[id];
      for (const auto& t : pred.at(id))
        if (canonical(t).label == label) ps.push_back(t);
    }
    out[label] = count(g_only, p_only).prf().f1;
  }
  return out;
}

std::vector<double> threshold_grid(const std::vector<ScoredTriplet>& candidates) {
  if (candidates.empty()) throw ConfigError("threshold tuning needs at least one candidate");
  double lo = candidates.front().score, hi = lo;
  for (const auto& c : candidates) {
    lo = std::min(lo, c.score);
    hi = std::max(hi, c.score);
  }
  constexpr int kSteps = 50;
  std::vector<double> grid(kSteps);
  for (int i = 0; i < kSteps; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / (kSteps - 1);
  grid.back() = hi;
  return grid;
}

PRF thresholded_prf(const std::vector<ScoredTriplet>& candidates, const SentenceTriplets& gold, double threshold) {
  SentenceTriplets pred;
  for (const auto& [id, g] : gold) pred[id];
  for (const auto& c : candidates) {
    if (c.score < threshold) continue;
    auto it = pred.find(c.sentence_id);
    if (it == pred.end()) throw ConfigError("candidate for unknown sentence id " + c.sentence_id);
    it->second.push_back(c.triplet);
  }
  return micro_prf(gold, pred);
}

double tune_threshold(const std::vector<ScoredTriplet>& candidates, const SentenceTriplets& gold) {
  const auto grid = threshold_grid(candidates);
  double best_t = grid.front();
  double best_f1 = -1.0;
  for (double t : grid) {
    const double f1 = thresholded_prf(candidates, gold, t).f1;
    if (f1 >= best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace relprompt
