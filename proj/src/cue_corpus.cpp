#include "relprompt/cue_corpus.hpp"

#include <array>
#include <string>
#include <vector>

#include "relprompt/errors.hpp"
#include "relprompt/random.hpp"

namespace relprompt {

namespace {

enum class Kind { Person, Place, Org, Work };

const std::vector<std::string>& pool(Kind kind) {
  static const std::vector<std::string> persons = {
      "Anna Berg",     "Tomas Weller", "Lena Ortiz",   "Marco Lindt",  "Sofia Grant",  "Pavel Novak",
      "Ines Duarte",   "Hugo Brandt",  "Clara Moreau", "Jonas Ekberg", "Maya Castell", "Oskar Vidal",
      "Rita Hollis",   "Felix Adair",  "Nora Quill",   "Ivan Petrov",  "Elsa Marin",   "Leo Fairfax",
      "Vera Sandoz",   "Adam Kerr",    "Julia Renner", "Emil Rask",    "Greta Lund",   "Karl Weiss"};
  static const std::vector<std::string> places = {
      "Lisbon", "Oslo",   "Prague", "Dublin", "Vienna", "Madrid", "Bergen", "Turin",
      "Ghent",  "Krakow", "Lyon",   "Porto",  "Zurich", "Malmo",  "Riga",   "Seville"};
  static const std::vector<std::string> orgs = {
      "Northwind Labs", "Bluefield Group", "Orion Works",   "Harbor Bank",  "Summit Press",
      "Vantage Motors", "Ember Studios",   "Cobalt United", "Pinecrest FC", "Atlas Institute",
      "Redwood College", "Meridian Union"};
  static const std::vector<std::string> works = {
      "Silent Harbor", "The Glass Road", "Winter Lights", "Paper Kings", "The Last Orchard",
      "Iron Meadow",   "Bright Hollow",  "Salt and Ash",  "Quiet Rivers", "The Far Shore"};
  switch (kind) {
    case Kind::Person: return persons;
    case Kind::Place: return places;
    case Kind::Org: return orgs;
    case Kind::Work: return works;
  }
  throw ContractError("unknown entity kind");
}

struct Relation {
  const char* label;
  Kind head;
  Kind tail;
  std::array<const char*, 2> templates;  // "{H}" and "{T}" placeholders
};

const std::array<Relation, 12> kRelations = {{
    {"born in", Kind::Person, Kind::Place, {"{H} was born in {T}", "{H} was born in the old town of {T}"}},
    {"works for", Kind::Person, Kind::Org, {"{H} works for {T}", "{H} still works for {T} as an engineer"}},
    {"married to", Kind::Person, Kind::Person, {"{H} is married to {T}", "{H} got married to {T} last spring"}},
    {"founded by", Kind::Org, Kind::Person, {"{H} was founded by {T}", "{H} was founded by {T} long ago"}},
    {"capital of", Kind::Place, Kind::Place, {"{H} is the capital of {T}", "{H} served as the capital of {T}"}},
    {"member of", Kind::Person, Kind::Org, {"{H} is a member of {T}", "{H} became a member of {T} early"}},
    {"directed by", Kind::Work, Kind::Person, {"{H} was directed by {T}", "{H} is a film directed by {T}"}},
    {"written by", Kind::Work, Kind::Person, {"{H} was written by {T}", "{H} is a novel written by {T}"}},
    {"located in", Kind::Org, Kind::Place, {"{H} is located in {T}", "{H} has long been located in {T}"}},
    {"owned by", Kind::Org, Kind::Org, {"{H} is owned by {T}", "{H} is now owned by {T}"}},
    {"educated at", Kind::Person, Kind::Org, {"{H} was educated at {T}", "{H} was mostly educated at {T}"}},
    {"plays for", Kind::Person, Kind::Org, {"{H} plays for {T}", "{H} now plays for {T} on loan"}},
}};

std::string fill(const char* tmpl, const std::string& head, const std::string& tail) {
  std::string s(tmpl);
  s.replace(s.find("{H}"), 3, head);
  s.replace(s.find("{T}"), 3, tail);
  return s;
}

std::pair<std::string, std::string> pick_pair(SplitMix64& rng, const Relation& r) {
  const auto& hp = pool(r.head);
  const auto& tp = pool(r.tail);
  for (;;) {
    std::string h = hp[rng.below(hp.size())];
    std::string t = tp[rng.below(tp.size())];
    if (h.find(t) == std::string::npos && t.find(h) == std::string::npos) return {h, t};
  }
}

}  // namespace

Dataset make_cue_corpus(std::uint64_t seed, std::size_t per_relation, std::size_t multi_every) {
  if (per_relation < 1) throw ConfigError("per_relation must be at least 1");
  SplitMix64 rng(seed);
  std::vector<Sample> samples;
  for (const auto& r : kRelations) {
    for (std::size_t i = 0; i < per_relation; ++i) {
      const char* tmpl = r.templates[i % r.templates.size()];
      auto [h1, t1] = pick_pair(rng, r);
      Sample s;
      if (multi_every > 0 && i % multi_every == multi_every - 1) {
        std::pair<std::string, std::string> second;
        do {
          second = pick_pair(rng, r);
        } while (second.first == h1 || second.second == t1 || second.first == t1 || second.second == h1);
        s.sentence = fill(tmpl, h1, t1) + " and " + fill(r.templates[0], second.first, second.second) + ".";
        s.triplets = {{h1, t1, r.label}, {second.first, second.second, r.label}};
      } else {
        s.sentence = fill(tmpl, h1, t1) + ".";
        s.triplets = {{h1, t1, r.label}};
      }
      samples.push_back(std::move(s));
    }
  }
  return Dataset(std::move(samples));
}

}  // namespace relprompt
