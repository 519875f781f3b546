#include "relprompt/template_codec.hpp"

#include <algorithm>

#include "relprompt/errors.hpp"

namespace relprompt {

Tokens head_marker_tokens() { return split_words(kHeadMarker); }
Tokens tail_marker_tokens() { return split_words(kTailMarker); }
Tokens relation_marker_tokens() { return split_words(kRelationMarker); }

bool contains_marker(std::string_view field) {
  return std::any_of(kMarkers.begin(), kMarkers.end(),
                     [&](std::string_view m) { return field.find(m) != std::string_view::npos; });
}

std::string describe(const DecodeError& e) {
  switch (e.kind) {
    case DecodeError::Kind::MissingMarker:
      return "missing marker: " + e.detail;
    case DecodeError::Kind::EntityNotInContext:
      return "entity not in context: " + e.detail;
    case DecodeError::Kind::EmptyField:
      return "empty field: " + e.detail;
    case DecodeError::Kind::ReservedMarker:
      return "marker inside field: " + e.detail;
  }
  return "decode error";
}

namespace {

std::string field(std::string_view raw, const char* what) {
  std::string_view v = trim(raw);
  if (contains_marker(v))
    throw ContractError(std::string(what) + " contains a reserved marker phrase: " + std::string(v));
  if (v.empty()) throw ContractError(std::string(what) + " is empty");
  return std::string(v);
}

std::string_view strip_one(std::string_view v, char c) {
  v = trim(v);
  if (!v.empty() && v.back() == c) v.remove_suffix(1);
  return trim(v);
}

DecodeError missing(std::string_view marker) {
  return {DecodeError::Kind::MissingMarker, std::string(marker)};
}

DecodeError empty(const char* name) { return {DecodeError::Kind::EmptyField, name}; }

DecodeError reserved(const char* name) { return {DecodeError::Kind::ReservedMarker, name}; }

// Positions of `markers` found left to right, each searched after the end of
// the previous one. Returns the index of the first marker not found.
template <std::size_t N>
std::size_t locate(std::string_view text, const std::array<std::string_view, N>& markers,
                   std::array<std::size_t, N>& begin, std::array<std::size_t, N>& end) {
  std::size_t from = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto pos = text.find(markers[i], from);
    if (pos == std::string_view::npos) return i;
    begin[i] = pos;
    end[i] = pos + markers[i].size();
    from = end[i];
  }
  return N;
}

}  // namespace

std::string render_generator_prompt(std::string_view label) {
  return std::string(kRelationMarker) + " " + field(label, "label") + ".";
}

std::string render_extractor_input(std::string_view sentence) {
  return std::string(kContextMarker) + " " + field(sentence, "sentence") + ".";
}

GeneratorExample encode_generator_example(std::string_view label, const Sample& sample) {
  if (sample.triplets.size() != 1)
    throw ContractError("generator examples hold exactly one triplet, got " +
                        std::to_string(sample.triplets.size()));
  const auto& t = sample.triplets.front();
  const std::string lab = field(label, "label");
  if (field(t.label, "label") != lab)
    throw ContractError("triplet label \"" + t.label + "\" does not match \"" + lab + "\"");
  GeneratorExample ex;
  ex.prompt = render_generator_prompt(lab);
  ex.target = std::string(kContextMarker) + " " + field(sample.sentence, "sentence") + ". " +
              std::string(kHeadMarker) + " " + field(t.head, "head") + ", " +
              std::string(kTailMarker) + " " + field(t.tail, "tail") + ".";
  return ex;
}

Decoded<Sample> decode_generator_output(std::string_view text, std::string_view label) {
  static constexpr std::array<std::string_view, 3> markers = {kContextMarker, kHeadMarker,
                                                              kTailMarker};
  std::array<std::size_t, 3> b{}, e{};
  if (auto found = locate(text, markers, b, e); found < markers.size()) return missing(markers[found]);

  const std::string context(strip_one(text.substr(e[0], b[1] - e[0]), '.'));
  const std::string head(strip_one(text.substr(e[1], b[2] - e[1]), ','));
  const std::string tail(strip_one(text.substr(e[2]), '.'));
  if (context.empty()) return empty("context");
  if (head.empty()) return empty("head");
  if (tail.empty()) return empty("tail");
  if (contains_marker(context)) return reserved("context");
  if (contains_marker(head)) return reserved("head");
  if (contains_marker(tail)) return reserved("tail");
  if (context.find(head) == std::string::npos) return DecodeError{DecodeError::Kind::EntityNotInContext, head};
  if (context.find(tail) == std::string::npos) return DecodeError{DecodeError::Kind::EntityNotInContext, tail};
  std::string lab(trim(label));
  if (lab.empty()) {
    const std::string_view preamble = text.substr(0, b[0]);
    if (auto pos = preamble.find(kRelationMarker); pos != std::string_view::npos)
      lab = std::string(strip_one(preamble.substr(pos + kRelationMarker.size()), '.'));
  }
  return Sample{context, {RelationTriplet{head, tail, lab}}};
}

ExtractorExample encode_extractor_example(const Sample& sample, const RelationTriplet& triplet) {
  if (std::find(sample.triplets.begin(), sample.triplets.end(), triplet) == sample.triplets.end())
    throw ContractError("triplet is not part of the sample");
  ExtractorExample ex;
  ex.input = render_extractor_input(sample.sentence);
  ex.target = std::string(kHeadMarker) + " " + field(triplet.head, "head") + ", " +
              std::string(kTailMarker) + " " + field(triplet.tail, "tail") + ", " +
              std::string(kRelationMarker) + " " + field(triplet.label, "label") + ".";
  return ex;
}

Decoded<RelationTriplet> decode_extractor_output(std::string_view text) {
  static constexpr std::array<std::string_view, 3> markers = {kHeadMarker, kTailMarker,
                                                              kRelationMarker};
  std::array<std::size_t, 3> b{}, e{};
  if (auto found = locate(text, markers, b, e); found < markers.size()) return missing(markers[found]);

  RelationTriplet t;
  t.head = std::string(strip_one(text.substr(e[0], b[1] - e[0]), ','));
  t.tail = std::string(strip_one(text.substr(e[1], b[2] - e[1]), ','));
  t.label = std::string(strip_one(text.substr(e[2]), '.'));
  if (t.head.empty()) return empty("head");
  if (t.tail.empty()) return empty("tail");
  if (t.label.empty()) return empty("label");
  if (contains_marker(t.head)) return reserved("head");
  if (contains_marker(t.tail)) return reserved("tail");
  if (contains_marker(t.label)) return reserved("label");
  return t;
}

std::string encode_zerorc_prefix(const Sample& sample, std::string_view head, std::string_view tail) {
  const std::string h = field(head, "head");
  const std::string t = field(tail, "tail");
  if (sample.sentence.find(h) == std::string::npos)
    throw ContractError("head \"" + h + "\" is not a substring of the sentence");
  if (sample.sentence.find(t) == std::string::npos)
    throw ContractError("tail \"" + t + "\" is not a substring of the sentence");
  return render_extractor_input(sample.sentence) + " " + std::string(kHeadMarker) + " " + h + ", " +
         std::string(kTailMarker) + " " + t + ", " + std::string(kRelationMarker);
}

Tokens label_continuation(std::string_view label) {
  return split_words(std::string(trim(label)) + ".");
}

}  // namespace relprompt
