#pragma once

// Structured prompt templates shared by the generator and the extractor.
// The exact strings are a wire-visible contract:
//
//   generator prompt    "Relation: <label>."
//   generator target    "Context: <sentence>. Head Entity: <head>, Tail Entity: <tail>."
//   extractor input     "Context: <sentence>."
//   extractor target    "Head Entity: <head>, Tail Entity: <tail>, Relation: <label>."
//   relation prefix     "Context: <sentence>. Head Entity: <head>, Tail Entity: <tail>, Relation:"
//
// A sentence that already ends in '.' renders as "<sentence>.." and decoders
// strip exactly one trailing separator from each field.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "relprompt/corpus.hpp"
#include "relprompt/text.hpp"

namespace relprompt {

inline constexpr std::string_view kContextMarker = "Context:";
inline constexpr std::string_view kHeadMarker = "Head Entity:";
inline constexpr std::string_view kTailMarker = "Tail Entity:";
inline constexpr std::string_view kRelationMarker = "Relation:";
inline constexpr std::array<std::string_view, 4> kMarkers = {kContextMarker, kHeadMarker,
                                                             kTailMarker, kRelationMarker};

// Marker phrases as whitespace tokens, the form decoders search for.
Tokens head_marker_tokens();
Tokens tail_marker_tokens();
Tokens relation_marker_tokens();

bool contains_marker(std::string_view field);

struct DecodeError {
  enum class Kind { MissingMarker, EntityNotInContext, EmptyField, ReservedMarker };
  Kind kind;
  std::string detail;  // marker, field name or offending entity

  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

std::string describe(const DecodeError& e);

template <typename T>
class Decoded {
 public:
  Decoded(T value) : v_(std::move(value)) {}
  Decoded(DecodeError err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return std::get<T>(v_); }
  const DecodeError& error() const { return std::get<DecodeError>(v_); }

 private:
  std::variant<T, DecodeError> v_;
};

struct GeneratorExample {
  std::string prompt;
  std::string target;
  std::string text() const { return prompt + " " + target; }
};

struct ExtractorExample {
  std::string input;
  std::string target;
  std::string text() const { return input + " " + target; }
};

std::string render_generator_prompt(std::string_view label);
std::string render_extractor_input(std::string_view sentence);

// Throws ContractError unless the sample holds exactly one triplet with this
// label, or when any field contains a marker phrase.
GeneratorExample encode_generator_example(std::string_view label, const Sample& sample);
// The triplet label is `label` when given, otherwise read from an echoed
// "Relation: <label>." prompt before "Context:", otherwise left empty.
Decoded<Sample> decode_generator_output(std::string_view text, std::string_view label = {});

// Throws ContractError when the triplet is not in the sample or a field
// contains a marker phrase.
ExtractorExample encode_extractor_example(const Sample& sample, const RelationTriplet& triplet);
Decoded<RelationTriplet> decode_extractor_output(std::string_view text);

// Entity-conditioned prefix ending exactly in "Relation:".
std::string encode_zerorc_prefix(const Sample& sample, std::string_view head, std::string_view tail);

// Tokens that spell `label` after "Relation:" including the closing period,
// e.g. "Military Rank" -> {"Military", "Rank."}.
Tokens label_continuation(std::string_view label);

}  // namespace relprompt
