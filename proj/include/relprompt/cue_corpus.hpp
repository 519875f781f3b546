#pragma once

#include <cstdint>

#include "relprompt/corpus.hpp"

namespace relprompt {

// Desk-scale corpus in which every relation is expressed by trigger words
// that spell the start of its label ("X was born in Y." -> "born in").
// Twelve relations with `per_relation` sentences each; every
// `multi_every`-th sentence of a relation states two triplets of that
// relation. Entity names come from fixed pools picked with SplitMix64(seed).
Dataset make_cue_corpus(std::uint64_t seed = 0, std::size_t per_relation = 40, std::size_t multi_every = 4);

}  // namespace relprompt
