#pragma once

// Deterministic synthetic treebank: a tiny SVO language whose suffixes fully
// determine syntactic role, so a character-level model can learn it from a
// handful of sentences. A second "language" is produced by a bijective
// letter-substitution cipher into Cyrillic, giving an isomorphic grammar in
// a disjoint script for cross-lingual transfer tests.

#include <cstdint>
#include <string>
#include <vector>

#include "charparse/treebank/conllu.hpp"

namespace toygen {

struct Options {
  int sentences = 20;
  std::uint64_t seed = 1;
  bool cipher = false;      // substitute every letter into Cyrillic
  double adj_prob = 0.4;    // chance of an adjective before each noun
  int noun_stems = 12;      // shrink to force stem reuse in tiny corpora
  int verb_stems = 8;
};

std::vector<charparse::treebank::Sentence> make_corpus(const Options& opt);

/// Maps a..z onto Cyrillic codepoints U+0430.. one-to-one.
std::string cipher_form(const std::string& form);

}  // namespace toygen
