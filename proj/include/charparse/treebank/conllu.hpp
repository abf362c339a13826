#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace charparse::treebank {

struct Token {
  std::string form;
  std::string upos;  // "_" when absent
  std::vector<std::pair<std::string, std::string>> feats;  // attribute, value
  int head = -1;     // 0 = root, -1 = not annotated
  std::string deprel;  // "_" when absent
};

struct Sentence {
  std::vector<Token> tokens;  // heads are 1-based indices into this vector

  int size() const { return static_cast<int>(tokens.size()); }
};

struct LoadStats {
  int kept = 0;
  int rejected = 0;  // sentences dropped for malformed or non-tree annotation
};

/// True when every head lies in [0,n], no token heads itself, and every
/// token reaches the root (no cycles).
bool is_tree(const Sentence& s);

/// Parses CoNLL-U text. Comment lines, multiword-token ranges (1-2) and
/// empty nodes (1.1) are skipped. With require_gold, sentences whose heads
/// are missing or do not form a tree are dropped and counted in stats;
/// without it, heads may be absent (-1).
std::vector<Sentence> parse_conllu(std::string_view text, LoadStats* stats = nullptr,
                                   bool require_gold = true);

std::vector<Sentence> load_conllu(const std::string& path, LoadStats* stats = nullptr,
                                  bool require_gold = true);

void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences);

std::string format_conllu(const std::vector<Sentence>& sentences);

}  // namespace charparse::treebank
