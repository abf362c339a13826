#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "charparse/treebank/conllu.hpp"

namespace charparse::treebank {

/// Symbol inventories shared across languages. Characters from all training
/// corpora share one id space (the same code point always maps to the same
/// id, even across scripts), with id 0 reserved for unknowns. Each language
/// gets its own start-of-word and end-of-word fence ids appended after the
/// real characters; fences are never shared between languages. Tag and
/// label inventories are unioned the same way, id 0 = unknown.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;

  /// Builds from per-language corpora, given in the order languages were
  /// passed to the trainer.
  static Vocabulary build(
      const std::vector<std::pair<std::string, const std::vector<Sentence>*>>& corpora);

  // characters
  int char_table_rows() const;                  // unk + chars + 2 fences per language
  int char_id(char32_t cp) const;               // kUnk when unseen
  int sow_id(int language) const;
  int eow_id(int language) const;
  /// Character ids for one word: fence, characters, fence.
  std::vector<int> encode_word(const std::string& form, int language) const;
  const std::vector<char32_t>& chars() const { return chars_; }
  /// Ids of characters attested in one language's corpus (no fences).
  const std::vector<int>& language_chars(int language) const;

  // languages
  int num_languages() const { return static_cast<int>(languages_.size()); }
  const std::vector<std::string>& languages() const { return languages_; }
  int language_id(const std::string& name) const;  // -1 when unknown

  // part-of-speech tags
  int num_upos() const { return static_cast<int>(upos_.size()); }
  int upos_id(const std::string& tag) const;
  const std::string& upos_name(int id) const { return upos_[static_cast<size_t>(id)]; }

  // dependency labels
  int num_deprels() const { return static_cast<int>(deprels_.size()); }
  int deprel_id(const std::string& rel) const;
  const std::string& deprel_name(int id) const { return deprels_[static_cast<size_t>(id)]; }

  // morphological features: one categorical per attribute, id 0 = unknown,
  // which also stands for "attribute absent on this token"
  int num_feat_attrs() const { return static_cast<int>(feat_attrs_.size()); }
  const std::string& feat_attr(int a) const { return feat_attrs_[static_cast<size_t>(a)]; }
  int feat_values(int a) const {
    return static_cast<int>(feat_value_names_[static_cast<size_t>(a)].size());
  }
  const std::string& feat_value_name(int a, int id) const {
    return feat_value_names_[static_cast<size_t>(a)][static_cast<size_t>(id)];
  }
  /// Per-attribute value ids for a token (kUnk for absent attributes).
  std::vector<int> feat_targets(const Token& tok) const;

  int upos_target(const Token& tok) const { return upos_id(tok.upos); }

  /// Tab-separated dump: kind, language, symbol, id. One section per
  /// (kind, language), each sorted by id.
  std::string to_tsv() const;
  static Vocabulary from_tsv(const std::string& text);

 private:
  std::vector<std::string> languages_;
  std::vector<char32_t> chars_;  // index = id - 1
  std::unordered_map<char32_t, int> char_ids_;
  std::vector<std::vector<int>> lang_chars_;
  std::vector<std::string> upos_;
  std::unordered_map<std::string, int> upos_ids_;
  std::vector<std::string> deprels_;
  std::unordered_map<std::string, int> deprel_ids_;
  std::vector<std::string> feat_attrs_;
  std::unordered_map<std::string, int> feat_attr_ids_;
  std::vector<std::vector<std::string>> feat_value_names_;
  std::vector<std::unordered_map<std::string, int>> feat_value_ids_;

  void rebuild_maps();
};

}  // namespace charparse::treebank
