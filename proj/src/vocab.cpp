#include "charparse/treebank/vocab.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "charparse/util/error.hpp"
#include "charparse/util/utf8.hpp"

namespace charparse::treebank {

namespace {

constexpr const char* kUnkSym = "<unk>";
constexpr const char* kSowSym = "<sow>";
constexpr const char* kEowSym = "<eow>";

std::vector<std::string> sorted_with_unk(const std::set<std::string>& syms) {
  std::vector<std::string> out;
  out.reserve(syms.size() + 1);
  out.emplace_back(kUnkSym);
  out.insert(out.end(), syms.begin(), syms.end());
  return out;
}

}  // namespace

Vocabulary Vocabulary::build(
    const std::vector<std::pair<std::string, const std::vector<Sentence>*>>& corpora) {
  Vocabulary v;
  std::set<char32_t> all_chars;
  std::vector<std::set<char32_t>> per_lang_chars(corpora.size());
  std::set<std::string> upos, deprels;
  std::set<std::string> attrs;
  std::unordered_map<std::string, std::set<std::string>> values;

  for (size_t li = 0; li < corpora.size(); ++li) {
    const auto& [name, sents] = corpora[li];
    if (std::find(v.languages_.begin(), v.languages_.end(), name) != v.languages_.end())
      throw UsageError("duplicate language name: " + name);
    v.languages_.push_back(name);
    for (const Sentence& s : *sents) {
      for (const Token& t : s.tokens) {
        for (char32_t cp : utf8::decode(t.form)) {
          all_chars.insert(cp);
          per_lang_chars[li].insert(cp);
        }
        if (!t.upos.empty() && t.upos != "_") upos.insert(t.upos);
        if (!t.deprel.empty() && t.deprel != "_") deprels.insert(t.deprel);
        for (const auto& [a, val] : t.feats) {
          attrs.insert(a);
          values[a].insert(val);
        }
      }
    }
  }

  v.chars_.assign(all_chars.begin(), all_chars.end());
  v.lang_chars_.resize(corpora.size());
  v.upos_ = sorted_with_unk(upos);
  v.deprels_ = sorted_with_unk(deprels);
  v.feat_attrs_.assign(attrs.begin(), attrs.end());
  for (const std::string& a : v.feat_attrs_)
    v.feat_value_names_.push_back(sorted_with_unk(values[a]));
  v.rebuild_maps();
  for (size_t li = 0; li < corpora.size(); ++li)
    for (char32_t cp : per_lang_chars[li])
      v.lang_chars_[li].push_back(v.char_id(cp));
  return v;
}

void Vocabulary::rebuild_maps() {
  char_ids_.clear();
  for (size_t i = 0; i < chars_.size(); ++i)
    char_ids_.emplace(chars_[i], static_cast<int>(i) + 1);
  upos_ids_.clear();
  for (size_t i = 0; i < upos_.size(); ++i) upos_ids_.emplace(upos_[i], static_cast<int>(i));
  deprel_ids_.clear();
  for (size_t i = 0; i < deprels_.size(); ++i)
    deprel_ids_.emplace(deprels_[i], static_cast<int>(i));
  feat_attr_ids_.clear();
  feat_value_ids_.assign(feat_attrs_.size(), {});
  for (size_t a = 0; a < feat_attrs_.size(); ++a) {
    feat_attr_ids_.emplace(feat_attrs_[a], static_cast<int>(a));
    for (size_t i = 0; i < feat_value_names_[a].size(); ++i)
      feat_value_ids_[a].emplace(feat_value_names_[a][i], static_cast<int>(i));
  }
}

int Vocabulary::char_table_rows() const {
  return 1 + static_cast<int>(chars_.size()) + 2 * num_languages();
}

int Vocabulary::char_id(char32_t cp) const {
  auto it = char_ids_.find(cp);
  return it == char_ids_.end() ? kUnk : it->second;
}

int Vocabulary::sow_id(int language) const {
  return 1 + static_cast<int>(chars_.size()) + 2 * language;
}

int Vocabulary::eow_id(int language) const { return sow_id(language) + 1; }

std::vector<int> Vocabulary::encode_word(const std::string& form, int language) const {
  if (language < 0 || language >= num_languages())
    throw UsageError("encode_word: bad language index");
  std::vector<char32_t> cps = utf8::decode(form);
  std::vector<int> ids;
  ids.reserve(cps.size() + 2);
  ids.push_back(sow_id(language));
  for (char32_t cp : cps) ids.push_back(char_id(cp));
  ids.push_back(eow_id(language));
  return ids;
}

const std::vector<int>& Vocabulary::language_chars(int language) const {
  return lang_chars_.at(static_cast<size_t>(language));
}

int Vocabulary::language_id(const std::string& name) const {
  for (size_t i = 0; i < languages_.size(); ++i)
    if (languages_[i] == name) return static_cast<int>(i);
  return -1;
}

int Vocabulary::upos_id(const std::string& tag) const {
  auto it = upos_ids_.find(tag);
  return it == upos_ids_.end() ? kUnk : it->second;
}

int Vocabulary::deprel_id(const std::string& rel) const {
  auto it = deprel_ids_.find(rel);
  return it == deprel_ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::feat_targets(const Token& tok) const {
  std::vector<int> out(feat_attrs_.size(), kUnk);
  for (const auto& [a, val] : tok.feats) {
    auto it = feat_attr_ids_.find(a);
    if (it == feat_attr_ids_.end()) continue;
    const auto& vm = feat_value_ids_[static_cast<size_t>(it->second)];
    auto vi = vm.find(val);
    out[static_cast<size_t>(it->second)] = vi == vm.end() ? kUnk : vi->second;
  }
  return out;
}

std::string Vocabulary::to_tsv() const {
  std::ostringstream out;
  out << "char\t*\t" << kUnkSym << "\t0\n";
  for (size_t i = 0; i < chars_.size(); ++i)
    out << "char\t*\t" << utf8::encode(chars_[i]) << '\t' << (i + 1) << '\n';
  for (int l = 0; l < num_languages(); ++l) {
    const std::string& lang = languages_[static_cast<size_t>(l)];
    for (int id : lang_chars_[static_cast<size_t>(l)])
      out << "char\t" << lang << '\t'
          << utf8::encode(chars_[static_cast<size_t>(id - 1)]) << '\t' << id << '\n';
    out << "fence\t" << lang << '\t' << kSowSym << '\t' << sow_id(l) << '\n';
    out << "fence\t" << lang << '\t' << kEowSym << '\t' << eow_id(l) << '\n';
  }
  for (size_t i = 0; i < upos_.size(); ++i)
    out << "upos\t*\t" << upos_[i] << '\t' << i << '\n';
  for (size_t i = 0; i < deprels_.size(); ++i)
    out << "deprel\t*\t" << deprels_[i] << '\t' << i << '\n';
  for (size_t a = 0; a < feat_attrs_.size(); ++a)
    for (size_t i = 0; i < feat_value_names_[a].size(); ++i)
      out << "feat:" << feat_attrs_[a] << "\t*\t" << feat_value_names_[a][i] << '\t' << i
          << '\n';
  return out.str();
}

Vocabulary Vocabulary::from_tsv(const std::string& text) {
  Vocabulary v;
  std::unordered_map<std::string, int> lang_index;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    size_t t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string::npos)
      throw UsageError("vocab line " + std::to_string(lineno) + ": want 4 columns");
    std::string kind = line.substr(0, t1);
    std::string lang = line.substr(t1 + 1, t2 - t1 - 1);
    std::string sym = line.substr(t2 + 1, t3 - t2 - 1);
    int id = 0;
    try {
      id = std::stoi(line.substr(t3 + 1));
    } catch (...) {
      throw UsageError("vocab line " + std::to_string(lineno) + ": bad id");
    }
    auto intern_lang = [&](const std::string& name) {
      auto it = lang_index.find(name);
      if (it != lang_index.end()) return it->second;
      int idx = static_cast<int>(v.languages_.size());
      v.languages_.push_back(name);
      v.lang_chars_.emplace_back();
      lang_index.emplace(name, idx);
      return idx;
    };
    auto expect_id = [&](size_t have) {
      if (id != static_cast<int>(have))
        throw UsageError("vocab line " + std::to_string(lineno) + ": id out of order");
    };
    if (kind == "char") {
      if (lang == "*") {
        if (sym == kUnkSym) {
          expect_id(0);
          continue;
        }
        std::vector<char32_t> cps = utf8::decode(sym);
        if (cps.size() != 1)
          throw UsageError("vocab line " + std::to_string(lineno) +
                           ": char symbol must be one code point");
        expect_id(v.chars_.size() + 1);
        v.chars_.push_back(cps[0]);
      } else {
        int li = intern_lang(lang);
        v.lang_chars_[static_cast<size_t>(li)].push_back(id);
      }
    } else if (kind == "fence") {
      intern_lang(lang);
    } else if (kind == "upos") {
      expect_id(v.upos_.size());
      v.upos_.push_back(sym);
    } else if (kind == "deprel") {
      expect_id(v.deprels_.size());
      v.deprels_.push_back(sym);
    } else if (kind.rfind("feat:", 0) == 0) {
      std::string attr = kind.substr(5);
      if (v.feat_attrs_.empty() || v.feat_attrs_.back() != attr) {
        v.feat_attrs_.push_back(attr);
        v.feat_value_names_.emplace_back();
      }
      expect_id(v.feat_value_names_.back().size());
      v.feat_value_names_.back().push_back(sym);
    } else {
      throw UsageError("vocab line " + std::to_string(lineno) + ": unknown kind " + kind);
    }
  }
  if (v.upos_.empty() || v.deprels_.empty())
    throw UsageError("vocab: missing upos or deprel inventory");
  v.rebuild_maps();
  return v;
}

}  // namespace charparse::treebank
