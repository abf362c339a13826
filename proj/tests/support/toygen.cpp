#include "support/toygen.hpp"

#include <algorithm>

#include "charparse/util/rng.hpp"
#include "charparse/util/utf8.hpp"

namespace toygen {

using charparse::Rng;
using charparse::treebank::Sentence;
using charparse::treebank::Token;

namespace {

const char* kNounStems[] = {"mal", "tok", "rin", "sob", "vun", "pel",
                            "gar", "dom", "fis", "lek", "nar", "but"};
const char* kVerbStems[] = {"kat", "mir", "sol", "vad", "rel", "pon", "tus", "gol"};
const char* kAdjStems[] = {"zel", "bor", "lin", "daf", "kur", "wes"};
const char* kAdvStems[] = {"hap", "sil", "tor", "mek"};

Token noun(Rng& rng, int n_stems, bool nom) {
  Token t;
  t.form = std::string(kNounStems[rng.below(static_cast<std::uint64_t>(n_stems))]) +
           (nom ? "as" : "un");
  t.upos = "NOUN";
  t.feats = {{"Case", nom ? "Nom" : "Acc"}};
  return t;
}

Token verb(Rng& rng, int n_stems) {
  Token t;
  t.form = std::string(kVerbStems[rng.below(static_cast<std::uint64_t>(n_stems))]) + "or";
  t.upos = "VERB";
  return t;
}

Token adjective(Rng& rng) {
  Token t;
  t.form = std::string(kAdjStems[rng.below(6)]) + "ek";
  t.upos = "ADJ";
  return t;
}

Token adverb(Rng& rng) {
  Token t;
  t.form = std::string(kAdvStems[rng.below(4)]) + "lo";
  t.upos = "ADV";
  return t;
}

}  // namespace

std::string cipher_form(const std::string& form) {
  std::vector<char32_t> cps = charparse::utf8::decode(form);
  for (char32_t& c : cps) {
    if (c >= U'a' && c <= U'z') c = 0x0430 + (c - U'a');
  }
  return charparse::utf8::encode(cps);
}

std::vector<Sentence> make_corpus(const Options& opt) {
  Rng rng(opt.seed);
  std::vector<Sentence> out;
  out.reserve(static_cast<size_t>(opt.sentences));
  for (int i = 0; i < opt.sentences; ++i) {
    int pattern = static_cast<int>(rng.below(3));  // 0: SV, 1: SVO, 2: SVO+ADV
    Sentence s;
    auto push_np = [&](bool nom) {
      if (rng.bernoulli(opt.adj_prob)) {
        Token a = adjective(rng);
        a.deprel = "amod";
        a.head = s.size() + 2;  // the noun pushed right after
        s.tokens.push_back(a);
      }
      Token n = noun(rng, opt.noun_stems, nom);
      s.tokens.push_back(n);
      return s.size();  // 1-based position of the noun
    };
    int subj = push_np(true);
    Token v = verb(rng, opt.verb_stems);
    v.deprel = "root";
    v.head = 0;
    s.tokens.push_back(v);
    int vp = s.size();
    s.tokens[static_cast<size_t>(subj - 1)].head = vp;
    s.tokens[static_cast<size_t>(subj - 1)].deprel = "nsubj";
    if (pattern >= 1) {
      int obj = push_np(false);
      s.tokens[static_cast<size_t>(obj - 1)].head = vp;
      s.tokens[static_cast<size_t>(obj - 1)].deprel = "obj";
    }
    if (pattern == 2) {
      Token adv = adverb(rng);
      adv.head = vp;
      adv.deprel = "advmod";
      s.tokens.push_back(adv);
    }
    if (opt.cipher)
      for (Token& t : s.tokens) t.form = cipher_form(t.form);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace toygen
