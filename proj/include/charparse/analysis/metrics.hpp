#pragma once

#include <string>
#include <vector>

#include "charparse/decoder/decode.hpp"
#include "charparse/treebank/conllu.hpp"

namespace charparse::analysis {

struct AttachmentScores {
  long total = 0;
  long correct_heads = 0;
  long correct_labeled = 0;

  double uas() const { return total ? 100.0 * correct_heads / total : 0.0; }
  double las() const { return total ? 100.0 * correct_labeled / total : 0.0; }

  AttachmentScores& operator+=(const AttachmentScores& o) {
    total += o.total;
    correct_heads += o.correct_heads;
    correct_labeled += o.correct_labeled;
    return *this;
  }
};

/// Scores one sentence. pred_labels[d] is the predicted relation of word d
/// (index 0 unused); pass an empty vector for unlabeled output, which
/// counts every label as wrong. With include_punct false, tokens whose
/// gold UPOS is PUNCT are skipped.
AttachmentScores score_sentence(const treebank::Sentence& gold,
                                const decoder::Heads& pred_heads,
                                const std::vector<std::string>& pred_labels,
                                bool include_punct = true);

/// Splits head accuracy by whether the part-of-speech was predicted
/// correctly, to show how much attachment quality tracks tagging quality.
struct PosErrorAttribution {
  long pos_correct_tokens = 0;
  long pos_correct_heads = 0;  // of those, how many got the right head
  long pos_wrong_tokens = 0;
  long pos_wrong_heads = 0;

  double head_acc_pos_correct() const {
    return pos_correct_tokens ? 100.0 * pos_correct_heads / pos_correct_tokens : 0.0;
  }
  double head_acc_pos_wrong() const {
    return pos_wrong_tokens ? 100.0 * pos_wrong_heads / pos_wrong_tokens : 0.0;
  }

  PosErrorAttribution& operator+=(const PosErrorAttribution& o) {
    pos_correct_tokens += o.pos_correct_tokens;
    pos_correct_heads += o.pos_correct_heads;
    pos_wrong_tokens += o.pos_wrong_tokens;
    pos_wrong_heads += o.pos_wrong_heads;
    return *this;
  }
};

PosErrorAttribution attribute_pos_errors(const treebank::Sentence& gold,
                                         const decoder::Heads& pred_heads,
                                         const std::vector<std::string>& pred_upos);

}  // namespace charparse::analysis
