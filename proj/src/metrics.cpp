#include "charparse/analysis/metrics.hpp"

#include "charparse/util/error.hpp"

namespace charparse::analysis {

AttachmentScores score_sentence(const treebank::Sentence& gold,
                                const decoder::Heads& pred_heads,
                                const std::vector<std::string>& pred_labels,
                                bool include_punct) {
  int n = gold.size();
  if (static_cast<int>(pred_heads.size()) != n + 1)
    throw UsageError("score_sentence: prediction length does not match sentence");
  if (!pred_labels.empty() && static_cast<int>(pred_labels.size()) != n + 1)
    throw UsageError("score_sentence: label count does not match sentence");
  AttachmentScores out;
  for (int d = 1; d <= n; ++d) {
    const treebank::Token& tok = gold.tokens[static_cast<size_t>(d - 1)];
    if (!include_punct && tok.upos == "PUNCT") continue;
    ++out.total;
    bool head_ok = pred_heads[static_cast<size_t>(d)] == tok.head;
    if (head_ok) {
      ++out.correct_heads;
      if (!pred_labels.empty() && pred_labels[static_cast<size_t>(d)] == tok.deprel)
        ++out.correct_labeled;
    }
  }
  return out;
}

PosErrorAttribution attribute_pos_errors(const treebank::Sentence& gold,
                                         const decoder::Heads& pred_heads,
                                         const std::vector<std::string>& pred_upos) {
  int n = gold.size();
  if (static_cast<int>(pred_heads.size()) != n + 1 ||
      static_cast<int>(pred_upos.size()) != n + 1)
    throw UsageError("attribute_pos_errors: prediction length does not match sentence");
  PosErrorAttribution out;
  for (int d = 1; d <= n; ++d) {
    const treebank::Token& tok = gold.tokens[static_cast<size_t>(d - 1)];
    bool head_ok = pred_heads[static_cast<size_t>(d)] == tok.head;
    if (pred_upos[static_cast<size_t>(d)] == tok.upos) {
      ++out.pos_correct_tokens;
      out.pos_correct_heads += head_ok;
    } else {
      ++out.pos_wrong_tokens;
      out.pos_wrong_heads += head_ok;
    }
  }
  return out;
}

}  // namespace charparse::analysis
