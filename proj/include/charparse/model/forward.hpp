#pragma once

// Builds tapes for the full pipeline: character reader -> stacked
// bidirectional tagger -> head scorer, label classifier, and the auxiliary
// part-of-speech predictor. Training builds one tape per sentence (lengths
// vary, so shapes are dynamic); inference reuses the same graph without
// dropout and hands the head log-probabilities to the decoder.

#include <vector>

#include "charparse/analysis/metrics.hpp"
#include "charparse/decoder/decode.hpp"
#include "charparse/model/nets.hpp"
#include "charparse/num/tape.hpp"
#include "charparse/treebank/conllu.hpp"

namespace charparse::model {

using num::Tape;
using num::Var;

/// Integer view of one sentence: everything the tapes need, precomputed
/// once so the hot loop never touches strings.
struct SentenceTargets {
  std::vector<std::vector<int>> words;  // fenced character ids, words 1..n
  std::vector<int> heads;               // gold head per word (0 = root)
  std::vector<int> labels;              // deprel id per word
  std::vector<int> upos;                // upos id per word
  std::vector<std::vector<int>> feats;  // per word, one value id per attribute
};

inline SentenceTargets make_targets(const Vocabulary& vocab, const treebank::Sentence& s,
                                    int lang) {
  SentenceTargets tg;
  for (const treebank::Token& tok : s.tokens) {
    tg.words.push_back(vocab.encode_word(tok.form, lang));
    tg.heads.push_back(tok.head < 0 ? 0 : tok.head);
    tg.labels.push_back(vocab.deprel_id(tok.deprel));
    tg.upos.push_back(vocab.upos_id(tok.upos));
    tg.feats.push_back(vocab.feat_targets(tok));
  }
  return tg;
}

template <typename T>
Var read_word(Tape<T>& t, ReaderNet<T>& net, const ModelConfig& cfg,
              const std::vector<int>& char_ids) {
  Var table = t.param(net.chars);
  Var C = t.embed_rows(table, char_ids);
  int L = static_cast<int>(char_ids.size());
  std::vector<Var> pooled;
  pooled.reserve(static_cast<size_t>(cfg.max_filter_len));
  for (int k = 1; k <= cfg.max_filter_len; ++k) {
    if (L >= k)
      pooled.push_back(t.maxpool_rows(t.conv1d(C, t.param(net.conv[static_cast<size_t>(k - 1)]), k)));
    else
      pooled.push_back(t.zeros({cfg.conv_filters(k)}));
  }
  Var x = t.concat(pooled);
  x = t.affine(x, t.param(net.proj_w), t.param(net.proj_b));
  for (size_t i = 0; i < net.mlp_w.size(); ++i)
    x = t.relu(t.affine(x, t.param(net.mlp_w[i]), t.param(net.mlp_b[i])));
  return t.dropout(x, cfg.reader_dropout);
}

template <typename T>
Var gru_step(Tape<T>& t, GruCell<T>& cell, int H, Var xg, Var h_prev) {
  Var xz = t.slice(xg, 0, H);
  Var xr = t.slice(xg, H, H);
  Var xh = t.slice(xg, 2 * H, H);
  Var z = t.sigmoid(t.add(xz, t.linear(h_prev, t.param(cell.uz))));
  Var r = t.sigmoid(t.add(xr, t.linear(h_prev, t.param(cell.ur))));
  Var hc = t.tanh_(t.add(xh, t.linear(t.mul(r, h_prev), t.param(cell.uh))));
  // h = z * h_prev + (1 - z) * hc
  return t.add(hc, t.mul(z, t.sub(h_prev, hc)));
}

/// Bidirectional states for positions 0..n (0 is the root token). The two
/// directions of each layer are summed; dropout sits between layers only.
template <typename T>
std::vector<Var> encode_sentence(Tape<T>& t, LanguageNets<T>& nets, const ModelConfig& cfg,
                                 const std::vector<std::vector<int>>& words) {
  std::vector<Var> seq;
  seq.reserve(words.size() + 1);
  seq.push_back(t.dropout(t.param(nets.reader->root), cfg.reader_dropout));
  for (const auto& w : words) seq.push_back(read_word(t, *nets.reader, cfg, w));

  int P = static_cast<int>(seq.size());
  int H = cfg.rnn_dim;
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    GruCell<T>& fc = nets.tagger->fwd[static_cast<size_t>(l)];
    GruCell<T>& bc = nets.tagger->bwd[static_cast<size_t>(l)];
    Var X = t.stack_rows(seq);
    Var XGf = t.affine(X, t.param(fc.w), t.param(fc.b));
    Var XGb = t.affine(X, t.param(bc.w), t.param(bc.b));
    std::vector<Var> hf(static_cast<size_t>(P)), hb(static_cast<size_t>(P));
    Var h = t.zeros({H});
    for (int i = 0; i < P; ++i) {
      h = gru_step(t, fc, H, t.pick_row(XGf, i), h);
      hf[static_cast<size_t>(i)] = h;
    }
    h = t.zeros({H});
    for (int i = P - 1; i >= 0; --i) {
      h = gru_step(t, bc, H, t.pick_row(XGb, i), h);
      hb[static_cast<size_t>(i)] = h;
    }
    for (int i = 0; i < P; ++i) {
      Var s = t.add(hf[static_cast<size_t>(i)], hb[static_cast<size_t>(i)]);
      seq[static_cast<size_t>(i)] = l + 1 < cfg.rnn_layers ? t.dropout(s, cfg.rnn_dropout) : s;
    }
  }
  return seq;
}

/// Unnormalized head scores, one row per dependent, one column per head
/// candidate (column 0 = root).
template <typename T>
Var head_score_logits(Tape<T>& t, ParserNet<T>& net, const std::vector<Var>& states) {
  std::vector<Var> deps(states.begin() + 1, states.end());
  Var A = t.affine(t.stack_rows(deps), t.param(net.dep_w), t.param(net.dep_b));
  Var B = t.linear(t.stack_rows(states), t.param(net.head_w));
  return t.pair_score_tanh(A, B, t.param(net.score_v));
}

template <typename T>
Var label_logits(Tape<T>& t, ParserNet<T>& net, const ModelConfig& cfg, Var dep_state,
                 Var head_state) {
  Var x = t.concat(dep_state, head_state);
  x = t.affine(x, t.param(net.lab1_w), t.param(net.lab1_b));
  x = t.maxout(x, cfg.label_pieces);
  x = t.dropout(x, cfg.label_dropout);
  return t.affine(x, t.param(net.lab2_w), t.param(net.lab2_b));
}

template <typename T>
struct LossParts {
  Var total;
  double head = 0;
  double label = 0;
  double tagger = 0;
  int tokens = 0;
};

/// Joint loss of one sentence: weighted sum of head, label, and tagging
/// cross-entropies. The labeler is teacher-forced on gold heads. With
/// mean_losses each part is a per-token mean (the tagger part sums its
/// categories per token).
template <typename T>
LossParts<T> sentence_loss(Tape<T>& t, LanguageNets<T>& nets, const ModelConfig& cfg,
                           const SentenceTargets& tg) {
  int n = static_cast<int>(tg.words.size());
  if (n < 1) throw NumericError("sentence_loss: empty sentence");
  std::vector<Var> states = encode_sentence(t, nets, cfg, tg.words);

  Var scores = head_score_logits(t, *nets.parser, states);
  Var lh_each = t.xent_rows(scores, tg.heads);
  Var lh = cfg.mean_losses ? t.mean_all(lh_each) : t.sum_all(lh_each);

  std::vector<Var> lab_terms;
  lab_terms.reserve(static_cast<size_t>(n));
  for (int d = 1; d <= n; ++d) {
    Var head_state = states[static_cast<size_t>(tg.heads[static_cast<size_t>(d - 1)])];
    Var logits = label_logits(t, *nets.parser, cfg, states[static_cast<size_t>(d)], head_state);
    lab_terms.push_back(t.xent(logits, tg.labels[static_cast<size_t>(d - 1)]));
  }
  Var ll = t.sum_scalars(lab_terms);
  if (cfg.mean_losses) ll = t.scale(ll, T(1) / static_cast<T>(n));

  PosNet<T>& pos = *nets.pos;
  std::vector<Var> tag_terms;
  for (int d = 1; d <= n; ++d) {
    Var st = states[static_cast<size_t>(d)];
    Var up = t.affine(st, t.param(pos.w[0]), t.param(pos.b[0]));
    tag_terms.push_back(t.xent(up, tg.upos[static_cast<size_t>(d - 1)]));
    for (size_t a = 1; a < pos.w.size(); ++a) {
      Var fl = t.affine(st, t.param(pos.w[a]), t.param(pos.b[a]));
      tag_terms.push_back(t.xent(fl, tg.feats[static_cast<size_t>(d - 1)][a - 1]));
    }
  }
  Var lt = t.sum_scalars(tag_terms);
  if (cfg.mean_losses) lt = t.scale(lt, T(1) / static_cast<T>(n));

  Var total = t.add(t.add(t.scale(lh, static_cast<T>(cfg.w_head)),
                          t.scale(ll, static_cast<T>(cfg.w_label))),
                    t.scale(lt, static_cast<T>(cfg.w_tagger)));
  LossParts<T> parts;
  parts.total = total;
  parts.head = static_cast<double>(t.value(lh).v[0]);
  parts.label = static_cast<double>(t.value(ll).v[0]);
  parts.tagger = static_cast<double>(t.value(lt).v[0]);
  parts.tokens = n;
  return parts;
}

struct DecodeOptions {
  bool greedy = false;       // per-dependent argmax instead of exact search
  bool single_root = false;  // force exactly one root attachment (exact search only)
};

struct Parsed {
  decoder::Heads heads;          // size n+1, slot 0 unused
  std::vector<int> label_ids;    // size n+1, slot 0 = -1
  std::vector<int> upos_ids;     // size n+1, slot 0 = -1
  decoder::ScoreMatrix scores;   // per-dependent head log-probabilities
};

template <typename T>
int argmax_row(const num::Tensor<T>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.numel()); ++i)
    if (v.at(i) > v.at(best)) best = i;
  return best;
}

template <typename T>
Parsed parse_sentence(LanguageNets<T>& nets, const ModelConfig& cfg, const Vocabulary& vocab,
                      const treebank::Sentence& s, int lang, const DecodeOptions& opt) {
  int n = s.size();
  if (n < 1) throw UsageError("parse_sentence: empty sentence");
  Tape<T> t(false, 0);
  std::vector<std::vector<int>> words;
  words.reserve(static_cast<size_t>(n));
  for (const treebank::Token& tok : s.tokens) words.push_back(vocab.encode_word(tok.form, lang));
  std::vector<Var> states = encode_sentence(t, nets, cfg, words);
  Var logp = t.log_softmax_rows(head_score_logits(t, *nets.parser, states));

  Parsed out;
  out.scores = decoder::ScoreMatrix(n);
  const num::Tensor<T>& sp = t.value(logp);
  for (int d = 1; d <= n; ++d)
    for (int h = 0; h <= n; ++h) out.scores.at(d, h) = static_cast<double>(sp.at(d - 1, h));

  if (opt.greedy)
    out.heads = decoder::greedy_heads(out.scores);
  else if (opt.single_root)
    out.heads = decoder::cle_heads_single_root(out.scores);
  else
    out.heads = decoder::cle_heads(out.scores);

  out.label_ids.assign(static_cast<size_t>(n) + 1, -1);
  out.upos_ids.assign(static_cast<size_t>(n) + 1, -1);
  for (int d = 1; d <= n; ++d) {
    int h = out.heads[static_cast<size_t>(d)];
    Var logits = h < 0 ? Var(-1)
                       : label_logits(t, *nets.parser, cfg, states[static_cast<size_t>(d)],
                                      states[static_cast<size_t>(h)]);
    out.label_ids[static_cast<size_t>(d)] = h < 0 ? 0 : argmax_row(t.value(logits));
    Var up = t.affine(states[static_cast<size_t>(d)], t.param(nets.pos->w[0]),
                      t.param(nets.pos->b[0]));
    out.upos_ids[static_cast<size_t>(d)] = argmax_row(t.value(up));
  }
  return out;
}

/// Parses a corpus and returns copies of the sentences with predicted
/// heads, labels, and part-of-speech tags filled in.
template <typename T>
std::vector<treebank::Sentence> parse_corpus(LanguageNets<T>& nets, const ModelConfig& cfg,
                                             const Vocabulary& vocab,
                                             const std::vector<treebank::Sentence>& input,
                                             int lang, const DecodeOptions& opt) {
  std::vector<treebank::Sentence> out;
  out.reserve(input.size());
  for (const treebank::Sentence& s : input) {
    Parsed p = parse_sentence(nets, cfg, vocab, s, lang, opt);
    treebank::Sentence pred = s;
    for (int d = 1; d <= s.size(); ++d) {
      treebank::Token& tok = pred.tokens[static_cast<size_t>(d - 1)];
      tok.head = p.heads[static_cast<size_t>(d)];
      tok.deprel = vocab.deprel_name(p.label_ids[static_cast<size_t>(d)]);
      tok.upos = vocab.upos_name(p.upos_ids[static_cast<size_t>(d)]);
      tok.feats.clear();
    }
    out.push_back(std::move(pred));
  }
  return out;
}

template <typename T>
analysis::AttachmentScores evaluate_corpus(LanguageNets<T>& nets, const ModelConfig& cfg,
                                           const Vocabulary& vocab,
                                           const std::vector<treebank::Sentence>& gold,
                                           int lang, const DecodeOptions& opt,
                                           bool include_punct = true) {
  analysis::AttachmentScores total;
  for (const treebank::Sentence& s : gold) {
    Parsed p = parse_sentence(nets, cfg, vocab, s, lang, opt);
    std::vector<std::string> labels(static_cast<size_t>(s.size()) + 1);
    for (int d = 1; d <= s.size(); ++d)
      labels[static_cast<size_t>(d)] = vocab.deprel_name(p.label_ids[static_cast<size_t>(d)]);
    total += analysis::score_sentence(s, p.heads, labels, include_punct);
  }
  return total;
}

}  // namespace charparse::model
