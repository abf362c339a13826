#pragma once

#include <span>
#include <vector>

namespace charparse::decoder {

/// Head scores for one sentence of n words. Entry (dep, head) is the score
/// of attaching dependent dep (1..n) to head (0..n, 0 = root). Rows are
/// dependents. Scores are arbitrary finite reals; the model fills in
/// per-dependent log-probabilities.
struct ScoreMatrix {
  int n = 0;
  std::vector<double> s;  // n rows, n+1 columns

  ScoreMatrix() = default;
  explicit ScoreMatrix(int words) : n(words), s(static_cast<size_t>(words) * (words + 1)) {}

  double& at(int dep, int head) {
    return s[static_cast<size_t>(dep - 1) * (n + 1) + static_cast<size_t>(head)];
  }
  double at(int dep, int head) const {
    return s[static_cast<size_t>(dep - 1) * (n + 1) + static_cast<size_t>(head)];
  }
};

/// Head assignment for a sentence: heads[d] for d in 1..n, heads[0] = -1.
using Heads = std::vector<int>;

/// True when every word has a head in [0,n], none heads itself, and every
/// word reaches the root.
bool is_valid_tree(const Heads& heads);

/// Sum of scores of the chosen arcs.
double tree_score(const ScoreMatrix& m, const Heads& heads);

/// Per-dependent argmax. May produce a cyclic (invalid) structure; ties go
/// to the lower head index.
Heads greedy_heads(const ScoreMatrix& m);

/// Maximum spanning arborescence rooted at 0 (Chu-Liu-Edmonds). The root
/// may take any number of children.
Heads cle_heads(const ScoreMatrix& m);

/// Maximum arborescence with exactly one child of the root: tries each word
/// as the sole root attachment and keeps the best-scoring tree.
Heads cle_heads_single_root(const ScoreMatrix& m);

struct DecoderComparison {
  int sentences = 0;
  int greedy_nontree = 0;   // greedy produced a cycle or unreachable word
  int identical = 0;        // same heads from both decoders
  double mean_score_gap = 0.0;  // mean of cle_score - greedy_score
};

/// Measures how often the greedy decoder differs from exact search on a
/// batch of score matrices.
DecoderComparison compare_decoders(std::span<const ScoreMatrix> matrices);

}  // namespace charparse::decoder
