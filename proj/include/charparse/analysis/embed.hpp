#pragma once

#include <string>
#include <utility>
#include <vector>

namespace charparse::analysis {

/// Read-only view of an embedding table: rows x dim doubles, row-major.
struct EmbeddingView {
  const double* data = nullptr;
  int rows = 0;
  int dim = 0;

  const double* row(int r) const { return data + static_cast<long>(r) * dim; }
};

double euclidean(const double* a, const double* b, int dim);

/// Ids of the k nearest candidates to a query vector, closest first. The
/// query id itself is not excluded; ties break toward the lower id.
std::vector<int> nearest(const EmbeddingView& emb, const double* query,
                         const std::vector<int>& candidates, int k);

struct AnalogyResult {
  int total = 0;
  int correct = 0;

  double accuracy() const { return total ? 100.0 * correct / total : 0.0; }
};

/// Offset analogies over correspondence pairs. For every ordered pair of
/// distinct pairs (p, r) the query is emb[p.second] - emb[p.first] +
/// emb[r.first]; the prediction is the nearest candidate and is correct
/// when it equals r.second. With ordered false, each unordered pair of
/// pairs is used once (p before r in input order). With exclude_inputs,
/// candidates equal to p.first, p.second or r.first are skipped.
AnalogyResult analogy_eval(const EmbeddingView& emb,
                           const std::vector<std::pair<int, int>>& pairs,
                           const std::vector<int>& candidates, bool ordered = true,
                           bool exclude_inputs = false);

}  // namespace charparse::analysis
