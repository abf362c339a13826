#include "charparse/analysis/embed.hpp"

#include <algorithm>
#include <cmath>

#include "charparse/util/error.hpp"

namespace charparse::analysis {

double euclidean(const double* a, const double* b, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<int> nearest(const EmbeddingView& emb, const double* query,
                         const std::vector<int>& candidates, int k) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidates.size());
  for (int c : candidates) {
    if (c < 0 || c >= emb.rows) throw UsageError("nearest: candidate id out of range");
    scored.emplace_back(euclidean(query, emb.row(c), emb.dim), c);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> out;
  for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i)
    out.push_back(scored[static_cast<size_t>(i)].second);
  return out;
}

AnalogyResult analogy_eval(const EmbeddingView& emb,
                           const std::vector<std::pair<int, int>>& pairs,
                           const std::vector<int>& candidates, bool ordered,
                           bool exclude_inputs) {
  if (emb.dim < 1) throw UsageError("analogy: empty embeddings");
  AnalogyResult res;
  std::vector<double> q(static_cast<size_t>(emb.dim));
  std::vector<int> cands;
  for (size_t i = 0; i < pairs.size(); ++i) {
    for (size_t j = ordered ? 0 : i + 1; j < pairs.size(); ++j) {
      if (i == j) continue;
      const auto& p = pairs[i];
      const auto& r = pairs[j];
      const double* ps = emb.row(p.first);
      const double* pt = emb.row(p.second);
      const double* rs = emb.row(r.first);
      for (int d = 0; d < emb.dim; ++d) q[static_cast<size_t>(d)] = pt[d] - ps[d] + rs[d];
      const std::vector<int>* use = &candidates;
      if (exclude_inputs) {
        cands.clear();
        for (int c : candidates)
          if (c != p.first && c != p.second && c != r.first) cands.push_back(c);
        use = &cands;
      }
      if (use->empty()) continue;
      std::vector<int> top = nearest(emb, q.data(), *use, 1);
      ++res.total;
      if (!top.empty() && top[0] == r.second) ++res.correct;
    }
  }
  return res;
}

}  // namespace charparse::analysis
