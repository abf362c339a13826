#pragma once

#include <cstdint>
#include <vector>

namespace charparse::treebank {

struct BatchItem {
  int language;
  int sentence;  // index into that language's corpus
};

using Batch = std::vector<BatchItem>;

/// Plans mini-batches containing the same number of sentences from every
/// language. One epoch covers the largest corpus once; smaller corpora are
/// reshuffled and cycled so each batch stays balanced. Every language draws
/// from its own seeded stream (callers derive stream seeds from the
/// language name), so a language's visit order does not depend on which
/// other languages share the run.
class BatchPlan {
 public:
  BatchPlan(std::vector<int> corpus_sizes, int per_language,
            std::vector<std::uint64_t> stream_seeds);

  int batches_per_epoch() const { return batches_per_epoch_; }

  std::vector<Batch> epoch(int e) const;

 private:
  std::vector<int> sizes_;
  int per_language_;
  std::vector<std::uint64_t> seeds_;
  int batches_per_epoch_;
};

}  // namespace charparse::treebank
