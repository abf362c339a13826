#include "charparse/treebank/batch.hpp"

#include <algorithm>
#include <numeric>

#include "charparse/util/error.hpp"
#include "charparse/util/rng.hpp"

namespace charparse::treebank {

BatchPlan::BatchPlan(std::vector<int> corpus_sizes, int per_language,
                     std::vector<std::uint64_t> stream_seeds)
    : sizes_(std::move(corpus_sizes)), per_language_(per_language),
      seeds_(std::move(stream_seeds)) {
  if (sizes_.empty()) throw UsageError("batch plan: no languages");
  if (sizes_.size() != seeds_.size())
    throw UsageError("batch plan: one stream seed per language required");
  if (per_language_ < 1) throw UsageError("batch plan: batch size must be >= 1");
  int largest = 0;
  for (int s : sizes_) {
    if (s < 1) throw UsageError("batch plan: empty corpus");
    largest = std::max(largest, s);
  }
  batches_per_epoch_ = (largest + per_language_ - 1) / per_language_;
}

std::vector<Batch> BatchPlan::epoch(int e) const {
  int langs = static_cast<int>(sizes_.size());
  // Each language cycles through shuffles of its own corpus. The shuffle
  // seed mixes in (epoch, cycle) so repeats within an epoch and across
  // epochs use fresh orders.
  std::vector<std::vector<int>> order(static_cast<size_t>(langs));
  std::vector<int> cursor(static_cast<size_t>(langs), 0);
  std::vector<std::uint64_t> cycle(static_cast<size_t>(langs), 0);

  auto reshuffle = [&](int l) {
    auto& ord = order[static_cast<size_t>(l)];
    ord.resize(static_cast<size_t>(sizes_[static_cast<size_t>(l)]));
    std::iota(ord.begin(), ord.end(), 0);
    std::uint64_t s = derive_seed(seeds_[static_cast<size_t>(l)], "epoch",
                                  static_cast<std::uint64_t>(e) << 20 |
                                      cycle[static_cast<size_t>(l)]);
    Rng rng(s);
    rng.shuffle(ord);
    cursor[static_cast<size_t>(l)] = 0;
    ++cycle[static_cast<size_t>(l)];
  };
  for (int l = 0; l < langs; ++l) reshuffle(l);

  std::vector<Batch> out;
  out.reserve(static_cast<size_t>(batches_per_epoch_));
  for (int b = 0; b < batches_per_epoch_; ++b) {
    Batch batch;
    batch.reserve(static_cast<size_t>(langs) * static_cast<size_t>(per_language_));
    for (int l = 0; l < langs; ++l) {
      for (int k = 0; k < per_language_; ++k) {
        if (cursor[static_cast<size_t>(l)] >= sizes_[static_cast<size_t>(l)]) reshuffle(l);
        batch.push_back({l, order[static_cast<size_t>(l)]
                                 [static_cast<size_t>(cursor[static_cast<size_t>(l)]++)]});
      }
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace charparse::treebank
