#pragma once

// Multilingual training loop: equalized batches, per-sentence tapes,
// Adadelta with annealed epsilon, adaptive gradient clipping, per-epoch
// weight decay, and early stopping on the main language's dev UAS.
//
// Batch gradients are per-language means summed over languages, so a
// language's updates do not depend on how many other languages share the
// run (only shared parameters couple them). All randomness (shuffling,
// dropout) is derived from the seed plus the language NAME, which makes a
// fully-private joint run reproduce the corresponding single-language runs.

#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "charparse/model/forward.hpp"
#include "charparse/model/nets.hpp"
#include "charparse/num/optim.hpp"
#include "charparse/treebank/batch.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace charparse::trainer {

using model::Bundle;
using model::LossParts;
using model::SentenceTargets;

struct TrainConfig {
  int epochs = 20;
  int batch_per_lang = 8;
  double rho = 0.95;
  double eps_start = 1e-8;
  double eps_end = 1e-12;
  double clip_factor = 2.0;   // 0 disables adaptive clipping
  double clip_decay = 0.99;
  double decay_factor = 0.95;  // per-epoch multiplicative weight shrink; 1 disables
  int patience = 0;            // epochs without dev improvement before stopping; 0 = off
  int main_language = 0;
  std::uint64_t seed = 1;
  int workers = 1;
  model::DecodeOptions eval_decode;
  bool include_punct = true;
  bool restore_best = true;

  void to_kv(KvFile& kv) const {
    kv.set("train.epochs", static_cast<long long>(epochs));
    kv.set("train.batch_per_lang", static_cast<long long>(batch_per_lang));
    kv.set("train.rho", rho);
    kv.set("train.eps_start", eps_start);
    kv.set("train.eps_end", eps_end);
    kv.set("train.clip_factor", clip_factor);
    kv.set("train.clip_decay", clip_decay);
    kv.set("train.decay_factor", decay_factor);
    kv.set("train.patience", static_cast<long long>(patience));
    kv.set("train.seed", static_cast<long long>(seed));
  }
};

/// One evaluation record. uas/las are -1 when the language has no dev data.
struct EpochMetrics {
  int epoch = 0;
  std::string language;
  double uas = -1;
  double las = -1;
  double loss_head = 0;
  double loss_label = 0;
  double loss_tagger = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_uas = -1;
};

template <typename T>
TrainResult train(
    Bundle<T>& bundle, const TrainConfig& tc,
    const std::vector<std::vector<treebank::Sentence>>& train_corpora,
    const std::vector<std::vector<treebank::Sentence>>& dev_corpora,
    const std::function<void(const EpochMetrics&)>& on_metrics = nullptr,
    const std::type_identity_t<std::function<void(Bundle<T>&, int)>>& on_best = nullptr) {
  int L = bundle.vocab.num_languages();
  if (static_cast<int>(train_corpora.size()) != L ||
      static_cast<int>(dev_corpora.size()) != L)
    throw UsageError("train: corpus count does not match vocabulary languages");
  if (tc.main_language < 0 || tc.main_language >= L)
    throw UsageError("train: bad main language index");
  if (tc.workers < 1) throw UsageError("train: workers must be >= 1");

  // Integer-encode everything once. Languages with no training data are
  // left out of batching (their private parameters simply never move),
  // which lets a bundle built over a multilingual vocabulary be trained on
  // a subset of its languages.
  std::vector<std::vector<SentenceTargets>> targets(static_cast<size_t>(L));
  std::vector<int> active;  // language ids with training data
  std::vector<int> sizes;
  std::vector<std::uint64_t> stream_seeds;
  for (int l = 0; l < L; ++l) {
    const auto& corpus = train_corpora[static_cast<size_t>(l)];
    if (corpus.empty()) continue;
    active.push_back(l);
    sizes.push_back(static_cast<int>(corpus.size()));
    stream_seeds.push_back(derive_seed(
        tc.seed, "batch." + bundle.vocab.languages()[static_cast<size_t>(l)]));
    for (const auto& s : corpus)
      targets[static_cast<size_t>(l)].push_back(model::make_targets(bundle.vocab, s, l));
  }
  if (active.empty()) throw UsageError("train: no training data");

  const std::vector<num::Parameter<T>*>& params = bundle.params();
  std::vector<num::AdadeltaState<T>> opt_state;
  opt_state.reserve(params.size());
  for (const num::Parameter<T>* p : params) opt_state.emplace_back(p->value.shape);
  num::ClipState clip;
  clip.decay = tc.clip_decay;
  clip.factor = tc.clip_factor;

  // Per-worker gradient sinks; merged in worker order after each batch.
  std::vector<std::vector<num::Tensor<T>>> sinks;
  if (tc.workers > 1) {
    sinks.resize(static_cast<size_t>(tc.workers));
    for (auto& sink : sinks) {
      sink.reserve(params.size());
      for (const num::Parameter<T>* p : params) sink.emplace_back(p->value.shape);
    }
  }

  treebank::BatchPlan plan(sizes, tc.batch_per_lang, stream_seeds);
  T inv_b = T(1) / static_cast<T>(tc.batch_per_lang);

  TrainResult result;
  std::vector<num::Tensor<T>> best_values;
  int since_best = 0;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    double eps = num::annealed_epsilon(tc.eps_start, tc.eps_end, epoch, tc.epochs);
    std::vector<double> sum_head(static_cast<size_t>(L), 0), sum_label(static_cast<size_t>(L), 0),
        sum_tagger(static_cast<size_t>(L), 0);
    std::vector<long> n_sent(static_cast<size_t>(L), 0);

    std::vector<treebank::Batch> batches = plan.epoch(epoch);
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const treebank::Batch& batch = batches[bi];
      bundle.zero_grads();

      int items = static_cast<int>(batch.size());
      std::vector<double> it_head(static_cast<size_t>(items)), it_label(static_cast<size_t>(items)),
          it_tagger(static_cast<size_t>(items));
      std::vector<std::string> it_error(static_cast<size_t>(items));

      auto run_item = [&](int i, std::vector<num::Tensor<T>>* sink) {
        const treebank::BatchItem& item = batch[static_cast<size_t>(i)];
        int lang = active[static_cast<size_t>(item.language)];
        const std::string& lang_name = bundle.vocab.languages()[static_cast<size_t>(lang)];
        // Draw index of this sentence within its language's epoch stream.
        std::uint64_t draw = static_cast<std::uint64_t>(bi) * tc.batch_per_lang +
                             static_cast<std::uint64_t>(i % tc.batch_per_lang);
        std::uint64_t dseed = derive_seed(
            derive_seed(tc.seed, lang_name + ".dropout", static_cast<std::uint64_t>(epoch)),
            "draw", draw);
        num::Tape<T> tape(true, dseed);
        LossParts<T> parts = model::sentence_loss(
            tape, bundle.langs[static_cast<size_t>(lang)], bundle.cfg,
            targets[static_cast<size_t>(lang)][static_cast<size_t>(item.sentence)]);
        if (sink)
          tape.backward_into(parts.total, std::span<num::Tensor<T>>(*sink), inv_b);
        else
          tape.backward(parts.total, inv_b);
        it_head[static_cast<size_t>(i)] = parts.head;
        it_label[static_cast<size_t>(i)] = parts.label;
        it_tagger[static_cast<size_t>(i)] = parts.tagger;
      };

      if (tc.workers > 1) {
#ifdef _OPENMP
#pragma omp parallel for num_threads(tc.workers) schedule(static)
#endif
        for (int i = 0; i < items; ++i) {
          int w = 0;
#ifdef _OPENMP
          w = omp_get_thread_num();
#endif
          try {
            run_item(i, &sinks[static_cast<size_t>(w)]);
          } catch (const std::exception& e) {
            it_error[static_cast<size_t>(i)] = e.what();
          }
        }
        for (const std::string& err : it_error)
          if (!err.empty()) throw NumericError(err);
        for (auto& sink : sinks) {
          for (size_t pi = 0; pi < params.size(); ++pi) {
            num::Tensor<T>& g = sink[pi];
            num::Tensor<T>& dst = params[pi]->grad;
            for (size_t j = 0; j < g.v.size(); ++j) dst.v[j] += g.v[j];
            g.fill(T(0));
          }
        }
      } else {
        for (int i = 0; i < items; ++i) run_item(i, nullptr);
      }

      for (int i = 0; i < items; ++i) {
        int l = active[static_cast<size_t>(batch[static_cast<size_t>(i)].language)];
        sum_head[static_cast<size_t>(l)] += it_head[static_cast<size_t>(i)];
        sum_label[static_cast<size_t>(l)] += it_label[static_cast<size_t>(i)];
        sum_tagger[static_cast<size_t>(l)] += it_tagger[static_cast<size_t>(i)];
        ++n_sent[static_cast<size_t>(l)];
      }

      if (tc.clip_factor > 0)
        num::scale_grads(params, clip.admit(num::global_grad_norm(params)));
      for (size_t pi = 0; pi < params.size(); ++pi)
        opt_state[pi].step(params[pi]->value, params[pi]->grad, tc.rho, eps);
    }

    num::weight_decay(params, tc.decay_factor);

    // Evaluation and early stopping.
    double main_uas = -1;
    for (int l = 0; l < L; ++l) {
      EpochMetrics m;
      m.epoch = epoch;
      m.language = bundle.vocab.languages()[static_cast<size_t>(l)];
      long ns = n_sent[static_cast<size_t>(l)];
      m.loss_head = ns ? sum_head[static_cast<size_t>(l)] / ns : 0;
      m.loss_label = ns ? sum_label[static_cast<size_t>(l)] / ns : 0;
      m.loss_tagger = ns ? sum_tagger[static_cast<size_t>(l)] / ns : 0;
      if (!dev_corpora[static_cast<size_t>(l)].empty()) {
        analysis::AttachmentScores sc = model::evaluate_corpus(
            bundle.langs[static_cast<size_t>(l)], bundle.cfg, bundle.vocab,
            dev_corpora[static_cast<size_t>(l)], l, tc.eval_decode, tc.include_punct);
        m.uas = sc.uas();
        m.las = sc.las();
        if (l == tc.main_language) main_uas = m.uas;
      }
      result.log.push_back(m);
      if (on_metrics) on_metrics(m);
    }
    result.epochs_run = epoch + 1;

    if (main_uas >= 0) {
      if (main_uas > result.best_uas) {
        result.best_uas = main_uas;
        result.best_epoch = epoch;
        since_best = 0;
        best_values.clear();
        best_values.reserve(params.size());
        for (const num::Parameter<T>* p : params) best_values.push_back(p->value);
        if (on_best) on_best(bundle, epoch);
      } else {
        ++since_best;
        if (tc.patience > 0 && since_best >= tc.patience) break;
      }
    }
  }

  if (tc.restore_best && !best_values.empty())
    for (size_t pi = 0; pi < params.size(); ++pi) params[pi]->value = best_values[pi];
  return result;
}

}  // namespace charparse::trainer
