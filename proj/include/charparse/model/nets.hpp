#pragma once

// Parameter containers for the four subnetworks and the bundle that wires
// them up per language. Sharing a subnetwork across languages means the
// per-language slots alias one object; private subnetworks are separate
// objects whose init streams depend only on (seed, language, subnetwork),
// so a joint model with no sharing starts exactly like independent models.

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "charparse/model/config.hpp"
#include "charparse/num/checkpoint.hpp"
#include "charparse/num/tape.hpp"
#include "charparse/treebank/vocab.hpp"
#include "charparse/util/rng.hpp"

namespace charparse::model {

using treebank::Vocabulary;

template <typename T>
using Param = num::Parameter<T>;

template <typename T>
struct ReaderNet {
  Param<T> chars;                 // [char rows, char_dim]
  std::vector<Param<T>> conv;     // per k: [filters(k), k*char_dim]
  Param<T> proj_w, proj_b;        // [word_dim, concat_dim]
  std::vector<Param<T>> mlp_w;    // [word_dim, word_dim] each
  std::vector<Param<T>> mlp_b;
  Param<T> root;                  // [word_dim], embedding of the root token
};

template <typename T>
struct GruCell {
  Param<T> w;   // [3*H, in]; gate order: update, reset, candidate
  Param<T> b;   // [3*H], update slice starts at +1
  Param<T> uz;  // [H, H]
  Param<T> ur;
  Param<T> uh;
};

template <typename T>
struct TaggerNet {
  std::vector<GruCell<T>> fwd;  // one per layer
  std::vector<GruCell<T>> bwd;
};

/// One softmax per predicted category: UPOS first, then one per feature
/// attribute, in vocabulary order.
template <typename T>
struct PosNet {
  std::vector<Param<T>> w;  // [values(c), rnn_dim]
  std::vector<Param<T>> b;
};

template <typename T>
struct ParserNet {
  // head scorer: v . tanh(dep_w h_d + dep_b + head_w h_h)
  Param<T> dep_w, dep_b;  // [scorer_dim, rnn_dim], [scorer_dim]
  Param<T> head_w;        // [scorer_dim, rnn_dim]
  Param<T> score_v;       // [scorer_dim]
  // labeler: maxout over the dependent+head state pair
  Param<T> lab1_w, lab1_b;  // [units*pieces, 2*rnn_dim]
  Param<T> lab2_w, lab2_b;  // [labels, units]
};

namespace detail {

template <typename T>
void init_matrix(Param<T>& p, Rng& rng) {
  int fan_out = p.value.rows(), fan_in = p.value.cols();
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : p.value.v) v = static_cast<T>(rng.uniform(-a, a));
}

template <typename T>
void init_uniform(Param<T>& p, Rng& rng, double a) {
  for (T& v : p.value.v) v = static_cast<T>(rng.uniform(-a, a));
}

}  // namespace detail

template <typename T>
std::shared_ptr<ReaderNet<T>> make_reader(const ModelConfig& cfg, const Vocabulary& vocab,
                                          const std::string& prefix, std::uint64_t seed) {
  Rng rng(derive_seed(seed, prefix + ".reader"));
  auto net = std::make_shared<ReaderNet<T>>();
  net->chars = Param<T>(prefix + ".reader.chars",
                        num::Tensor<T>({vocab.char_table_rows(), cfg.char_dim}));
  detail::init_uniform(net->chars, rng, 0.1);
  for (int k = 1; k <= cfg.max_filter_len; ++k) {
    net->conv.emplace_back(prefix + ".reader.conv" + std::to_string(k),
                           num::Tensor<T>({cfg.conv_filters(k), k * cfg.char_dim}));
    detail::init_matrix(net->conv.back(), rng);
  }
  net->proj_w = Param<T>(prefix + ".reader.proj.w",
                         num::Tensor<T>({cfg.word_dim, cfg.reader_concat_dim()}));
  detail::init_matrix(net->proj_w, rng);
  net->proj_b =
      Param<T>(prefix + ".reader.proj.b", num::Tensor<T>({cfg.word_dim}), true);
  for (int i = 0; i < cfg.reader_layers; ++i) {
    net->mlp_w.emplace_back(prefix + ".reader.mlp" + std::to_string(i) + ".w",
                            num::Tensor<T>({cfg.word_dim, cfg.word_dim}));
    detail::init_matrix(net->mlp_w.back(), rng);
    net->mlp_b.emplace_back(prefix + ".reader.mlp" + std::to_string(i) + ".b",
                            num::Tensor<T>({cfg.word_dim}), true);
  }
  net->root = Param<T>(prefix + ".reader.root", num::Tensor<T>({cfg.word_dim}));
  detail::init_uniform(net->root, rng, 0.1);
  return net;
}

template <typename T>
GruCell<T> make_gru_cell(const ModelConfig& cfg, int in_dim, const std::string& prefix,
                         Rng& rng) {
  int H = cfg.rnn_dim;
  GruCell<T> c;
  c.w = Param<T>(prefix + ".w", num::Tensor<T>({3 * H, in_dim}));
  detail::init_matrix(c.w, rng);
  c.b = Param<T>(prefix + ".b", num::Tensor<T>({3 * H}), true);
  for (int i = 0; i < H; ++i) c.b.value.at(i) = T(1);  // keep-gate starts open
  c.uz = Param<T>(prefix + ".uz", num::Tensor<T>({H, H}));
  detail::init_matrix(c.uz, rng);
  c.ur = Param<T>(prefix + ".ur", num::Tensor<T>({H, H}));
  detail::init_matrix(c.ur, rng);
  c.uh = Param<T>(prefix + ".uh", num::Tensor<T>({H, H}));
  detail::init_matrix(c.uh, rng);
  return c;
}

template <typename T>
std::shared_ptr<TaggerNet<T>> make_tagger(const ModelConfig& cfg, const std::string& prefix,
                                          std::uint64_t seed) {
  Rng rng(derive_seed(seed, prefix + ".tagger"));
  auto net = std::make_shared<TaggerNet<T>>();
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    int in_dim = l == 0 ? cfg.word_dim : cfg.rnn_dim;
    std::string lp = prefix + ".tagger.l" + std::to_string(l);
    net->fwd.push_back(make_gru_cell<T>(cfg, in_dim, lp + ".fwd", rng));
    net->bwd.push_back(make_gru_cell<T>(cfg, in_dim, lp + ".bwd", rng));
  }
  return net;
}

template <typename T>
std::shared_ptr<PosNet<T>> make_pos(const ModelConfig& cfg, const Vocabulary& vocab,
                                    const std::string& prefix, std::uint64_t seed) {
  Rng rng(derive_seed(seed, prefix + ".pos"));
  auto net = std::make_shared<PosNet<T>>();
  auto add = [&](const std::string& name, int values) {
    net->w.emplace_back(prefix + ".pos." + name + ".w",
                        num::Tensor<T>({values, cfg.rnn_dim}));
    detail::init_matrix(net->w.back(), rng);
    net->b.emplace_back(prefix + ".pos." + name + ".b", num::Tensor<T>({values}), true);
  };
  add("upos", vocab.num_upos());
  for (int a = 0; a < vocab.num_feat_attrs(); ++a)
    add("feat." + vocab.feat_attr(a), vocab.feat_values(a));
  return net;
}

template <typename T>
std::shared_ptr<ParserNet<T>> make_parser(const ModelConfig& cfg, const Vocabulary& vocab,
                                          const std::string& prefix, std::uint64_t seed) {
  Rng rng(derive_seed(seed, prefix + ".parser"));
  auto net = std::make_shared<ParserNet<T>>();
  net->dep_w = Param<T>(prefix + ".parser.score.dep.w",
                        num::Tensor<T>({cfg.scorer_dim, cfg.rnn_dim}));
  detail::init_matrix(net->dep_w, rng);
  net->dep_b =
      Param<T>(prefix + ".parser.score.dep.b", num::Tensor<T>({cfg.scorer_dim}), true);
  net->head_w = Param<T>(prefix + ".parser.score.head.w",
                         num::Tensor<T>({cfg.scorer_dim, cfg.rnn_dim}));
  detail::init_matrix(net->head_w, rng);
  net->score_v = Param<T>(prefix + ".parser.score.v", num::Tensor<T>({cfg.scorer_dim}));
  detail::init_uniform(net->score_v, rng, std::sqrt(3.0 / cfg.scorer_dim));
  net->lab1_w = Param<T>(prefix + ".parser.label.hidden.w",
                         num::Tensor<T>({cfg.label_units * cfg.label_pieces,
                                         2 * cfg.rnn_dim}));
  detail::init_matrix(net->lab1_w, rng);
  net->lab1_b = Param<T>(prefix + ".parser.label.hidden.b",
                         num::Tensor<T>({cfg.label_units * cfg.label_pieces}), true);
  net->lab2_w = Param<T>(prefix + ".parser.label.out.w",
                         num::Tensor<T>({vocab.num_deprels(), cfg.label_units}));
  detail::init_matrix(net->lab2_w, rng);
  net->lab2_b =
      Param<T>(prefix + ".parser.label.out.b", num::Tensor<T>({vocab.num_deprels()}), true);
  return net;
}

// ---- parameter traversal ----

template <typename T, typename F>
void for_each_param(ReaderNet<T>& n, F&& f) {
  f(n.chars);
  for (auto& p : n.conv) f(p);
  f(n.proj_w);
  f(n.proj_b);
  for (size_t i = 0; i < n.mlp_w.size(); ++i) {
    f(n.mlp_w[i]);
    f(n.mlp_b[i]);
  }
  f(n.root);
}

template <typename T, typename F>
void for_each_param(TaggerNet<T>& n, F&& f) {
  for (size_t l = 0; l < n.fwd.size(); ++l) {
    for (GruCell<T>* c : {&n.fwd[l], &n.bwd[l]}) {
      f(c->w);
      f(c->b);
      f(c->uz);
      f(c->ur);
      f(c->uh);
    }
  }
}

template <typename T, typename F>
void for_each_param(PosNet<T>& n, F&& f) {
  for (size_t i = 0; i < n.w.size(); ++i) {
    f(n.w[i]);
    f(n.b[i]);
  }
}

template <typename T, typename F>
void for_each_param(ParserNet<T>& n, F&& f) {
  f(n.dep_w);
  f(n.dep_b);
  f(n.head_w);
  f(n.score_v);
  f(n.lab1_w);
  f(n.lab1_b);
  f(n.lab2_w);
  f(n.lab2_b);
}

/// Per-language handles. Shared subnetworks alias the same object across
/// languages.
template <typename T>
struct LanguageNets {
  std::shared_ptr<ReaderNet<T>> reader;
  std::shared_ptr<TaggerNet<T>> tagger;
  std::shared_ptr<PosNet<T>> pos;
  std::shared_ptr<ParserNet<T>> parser;
};

template <typename T>
class Bundle {
 public:
  ModelConfig cfg;
  Vocabulary vocab;
  SharingSpec sharing;
  std::vector<LanguageNets<T>> langs;

  static Bundle create(ModelConfig cfg, Vocabulary vocab, SharingSpec sharing,
                       std::uint64_t seed) {
    cfg.validate();
    Bundle b;
    b.cfg = cfg;
    b.vocab = std::move(vocab);
    b.sharing = sharing;
    int L = b.vocab.num_languages();
    if (L < 1) throw UsageError("model: vocabulary has no languages");

    std::shared_ptr<ReaderNet<T>> sh_reader;
    std::shared_ptr<TaggerNet<T>> sh_tagger;
    std::shared_ptr<PosNet<T>> sh_pos;
    std::shared_ptr<ParserNet<T>> sh_parser;
    if (sharing.reader) sh_reader = make_reader<T>(cfg, b.vocab, "shared", seed);
    if (sharing.tagger) sh_tagger = make_tagger<T>(cfg, "shared", seed);
    if (sharing.pos) sh_pos = make_pos<T>(cfg, b.vocab, "shared", seed);
    if (sharing.parser) sh_parser = make_parser<T>(cfg, b.vocab, "shared", seed);

    for (int l = 0; l < L; ++l) {
      const std::string& name = b.vocab.languages()[static_cast<size_t>(l)];
      LanguageNets<T> nets;
      nets.reader = sharing.reader ? sh_reader : make_reader<T>(cfg, b.vocab, name, seed);
      nets.tagger = sharing.tagger ? sh_tagger : make_tagger<T>(cfg, name, seed);
      nets.pos = sharing.pos ? sh_pos : make_pos<T>(cfg, b.vocab, name, seed);
      nets.parser = sharing.parser ? sh_parser : make_parser<T>(cfg, b.vocab, name, seed);
      b.langs.push_back(std::move(nets));
    }
    b.index_params();
    return b;
  }

  /// Every distinct parameter exactly once, in a stable traversal order
  /// (each net visited at the first language that uses it).
  const std::vector<Param<T>*>& params() const { return params_; }

  void zero_grads() {
    for (Param<T>* p : params_) p->zero_grad();
  }

  long long param_count() const {
    long long n = 0;
    for (const Param<T>* p : params_) n += p->value.numel();
    return n;
  }

  std::vector<std::pair<std::string, const num::Tensor<T>*>> named_values() const {
    std::vector<std::pair<std::string, const num::Tensor<T>*>> out;
    out.reserve(params_.size());
    for (const Param<T>* p : params_) out.emplace_back(p->name, &p->value);
    return out;
  }

  /// Loads values from a checkpoint map; the name sets must match exactly.
  void load_values(const std::map<std::string, num::Tensor<T>>& values) {
    if (values.size() != params_.size())
      throw UsageError("checkpoint holds " + std::to_string(values.size()) +
                       " tensors, model has " + std::to_string(params_.size()));
    for (Param<T>* p : params_) {
      auto it = values.find(p->name);
      if (it == values.end()) throw UsageError("checkpoint is missing tensor " + p->name);
      if (!it->second.same_shape(p->value))
        throw UsageError("checkpoint tensor " + p->name + " has shape " +
                         it->second.shape_str() + ", model wants " + p->value.shape_str());
      p->value = it->second;
    }
  }

  /// Hash of everything that must match for a checkpoint to be loadable.
  std::string config_hash() const {
    KvFile kv;
    cfg.to_kv(kv);
    kv.set("sharing", sharing.to_string());
    std::uint64_t h = fnv1a64(kv.dump());
    h = splitmix64(h ^ fnv1a64(vocab.to_tsv()));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }

 private:
  std::vector<Param<T>*> params_;

  void index_params() {
    params_.clear();
    std::vector<void*> seen;
    auto visit_net = [&](auto& net_ptr) {
      if (!net_ptr) return;
      void* key = static_cast<void*>(net_ptr.get());
      for (void* s : seen)
        if (s == key) return;
      seen.push_back(key);
      for_each_param(*net_ptr, [&](Param<T>& p) {
        p.index = static_cast<int>(params_.size());
        params_.push_back(&p);
      });
    };
    for (auto& ln : langs) {
      visit_net(ln.reader);
      visit_net(ln.tagger);
      visit_net(ln.pos);
      visit_net(ln.parser);
    }
  }
};

}  // namespace charparse::model
