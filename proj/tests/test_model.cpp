#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "charparse/model/config.hpp"
#include "charparse/model/forward.hpp"
#include "charparse/model/nets.hpp"
#include "charparse/treebank/vocab.hpp"
#include "charparse/util/error.hpp"
#include "charparse/util/kv.hpp"
#include "charparse/util/rng.hpp"
#include "support/oracles.hpp"
#include "support/toygen.hpp"

using namespace charparse;
using model::Bundle;
using model::ModelConfig;
using model::SharingSpec;
using num::Parameter;
using num::Tape;
using num::Tensor;
using num::Var;
using treebank::Vocabulary;

namespace {

ModelConfig desk() {
  ModelConfig c;
  c.char_dim = 6;
  c.filters_per_len = 4;
  c.max_filter_len = 3;
  c.word_dim = 16;
  c.reader_layers = 1;
  c.reader_dropout = 0.2;
  c.rnn_layers = 2;
  c.rnn_dim = 12;
  c.rnn_dropout = 0.3;
  c.scorer_dim = 10;
  c.label_units = 8;
  c.label_pieces = 2;
  c.label_dropout = 0.2;
  return c;
}

ModelConfig micro() {
  ModelConfig c = desk();
  c.char_dim = 3;
  c.filters_per_len = 2;
  c.max_filter_len = 2;
  c.word_dim = 6;
  c.rnn_layers = 1;
  c.rnn_dim = 5;
  c.scorer_dim = 4;
  c.label_units = 3;
  return c;
}

Vocabulary two_lang_vocab(std::vector<treebank::Sentence>* a_out = nullptr,
                          std::vector<treebank::Sentence>* b_out = nullptr) {
  static auto a = toygen::make_corpus({.sentences = 30, .seed = 21});
  static auto b = toygen::make_corpus({.sentences = 30, .seed = 22, .cipher = true});
  if (a_out) *a_out = a;
  if (b_out) *b_out = b;
  return Vocabulary::build({{"alpha", &a}, {"beta", &b}});
}

}  // namespace

TEST_CASE("model config: kv round trip and validation") {
  ModelConfig c = desk();
  c.w_head = 0.61;
  c.mean_losses = false;
  KvFile kv;
  c.to_kv(kv);
  ModelConfig d = ModelConfig::from_kv(kv);
  CHECK(d.char_dim == c.char_dim);
  CHECK(d.max_filter_len == c.max_filter_len);
  CHECK(d.word_dim == c.word_dim);
  CHECK(d.rnn_dim == c.rnn_dim);
  CHECK(d.w_head == doctest::Approx(0.61));
  CHECK(d.mean_losses == false);

  ModelConfig full;  // defaults are the full-size network
  CHECK(full.char_dim == 15);
  CHECK(full.conv_filters(6) == 300);
  CHECK(full.reader_concat_dim() == 1050);
  CHECK(full.word_dim == 512);
  CHECK(full.rnn_dim == 548);
  CHECK(full.rnn_layers == 2);
  CHECK(full.scorer_dim == 384);
  CHECK(full.label_units == 256);
  CHECK(full.w_head == doctest::Approx(0.6));
  CHECK(full.w_label == doctest::Approx(0.4));
  CHECK(full.w_tagger == doctest::Approx(1.0));

  ModelConfig bad = desk();
  bad.rnn_dim = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = desk();
  bad.reader_dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("sharing spec parses and prints") {
  CHECK(SharingSpec::parse("all").all());
  CHECK(SharingSpec::parse("none").none());
  CHECK(SharingSpec::parse("").none());
  SharingSpec s = SharingSpec::parse("reader,parser");
  CHECK(s.reader);
  CHECK(s.parser);
  CHECK(!s.tagger);
  CHECK(!s.pos);
  CHECK(s.to_string() == "reader,parser");
  CHECK(SharingSpec::parse("tagger,pos").to_string() == "tagger,pos");
  CHECK(SharingSpec{true, true, true, true}.to_string() == "all");
  CHECK(SharingSpec{}.to_string() == "none");
  CHECK_THROWS_AS(SharingSpec::parse("scorer"), UsageError);
}

TEST_CASE("bundle shapes follow the config") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = desk();
  auto b = Bundle<double>::create(c, v, SharingSpec{}, 7);
  REQUIRE(b.langs.size() == 2);

  auto& r = *b.langs[0].reader;
  CHECK(r.chars.value.shape == std::vector<int>{v.char_table_rows(), c.char_dim});
  REQUIRE(r.conv.size() == 3);
  for (int k = 1; k <= 3; ++k) {
    CHECK(r.conv[static_cast<size_t>(k - 1)].value.shape ==
          std::vector<int>{4 * k, k * c.char_dim});
  }
  CHECK(r.proj_w.value.shape == std::vector<int>{c.word_dim, c.reader_concat_dim()});
  CHECK(c.reader_concat_dim() == 4 * (1 + 2 + 3));
  REQUIRE(r.mlp_w.size() == 1);
  CHECK(r.mlp_w[0].value.shape == std::vector<int>{16, 16});
  CHECK(r.root.value.shape == std::vector<int>{16});

  auto& t = *b.langs[0].tagger;
  REQUIRE(t.fwd.size() == 2);
  REQUIRE(t.bwd.size() == 2);
  CHECK(t.fwd[0].w.value.shape == std::vector<int>{36, 16});   // layer 0 reads words
  CHECK(t.fwd[1].w.value.shape == std::vector<int>{36, 12});   // layer 1 reads states
  CHECK(t.fwd[0].uz.value.shape == std::vector<int>{12, 12});
  // update-gate bias opens the keep gate at init
  for (int i = 0; i < 12; ++i) CHECK(t.fwd[0].b.value.at(i) == 1.0);
  for (int i = 12; i < 36; ++i) CHECK(t.fwd[0].b.value.at(i) == 0.0);

  auto& p = *b.langs[0].parser;
  CHECK(p.dep_w.value.shape == std::vector<int>{10, 12});
  CHECK(p.score_v.value.shape == std::vector<int>{10});
  CHECK(p.lab1_w.value.shape == std::vector<int>{16, 24});  // units*pieces x 2H
  CHECK(p.lab2_w.value.shape == std::vector<int>{v.num_deprels(), 8});

  auto& pos = *b.langs[0].pos;
  REQUIRE(pos.w.size() == static_cast<size_t>(1 + v.num_feat_attrs()));
  CHECK(pos.w[0].value.shape == std::vector<int>{v.num_upos(), 12});
  CHECK(pos.w[1].value.shape == std::vector<int>{v.feat_values(0), 12});

  // biases are flagged (weight decay must skip them)
  CHECK(r.proj_b.is_bias);
  CHECK(t.fwd[0].b.is_bias);
  CHECK(p.dep_b.is_bias);
  CHECK(!p.score_v.is_bias);
}

TEST_CASE("sharing aliases subnetworks; private nets stay distinct") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = desk();

  auto all = Bundle<double>::create(c, v, SharingSpec::parse("all"), 7);
  CHECK(all.langs[0].reader == all.langs[1].reader);
  CHECK(all.langs[0].tagger == all.langs[1].tagger);
  CHECK(all.langs[0].pos == all.langs[1].pos);
  CHECK(all.langs[0].parser == all.langs[1].parser);

  auto none = Bundle<double>::create(c, v, SharingSpec{}, 7);
  CHECK(none.langs[0].reader != none.langs[1].reader);
  CHECK(none.langs[0].tagger != none.langs[1].tagger);
  CHECK(none.langs[0].pos != none.langs[1].pos);
  CHECK(none.langs[0].parser != none.langs[1].parser);

  auto part = Bundle<double>::create(c, v, SharingSpec::parse("tagger,pos"), 7);
  CHECK(part.langs[0].reader != part.langs[1].reader);
  CHECK(part.langs[0].tagger == part.langs[1].tagger);
  CHECK(part.langs[0].pos == part.langs[1].pos);
  CHECK(part.langs[0].parser != part.langs[1].parser);

  // a fully shared two-language bundle has exactly the parameters of one
  // copy of every subnetwork
  long long one_copy = 0;
  model::for_each_param(*all.langs[0].reader,
                        [&](Parameter<double>& p) { one_copy += p.value.numel(); });
  model::for_each_param(*all.langs[0].tagger,
                        [&](Parameter<double>& p) { one_copy += p.value.numel(); });
  model::for_each_param(*all.langs[0].pos,
                        [&](Parameter<double>& p) { one_copy += p.value.numel(); });
  model::for_each_param(*all.langs[0].parser,
                        [&](Parameter<double>& p) { one_copy += p.value.numel(); });
  CHECK(all.param_count() == one_copy);
  CHECK(none.param_count() == 2 * one_copy);
  CHECK(part.param_count() > one_copy);
  CHECK(part.param_count() < 2 * one_copy);

  // parameter names are unique and indexed consecutively
  std::set<std::string> names;
  int idx = 0;
  for (auto* p : none.params()) {
    CHECK(names.insert(p->name).second);
    CHECK(p->index == idx++);
  }
  // shared parameters carry the shared prefix; private ones the language name
  bool saw_shared = false, saw_alpha = false;
  for (auto* p : part.params()) {
    if (p->name.rfind("shared.", 0) == 0) saw_shared = true;
    if (p->name.rfind("alpha.", 0) == 0) saw_alpha = true;
  }
  CHECK(saw_shared);
  CHECK(saw_alpha);
}

TEST_CASE("private initialization depends only on seed and language name") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = desk();
  auto b1 = Bundle<double>::create(c, v, SharingSpec{}, 42);
  auto b2 = Bundle<double>::create(c, v, SharingSpec{}, 42);
  REQUIRE(b1.params().size() == b2.params().size());
  for (size_t i = 0; i < b1.params().size(); ++i) {
    CHECK(b1.params()[i]->name == b2.params()[i]->name);
    CHECK(b1.params()[i]->value.v == b2.params()[i]->value.v);
  }
  // different seed, different values
  auto b3 = Bundle<double>::create(c, v, SharingSpec{}, 43);
  bool any_diff = false;
  for (size_t i = 0; i < b1.params().size() && !any_diff; ++i)
    if (b1.params()[i]->value.v != b3.params()[i]->value.v) any_diff = true;
  CHECK(any_diff);
  // the two languages' private nets differ from each other
  CHECK(b1.langs[0].reader->proj_w.value.v != b1.langs[1].reader->proj_w.value.v);
}

TEST_CASE("gru step matches a scalar reference") {
  int H = 2, in = 3;
  Rng rng(5);
  model::GruCell<double> cell;
  auto mk = [&](std::vector<int> shape, bool bias = false) {
    Parameter<double> p("p", Tensor<double>(std::move(shape)), bias);
    for (double& x : p.value.v) x = rng.uniform(-0.8, 0.8);
    return p;
  };
  cell.w = mk({3 * H, in});
  cell.b = mk({3 * H}, true);
  cell.uz = mk({H, H});
  cell.ur = mk({H, H});
  cell.uh = mk({H, H});

  Tensor<double> x({in});
  Tensor<double> h0({H});
  for (double& v : x.v) v = rng.uniform(-1, 1);
  for (double& v : h0.v) v = rng.uniform(-1, 1);

  Tape<double> t;
  Var xg = t.affine(t.input(x), t.param(cell.w), t.param(cell.b));
  Var h1 = model::gru_step(t, cell, H, xg, t.input(h0));
  const Tensor<double>& got = t.value(h1);

  auto dot_row = [](const Tensor<double>& m, int row, const std::vector<double>& vec) {
    double s = 0;
    for (int j = 0; j < m.cols(); ++j) s += m.at(row, j) * vec[static_cast<size_t>(j)];
    return s;
  };
  for (int i = 0; i < H; ++i) {
    double gz = cell.b.value.at(i) + dot_row(cell.w.value, i, x.v);
    double gr = cell.b.value.at(H + i) + dot_row(cell.w.value, H + i, x.v);
    double gh = cell.b.value.at(2 * H + i) + dot_row(cell.w.value, 2 * H + i, x.v);
    double z = 1.0 / (1.0 + std::exp(-(gz + dot_row(cell.uz.value, i, h0.v))));
    double r = 1.0 / (1.0 + std::exp(-(gr + dot_row(cell.ur.value, i, h0.v))));
    std::vector<double> rh(static_cast<size_t>(H));
    for (int j = 0; j < H; ++j) {
      double rj = 1.0 / (1.0 + std::exp(-(cell.b.value.at(H + j) +
                                          dot_row(cell.w.value, H + j, x.v) +
                                          dot_row(cell.ur.value, j, h0.v))));
      rh[static_cast<size_t>(j)] = rj * h0.v[static_cast<size_t>(j)];
    }
    (void)r;
    double hc = std::tanh(gh + dot_row(cell.uh.value, i, rh));
    double want = z * h0.v[static_cast<size_t>(i)] + (1 - z) * hc;
    CHECK(got.at(i) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("words shorter than a filter contribute zero pooled features") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = desk();
  c.max_filter_len = 5;  // a 1-char word (3 with fences) is shorter than k=4,5
  auto b = Bundle<double>::create(c, v, SharingSpec{}, 1);
  Tape<double> t;
  Var w = model::read_word(t, *b.langs[0].reader, c, v.encode_word("a", 0));
  CHECK(t.value(w).numel() == c.word_dim);
  CHECK(t.value(w).all_finite());
  // unknown-only word still encodes (unk id 0 rows)
  Var u = model::read_word(t, *b.langs[0].reader, c, v.encode_word("Q", 0));
  CHECK(t.value(u).all_finite());

  // and the zero-padded word still backpropagates cleanly
  Parameter<double>& f4 = b.langs[0].reader->conv[3];
  b.zero_grads();
  Tape<double> t2(true, 8);
  Var loss = t2.sum_all(model::read_word(t2, *b.langs[0].reader, c, v.encode_word("a", 0)));
  t2.backward(loss);
  double f4_grad = 0;
  for (double g : f4.grad.v) f4_grad += std::abs(g);
  CHECK(f4_grad == 0.0);  // no position ever used the length-4 filters
}

TEST_CASE("full sentence loss passes a gradient check") {
  std::vector<treebank::Sentence> a;
  Vocabulary v = two_lang_vocab(&a);
  ModelConfig c = micro();
  auto bundle = Bundle<double>::create(c, v, SharingSpec::parse("reader,tagger"), 17);

  // pick a sentence with at least 3 words so every loss part is exercised
  const treebank::Sentence* sent = nullptr;
  for (const auto& s : a)
    if (s.size() >= 3) { sent = &s; break; }
  REQUIRE(sent != nullptr);
  model::SentenceTargets tg = model::make_targets(v, *sent, 0);

  for (bool train_mode : {false, true}) {
    auto build = [&](Tape<double>& t) {
      return model::sentence_loss(t, bundle.langs[0], c, tg).total;
    };
    auto loss = [&]() {
      Tape<double> t(train_mode, 321);
      return t.value(build(t)).v[0];
    };
    auto grads = [&]() {
      Tape<double> t(train_mode, 321);
      t.backward(build(t));
    };
    std::vector<Parameter<double>*> ps(bundle.params().begin(), bundle.params().end());
    for (auto* p : ps) p->zero_grad();
    auto r = oracles::gradcheck(ps, loss, grads, 1e-6, 4, 555);
    INFO("train_mode=", train_mode, " worst=", r.worst);
    CHECK(r.max_rel_err < 1e-4);
    CHECK(r.checked > 100);
  }
}

TEST_CASE("loss parts respond to their weights") {
  std::vector<treebank::Sentence> a;
  Vocabulary v = two_lang_vocab(&a);
  ModelConfig c = micro();
  auto bundle = Bundle<double>::create(c, v, SharingSpec{}, 3);
  model::SentenceTargets tg = model::make_targets(v, a[0], 0);

  Tape<double> t;
  auto parts = model::sentence_loss(t, bundle.langs[0], c, tg);
  CHECK(parts.tokens == a[0].size());
  CHECK(parts.head > 0);
  CHECK(parts.label > 0);
  CHECK(parts.tagger > 0);
  double total = t.value(parts.total).v[0];
  CHECK(total == doctest::Approx(0.6 * parts.head + 0.4 * parts.label + 1.0 * parts.tagger));

  // zero weights silence the corresponding part
  ModelConfig ch = c;
  ch.w_label = 0;
  ch.w_tagger = 0;
  Tape<double> t2;
  auto ph = model::sentence_loss(t2, bundle.langs[0], ch, tg);
  CHECK(t2.value(ph.total).v[0] == doctest::Approx(0.6 * ph.head));
}

TEST_CASE("mean losses are per-token means of the summed version") {
  std::vector<treebank::Sentence> a;
  Vocabulary v = two_lang_vocab(&a);
  ModelConfig c = micro();
  auto bundle = Bundle<double>::create(c, v, SharingSpec{}, 3);
  const treebank::Sentence* sent = nullptr;
  for (const auto& s : a)
    if (s.size() >= 3) { sent = &s; break; }
  model::SentenceTargets tg = model::make_targets(v, *sent, 0);

  ModelConfig cm = c, cs = c;
  cm.mean_losses = true;
  cs.mean_losses = false;
  Tape<double> tm, ts;
  auto pm = model::sentence_loss(tm, bundle.langs[0], cm, tg);
  auto psum = model::sentence_loss(ts, bundle.langs[0], cs, tg);
  int n = sent->size();
  CHECK(pm.head == doctest::Approx(psum.head / n));
  CHECK(pm.label == doctest::Approx(psum.label / n));
  CHECK(pm.tagger == doctest::Approx(psum.tagger / n));
}

TEST_CASE("parsing produces valid trees with in-range labels") {
  std::vector<treebank::Sentence> a;
  Vocabulary v = two_lang_vocab(&a);
  ModelConfig c = desk();
  auto bundle = Bundle<double>::create(c, v, SharingSpec{}, 5);

  for (auto opt : {model::DecodeOptions{}, model::DecodeOptions{.greedy = true},
                   model::DecodeOptions{.single_root = true}}) {
    auto parsed = model::parse_corpus(bundle.langs[0], c, v, a, 0, opt);
    REQUIRE(parsed.size() == a.size());
    for (const auto& s : parsed) {
      if (!opt.greedy) CHECK(treebank::is_tree(s));
      int roots = 0;
      for (const auto& tok : s.tokens) {
        CHECK(tok.head >= 0);
        CHECK(tok.head <= s.size());
        if (tok.head == 0) ++roots;
        CHECK(v.deprel_id(tok.deprel) >= 0);
        CHECK(tok.feats.empty());  // features are cleared on predictions
      }
      if (opt.single_root) CHECK(roots == 1);
    }
  }

  // head log-probabilities: each row sums to one in probability space
  model::DecodeOptions opt;
  auto p = model::parse_sentence(bundle.langs[0], c, v, a[0], 0, opt);
  for (int d = 1; d <= a[0].size(); ++d) {
    double sum = 0;
    for (int h = 0; h <= a[0].size(); ++h) sum += std::exp(p.scores.at(d, h));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("inference is deterministic (no dropout at eval)") {
  std::vector<treebank::Sentence> a;
  Vocabulary v = two_lang_vocab(&a);
  ModelConfig c = desk();
  auto bundle = Bundle<double>::create(c, v, SharingSpec{}, 5);
  auto p1 = model::parse_sentence(bundle.langs[0], c, v, a[0], 0, {});
  auto p2 = model::parse_sentence(bundle.langs[0], c, v, a[0], 0, {});
  CHECK(p1.heads == p2.heads);
  CHECK(p1.label_ids == p2.label_ids);
  CHECK(p1.scores.s == p2.scores.s);
}

TEST_CASE("config hash tracks config, sharing, and vocabulary") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = desk();
  auto b1 = Bundle<double>::create(c, v, SharingSpec{}, 1);
  auto b2 = Bundle<double>::create(c, v, SharingSpec{}, 2);
  CHECK(b1.config_hash() == b2.config_hash());  // seed does not matter
  CHECK(b1.config_hash().size() == 16);

  ModelConfig c2 = c;
  c2.rnn_dim = 13;
  CHECK(Bundle<double>::create(c2, v, SharingSpec{}, 1).config_hash() != b1.config_hash());
  CHECK(Bundle<double>::create(c, v, SharingSpec::parse("all"), 1).config_hash() !=
        b1.config_hash());

  auto a = toygen::make_corpus({.sentences = 5, .seed = 77});
  Vocabulary small = Vocabulary::build({{"alpha", &a}});
  CHECK(Bundle<double>::create(c, small, SharingSpec{}, 1).config_hash() != b1.config_hash());
}

TEST_CASE("loading values rejects mismatched checkpoints") {
  Vocabulary v = two_lang_vocab();
  ModelConfig c = micro();
  auto b = Bundle<double>::create(c, v, SharingSpec::parse("all"), 9);

  std::map<std::string, Tensor<double>> values;
  for (auto* p : b.params()) values.emplace(p->name, p->value);

  auto ok = values;
  b.load_values(ok);  // exact match loads fine

  auto missing = values;
  missing.erase(missing.begin()->first);
  CHECK_THROWS_AS(b.load_values(missing), UsageError);

  auto extra = values;
  extra.emplace("ghost.tensor", Tensor<double>({1}));
  CHECK_THROWS_AS(b.load_values(extra), UsageError);

  auto wrong_shape = values;
  wrong_shape[b.params()[0]->name] = Tensor<double>({1, 1});
  CHECK_THROWS_AS(b.load_values(wrong_shape), UsageError);
}
