#pragma once

#include <string>

#include "charparse/util/error.hpp"
#include "charparse/util/kv.hpp"

namespace charparse::model {

/// Network dimensions and loss weights. Defaults reproduce the full-size
/// parser; tests shrink them to keep runtimes sane.
struct ModelConfig {
  // reader: character convolutions over fenced words
  int char_dim = 15;
  int filters_per_len = 50;  // k-gram filter count is filters_per_len * k
  int max_filter_len = 6;
  int word_dim = 512;       // projection width and perceptron width
  int reader_layers = 3;    // relu layers after the projection
  double reader_dropout = 0.20;

  // tagger: stacked bidirectional gru, directions summed
  int rnn_layers = 2;
  int rnn_dim = 548;
  double rnn_dropout = 0.70;  // between stacked layers only

  // head scorer
  int scorer_dim = 384;

  // label classifier
  int label_units = 256;
  int label_pieces = 2;
  double label_dropout = 0.50;

  // loss mixing
  double w_head = 0.6;
  double w_label = 0.4;
  double w_tagger = 1.0;
  bool mean_losses = true;  // per-token mean instead of sum within a sentence

  int conv_filters(int k) const { return filters_per_len * k; }
  int reader_concat_dim() const {
    return filters_per_len * max_filter_len * (max_filter_len + 1) / 2;
  }

  void validate() const {
    if (char_dim < 1 || filters_per_len < 1 || max_filter_len < 1 || word_dim < 1 ||
        reader_layers < 0 || rnn_layers < 1 || rnn_dim < 1 || scorer_dim < 1 ||
        label_units < 1 || label_pieces < 1)
      throw UsageError("model config: all dimensions must be positive");
    if (reader_dropout < 0 || reader_dropout >= 1 || rnn_dropout < 0 || rnn_dropout >= 1 ||
        label_dropout < 0 || label_dropout >= 1)
      throw UsageError("model config: dropout rates must be in [0,1)");
  }

  void to_kv(KvFile& kv) const {
    kv.set("model.char_dim", static_cast<long long>(char_dim));
    kv.set("model.filters_per_len", static_cast<long long>(filters_per_len));
    kv.set("model.max_filter_len", static_cast<long long>(max_filter_len));
    kv.set("model.word_dim", static_cast<long long>(word_dim));
    kv.set("model.reader_layers", static_cast<long long>(reader_layers));
    kv.set("model.reader_dropout", reader_dropout);
    kv.set("model.rnn_layers", static_cast<long long>(rnn_layers));
    kv.set("model.rnn_dim", static_cast<long long>(rnn_dim));
    kv.set("model.rnn_dropout", rnn_dropout);
    kv.set("model.scorer_dim", static_cast<long long>(scorer_dim));
    kv.set("model.label_units", static_cast<long long>(label_units));
    kv.set("model.label_pieces", static_cast<long long>(label_pieces));
    kv.set("model.label_dropout", label_dropout);
    kv.set("model.w_head", w_head);
    kv.set("model.w_label", w_label);
    kv.set("model.w_tagger", w_tagger);
    kv.set("model.mean_losses", static_cast<long long>(mean_losses ? 1 : 0));
  }

  static ModelConfig from_kv(const KvFile& kv) {
    ModelConfig c;
    c.char_dim = static_cast<int>(kv.get_int("model.char_dim", c.char_dim));
    c.filters_per_len =
        static_cast<int>(kv.get_int("model.filters_per_len", c.filters_per_len));
    c.max_filter_len =
        static_cast<int>(kv.get_int("model.max_filter_len", c.max_filter_len));
    c.word_dim = static_cast<int>(kv.get_int("model.word_dim", c.word_dim));
    c.reader_layers = static_cast<int>(kv.get_int("model.reader_layers", c.reader_layers));
    c.reader_dropout = kv.get_double("model.reader_dropout", c.reader_dropout);
    c.rnn_layers = static_cast<int>(kv.get_int("model.rnn_layers", c.rnn_layers));
    c.rnn_dim = static_cast<int>(kv.get_int("model.rnn_dim", c.rnn_dim));
    c.rnn_dropout = kv.get_double("model.rnn_dropout", c.rnn_dropout);
    c.scorer_dim = static_cast<int>(kv.get_int("model.scorer_dim", c.scorer_dim));
    c.label_units = static_cast<int>(kv.get_int("model.label_units", c.label_units));
    c.label_pieces = static_cast<int>(kv.get_int("model.label_pieces", c.label_pieces));
    c.label_dropout = kv.get_double("model.label_dropout", c.label_dropout);
    c.w_head = kv.get_double("model.w_head", c.w_head);
    c.w_label = kv.get_double("model.w_label", c.w_label);
    c.w_tagger = kv.get_double("model.w_tagger", c.w_tagger);
    c.mean_losses = kv.get_bool("model.mean_losses", c.mean_losses);
    c.validate();
    return c;
  }
};

/// Which subnetworks are shared across all languages. Scorer and labeler
/// share fate as one "parser" unit.
struct SharingSpec {
  bool reader = false;
  bool tagger = false;
  bool pos = false;
  bool parser = false;

  bool all() const { return reader && tagger && pos && parser; }
  bool none() const { return !reader && !tagger && !pos && !parser; }

  std::string to_string() const {
    if (all()) return "all";
    if (none()) return "none";
    std::string s;
    auto add = [&s](bool on, const char* name) {
      if (!on) return;
      if (!s.empty()) s += ',';
      s += name;
    };
    add(reader, "reader");
    add(tagger, "tagger");
    add(pos, "pos");
    add(parser, "parser");
    return s;
  }

  static SharingSpec parse(const std::string& text) {
    SharingSpec sp;
    if (text.empty() || text == "none") return sp;
    if (text == "all") {
      sp.reader = sp.tagger = sp.pos = sp.parser = true;
      return sp;
    }
    size_t start = 0;
    while (start <= text.size()) {
      size_t comma = text.find(',', start);
      std::string part = text.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (part == "reader") sp.reader = true;
      else if (part == "tagger") sp.tagger = true;
      else if (part == "pos") sp.pos = true;
      else if (part == "parser") sp.parser = true;
      else throw UsageError("unknown sharing unit: " + part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return sp;
  }
};

}  // namespace charparse::model
