// Command-line front end: train, parse, eval, analyze, vocab, inspect.
// Exit codes: 0 success, 1 operational failure, 2 bad usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "charparse/analysis/embed.hpp"
#include "charparse/io/modeldir.hpp"
#include "charparse/num/checkpoint.hpp"
#include "charparse/num/kernels.hpp"
#include "charparse/trainer/train.hpp"
#include "charparse/util/utf8.hpp"

using namespace charparse;

namespace {

struct LangFile {
  std::string lang;
  std::string path;
};

std::vector<LangFile> parse_lang_files(const std::vector<std::string>& specs,
                                       const char* flag) {
  std::vector<LangFile> out;
  for (const std::string& s : specs) {
    size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= s.size())
      throw UsageError(std::string(flag) + " wants LANG=PATH, got: " + s);
    out.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  return out;
}

model::DecodeOptions decode_options(const std::string& decoder, bool single_root) {
  model::DecodeOptions opt;
  if (decoder == "greedy") opt.greedy = true;
  else if (decoder != "cle") throw UsageError("unknown decoder: " + decoder);
  opt.single_root = single_root;
  if (opt.greedy && opt.single_root)
    throw UsageError("--single-root requires the cle decoder");
  return opt;
}

struct TrainArgs {
  std::vector<std::string> train_specs;
  std::vector<std::string> dev_specs;
  std::string model_dir;
  std::string share = "none";
  std::string config_path;
  std::string precision = "f32";
  std::string main_lang;
  std::string decoder = "cle";
  bool single_root = false;
  bool exclude_punct = false;
  trainer::TrainConfig tc;
};

template <typename T>
int run_train(const TrainArgs& a) {
  auto train_files = parse_lang_files(a.train_specs, "--train");
  auto dev_files = parse_lang_files(a.dev_specs, "--dev");

  std::vector<std::vector<treebank::Sentence>> train_corpora, dev_corpora;
  std::vector<std::pair<std::string, const std::vector<treebank::Sentence>*>> for_vocab;
  for (const LangFile& lf : train_files) {
    treebank::LoadStats st;
    train_corpora.push_back(treebank::load_conllu(lf.path, &st, true));
    if (st.rejected)
      std::fprintf(stderr, "warning: %s: dropped %d sentence(s) without a valid tree\n",
                   lf.path.c_str(), st.rejected);
    if (train_corpora.back().empty()) throw UsageError(lf.path + ": no usable sentences");
  }
  for (size_t i = 0; i < train_files.size(); ++i)
    for_vocab.emplace_back(train_files[i].lang, &train_corpora[i]);
  treebank::Vocabulary vocab = treebank::Vocabulary::build(for_vocab);

  dev_corpora.resize(train_files.size());
  for (const LangFile& lf : dev_files) {
    int l = vocab.language_id(lf.lang);
    if (l < 0) throw UsageError("--dev language " + lf.lang + " has no training data");
    treebank::LoadStats st;
    dev_corpora[static_cast<size_t>(l)] = treebank::load_conllu(lf.path, &st, true);
    if (st.rejected)
      std::fprintf(stderr, "warning: %s: dropped %d sentence(s) without a valid tree\n",
                   lf.path.c_str(), st.rejected);
  }

  model::ModelConfig cfg;
  if (!a.config_path.empty()) cfg = model::ModelConfig::from_kv(KvFile::read(a.config_path));
  model::SharingSpec sharing = model::SharingSpec::parse(a.share);

  trainer::TrainConfig tc = a.tc;
  tc.eval_decode = decode_options(a.decoder, a.single_root);
  tc.include_punct = !a.exclude_punct;
  if (!a.main_lang.empty()) {
    tc.main_language = vocab.language_id(a.main_lang);
    if (tc.main_language < 0) throw UsageError("--main-lang " + a.main_lang + " not trained");
  }

  model::Bundle<T> bundle = model::Bundle<T>::create(cfg, std::move(vocab), sharing, tc.seed);
  std::printf("model: %lld parameters, %d language(s), sharing %s\n", bundle.param_count(),
              bundle.vocab.num_languages(), bundle.sharing.to_string().c_str());

  std::filesystem::create_directories(a.model_dir);
  std::filesystem::remove(io::metrics_path(a.model_dir));
  KvFile train_kv;
  tc.to_kv(train_kv);

  auto on_metrics = [&](const trainer::EpochMetrics& m) {
    io::append_metric(a.model_dir, m.epoch, m.language, m.uas, m.las, m.loss_head,
                      m.loss_label, m.loss_tagger);
    if (m.uas >= 0)
      std::printf("epoch %d  %s  uas %.2f  las %.2f  loss h %.4f l %.4f t %.4f\n", m.epoch,
                  m.language.c_str(), m.uas, m.las, m.loss_head, m.loss_label,
                  m.loss_tagger);
    else
      std::printf("epoch %d  %s  loss h %.4f l %.4f t %.4f\n", m.epoch, m.language.c_str(),
                  m.loss_head, m.loss_label, m.loss_tagger);
    std::fflush(stdout);
  };
  auto on_best = [&](model::Bundle<T>& b, int epoch) {
    io::save_model_dir(a.model_dir, b, train_kv);
    std::printf("saved best model (epoch %d)\n", epoch);
  };

  trainer::TrainResult res =
      trainer::train(bundle, tc, train_corpora, dev_corpora, on_metrics, on_best);
  io::save_model_dir(a.model_dir, bundle, train_kv);
  if (res.best_epoch >= 0)
    std::printf("done: best epoch %d, dev uas %.2f\n", res.best_epoch, res.best_uas);
  else
    std::printf("done: %d epoch(s), no dev evaluation\n", res.epochs_run);
  return 0;
}

template <typename T>
int run_parse(const std::string& dir, const std::string& lang, const std::string& input,
              const std::string& output, const model::DecodeOptions& opt) {
  model::Bundle<T> bundle = io::load_model_dir<T>(dir);
  int l = bundle.vocab.language_id(lang);
  if (l < 0) throw UsageError("model has no language " + lang);
  treebank::LoadStats st;
  std::vector<treebank::Sentence> sents = treebank::load_conllu(input, &st, false);
  std::vector<treebank::Sentence> parsed =
      model::parse_corpus(bundle.langs[static_cast<size_t>(l)], bundle.cfg, bundle.vocab,
                          sents, l, opt);
  if (output.empty() || output == "-") {
    std::cout << treebank::format_conllu(parsed);
  } else {
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + output);
    treebank::write_conllu(out, parsed);
  }
  return 0;
}

template <typename T>
int run_eval(const std::string& dir, const std::string& lang, const std::string& gold_path,
             const model::DecodeOptions& opt, bool exclude_punct) {
  model::Bundle<T> bundle = io::load_model_dir<T>(dir);
  int l = bundle.vocab.language_id(lang);
  if (l < 0) throw UsageError("model has no language " + lang);
  treebank::LoadStats st;
  std::vector<treebank::Sentence> gold = treebank::load_conllu(gold_path, &st, true);
  if (gold.empty()) throw UsageError(gold_path + ": no scorable sentences");
  analysis::AttachmentScores sc =
      model::evaluate_corpus(bundle.langs[static_cast<size_t>(l)], bundle.cfg, bundle.vocab,
                             gold, l, opt, !exclude_punct);
  std::printf("sentences %d\ntokens %ld\nuas %.2f\nlas %.2f\n", static_cast<int>(gold.size()),
              sc.total, sc.uas(), sc.las());
  return 0;
}

std::vector<std::pair<char32_t, char32_t>> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<std::pair<char32_t, char32_t>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": want SRC<TAB>TGT");
    std::vector<char32_t> src = utf8::decode(line.substr(0, tab));
    std::vector<char32_t> tgt = utf8::decode(line.substr(tab + 1));
    if (src.size() != 1 || tgt.size() != 1)
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": each side must be one character");
    pairs.emplace_back(src[0], tgt[0]);
  }
  if (pairs.empty()) throw UsageError(path + ": no pairs");
  return pairs;
}

template <typename T>
int run_analyze(const std::string& dir, const std::string& pairs_path,
                const std::string& tgt_lang, const std::string& reader_choice, bool ordered,
                bool exclude_inputs, int neighbors) {
  model::Bundle<T> bundle = io::load_model_dir<T>(dir);
  int tl = bundle.vocab.language_id(tgt_lang);
  if (tl < 0) throw UsageError("model has no language " + tgt_lang);

  model::ReaderNet<T>* reader = nullptr;
  if (reader_choice.empty() || reader_choice == "shared") {
    if (!bundle.sharing.reader)
      throw UsageError(
          "model has per-language readers; pick one with --reader LANG");
    reader = bundle.langs[0].reader.get();
  } else {
    int rl = bundle.vocab.language_id(reader_choice);
    if (rl < 0) throw UsageError("model has no language " + reader_choice);
    reader = bundle.langs[static_cast<size_t>(rl)].reader.get();
  }

  // Work in doubles regardless of model precision.
  const num::Tensor<T>& table = reader->chars.value;
  std::vector<double> emb(table.v.size());
  for (size_t i = 0; i < emb.size(); ++i) emb[i] = static_cast<double>(table.v[i]);
  analysis::EmbeddingView view{emb.data(), table.rows(), table.cols()};

  std::vector<std::pair<int, int>> id_pairs;
  for (const auto& [src, tgt] : load_pairs(pairs_path)) {
    int si = bundle.vocab.char_id(src);
    int ti = bundle.vocab.char_id(tgt);
    if (si == treebank::Vocabulary::kUnk || ti == treebank::Vocabulary::kUnk) {
      std::fprintf(stderr, "warning: skipping pair %s -> %s (character not in vocabulary)\n",
                   utf8::encode(src).c_str(), utf8::encode(tgt).c_str());
      continue;
    }
    id_pairs.emplace_back(si, ti);
  }
  if (id_pairs.size() < 2) throw UsageError("need at least two usable pairs");

  const std::vector<int>& candidates = bundle.vocab.language_chars(tl);
  analysis::AnalogyResult res =
      analysis::analogy_eval(view, id_pairs, candidates, ordered, exclude_inputs);
  std::printf("pairs %d\nanalogies %d\ncorrect %d\naccuracy %.2f\n",
              static_cast<int>(id_pairs.size()), res.total, res.correct, res.accuracy());

  if (neighbors > 0) {
    for (const auto& [si, ti] : id_pairs) {
      std::vector<int> near = analysis::nearest(view, view.row(si), candidates, neighbors);
      std::string line = utf8::encode(bundle.vocab.chars()[static_cast<size_t>(si - 1)]);
      line += " ->";
      for (int c : near) {
        line += ' ';
        line += utf8::encode(bundle.vocab.chars()[static_cast<size_t>(c - 1)]);
      }
      std::printf("%s\n", line.c_str());
      (void)ti;
    }
  }
  return 0;
}

int run_inspect(const std::string& dir, const std::string& ckpt) {
  if (!ckpt.empty()) {
    num::CheckpointInfo info = num::read_checkpoint_info(ckpt);
    std::printf("precision %s\nmeta %s\ntensors %d\n", info.precision.c_str(),
                info.meta_json.c_str(), static_cast<int>(info.entries.size()));
    for (const num::CheckpointEntry& e : info.entries) {
      std::string shape = "[";
      for (size_t i = 0; i < e.shape.size(); ++i) {
        if (i) shape += ',';
        shape += std::to_string(e.shape[static_cast<size_t>(i)]);
      }
      shape += ']';
      std::printf("%s %s\n", e.name.c_str(), shape.c_str());
    }
    return 0;
  }
  io::ModelDirInfo info = io::read_model_info(dir);
  std::printf("precision %s\nconfig_hash %s\nsharing %s\nlanguages", info.precision.c_str(),
              info.config_hash.c_str(), info.sharing.c_str());
  for (const std::string& l : info.languages) std::printf(" %s", l.c_str());
  std::printf("\n");
  std::ifstream card(dir + "/model-card.txt");
  if (card) std::cout << card.rdbuf();
  return 0;
}

int run_vocab(const std::string& dir, const std::string& output) {
  std::ifstream in(dir + "/vocab.tsv", std::ios::binary);
  if (!in) throw UsageError(dir + ": no vocab.tsv");
  if (output.empty() || output == "-") {
    std::cout << in.rdbuf();
  } else {
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + output);
    out << in.rdbuf();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-level multilingual dependency parser"};
  app.require_subcommand(1);

  std::string kernels;
  app.add_option("--kernels", kernels, "numeric backend: serial or openmp")
      ->check(CLI::IsMember({"serial", "openmp"}));

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--train", ta.train_specs, "LANG=FILE training treebank (repeatable)")
      ->required();
  train->add_option("--dev", ta.dev_specs, "LANG=FILE development treebank (repeatable)");
  train->add_option("--model-dir", ta.model_dir, "output model directory")->required();
  train->add_option("--share", ta.share,
                    "shared subnetworks: none, all, or list of reader,tagger,pos,parser");
  train->add_option("--config", ta.config_path, "model config overrides (key = value file)");
  train->add_option("--precision", ta.precision, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));
  train->add_option("--epochs", ta.tc.epochs, "training epochs");
  train->add_option("--batch", ta.tc.batch_per_lang, "sentences per language per batch");
  train->add_option("--seed", ta.tc.seed, "master seed");
  train->add_option("--workers", ta.tc.workers, "parallel sentence workers");
  train->add_option("--patience", ta.tc.patience,
                    "stop after this many epochs without dev improvement (0 = off)");
  train->add_option("--main-lang", ta.main_lang, "language whose dev UAS drives early stopping");
  train->add_option("--rho", ta.tc.rho, "adadelta decay rate");
  train->add_option("--eps-start", ta.tc.eps_start, "adadelta epsilon at epoch 0");
  train->add_option("--eps-end", ta.tc.eps_end, "adadelta epsilon at the last epoch");
  train->add_option("--clip", ta.tc.clip_factor, "gradient clip factor (0 disables)");
  train->add_option("--clip-decay", ta.tc.clip_decay, "clip running-mean decay");
  train->add_option("--decay", ta.tc.decay_factor, "per-epoch weight decay factor (1 disables)");
  train->add_option("--decoder", ta.decoder, "dev decoder: cle or greedy");
  train->add_flag("--single-root", ta.single_root, "force exactly one root attachment");
  train->add_flag("--exclude-punct", ta.exclude_punct, "skip punctuation in dev scores");

  std::string dir, lang, input, output, gold_path, decoder = "cle", ckpt;
  bool single_root = false, exclude_punct = false;
  CLI::App* parse = app.add_subcommand("parse", "parse a treebank file");
  parse->add_option("--model-dir", dir, "model directory")->required();
  parse->add_option("--lang", lang, "language to parse")->required();
  parse->add_option("--input", input, "input file (forms are used, heads may be empty)")
      ->required();
  parse->add_option("--output", output, "output file (default stdout)");
  parse->add_option("--decoder", decoder, "cle or greedy");
  parse->add_flag("--single-root", single_root, "force exactly one root attachment");

  CLI::App* eval = app.add_subcommand("eval", "score a model against gold trees");
  eval->add_option("--model-dir", dir, "model directory")->required();
  eval->add_option("--lang", lang, "language to score")->required();
  eval->add_option("--gold", gold_path, "gold treebank")->required();
  eval->add_option("--decoder", decoder, "cle or greedy");
  eval->add_flag("--single-root", single_root, "force exactly one root attachment");
  eval->add_flag("--exclude-punct", exclude_punct, "skip punctuation tokens");

  std::string pairs_path, tgt_lang, reader_choice;
  bool unordered = false, exclude_inputs = false;
  int neighbors = 0;
  CLI::App* analyze = app.add_subcommand("analyze", "letter-pair analogies on char embeddings");
  analyze->add_option("--model-dir", dir, "model directory")->required();
  analyze->add_option("--pairs", pairs_path, "SRC<TAB>TGT letter pairs file")->required();
  analyze->add_option("--tgt-lang", tgt_lang, "language whose characters are candidates")
      ->required();
  analyze->add_option("--reader", reader_choice,
                      "embedding table to use: shared (default) or a language name");
  analyze->add_flag("--unordered", unordered, "use each pair of pairs once instead of twice");
  analyze->add_flag("--exclude-inputs", exclude_inputs,
                    "drop the three query characters from the candidates");
  analyze->add_option("--neighbors", neighbors, "also print k nearest candidates per source");

  CLI::App* vocab_cmd = app.add_subcommand("vocab", "export the symbol inventory");
  vocab_cmd->add_option("--model-dir", dir, "model directory")->required();
  vocab_cmd->add_option("--output", output, "output file (default stdout)");

  CLI::App* inspect = app.add_subcommand("inspect", "describe a model directory or checkpoint");
  CLI::Option* idir = inspect->add_option("--model-dir", dir, "model directory");
  inspect->add_option("--checkpoint", ckpt, "checkpoint file")->excludes(idir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!kernels.empty())
      kern::set_backend(kernels == "serial" ? kern::Backend::serial : kern::Backend::openmp);
    if (train->parsed()) {
      return ta.precision == "f64" ? run_train<double>(ta) : run_train<float>(ta);
    }
    if (parse->parsed()) {
      model::DecodeOptions opt = decode_options(decoder, single_root);
      std::string prec = io::read_model_info(dir).precision;
      return prec == "f64" ? run_parse<double>(dir, lang, input, output, opt)
                           : run_parse<float>(dir, lang, input, output, opt);
    }
    if (eval->parsed()) {
      model::DecodeOptions opt = decode_options(decoder, single_root);
      std::string prec = io::read_model_info(dir).precision;
      return prec == "f64" ? run_eval<double>(dir, lang, gold_path, opt, exclude_punct)
                           : run_eval<float>(dir, lang, gold_path, opt, exclude_punct);
    }
    if (analyze->parsed()) {
      std::string prec = io::read_model_info(dir).precision;
      return prec == "f64" ? run_analyze<double>(dir, pairs_path, tgt_lang, reader_choice,
                                                 !unordered, exclude_inputs, neighbors)
                           : run_analyze<float>(dir, pairs_path, tgt_lang, reader_choice,
                                                !unordered, exclude_inputs, neighbors);
    }
    if (vocab_cmd->parsed()) return run_vocab(dir, output);
    if (inspect->parsed()) {
      if (dir.empty() && ckpt.empty())
        throw UsageError("inspect wants --model-dir or --checkpoint");
      return run_inspect(dir, ckpt);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
