#include "charparse/io/modeldir.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "charparse/num/checkpoint.hpp"
#include "charparse/util/error.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace charparse::io {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out.flush()) throw UsageError("failed writing " + path);
}

json read_manifest(const std::string& dir) {
  json m = json::parse(slurp(dir + "/manifest.json"), nullptr, false);
  if (m.is_discarded() || m.value("kind", "") != "charparse-model")
    throw UsageError(dir + ": not a model directory");
  return m;
}

}  // namespace

ModelDirInfo read_model_info(const std::string& dir) {
  json m = read_manifest(dir);
  ModelDirInfo info;
  info.precision = m.value("precision", "");
  info.config_hash = m.value("config_hash", "");
  info.sharing = m.value("sharing", "");
  for (const json& l : m["languages"]) info.languages.push_back(l.get<std::string>());
  return info;
}

std::string metrics_path(const std::string& dir) { return dir + "/metrics.jsonl"; }

void append_metric(const std::string& dir, int epoch, const std::string& language,
                   double uas, double las, double loss_head, double loss_label,
                   double loss_tagger) {
  std::ofstream out(metrics_path(dir), std::ios::app);
  if (!out) throw UsageError("cannot write " + metrics_path(dir));
  json rec = {{"epoch", epoch},     {"language", language},
              {"uas", uas},         {"las", las},
              {"loss_head", loss_head}, {"loss_label", loss_label},
              {"loss_tagger", loss_tagger}};
  out << rec.dump() << '\n';
}

template <typename T>
void save_model_dir(const std::string& dir, const model::Bundle<T>& bundle,
                    const KvFile& train_kv) {
  fs::create_directories(dir);

  KvFile kv = train_kv;
  bundle.cfg.to_kv(kv);
  kv.set("sharing", bundle.sharing.to_string());
  kv.write(dir + "/model.kv");

  spit(dir + "/vocab.tsv", bundle.vocab.to_tsv());

  json meta = {{"config_hash", bundle.config_hash()},
               {"sharing", bundle.sharing.to_string()}};
  num::save_checkpoint<T>(dir + "/best.ckpt", bundle.named_values(), meta.dump());

  json manifest = {{"kind", "charparse-model"},
                   {"format", 1},
                   {"precision", num::precision_name<T>()},
                   {"config_hash", bundle.config_hash()},
                   {"sharing", bundle.sharing.to_string()},
                   {"languages", bundle.vocab.languages()},
                   {"files",
                    {{"config", "model.kv"},
                     {"vocab", "vocab.tsv"},
                     {"checkpoint", "best.ckpt"},
                     {"metrics", "metrics.jsonl"},
                     {"card", "model-card.txt"}}}};
  spit(dir + "/manifest.json", manifest.dump(2) + "\n");

  std::ostringstream card;
  card << "languages:";
  for (const std::string& l : bundle.vocab.languages()) card << ' ' << l;
  card << "\nsharing: " << bundle.sharing.to_string() << '\n'
       << "precision: " << num::precision_name<T>() << '\n'
       << "parameters: " << bundle.param_count() << '\n'
       << "characters: " << bundle.vocab.chars().size() << '\n'
       << "upos tags: " << bundle.vocab.num_upos() << '\n'
       << "labels: " << bundle.vocab.num_deprels() << '\n'
       << "feature attributes: " << bundle.vocab.num_feat_attrs() << '\n'
       << "config hash: " << bundle.config_hash() << '\n';
  spit(dir + "/model-card.txt", card.str());
}

template <typename T>
model::Bundle<T> load_model_dir(const std::string& dir) {
  json manifest = read_manifest(dir);
  std::string prec = manifest.value("precision", "");
  if (prec != num::precision_name<T>())
    throw UsageError(dir + ": model precision is " + prec);

  KvFile kv = KvFile::read(dir + "/model.kv");
  model::ModelConfig cfg = model::ModelConfig::from_kv(kv);
  model::SharingSpec sharing = model::SharingSpec::parse(kv.get_or("sharing", "none"));
  treebank::Vocabulary vocab = treebank::Vocabulary::from_tsv(slurp(dir + "/vocab.tsv"));

  model::Bundle<T> bundle = model::Bundle<T>::create(cfg, std::move(vocab), sharing, 0);
  std::string meta;
  auto values = num::load_checkpoint<T>(dir + "/best.ckpt", &meta);
  json mj = json::parse(meta, nullptr, false);
  if (!mj.is_discarded() && mj.contains("config_hash") &&
      mj["config_hash"].get<std::string>() != bundle.config_hash())
    throw UsageError(dir + ": checkpoint does not match model config");
  bundle.load_values(values);
  return bundle;
}

template void save_model_dir<float>(const std::string&, const model::Bundle<float>&,
                                    const KvFile&);
template void save_model_dir<double>(const std::string&, const model::Bundle<double>&,
                                     const KvFile&);
template model::Bundle<float> load_model_dir<float>(const std::string&);
template model::Bundle<double> load_model_dir<double>(const std::string&);

}  // namespace charparse::io
