#pragma once

// On-disk model layout:
//   manifest.json    format tag, precision, config hash, languages, sharing
//   model.kv         model dimensions and training settings
//   vocab.tsv        symbol inventories (kind, language, symbol, id)
//   best.ckpt        parameter checkpoint of the best epoch
//   metrics.jsonl    one evaluation record per line
//   model-card.txt   human-readable summary

#include <string>
#include <vector>

#include "charparse/model/nets.hpp"
#include "charparse/util/kv.hpp"

namespace charparse::io {

struct ModelDirInfo {
  std::string precision;  // "f32" or "f64"
  std::string config_hash;
  std::vector<std::string> languages;
  std::string sharing;
};

ModelDirInfo read_model_info(const std::string& dir);

std::string metrics_path(const std::string& dir);

void append_metric(const std::string& dir, int epoch, const std::string& language,
                   double uas, double las, double loss_head, double loss_label,
                   double loss_tagger);

template <typename T>
void save_model_dir(const std::string& dir, const model::Bundle<T>& bundle,
                    const KvFile& train_kv);

/// Rebuilds the bundle from config + vocab and loads checkpoint values.
/// The caller picks T to match the manifest's precision (read_model_info).
template <typename T>
model::Bundle<T> load_model_dir(const std::string& dir);

}  // namespace charparse::io
