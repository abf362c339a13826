#include "charparse/num/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "charparse/util/error.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written as raw native little-endian");

namespace charparse::num {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'A', 'R', 'P', 'C', 'K', '1'};

using json = nlohmann::json;

json parse_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw UsageError(path + ": not a checkpoint file");
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  if (!in || hlen == 0 || hlen > (1u << 26))
    throw UsageError(path + ": corrupt checkpoint header");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw UsageError(path + ": truncated checkpoint header");
  json h = json::parse(htext, nullptr, false);
  if (h.is_discarded() || !h.contains("precision") || !h.contains("tensors"))
    throw UsageError(path + ": corrupt checkpoint header");
  return h;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors,
                     const std::string& meta_json) {
  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    dir.push_back({{"name", name},
                   {"shape", t->shape},
                   {"offset", offset},
                   {"count", static_cast<std::uint64_t>(t->numel())}});
    offset += static_cast<std::uint64_t>(t->numel());
  }
  json meta = meta_json.empty() ? json::object() : json::parse(meta_json, nullptr, false);
  if (meta.is_discarded()) throw UsageError("checkpoint meta is not valid JSON");
  json header = {{"precision", precision_name<T>()}, {"meta", meta}, {"tensors", dir}};
  std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out.write(kMagic, 8);
  std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->v.size() * sizeof(T)));
  out.flush();
  if (!out) throw UsageError("failed writing " + path);
}

template <typename T>
std::map<std::string, Tensor<T>> load_checkpoint(const std::string& path,
                                                 std::string* meta_json_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  json h = parse_header(in, path);
  std::string prec = h["precision"].get<std::string>();
  if (prec != precision_name<T>())
    throw UsageError(path + ": precision is " + prec + ", expected " +
                     precision_name<T>());
  if (meta_json_out) *meta_json_out = h["meta"].dump();

  std::map<std::string, Tensor<T>> out;
  for (const json& e : h["tensors"]) {
    std::string name = e["name"].get<std::string>();
    std::vector<int> shape = e["shape"].get<std::vector<int>>();
    std::uint64_t count = e["count"].get<std::uint64_t>();
    Tensor<T> t(shape);
    if (static_cast<std::uint64_t>(t.numel()) != count)
      throw UsageError(path + ": shape/count mismatch for tensor " + name);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) throw UsageError(path + ": truncated payload at tensor " + name);
    if (!out.emplace(name, std::move(t)).second)
      throw UsageError(path + ": duplicate tensor " + name);
  }
  return out;
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  json h = parse_header(in, path);
  CheckpointInfo info;
  info.precision = h["precision"].get<std::string>();
  info.meta_json = h["meta"].dump();
  for (const json& e : h["tensors"])
    info.entries.push_back({e["name"].get<std::string>(),
                            e["shape"].get<std::vector<int>>()});
  return info;
}

template void save_checkpoint<float>(
    const std::string&, const std::vector<std::pair<std::string, const Tensor<float>*>>&,
    const std::string&);
template void save_checkpoint<double>(
    const std::string&, const std::vector<std::pair<std::string, const Tensor<double>*>>&,
    const std::string&);
template std::map<std::string, Tensor<float>> load_checkpoint<float>(const std::string&,
                                                                     std::string*);
template std::map<std::string, Tensor<double>> load_checkpoint<double>(const std::string&,
                                                                       std::string*);

}  // namespace charparse::num
