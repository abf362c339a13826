#pragma once

// Binary parameter archive. Layout:
//   8 bytes   magic "CHARPCK1"
//   u64 LE    header length in bytes
//   header    JSON: precision, free-form meta, tensor directory
//             (name, shape, element offset, element count)
//   payload   all tensor values, concatenated, little-endian IEEE-754
// Values round-trip bit exactly for both f32 and f64.

#include <map>
#include <string>
#include <vector>

#include "charparse/num/tensor.hpp"

namespace charparse::num {

struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
};

struct CheckpointInfo {
  std::string precision;  // "f32" or "f64"
  std::string meta_json;  // metadata block, serialized
  std::vector<CheckpointEntry> entries;
};

template <typename T>
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors,
                     const std::string& meta_json);

/// Loads all tensors. Throws UsageError if the file's precision does not
/// match T or the file is malformed.
template <typename T>
std::map<std::string, Tensor<T>> load_checkpoint(const std::string& path,
                                                 std::string* meta_json_out = nullptr);

/// Header only: precision, metadata, and the tensor directory.
CheckpointInfo read_checkpoint_info(const std::string& path);

template <typename T>
constexpr const char* precision_name() {
  if constexpr (sizeof(T) == 4) return "f32";
  else return "f64";
}

}  // namespace charparse::num
