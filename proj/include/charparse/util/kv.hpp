#pragma once

#include <map>
#include <string>

namespace charparse {

/// Simple `key = value` text config. Lines starting with '#' and blank
/// lines are ignored. Keys are unique; later entries overwrite earlier.
class KvFile {
 public:
  KvFile() = default;

  static KvFile parse(const std::string& text);
  static KvFile read(const std::string& path);
  void write(const std::string& path) const;
  std::string dump() const;  // sorted by key

  bool has(const std::string& key) const { return map_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { map_[key] = value; }
  void set(const std::string& key, double v);
  void set(const std::string& key, long long v);

  std::string get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  long long get_int(const std::string& key, long long dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  const std::map<std::string, std::string>& entries() const { return map_; }

 private:
  std::map<std::string, std::string> map_;
};

}  // namespace charparse
