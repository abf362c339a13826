#include "charparse/util/kv.hpp"

#include <fstream>
#include <sstream>

#include "charparse/util/error.hpp"

namespace charparse {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

KvFile KvFile::parse(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected `key = value`, got: " + t);
    kv.map_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

KvFile KvFile::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KvFile::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write config file: " + path);
  out << dump();
}

std::string KvFile::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : map_) out << k << " = " << v << "\n";
  return out.str();
}

void KvFile::set(const std::string& key, double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  map_[key] = ss.str();
}

void KvFile::set(const std::string& key, long long v) {
  map_[key] = std::to_string(v);
}

std::string KvFile::get(const std::string& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) throw UsageError("config key missing: " + key);
  return it->second;
}

std::string KvFile::get_or(const std::string& key,
                           const std::string& dflt) const {
  auto it = map_.find(key);
  return it == map_.end() ? dflt : it->second;
}

double KvFile::get_double(const std::string& key, double dflt) const {
  auto it = map_.find(key);
  if (it == map_.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": not a number: " + it->second);
  }
}

long long KvFile::get_int(const std::string& key, long long dflt) const {
  auto it = map_.find(key);
  if (it == map_.end()) return dflt;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": not an integer: " + it->second);
  }
}

bool KvFile::get_bool(const std::string& key, bool dflt) const {
  auto it = map_.find(key);
  if (it == map_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key " + key + ": not a boolean: " + v);
}

}  // namespace charparse
