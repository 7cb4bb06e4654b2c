#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace levybel::cli {

// Typed, sectioned key-value configuration:
//
//   # comment
//   [section]
//   key : type = value
//
// Types: int, u64, real, bool, string, reals (comma separated), strings.
enum class ValueType { integer, u64, real, boolean, string, reals, strings };

std::string to_string(ValueType t);
ValueType value_type_from_string(const std::string& s);

struct ConfigEntry {
  ValueType type = ValueType::string;
  std::string raw;  // value text as written, trimmed
  int line = 0;
};

using Schema = std::map<std::string, std::map<std::string, ValueType>>;

class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin = "<config>");
  static ConfigFile load(const std::string& path);

  // Unknown sections or keys, and declared types that differ from the schema,
  // are ConfigErrors. Values are converted eagerly so bad literals fail here.
  void check(const Schema& schema) const;

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  long long get_int(const std::string& section, const std::string& key, std::optional<long long> def = {}) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::optional<std::uint64_t> def = {}) const;
  double get_real(const std::string& section, const std::string& key, std::optional<double> def = {}) const;
  bool get_bool(const std::string& section, const std::string& key, std::optional<bool> def = {}) const;
  std::string get_string(const std::string& section, const std::string& key,
                         std::optional<std::string> def = {}) const;
  std::vector<double> get_reals(const std::string& section, const std::string& key,
                                std::optional<std::vector<double>> def = {}) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       std::optional<std::vector<std::string>> def = {}) const;

  // Adds or replaces an entry (command-line overrides).
  void set(const std::string& section, const std::string& key, ValueType type, const std::string& raw);

  // Sorted "section.key:type=value" lines; the hash is FNV-1a over this text,
  // so comments, ordering and whitespace do not change it.
  std::string canonical() const;
  std::string hash_hex() const;

  const std::string& origin() const { return origin_; }

 private:
  const ConfigEntry& entry(const std::string& section, const std::string& key, ValueType want) const;
  std::string where(const ConfigEntry& e) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, ConfigEntry>> data_;
};

}  // namespace levybel::cli
