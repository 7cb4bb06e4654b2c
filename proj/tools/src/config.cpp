#include "config.hpp"

#include "levybel/types.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace levybel::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& s) {
  // strtod accepts hex floats and inf/nan; only plain decimal literals are wanted.
  if (s.empty() || s.find_first_not_of("0123456789+-.eE") != std::string::npos) {
    throw ConfigError("not a real number: '" + s + "'");
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a real number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a real number: '" + s + "'");
  return v;
}

template <class T>
T parse_integer(const std::string& s, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) throw ConfigError(std::string("not ") + what + ": '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("not a bool (true/false): '" + s + "'");
}

void validate_literal(ValueType t, const std::string& raw) {
  switch (t) {
    case ValueType::integer:
      parse_integer<long long>(raw, "an integer");
      break;
    case ValueType::u64:
      parse_integer<std::uint64_t>(raw, "an unsigned integer");
      break;
    case ValueType::real:
      parse_real(raw);
      break;
    case ValueType::boolean:
      parse_bool(raw);
      break;
    case ValueType::reals:
      for (const auto& x : split_list(raw)) parse_real(x);
      break;
    case ValueType::string:
    case ValueType::strings:
      break;
  }
}

}  // namespace

std::string to_string(ValueType t) {
  switch (t) {
    case ValueType::integer:
      return "int";
    case ValueType::u64:
      return "u64";
    case ValueType::real:
      return "real";
    case ValueType::boolean:
      return "bool";
    case ValueType::string:
      return "string";
    case ValueType::reals:
      return "reals";
    case ValueType::strings:
      return "strings";
  }
  return "?";
}

ValueType value_type_from_string(const std::string& s) {
  for (auto t : {ValueType::integer, ValueType::u64, ValueType::real, ValueType::boolean, ValueType::string,
                 ValueType::reals, ValueType::strings}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown value type '" + s + "' (int, u64, real, bool, string, reals, strings)");
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::string section;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!valid_name(section)) fail("bad section name '" + section + "'");
      cfg.data_[section];
      continue;
    }
    if (section.empty()) fail("entry outside of any [section]");
    const auto colon = t.find(':');
    const auto eq = t.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon) fail("expected 'key : type = value'");
    const std::string key = trim(t.substr(0, colon));
    if (!valid_name(key)) fail("bad key '" + key + "'");
    ConfigEntry e;
    try {
      e.type = value_type_from_string(trim(t.substr(colon + 1, eq - colon - 1)));
      e.raw = trim(t.substr(eq + 1));
      validate_literal(e.type, e.raw);
    } catch (const ConfigError& err) {
      fail(key + ": " + err.what());
    }
    e.line = lineno;
    if (cfg.data_[section].count(key)) fail("duplicate key '" + section + "." + key + "'");
    cfg.data_[section][key] = e;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void ConfigFile::check(const Schema& schema) const {
  for (const auto& [section, entries] : data_) {
    const auto s = schema.find(section);
    if (s == schema.end()) throw ConfigError(origin_ + ": unknown section [" + section + "]");
    for (const auto& [key, e] : entries) {
      const auto k = s->second.find(key);
      if (k == s->second.end()) throw ConfigError(where(e) + ": unknown key '" + section + "." + key + "'");
      if (k->second != e.type) {
        throw ConfigError(where(e) + ": '" + section + "." + key + "' must have type " + to_string(k->second) +
                          ", not " + to_string(e.type));
      }
    }
  }
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

bool ConfigFile::has_section(const std::string& section) const { return data_.count(section) > 0; }

std::string ConfigFile::where(const ConfigEntry& e) const { return origin_ + ":" + std::to_string(e.line); }

const ConfigEntry& ConfigFile::entry(const std::string& section, const std::string& key, ValueType want) const {
  const auto& e = data_.at(section).at(key);
  if (e.type != want) {
    throw ConfigError(where(e) + ": '" + section + "." + key + "' must have type " + to_string(want));
  }
  return e;
}

namespace {

[[noreturn]] void missing(const std::string& section, const std::string& key) {
  throw ConfigError("missing required key '" + section + "." + key + "'");
}

}  // namespace

long long ConfigFile::get_int(const std::string& section, const std::string& key, std::optional<long long> def) const {
  if (!has(section, key)) return def ? *def : (missing(section, key), 0LL);
  return parse_integer<long long>(entry(section, key, ValueType::integer).raw, "an integer");
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::optional<std::uint64_t> def) const {
  if (!has(section, key)) return def ? *def : (missing(section, key), 0ULL);
  return parse_integer<std::uint64_t>(entry(section, key, ValueType::u64).raw, "an unsigned integer");
}

double ConfigFile::get_real(const std::string& section, const std::string& key, std::optional<double> def) const {
  if (!has(section, key)) return def ? *def : (missing(section, key), 0.0);
  return parse_real(entry(section, key, ValueType::real).raw);
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, std::optional<bool> def) const {
  if (!has(section, key)) return def ? *def : (missing(section, key), false);
  return parse_bool(entry(section, key, ValueType::boolean).raw);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   std::optional<std::string> def) const {
  if (!has(section, key)) {
    if (!def) missing(section, key);
    return *def;
  }
  return entry(section, key, ValueType::string).raw;
}

std::vector<double> ConfigFile::get_reals(const std::string& section, const std::string& key,
                                          std::optional<std::vector<double>> def) const {
  if (!has(section, key)) {
    if (!def) missing(section, key);
    return *def;
  }
  std::vector<double> out;
  for (const auto& x : split_list(entry(section, key, ValueType::reals).raw)) out.push_back(parse_real(x));
  return out;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& section, const std::string& key,
                                                 std::optional<std::vector<std::string>> def) const {
  if (!has(section, key)) {
    if (!def) missing(section, key);
    return *def;
  }
  return split_list(entry(section, key, ValueType::strings).raw);
}

void ConfigFile::set(const std::string& section, const std::string& key, ValueType type, const std::string& raw) {
  validate_literal(type, raw);
  ConfigEntry e;
  e.type = type;
  e.raw = raw;
  data_[section][key] = e;
}

std::string ConfigFile::canonical() const {
  std::ostringstream os;
  for (const auto& [section, entries] : data_) {
    for (const auto& [key, e] : entries) os << section << '.' << key << ':' << to_string(e.type) << '=' << e.raw << '\n';
  }
  return os.str();
}

std::string ConfigFile::hash_hex() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace levybel::cli
