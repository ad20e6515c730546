#include "embench/cli/config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "embench/common.hpp"

namespace embench::cli {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

}  // namespace

ConfigMap ConfigMap::parse(std::istream& in) {
  ConfigMap map;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  for (auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    map.values_[item.fullname()] = std::move(item.inputs);
  }
  return map;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  return parse(in);
}

void ConfigMap::set(const std::string& assignment) {
  if (assignment.find('=') == std::string::npos) throw Error("override '" + assignment + "' is not key=value");
  std::istringstream in(assignment);
  const auto parsed = parse(in);
  for (const auto& [k, v] : parsed.values_) values_[k] = v;
}

void ConfigMap::set(const std::string& key, std::vector<std::string> values) { values_[key] = std::move(values); }

const std::string* ConfigMap::scalar(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  read_.insert(key);
  if (it->second.size() != 1) throw Error("config key '" + key + "' expects a single value");
  return &it->second.front();
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = scalar(key);
  return v ? *v : fallback;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto* v = scalar(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = scalar(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::size_t ConfigMap::get_size(const std::string& key, std::size_t fallback) const {
  const auto* v = scalar(key);
  return v ? parse_number<std::size_t>(key, *v) : fallback;
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto* v = scalar(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto* v = scalar(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw Error("config key '" + key + "': expected true or false, got '" + *v + "'");
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  read_.insert(key);
  return it->second;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& s : get_strings(key, {})) out.push_back(parse_number<double>(key, s));
  return out;
}

std::vector<int> ConfigMap::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const auto& s : get_strings(key, {})) out.push_back(parse_number<int>(key, s));
  return out;
}

std::vector<std::size_t> ConfigMap::get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& s : get_strings(key, {})) out.push_back(parse_number<std::size_t>(key, s));
  return out;
}

void ConfigMap::reject_unknown() const {
  for (const auto& [key, _] : values_) {
    if (!read_.count(key)) throw Error("unknown config key '" + key + "'");
  }
}

}  // namespace embench::cli
