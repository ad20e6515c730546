#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace embench::cli {

/// Flat view of a sectioned key-value file: `[train.cbow]` + `lr = 0.05`
/// becomes key "train.cbow.lr". Typed getters throw Error naming the key.
class ConfigMap {
 public:
  static ConfigMap parse(std::istream& in);
  static ConfigMap load(const std::filesystem::path& path);

  /// Applies a `key=value` override; value uses the file syntax.
  void set(const std::string& assignment);
  void set(const std::string& key, std::vector<std::string> values);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

  /// Throws naming the first key no getter has read.
  void reject_unknown() const;

 private:
  const std::string* scalar(const std::string& key) const;

  std::map<std::string, std::vector<std::string>> values_;
  mutable std::set<std::string> read_;
};

}  // namespace embench::cli
