#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdlp {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. Blank lines and `#` comments are ignored; keys may
/// carry one dotted prefix (`grid.n = 30, 60`). Lists are comma-separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // Typed getters mark the key as used. Missing keys yield nullopt.
  [[nodiscard]] std::optional<std::string> string(const std::string& key) const;
  [[nodiscard]] std::optional<double> real(const std::string& key) const;
  [[nodiscard]] std::optional<std::uint64_t> integer(const std::string& key) const;
  [[nodiscard]] std::optional<std::vector<double>> reals(const std::string& key) const;
  [[nodiscard]] std::optional<std::vector<std::uint64_t>> integers(const std::string& key) const;
  /// Comma-separated list of '/'-separated tuples, e.g. "0.25/0.35/0.4, 0.5/0.7/0.8".
  [[nodiscard]] std::optional<std::vector<std::vector<double>>> tuples(const std::string& key) const;

  /// Throws ConfigError naming the first key no getter has read.
  void require_all_used() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace hdlp
