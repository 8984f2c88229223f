#include "hdlp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <string_view>

namespace hdlp {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, const std::string& key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value for '" + key + "': '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (std::count(key.begin(), key.end(), '.') > 1) {
      throw ConfigError("key '" + std::string(key) + "' nests more than one level");
    }
    cfg.entries_[std::string(key)] = std::string(trim(view.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return parse(in);
}

std::optional<std::string> KeyValueConfig::string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<double> KeyValueConfig::real(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  return parse_number<double>(trim(*s), key);
}

std::optional<std::uint64_t> KeyValueConfig::integer(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  return parse_number<std::uint64_t>(trim(*s), key);
}

std::optional<std::vector<double>> KeyValueConfig::reals(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  for (auto part : split(*s, ',')) out.push_back(parse_number<double>(part, key));
  return out;
}

std::optional<std::vector<std::uint64_t>> KeyValueConfig::integers(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  std::vector<std::uint64_t> out;
  for (auto part : split(*s, ',')) out.push_back(parse_number<std::uint64_t>(part, key));
  return out;
}

std::optional<std::vector<std::vector<double>>> KeyValueConfig::tuples(
    const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  std::vector<std::vector<double>> out;
  for (auto part : split(*s, ',')) {
    std::vector<double> tuple;
    for (auto comp : split(part, '/')) tuple.push_back(parse_number<double>(comp, key));
    out.push_back(std::move(tuple));
  }
  return out;
}

void KeyValueConfig::require_all_used() const {
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
}

}  // namespace hdlp
