#include "hdlp/panel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

#include "hdlp/errors.hpp"

namespace hdlp {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'D', 'L', 'P'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::uint8_t kGroupMarker = 0x47;
// Refuse to allocate more than this many cells from an untrusted header.
constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 34;

std::size_t checked_cells(std::uint64_t n, std::uint64_t t, std::uint64_t p) {
  if (n == 0 || t == 0 || p == 0) throw DataError("zero panel dimension");
  if (n > kMaxCells / t || n * t > kMaxCells / p) throw DataError("dimension overflow");
  return static_cast<std::size_t>(n * t * p);
}

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t k = 0; k < sizeof(U); ++k) {
    bytes[k] = static_cast<char>((value >> (8 * k)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError(std::string("truncated binary panel: ") + what);
  U value = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) value |= static_cast<U>(bytes[k]) << (8 * k);
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    std::ostringstream msg;
    msg << "line " << line << ": cannot parse " << name << " '" << text << "'";
    throw DataError(msg.str());
  }
  return value;
}

}  // namespace

PanelTensor::PanelTensor(std::size_t n_subjects, std::size_t n_times, std::size_t n_coords,
                         std::vector<double> values,
                         std::optional<std::vector<std::uint32_t>> group_labels)
    : n_(n_subjects), t_(n_times), p_(n_coords), values_(std::move(values)) {
  if (n_ == 0 || t_ == 0 || p_ == 0) throw DomainError("panel dimensions must be positive");
  if (values_.size() != n_ * t_ * p_) {
    throw DomainError("panel value count does not match n*T*p");
  }
  set_group_labels(std::move(group_labels));
}

PanelTensor::PanelTensor(std::size_t n_subjects, std::size_t n_times, std::size_t n_coords)
    : PanelTensor(n_subjects, n_times, n_coords,
                  std::vector<double>(n_subjects * n_times * n_coords, 0.0)) {}

void PanelTensor::set_group_labels(std::optional<std::vector<std::uint32_t>> labels) {
  if (labels && labels->size() != n_) {
    throw DomainError("group label count does not match n_subjects");
  }
  labels_ = std::move(labels);
}

PanelFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? PanelFormat::csv : PanelFormat::binary;
}

PanelTensor read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("malformed header: empty input");
  {
    std::string header;
    for (char c : trim(line)) {
      if (c != ' ' && c != '\t') header.push_back(c);
    }
    if (header != "subject,time,coord,value") {
      throw DataError("malformed header: expected 'subject,time,coord,value'");
    }
  }

  struct Cell {
    std::uint64_t i, t, k;
    double v;
  };
  std::vector<Cell> cells;
  std::uint64_t n = 0, T = 0, p = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const auto comma = row.find(',', start);
      if ((f < 3) == (comma == std::string_view::npos)) {
        throw DataError("line " + std::to_string(line_no) + ": expected 4 fields");
      }
      fields[f] = row.substr(start, f < 3 ? comma - start : std::string_view::npos);
      start = comma + 1;
    }
    Cell c{parse_field<std::uint64_t>(fields[0], line_no, "subject"),
           parse_field<std::uint64_t>(fields[1], line_no, "time"),
           parse_field<std::uint64_t>(fields[2], line_no, "coord"),
           parse_field<double>(fields[3], line_no, "value")};
    if (c.i == 0 || c.t == 0 || c.k == 0) {
      throw DataError("line " + std::to_string(line_no) + ": indices are 1-based");
    }
    if (!std::isfinite(c.v)) {
      throw DataError("line " + std::to_string(line_no) + ": non-finite value");
    }
    n = std::max(n, c.i);
    T = std::max(T, c.t);
    p = std::max(p, c.k);
    cells.push_back(c);
  }
  if (cells.empty()) throw DataError("incomplete panel: no data rows");

  const std::size_t total = checked_cells(n, T, p);
  if (cells.size() > total) throw DataError("duplicated cell");
  std::vector<double> values(total, 0.0);
  std::vector<bool> seen(total, false);
  for (const auto& c : cells) {
    const std::size_t idx = ((c.i - 1) * T + (c.t - 1)) * p + (c.k - 1);
    if (seen[idx]) {
      throw DataError("duplicated cell (" + std::to_string(c.i) + "," + std::to_string(c.t) +
                      "," + std::to_string(c.k) + ")");
    }
    seen[idx] = true;
    values[idx] = c.v;
  }
  if (cells.size() != total) throw DataError("incomplete panel");
  return PanelTensor(n, T, p, std::move(values));
}

void write_panel_csv(const PanelTensor& panel, std::ostream& out) {
  out << "subject,time,coord,value\n";
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < panel.n_subjects(); ++i) {
    for (std::size_t t = 1; t <= panel.n_times(); ++t) {
      const auto x = panel.at(i, t);
      for (std::size_t k = 0; k < panel.n_coords(); ++k) {
        // Shortest representation that round-trips exactly.
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x[k]);
        out << i + 1 << ',' << t << ',' << k + 1 << ','
            << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()))
            << '\n';
      }
    }
  }
}

PanelTensor read_panel_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("malformed header: bad magic bytes");
  const auto version = get_le<std::uint8_t>(in, "version");
  if (version != kVersion) throw DataError("malformed header: unsupported version");
  const auto n = get_le<std::uint64_t>(in, "n");
  const auto T = get_le<std::uint64_t>(in, "T");
  const auto p = get_le<std::uint64_t>(in, "p");
  const std::size_t total = checked_cells(n, T, p);

  std::vector<double> values(total);
  for (auto& v : values) {
    v = std::bit_cast<double>(get_le<std::uint64_t>(in, "payload"));
    if (!std::isfinite(v)) throw DataError("non-finite value");
  }

  std::optional<std::vector<std::uint32_t>> labels;
  const auto marker = in.get();
  if (marker != std::char_traits<char>::eof()) {
    if (marker != kGroupMarker) throw DataError("unexpected trailing bytes after payload");
    labels.emplace(static_cast<std::size_t>(n));
    for (auto& g : *labels) g = get_le<std::uint32_t>(in, "group labels");
    if (in.peek() != std::char_traits<char>::eof()) {
      throw DataError("unexpected trailing bytes after group labels");
    }
  }
  return PanelTensor(n, T, p, std::move(values), std::move(labels));
}

void write_panel_binary(const PanelTensor& panel, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint8_t>(out, kVersion);
  put_le<std::uint64_t>(out, panel.n_subjects());
  put_le<std::uint64_t>(out, panel.n_times());
  put_le<std::uint64_t>(out, panel.n_coords());
  for (double v : panel.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (const auto& labels = panel.group_labels()) {
    put_le<std::uint8_t>(out, kGroupMarker);
    for (auto g : *labels) put_le<std::uint32_t>(out, g);
  }
}

PanelTensor load_panel(const std::filesystem::path& path, PanelFormat format) {
  std::ifstream in(path, format == PanelFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open panel file '" + path.string() + "'");
  PanelTensor panel = format == PanelFormat::csv ? read_panel_csv(in) : read_panel_binary(in);
  const auto diag = validate_panel(panel);
  if (!diag.clean()) throw DataError(diag.violations.front());
  return panel;
}

void save_panel(const PanelTensor& panel, const std::filesystem::path& path, PanelFormat format) {
  std::ofstream out(path, format == PanelFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  if (format == PanelFormat::csv) {
    write_panel_csv(panel, out);
  } else {
    write_panel_binary(panel, out);
  }
  out.flush();
  if (!out) throw DataError("I/O failure writing '" + path.string() + "'");
}

PanelDiagnostics validate_panel(const PanelTensor& panel) {
  PanelDiagnostics diag;
  const auto values = panel.values();
  const auto bad = std::find_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); });
  if (bad != values.end()) {
    const auto idx = static_cast<std::size_t>(bad - values.begin());
    const std::size_t p = panel.n_coords(), T = panel.n_times();
    std::ostringstream msg;
    msg << "non-finite value at (subject " << idx / (T * p) + 1 << ", time "
        << (idx / p) % T + 1 << ", coord " << idx % p + 1 << ")";
    diag.violations.push_back(msg.str());
  }
  if (panel.n_subjects() < 2) diag.violations.emplace_back("n_subjects must be at least 2");
  if (panel.n_times() < 2) diag.violations.emplace_back("n_times must be at least 2");
  if (const auto& labels = panel.group_labels()) {
    if (std::find(labels->begin(), labels->end(), 0u) != labels->end()) {
      diag.violations.emplace_back("group labels must be 1-based");
    }
  }
  const bool clean = diag.violations.empty();
  diag.test_ok = clean && panel.n_subjects() >= 2;
  diag.variance_ustat_ok = clean && panel.n_subjects() >= 4;
  return diag;
}

void check_interval(const PanelTensor& panel, const TimeInterval& interval) {
  if (interval.lo < 1 || interval.lo >= interval.hi || interval.hi > panel.n_times()) {
    throw DomainError("interval [" + std::to_string(interval.lo) + ", " +
                      std::to_string(interval.hi) + "] is not inside [1, " +
                      std::to_string(panel.n_times()) + "] with lo < hi");
  }
}

}  // namespace hdlp
