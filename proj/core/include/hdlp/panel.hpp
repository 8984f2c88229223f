#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hdlp {

/// Closed range of 1-based time indices [lo, hi]. A valid interval has lo < hi.
struct TimeInterval {
  std::size_t lo = 1;
  std::size_t hi = 2;

  [[nodiscard]] std::size_t length() const { return hi - lo + 1; }
  /// Number of interior splits t in {lo, ..., hi-1}.
  [[nodiscard]] std::size_t splits() const { return hi - lo; }
  [[nodiscard]] bool contains(std::size_t t) const { return t >= lo && t <= hi; }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// n x T x p observations stored subject-major, then time, then coordinate,
/// so each observation vector X_it is a contiguous run of p doubles.
///
/// Subject and coordinate accessors are 0-based; time accessors used by the
/// statistical API (TimeInterval, splits, change-points) are 1-based.
class PanelTensor {
 public:
  /// Throws DomainError if the value count does not match n*T*p, a
  /// dimension is zero, or the label vector has the wrong length. Value
  /// finiteness is not checked here; see validate_panel.
  PanelTensor(std::size_t n_subjects, std::size_t n_times, std::size_t n_coords,
              std::vector<double> values,
              std::optional<std::vector<std::uint32_t>> group_labels = std::nullopt);

  /// Zero-filled panel.
  PanelTensor(std::size_t n_subjects, std::size_t n_times, std::size_t n_coords);

  [[nodiscard]] std::size_t n_subjects() const { return n_; }
  [[nodiscard]] std::size_t n_times() const { return t_; }
  [[nodiscard]] std::size_t n_coords() const { return p_; }
  [[nodiscard]] TimeInterval full_interval() const { return {1, t_}; }

  /// Observation of subject i (0-based) at time t (1-based).
  [[nodiscard]] std::span<const double> at(std::size_t i, std::size_t t) const {
    return {values_.data() + offset(i, t), p_};
  }
  [[nodiscard]] std::span<double> at(std::size_t i, std::size_t t) {
    return {values_.data() + offset(i, t), p_};
  }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] const std::optional<std::vector<std::uint32_t>>& group_labels() const {
    return labels_;
  }
  void set_group_labels(std::optional<std::vector<std::uint32_t>> labels);

  friend bool operator==(const PanelTensor&, const PanelTensor&) = default;

 private:
  [[nodiscard]] std::size_t offset(std::size_t i, std::size_t t) const {
    return (i * t_ + (t - 1)) * p_;
  }

  std::size_t n_;
  std::size_t t_;
  std::size_t p_;
  std::vector<double> values_;
  std::optional<std::vector<std::uint32_t>> labels_;
};

enum class PanelFormat { csv, binary };

/// Picks the format from the extension: ".csv" is CSV, anything else binary.
[[nodiscard]] PanelFormat format_from_path(const std::filesystem::path& path);

[[nodiscard]] PanelTensor load_panel(const std::filesystem::path& path, PanelFormat format);
void save_panel(const PanelTensor& panel, const std::filesystem::path& path, PanelFormat format);

/// Stream-level variants used by the file functions.
[[nodiscard]] PanelTensor read_panel_csv(std::istream& in);
[[nodiscard]] PanelTensor read_panel_binary(std::istream& in);
void write_panel_csv(const PanelTensor& panel, std::ostream& out);
void write_panel_binary(const PanelTensor& panel, std::ostream& out);

struct PanelDiagnostics {
  std::vector<std::string> violations;
  bool variance_ustat_ok = false;  // n >= 4: the four-subject U-statistic is defined
  bool test_ok = false;            // n >= 2

  [[nodiscard]] bool clean() const { return violations.empty(); }
};

[[nodiscard]] PanelDiagnostics validate_panel(const PanelTensor& panel);

/// Throws DomainError unless 1 <= lo < hi <= n_times.
void check_interval(const PanelTensor& panel, const TimeInterval& interval);

}  // namespace hdlp
