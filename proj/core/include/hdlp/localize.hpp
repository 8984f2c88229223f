#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdlp/panel.hpp"

namespace hdlp {

enum class FdrMethod { bh, storey };

[[nodiscard]] std::string_view to_string(FdrMethod method);
[[nodiscard]] FdrMethod parse_fdr_method(std::string_view text);

struct FdrOptions {
  FdrMethod method = FdrMethod::storey;
  double lambda = 0.5;  ///< Storey tuning parameter, in (0, 1)
};

struct PairedTestResult {
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::vector<std::uint8_t> degenerate;  ///< zero variance of the paired differences
};

/// Per coordinate j: d_i = mean of subject i over [tau+1, tau+window] minus
/// mean over [tau-window+1, tau]; t = mean(d) / (sd(d) / sqrt(n)), two-sided
/// p-value from Student t with n-1 degrees of freedom.
[[nodiscard]] PairedTestResult paired_mean_shift_test(const PanelTensor& panel, std::size_t tau,
                                                      std::size_t window = 1,
                                                      std::size_t workers = 1);

/// Storey's null-proportion estimate #{p > lambda} / (m (1 - lambda)), capped at 1.
[[nodiscard]] double storey_pi0(std::span<const double> p_values, double lambda);

/// Step-up selection; returns sorted 0-based indices.
[[nodiscard]] std::vector<std::size_t> fdr_select(std::span<const double> p_values, double q,
                                                  const FdrOptions& options = {});

struct LocalizationReport {
  std::size_t change_point = 0;
  std::size_t window = 1;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::vector<std::uint8_t> degenerate;
  std::vector<std::size_t> selected;  ///< 0-based, sorted
  double fdr_level = 0.0;
  FdrOptions method;
};

[[nodiscard]] LocalizationReport localize_change(const PanelTensor& panel, std::size_t tau,
                                                 double q, const FdrOptions& options = {},
                                                 std::size_t window = 1,
                                                 std::size_t workers = 1);

/// `coord,t_stat,p_value,selected` with 1-based coordinates.
[[nodiscard]] std::string to_csv(const LocalizationReport& report);
[[nodiscard]] std::string to_json(const LocalizationReport& report, int indent = 2);

}  // namespace hdlp
