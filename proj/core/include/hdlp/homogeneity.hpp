#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hdlp/panel.hpp"
#include "hdlp/scan.hpp"

namespace hdlp {

/// Upper-alpha quantile x_alpha = -2 log(-2 sqrt(pi) log(1 - alpha)) of the
/// limiting extreme-value law G(x) = exp(-(2 sqrt(pi))^-1 exp(-x/2)).
[[nodiscard]] double gumbel_quantile(double alpha);

/// Limiting CDF G(x).
[[nodiscard]] double gumbel_cdf(double x);

/// Rejection threshold sqrt(2 log T - log log T + x_alpha) for an interval of
/// T_len time points. Throws DomainError when the radicand is negative.
[[nodiscard]] double max_threshold(std::size_t t_len, double alpha);

/// Asymptotic p-value 1 - G(x) of a max statistic with
/// x = s|s| - 2 log T + log log T (signed square keeps the map monotone for
/// negative statistics).
[[nodiscard]] double gumbel_pvalue(double statistic, std::size_t t_len);

/// Standard normal CDF via erfc.
[[nodiscard]] double normal_cdf(double x);

/// max_t Phi(-(sigma0_t / sigma_t) threshold + m_t / sigma_t).
[[nodiscard]] double power_lower_bound(std::span<const double> m, std::span<const double> sigma,
                                       std::span<const double> sigma0, double threshold);

struct TestOptions {
  std::size_t min_len = 6;
  std::size_t workers = 1;
};

struct TestReport {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::size_t argmax_split = 0;  ///< split maximizing z among testable splits
  double alpha = 0.05;
  VarianceMode variance_mode = VarianceMode::ustat;
  TimeInterval interval;
  std::vector<double> per_split_z;  ///< NaN where untestable
};

/// Calibrates an already computed scan profile. Throws StatisticUndefined if
/// no split is testable.
[[nodiscard]] TestReport test_from_profile(const MeanScanProfile& profile, double alpha);

/// Max-type homogeneity test on `interval`. Throws DomainError when alpha is
/// outside (0,1), the interval is shorter than options.min_len, or the panel
/// lacks the subjects the variance mode needs; StatisticUndefined when every
/// split is degenerate.
[[nodiscard]] TestReport homogeneity_test(const PanelTensor& panel, const TimeInterval& interval,
                                          VarianceMode mode, double alpha,
                                          const TestOptions& options = {});

/// JSON object with statistic, threshold, p_value, reject, argmax_split,
/// alpha, variance_mode, interval {lo, hi}, per_split_z (null where untestable).
[[nodiscard]] std::string to_json(const TestReport& report, int indent = 2);

void check_alpha(double alpha);

}  // namespace hdlp
