#include "hdlp/homogeneity.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "hdlp/errors.hpp"

namespace hdlp {

namespace {

constexpr double kTwoSqrtPi = 2.0 * 1.7724538509055160273;  // 2 sqrt(pi)

double log_t_terms(std::size_t t_len) {
  const double lt = std::log(static_cast<double>(t_len));
  return 2.0 * lt - std::log(lt);
}

}  // namespace

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

double gumbel_quantile(double alpha) {
  check_alpha(alpha);
  return -2.0 * std::log(-kTwoSqrtPi * std::log1p(-alpha));
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x / 2.0) / kTwoSqrtPi); }

double max_threshold(std::size_t t_len, double alpha) {
  if (t_len < 2) throw DomainError("threshold undefined; interval too short");
  const double radicand = log_t_terms(t_len) + gumbel_quantile(alpha);
  if (radicand < 0.0) throw DomainError("threshold undefined; interval too short");
  return std::sqrt(radicand);
}

double gumbel_pvalue(double statistic, std::size_t t_len) {
  if (t_len < 3) throw DomainError("p-value needs an interval of at least 3 time points");
  if (std::isnan(statistic)) throw DomainError("p-value of NaN statistic");
  const double x = statistic * std::abs(statistic) - log_t_terms(t_len);
  // 1 - G(x) = -expm1(-e^{-x/2} / (2 sqrt(pi)))
  const double p = -std::expm1(-std::exp(-x / 2.0) / kTwoSqrtPi);
  return std::clamp(p, 0.0, 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double power_lower_bound(std::span<const double> m, std::span<const double> sigma,
                         std::span<const double> sigma0, double threshold) {
  if (m.size() != sigma.size() || m.size() != sigma0.size()) {
    throw DomainError("power_lower_bound: sequence lengths differ");
  }
  if (m.empty()) throw DomainError("power_lower_bound: empty sequences");
  double best = 0.0;
  for (std::size_t t = 0; t < m.size(); ++t) {
    if (!(sigma[t] > 0.0) || !(sigma0[t] > 0.0)) {
      throw DomainError("power_lower_bound: standard deviations must be positive");
    }
    best = std::max(best, normal_cdf(-(sigma0[t] / sigma[t]) * threshold + m[t] / sigma[t]));
  }
  return best;
}

TestReport test_from_profile(const MeanScanProfile& profile, double alpha) {
  check_alpha(alpha);
  TestReport rep;
  rep.alpha = alpha;
  rep.variance_mode = profile.variance_mode;
  rep.interval = profile.interval;
  rep.per_split_z = profile.z;

  bool found = false;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (!profile.testable[k]) continue;
    // Strict comparison keeps the smallest split on ties.
    if (!found || profile.z[k] > rep.statistic) {
      rep.statistic = profile.z[k];
      rep.argmax_split = profile.split_at(k);
      found = true;
    }
  }
  if (!found) throw StatisticUndefined();

  const std::size_t t_len = profile.interval.length();
  rep.threshold = max_threshold(t_len, alpha);
  rep.p_value = gumbel_pvalue(rep.statistic, t_len);
  rep.reject = rep.statistic > rep.threshold;
  return rep;
}

TestReport homogeneity_test(const PanelTensor& panel, const TimeInterval& interval,
                            VarianceMode mode, double alpha, const TestOptions& options) {
  check_alpha(alpha);
  check_interval(panel, interval);
  if (interval.length() < std::max<std::size_t>(options.min_len, 3)) {
    throw DomainError("interval too short: length " + std::to_string(interval.length()) +
                      " < minimum " + std::to_string(options.min_len));
  }
  const auto profile = mean_scan(panel, interval, mode, ScanOptions{options.workers});
  return test_from_profile(profile, alpha);
}

std::string to_json(const TestReport& report, int indent) {
  nlohmann::json z = nlohmann::json::array();
  for (double v : report.per_split_z) {
    z.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  }
  nlohmann::json j{
      {"statistic", report.statistic},
      {"threshold", report.threshold},
      {"p_value", report.p_value},
      {"reject", report.reject},
      {"argmax_split", report.argmax_split},
      {"alpha", report.alpha},
      {"variance_mode", std::string(to_string(report.variance_mode))},
      {"interval", {{"lo", report.interval.lo}, {"hi", report.interval.hi}}},
      {"per_split_z", std::move(z)},
  };
  return j.dump(indent);
}

}  // namespace hdlp
