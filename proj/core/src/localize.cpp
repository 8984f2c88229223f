#include "hdlp/localize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hdlp/errors.hpp"
#include "hdlp/numeric.hpp"
#include "hdlp/parallel.hpp"

namespace hdlp {

std::string_view to_string(FdrMethod method) {
  return method == FdrMethod::bh ? "bh" : "storey";
}

FdrMethod parse_fdr_method(std::string_view text) {
  if (text == "bh") return FdrMethod::bh;
  if (text == "storey") return FdrMethod::storey;
  throw DomainError("method: expected 'bh' or 'storey', got '" + std::string(text) + "'");
}

PairedTestResult paired_mean_shift_test(const PanelTensor& panel, std::size_t tau,
                                        std::size_t window, std::size_t workers) {
  const std::size_t n = panel.n_subjects(), p = panel.n_coords(), T = panel.n_times();
  if (window < 1) throw DomainError("window: must be at least 1");
  if (tau < 1 || tau >= T) throw DomainError("tau: must satisfy 1 <= tau < T");
  if (tau < window || tau + window > T) {
    throw DomainError("window: pre/post windows around tau leave [1, T]");
  }
  if (n < 2) throw DomainError("paired t-test needs n >= 2");

  PairedTestResult out;
  out.t_stats.assign(p, 0.0);
  out.p_values.assign(p, 1.0);
  out.degenerate.assign(p, 0);

  // d(i, j) accumulated row by row; coordinates are then tested independently.
  std::vector<double> d(n * p, 0.0);
  const double w = static_cast<double>(window);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < window; ++k) {
      const auto pre = panel.at(i, tau - k);
      const auto post = panel.at(i, tau + 1 + k);
      for (std::size_t j = 0; j < p; ++j) d[i * p + j] += (post[j] - pre[j]) / w;
    }
  }

  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double nn = static_cast<double>(n);
  parallel_for(p, workers, [&](std::size_t j) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < n; ++i) sum += d[i * p + j];
    const double mean = sum.value() / nn;
    CompensatedSum ss;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = d[i * p + j] - mean;
      ss += e * e;
    }
    const double var = ss.value() / (nn - 1.0);
    // Relative guard: rounding noise around an exactly constant shift is not signal.
    const double scale = std::max(mean * mean, 1e-300);
    if (!(var > 1e-24 * scale)) {
      out.degenerate[j] = 1;
      return;
    }
    const double t = mean / std::sqrt(var / nn);
    out.t_stats[j] = t;
    out.p_values[j] = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))),
                                 0.0, 1.0);
  });
  return out;
}

double storey_pi0(std::span<const double> p_values, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda: must lie in (0, 1)");
  if (p_values.empty()) return 1.0;
  const auto above = std::count_if(p_values.begin(), p_values.end(),
                                   [&](double v) { return v > lambda; });
  const double m = static_cast<double>(p_values.size());
  return std::min(1.0, static_cast<double>(above) / (m * (1.0 - lambda)));
}

std::vector<std::size_t> fdr_select(std::span<const double> p_values, double q,
                                    const FdrOptions& options) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q: FDR level must lie in (0, 1)");
  const std::size_t m = p_values.size();
  if (m == 0) return {};
  for (double v : p_values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p_values: entries must lie in [0, 1]");
  }
  double m_eff = static_cast<double>(m);
  if (options.method == FdrMethod::storey) m_eff *= storey_pi0(p_values, options.lambda);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t cutoff = 0;
  for (std::size_t r = 1; r <= m; ++r) {
    if (p_values[order[r - 1]] * m_eff <= static_cast<double>(r) * q) cutoff = r;
  }
  std::vector<std::size_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cutoff));
  std::sort(selected.begin(), selected.end());
  return selected;
}

LocalizationReport localize_change(const PanelTensor& panel, std::size_t tau, double q,
                                   const FdrOptions& options, std::size_t window,
                                   std::size_t workers) {
  auto tests = paired_mean_shift_test(panel, tau, window, workers);
  LocalizationReport r;
  r.change_point = tau;
  r.window = window;
  r.selected = fdr_select(tests.p_values, q, options);
  r.t_stats = std::move(tests.t_stats);
  r.p_values = std::move(tests.p_values);
  r.degenerate = std::move(tests.degenerate);
  r.fdr_level = q;
  r.method = options;
  return r;
}

std::string to_csv(const LocalizationReport& report) {
  std::vector<std::uint8_t> chosen(report.p_values.size(), 0);
  for (auto j : report.selected) chosen[j] = 1;
  std::ostringstream o;
  o.precision(17);
  o << "coord,t_stat,p_value,selected\n";
  for (std::size_t j = 0; j < report.p_values.size(); ++j) {
    o << j + 1 << ',' << report.t_stats[j] << ',' << report.p_values[j] << ','
      << static_cast<int>(chosen[j]) << '\n';
  }
  return o.str();
}

std::string to_json(const LocalizationReport& report, int indent) {
  std::vector<std::size_t> coords;
  for (auto j : report.selected) coords.push_back(j + 1);
  std::vector<std::size_t> degenerate;
  for (std::size_t j = 0; j < report.degenerate.size(); ++j) {
    if (report.degenerate[j]) degenerate.push_back(j + 1);
  }
  nlohmann::json method{{"name", std::string(to_string(report.method.method))}};
  if (report.method.method == FdrMethod::storey) {
    method["lambda"] = report.method.lambda;
    method["pi0"] = storey_pi0(report.p_values, report.method.lambda);
  }
  nlohmann::json j{
      {"change_point", report.change_point},
      {"window", report.window},
      {"fdr_level", report.fdr_level},
      {"method", method},
      {"selected", coords},
      {"degenerate", degenerate},
      {"t_stats", report.t_stats},
      {"p_values", report.p_values},
  };
  return j.dump(indent);
}

}  // namespace hdlp
