#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hdlp/panel.hpp"

namespace hdlp {

enum class VarianceMode {
  ustat,     // four-distinct-subject trace estimator (single population)
  pairwise,  // squared pair-profile estimator (mixture null)
};

[[nodiscard]] std::string_view to_string(VarianceMode mode);
/// Accepts "ustat" or "pairwise"; throws DomainError otherwise.
[[nodiscard]] VarianceMode parse_variance_mode(std::string_view text);

/// Scale h(t) = (t - lo + 1)(hi - t) of split t within `interval`.
[[nodiscard]] inline double scale_h(const TimeInterval& interval, std::size_t split) {
  return static_cast<double>(split - interval.lo + 1) * static_cast<double>(interval.hi - split);
}

/// Pooled cross-time sums over an interval. Row/column r of each matrix is
/// interval time lo + r.
struct CrossTimeGram {
  TimeInterval interval;
  Eigen::MatrixXd u;             ///< U_st = sum_{i != j} X_is' X_jt
  Eigen::MatrixXd subject_sums;  ///< row s is S_s = sum_i X_is
  Eigen::MatrixXd diag_inner;    ///< B_st = sum_i X_is' X_it
};

/// Pair split statistics D_ij(t) for every unordered subject pair and every
/// split of an interval, with the per-split aggregates
///   s1 = sum_{i != j} D_ij,  s2 = sum_{i != j} D_ij^2,  s3 = sum_i (sum_{j != i} D_ij)^2.
namespace detail {
struct PairProfileBuilder;
}

class PairProfileSet {
 public:
  PairProfileSet(TimeInterval interval, std::size_t n_subjects);

  [[nodiscard]] const TimeInterval& interval() const { return interval_; }
  [[nodiscard]] std::size_t n_subjects() const { return n_; }
  [[nodiscard]] std::size_t n_pairs() const { return n_ * (n_ - 1) / 2; }

  /// D_ij at absolute split t; i != j, symmetric in (i, j).
  [[nodiscard]] double d(std::size_t i, std::size_t j, std::size_t split) const;
  [[nodiscard]] double s1(std::size_t split) const { return s1_[local(split)]; }
  [[nodiscard]] double s2(std::size_t split) const { return s2_[local(split)]; }
  [[nodiscard]] double s3(std::size_t split) const { return s3_[local(split)]; }

 private:
  friend struct detail::PairProfileBuilder;

  [[nodiscard]] std::size_t local(std::size_t split) const;
  [[nodiscard]] std::size_t pair_index(std::size_t i, std::size_t j) const;

  TimeInterval interval_;
  std::size_t n_;
  std::vector<double> d_;  // [pair][split], pairs i < j in row-major order
  std::vector<double> s1_, s2_, s3_;
};

/// Estimated null variance at one split. A non-positive or numerically zero
/// estimate marks the split untestable.
struct VarianceEstimate {
  double value = 0.0;
  bool testable = false;
};

/// Standard error values at or below this are treated as zero.
inline constexpr double kDegenerateSigma = 1e-300;

/// Scan statistic over all splits t in {lo, ..., hi-1}; entry k is split lo + k.
struct MeanScanProfile {
  TimeInterval interval;
  VarianceMode variance_mode = VarianceMode::ustat;
  std::vector<double> m_hat;
  std::vector<double> null_variance;  ///< raw estimate, may be <= 0 for ustat
  std::vector<double> sigma0;         ///< sqrt of the estimate, 0 where untestable
  std::vector<double> z;              ///< m_hat / sigma0, NaN where untestable
  std::vector<double> h;
  std::vector<std::uint8_t> testable;

  [[nodiscard]] std::size_t size() const { return m_hat.size(); }
  [[nodiscard]] std::size_t split_at(std::size_t k) const { return interval.lo + k; }
  [[nodiscard]] std::size_t testable_count() const;
};

struct ScanOptions {
  std::size_t workers = 1;
};

/// Population means mu_t for t = 1..T. Change-points are derived from mu:
/// tau is a change-point iff mu_tau != mu_{tau+1} exactly.
class MeanProfile {
 public:
  MeanProfile(std::size_t n_times, std::size_t n_coords, std::vector<double> mu);
  /// Constant zero profile.
  MeanProfile(std::size_t n_times, std::size_t n_coords);

  [[nodiscard]] std::size_t n_times() const { return t_; }
  [[nodiscard]] std::size_t n_coords() const { return p_; }
  [[nodiscard]] std::span<const double> at(std::size_t t) const {
    return {mu_.data() + (t - 1) * p_, p_};
  }
  [[nodiscard]] const std::vector<std::size_t>& change_points() const { return change_points_; }

 private:
  std::size_t t_;
  std::size_t p_;
  std::vector<double> mu_;
  std::vector<std::size_t> change_points_;
};

[[nodiscard]] CrossTimeGram pooled_gram(const PanelTensor& panel, const TimeInterval& interval);

/// Requires n >= 4 for ustat and n >= 2 for pairwise (DomainError otherwise).
[[nodiscard]] MeanScanProfile mean_scan(const PanelTensor& panel, const TimeInterval& interval,
                                        VarianceMode mode, const ScanOptions& options = {});

[[nodiscard]] PairProfileSet pair_split_profiles(const PanelTensor& panel,
                                                 const TimeInterval& interval,
                                                 const ScanOptions& options = {});

[[nodiscard]] VarianceEstimate null_variance_ustat(const PairProfileSet& profiles,
                                                   std::size_t split, double h, std::size_t n);
[[nodiscard]] VarianceEstimate null_variance_pairwise(const PairProfileSet& profiles,
                                                      std::size_t split, double h, std::size_t n);

/// Population measure M_t for every split of `interval`.
[[nodiscard]] std::vector<double> population_scan(const MeanProfile& profile,
                                                  const TimeInterval& interval);

}  // namespace hdlp
