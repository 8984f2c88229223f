#include "hdlp/scan.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hdlp/errors.hpp"
#include "hdlp/numeric.hpp"
#include "hdlp/parallel.hpp"

namespace hdlp {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

/// Interval data as a T' x (n*p) matrix; row r holds every subject's
/// observation at time lo + r, subject-major. With `center`, the first
/// subject's observation at time lo is subtracted from every row block. All
/// statistics here are invariant to a common shift, and removing it keeps the
/// cumulative sums from cancelling catastrophically.
RowMatrix interval_rows(const PanelTensor& panel, const TimeInterval& interval, bool center) {
  const std::size_t n = panel.n_subjects(), p = panel.n_coords(), len = interval.length();
  RowMatrix w(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(n * p));
  const auto ref = panel.at(0, interval.lo);
  for (std::size_t r = 0; r < len; ++r) {
    double* row = w.row(static_cast<Eigen::Index>(r)).data();
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = panel.at(i, interval.lo + r);
      for (std::size_t k = 0; k < p; ++k) row[i * p + k] = center ? x[k] - ref[k] : x[k];
    }
  }
  return w;
}

ConstRowMap time_slice(const RowMatrix& w, std::size_t r, std::size_t n, std::size_t p) {
  return ConstRowMap(w.row(static_cast<Eigen::Index>(r)).data(), static_cast<Eigen::Index>(n),
                     static_cast<Eigen::Index>(p));
}

CrossTimeGram gram_from_rows(const RowMatrix& w, std::size_t n, std::size_t p,
                             const TimeInterval& interval) {
  const auto len = static_cast<Eigen::Index>(interval.length());
  CrossTimeGram g;
  g.interval = interval;
  g.subject_sums = Eigen::MatrixXd::Zero(len, static_cast<Eigen::Index>(p));
  for (Eigen::Index r = 0; r < len; ++r) {
    g.subject_sums.row(r) = time_slice(w, static_cast<std::size_t>(r), n, p).colwise().sum();
  }
  g.diag_inner.noalias() = w * w.transpose();
  g.u.noalias() = g.subject_sums * g.subject_sums.transpose();
  g.u -= g.diag_inner;
  // Symmetric by construction; remove rounding asymmetry.
  g.u = (0.5 * (g.u + g.u.transpose())).eval();
  return g;
}

/// M_hat for all splits from U via diagonal prefix sums and a 2-D prefix table.
std::vector<double> m_hat_from_gram(const CrossTimeGram& g, std::size_t n) {
  const std::size_t len = g.interval.length();
  const auto& u = g.u;
  const auto at = [&](std::size_t a, std::size_t b) {
    return u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };

  std::vector<double> diag_prefix(len + 1, 0.0);
  {
    CompensatedSum acc;
    for (std::size_t s = 0; s < len; ++s) {
      acc += at(s, s);
      diag_prefix[s + 1] = acc.value();
    }
  }
  // cross(t) = sum_{s1 < t <= s2} U_{s1 s2} (0-based s, t = local split count).
  // Accumulate column blocks: after processing row s1, col_tail[b] holds
  // sum_{rows <= s1} U_{row, b}.
  std::vector<CompensatedSum> col_acc(len);
  std::vector<double> cross(len, 0.0);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t b = 0; b < len; ++b) col_acc[b] += at(t - 1, b);
    CompensatedSum c;
    for (std::size_t b = t; b < len; ++b) c += col_acc[b].value();
    cross[t] = c.value();
  }

  const double total_diag = diag_prefix[len];
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  std::vector<double> m(len - 1);
  for (std::size_t t = 1; t < len; ++t) {
    const double before = diag_prefix[t];
    const double after = total_diag - before;
    const double diag_part =
        static_cast<double>(len - t) * before + static_cast<double>(t) * after;
    const double h = static_cast<double>(t) * static_cast<double>(len - t);
    m[t - 1] = (diag_part - 2.0 * cross[t]) / (h * pairs);
  }
  return m;
}

}  // namespace

std::string_view to_string(VarianceMode mode) {
  return mode == VarianceMode::ustat ? "ustat" : "pairwise";
}

VarianceMode parse_variance_mode(std::string_view text) {
  if (text == "ustat") return VarianceMode::ustat;
  if (text == "pairwise") return VarianceMode::pairwise;
  throw DomainError("variance_mode must be 'ustat' or 'pairwise', got '" + std::string(text) +
                    "'");
}

std::size_t MeanScanProfile::testable_count() const {
  std::size_t c = 0;
  for (auto f : testable) c += f ? 1 : 0;
  return c;
}

// ---------------------------------------------------------------------------
// PairProfileSet

PairProfileSet::PairProfileSet(TimeInterval interval, std::size_t n_subjects)
    : interval_(interval),
      n_(n_subjects),
      d_(n_pairs() * interval.splits(), 0.0),
      s1_(interval.splits(), 0.0),
      s2_(interval.splits(), 0.0),
      s3_(interval.splits(), 0.0) {}

std::size_t PairProfileSet::local(std::size_t split) const {
  if (split < interval_.lo || split >= interval_.hi) {
    throw DomainError("split " + std::to_string(split) + " outside interval");
  }
  return split - interval_.lo;
}

std::size_t PairProfileSet::pair_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (i == j || j >= n_) throw DomainError("pair profile needs two distinct subjects");
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

double PairProfileSet::d(std::size_t i, std::size_t j, std::size_t split) const {
  return d_[pair_index(i, j) * interval_.splits() + local(split)];
}

// D_ij(t) = sum_{r1 <= t < r2} (X_ir1 - X_ir2)'(X_jr1 - X_jr2)
//         = (T'-t) L_ij(t) + t R_ij(t) - E_ij(t) - E_ji(t)
// with G(r) = X_r X_r', L(t) = sum_{r <= t} G(r), R(t) = sum_{r > t} G(r),
// C(t) = sum_{r <= t} X_r and E(t) = C(t) (C(T') - C(t))'.
struct detail::PairProfileBuilder {
  static PairProfileSet build(const RowMatrix& w, std::size_t n, std::size_t p,
                              const TimeInterval& interval, std::size_t workers) {
    const std::size_t len = interval.length();
    const std::size_t splits = len - 1;
    const auto ni = static_cast<Eigen::Index>(n);
    PairProfileSet out(interval, n);

    std::vector<Eigen::MatrixXd> gram(len);
    parallel_for(len, workers, [&](std::size_t r) {
      const auto x = time_slice(w, r, n, p);
      gram[r].noalias() = x * x.transpose();
    });

    // Compensated prefix (left[k] = L(k+1)) and suffix (right[k] = R(k+1)) sums.
    std::vector<Eigen::MatrixXd> left(splits), right(splits);
    {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(ni, ni);
      Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(ni, ni);
      auto accumulate = [&](const Eigen::MatrixXd& x) {
        for (Eigen::Index k = 0; k < sum.size(); ++k) {
          const double s = sum.data()[k], v = x.data()[k], t = s + v;
          comp.data()[k] += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
          sum.data()[k] = t;
        }
      };
      for (std::size_t k = 0; k < splits; ++k) {
        accumulate(gram[k]);
        left[k] = sum + comp;
      }
      sum.setZero();
      comp.setZero();
      for (std::size_t k = splits; k-- > 0;) {
        accumulate(gram[k + 1]);
        right[k] = sum + comp;
      }
    }

    std::vector<RowMatrix> cum(len);
    cum[0] = time_slice(w, 0, n, p);
    for (std::size_t r = 1; r < len; ++r) cum[r] = cum[r - 1] + time_slice(w, r, n, p);
    const RowMatrix& total = cum[len - 1];

    parallel_for(splits, workers, [&](std::size_t k) {
      const std::size_t t = k + 1;  // times at or before the split
      const RowMatrix tail = total - cum[k];
      Eigen::MatrixXd e;
      e.noalias() = cum[k] * tail.transpose();
      Eigen::MatrixXd dk =
          static_cast<double>(len - t) * left[k] + static_cast<double>(t) * right[k];
      dk -= e;
      dk -= e.transpose();
      // Symmetrize so D_ij == D_ji holds exactly.
      const Eigen::MatrixXd sym = 0.5 * (dk + dk.transpose());

      CompensatedSum s1, s2, s3;
      for (Eigen::Index i = 0; i < ni; ++i) {
        CompensatedSum row;
        for (Eigen::Index j = 0; j < ni; ++j) {
          if (j == i) continue;
          const double v = sym(i, j);
          row += v;
          s1 += v;
          s2 += v * v;
          if (i < j) {
            out.d_[out.pair_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) *
                       splits + k] = v;
          }
        }
        const double rs = row.value();
        s3 += rs * rs;
      }
      out.s1_[k] = s1.value();
      out.s2_[k] = s2.value();
      out.s3_[k] = s3.value();
    });
    return out;
  }
};

PairProfileSet pair_split_profiles(const PanelTensor& panel, const TimeInterval& interval,
                                   const ScanOptions& options) {
  check_interval(panel, interval);
  const auto w = interval_rows(panel, interval, /*center=*/true);
  return detail::PairProfileBuilder::build(w, panel.n_subjects(), panel.n_coords(), interval,
                                           options.workers);
}

CrossTimeGram pooled_gram(const PanelTensor& panel, const TimeInterval& interval) {
  check_interval(panel, interval);
  const auto w = interval_rows(panel, interval, /*center=*/false);
  return gram_from_rows(w, panel.n_subjects(), panel.n_coords(), interval);
}

VarianceEstimate null_variance_ustat(const PairProfileSet& profiles, std::size_t split, double h,
                                     std::size_t n) {
  if (n < 4) throw DomainError("ustat variance requires at least 4 subjects");
  const double nn = static_cast<double>(n);
  const double s1 = profiles.s1(split), s2 = profiles.s2(split), s3 = profiles.s3(split);
  // Sum over distinct (i, j, k, l) of D_ij^2 - D_ij D_ik - D_ij D_kj + D_ij D_kl,
  // by inclusion-exclusion over coinciding indices:
  //   sum D_ij^2      = (n-2)(n-3) s2
  //   sum D_ij D_ik   = sum D_ij D_kj = (n-3)(s3 - s2)
  //   sum D_ij D_kl   = s1^2 - 4 s3 + 2 s2
  CompensatedSum q;
  q += (nn - 2.0) * (nn - 3.0) * s2;
  q -= 2.0 * (nn - 3.0) * s3;
  q += 2.0 * (nn - 3.0) * s2;
  q += s1 * s1;
  q -= 4.0 * s3;
  q += 2.0 * s2;
  const double perms = nn * (nn - 1.0) * (nn - 2.0) * (nn - 3.0);
  const double value = 2.0 * q.value() / (h * h * nn * (nn - 1.0) * perms);
  return {value, value > 0.0 && std::sqrt(value) > kDegenerateSigma};
}

VarianceEstimate null_variance_pairwise(const PairProfileSet& profiles, std::size_t split,
                                        double h, std::size_t n) {
  if (n < 2) throw DomainError("pairwise variance requires at least 2 subjects");
  const double nn = static_cast<double>(n);
  const double value = 2.0 * profiles.s2(split) / (h * h * nn * nn * (nn - 1.0) * (nn - 1.0));
  return {value, value > 0.0 && std::sqrt(value) > kDegenerateSigma};
}

MeanScanProfile mean_scan(const PanelTensor& panel, const TimeInterval& interval,
                          VarianceMode mode, const ScanOptions& options) {
  check_interval(panel, interval);
  const std::size_t n = panel.n_subjects();
  if (mode == VarianceMode::ustat && n < 4) {
    throw DomainError("ustat variance mode requires at least 4 subjects");
  }
  if (n < 2) throw DomainError("scan statistic requires at least 2 subjects");

  const auto w = interval_rows(panel, interval, /*center=*/true);
  const auto gram = gram_from_rows(w, n, panel.n_coords(), interval);
  const auto pairs =
      detail::PairProfileBuilder::build(w, n, panel.n_coords(), interval, options.workers);

  MeanScanProfile prof;
  prof.interval = interval;
  prof.variance_mode = mode;
  prof.m_hat = m_hat_from_gram(gram, n);
  const std::size_t splits = interval.splits();
  prof.null_variance.resize(splits);
  prof.sigma0.resize(splits);
  prof.z.resize(splits);
  prof.h.resize(splits);
  prof.testable.resize(splits);
  for (std::size_t k = 0; k < splits; ++k) {
    const std::size_t t = interval.lo + k;
    const double h = scale_h(interval, t);
    const auto var = mode == VarianceMode::ustat ? null_variance_ustat(pairs, t, h, n)
                                                 : null_variance_pairwise(pairs, t, h, n);
    prof.h[k] = h;
    prof.null_variance[k] = var.value;
    prof.testable[k] = var.testable ? 1 : 0;
    prof.sigma0[k] = var.testable ? std::sqrt(var.value) : 0.0;
    prof.z[k] = var.testable ? prof.m_hat[k] / prof.sigma0[k]
                             : std::numeric_limits<double>::quiet_NaN();
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Population measure

MeanProfile::MeanProfile(std::size_t n_times, std::size_t n_coords, std::vector<double> mu)
    : t_(n_times), p_(n_coords), mu_(std::move(mu)) {
  if (t_ == 0 || p_ == 0) throw DomainError("mean profile dimensions must be positive");
  if (mu_.size() != t_ * p_) throw DomainError("mean profile size does not match T*p");
  for (std::size_t t = 1; t < t_; ++t) {
    const auto a = at(t), b = at(t + 1);
    if (!std::equal(a.begin(), a.end(), b.begin())) change_points_.push_back(t);
  }
}

MeanProfile::MeanProfile(std::size_t n_times, std::size_t n_coords)
    : MeanProfile(n_times, n_coords, std::vector<double>(n_times * n_coords, 0.0)) {}

std::vector<double> population_scan(const MeanProfile& profile, const TimeInterval& interval) {
  if (interval.lo < 1 || interval.lo >= interval.hi || interval.hi > profile.n_times()) {
    throw DomainError("interval not covered by mean profile");
  }
  const std::size_t p = profile.n_coords();
  const std::size_t len = interval.length();
  // dist[a][b] for a < b, interval-relative.
  std::vector<double> dist(len * len, 0.0);
  for (std::size_t a = 0; a < len; ++a) {
    const auto x = profile.at(interval.lo + a);
    for (std::size_t b = a + 1; b < len; ++b) {
      const auto y = profile.at(interval.lo + b);
      CompensatedSum acc;
      for (std::size_t k = 0; k < p; ++k) {
        const double diff = x[k] - y[k];
        acc += diff * diff;
      }
      dist[a * len + b] = acc.value();
    }
  }
  std::vector<double> m(len - 1);
  for (std::size_t t = 1; t < len; ++t) {
    CompensatedSum acc;
    for (std::size_t a = 0; a < t; ++a) {
      for (std::size_t b = t; b < len; ++b) acc += dist[a * len + b];
    }
    m[t - 1] = acc.value() / (static_cast<double>(t) * static_cast<double>(len - t));
  }
  return m;
}

}  // namespace hdlp
