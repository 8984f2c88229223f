#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "hdlp/config.hpp"
#include "hdlp/panel.hpp"
#include "hdlp/scan.hpp"

namespace hdlp {

/// Mixes a base seed with integer keys (splitmix64 finalizer per step).
/// Streams keyed by distinct tuples are independent for practical purposes.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

using Rng = std::mt19937_64;

[[nodiscard]] inline Rng keyed_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(base, keys));
}

enum class Innovation {
  gaussian,        // N(0, 1) entries
  centered_gamma,  // Gamma(shape 4, scale 0.5) - 2: mean 0, variance 1
};

[[nodiscard]] std::string_view to_string(Innovation innovation);
[[nodiscard]] Innovation parse_innovation(std::string_view text);

enum class MixtureMiddle {
  independent,
  shared,
};

[[nodiscard]] std::string_view to_string(MixtureMiddle middle);
[[nodiscard]] MixtureMiddle parse_mixture_middle(std::string_view text);

struct SimulationScenario {
  std::size_t n = 60;
  std::size_t p = 100;
  std::size_t T = 100;
  std::size_t J = 2;  ///< moving-average order
  /// Signal magnitude: one value, or one per group for a mixture.
  std::vector<double> delta{0.0};
  std::vector<double> change_fracs{0.4};
  double support_exponent = 0.7;
  Innovation innovation = Innovation::gaussian;
  /// Empty for a single population; three weights for the three-group mixture.
  std::vector<double> mixture_probs;
  /// Group 3's mean on (tau1, tau2]: group 2's vector, or a fresh draw at delta2.
  MixtureMiddle mixture_middle = MixtureMiddle::shared;
  std::uint64_t seed = 1;

  [[nodiscard]] bool is_mixture() const { return !mixture_probs.empty(); }
  /// floor(frac * T) for each change fraction.
  [[nodiscard]] std::vector<std::size_t> change_locations() const;
  /// Throws DomainError describing the first violated invariant.
  void validate() const;
};

/// Reads scenario fields (n, p, T, J, delta, change_fracs, support_exponent,
/// innovation, mixture_probs, mixture_middle, seed) from `cfg`, starting from `base`.
[[nodiscard]] SimulationScenario scenario_from_config(const KeyValueConfig& cfg,
                                                      SimulationScenario base = {});

/// Moving-average coefficient matrices Q_l, l = 0..J, with entries
/// 0.5^|i-j| 1{|i-j| < p/2} / (J - l + 1). Never stored densely.
class BandedCoefficients {
 public:
  BandedCoefficients(std::size_t p, std::size_t J);

  [[nodiscard]] std::size_t p() const { return p_; }
  [[nodiscard]] std::size_t order() const { return j_; }
  /// Largest |i - j| with a nonzero entry.
  [[nodiscard]] std::size_t max_offset() const { return (p_ - 1) / 2; }
  [[nodiscard]] double lag_scale(std::size_t l) const {
    return 1.0 / static_cast<double>(j_ - l + 1);
  }
  [[nodiscard]] double entry(std::size_t l, std::size_t i, std::size_t j) const;

  /// out = Q_l * in by direct summation over the band.
  void apply(std::size_t l, std::span<const double> in, std::span<double> out) const;
  /// out = B * in where Q_l = lag_scale(l) * B, using a truncated two-sided
  /// geometric recursion (O(p)).
  void apply_band(std::span<const double> in, std::span<double> out) const;

 private:
  std::size_t p_;
  std::size_t j_;
};

[[nodiscard]] BandedCoefficients ma_coefficients(std::size_t p, std::size_t J);

/// Sparse piecewise-constant means: a support of floor(p^support_exponent)
/// coordinates drawn without replacement, entries +-delta with random signs
/// (support first, then signs in ascending coordinate order). Segments
/// alternate 0, mu, 0, mu, ... at floor(frac * T).
[[nodiscard]] MeanProfile sample_mean_profile(std::size_t p, std::size_t T, double delta,
                                              double support_exponent,
                                              std::span<const double> change_fracs, Rng& rng);

/// Sparse vector with floor(p^exponent) entries of magnitude delta.
[[nodiscard]] std::vector<double> sample_sparse_mean(std::size_t p, double delta,
                                                     double support_exponent, Rng& rng);

/// Three-group mixture means with change-points tau1 < tau2:
///   group 1: 0 on [1, tau1], mu1 after;     group 2: 0 on [1, tau2], mu2 after;
///   group 3: 0 on [1, tau1], nu on (tau1, tau2], mu3 after tau2,
/// with nu an independent draw at magnitude delta2.
[[nodiscard]] std::vector<MeanProfile> sample_mixture_profiles(const SimulationScenario& s,
                                                               Rng& rng);

/// Probability-weighted average of group profiles.
[[nodiscard]] MeanProfile mixture_mean(std::span<const MeanProfile> groups,
                                       std::span<const double> probs);

struct Simulation {
  PanelTensor panel;
  std::vector<MeanProfile> group_means;  ///< one entry unless the scenario is a mixture
};

/// X_it = mu_t + sum_l Q_l eps_{i,t-l}, innovations generated for
/// t = 1-J..T. Subject/time innovation streams are keyed by (seed, i, t), so
/// the panel does not depend on `workers`.
[[nodiscard]] Simulation simulate_panel(const SimulationScenario& scenario,
                                        std::size_t workers = 1);

}  // namespace hdlp
