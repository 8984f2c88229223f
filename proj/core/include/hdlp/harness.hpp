#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdlp/config.hpp"
#include "hdlp/homogeneity.hpp"
#include "hdlp/scan.hpp"
#include "hdlp/segmentation.hpp"
#include "hdlp/simgen.hpp"

namespace hdlp {

/// One grid cell: (delta, n, p, T). delta has one entry, or three for a mixture.
struct CellKey {
  std::vector<double> delta;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t T = 0;

  /// "0.2" or "0.25/0.35/0.4".
  [[nodiscard]] std::string delta_label() const;
  [[nodiscard]] std::uint64_t hash() const;
};

struct ExperimentGrid {
  SimulationScenario base;  ///< template; n, p, T and delta are overridden per cell
  std::vector<std::vector<double>> delta;
  std::vector<std::size_t> n;
  std::vector<std::size_t> p;
  std::vector<std::size_t> T;
  std::size_t replications = 500;
  double alpha = 0.05;
  std::size_t workers = 1;
  std::uint64_t base_seed = 20240601;
  std::size_t min_len = 6;

  void validate() const;
  /// Cells in delta-major, then n, p, T order.
  [[nodiscard]] std::vector<CellKey> cells() const;
  /// Scenario for one replication, seeded by hash(base_seed, cell, rep).
  [[nodiscard]] SimulationScenario scenario(const CellKey& cell, std::size_t rep) const;
};

/// Grid from config: scenario keys at top level, axes as grid.delta / grid.n /
/// grid.p / grid.T, plus replications, alpha, workers, base_seed, min_len.
/// Unknown keys are left unread for the caller to reject.
[[nodiscard]] ExperimentGrid grid_from_config(const KeyValueConfig& cfg);

struct SizePowerRow {
  CellKey key;
  std::size_t replications = 0;  ///< successful replications
  std::size_t rejections = 0;
  std::size_t failures = 0;
  double reject_rate = 0.0;
  double mc_stderr = 0.0;
};

struct SizePowerTable {
  VarianceMode variance_mode = VarianceMode::ustat;
  std::vector<SizePowerRow> rows;
};

struct IdentificationRow {
  CellKey key;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double mean_fp = 0.0;
  double mean_fn = 0.0;
  double mean_fp_plus_fn = 0.0;
  double mean_tp = 0.0;
  std::size_t true_change_points = 0;
};

struct IdentificationCurves {
  VarianceMode variance_mode = VarianceMode::ustat;
  std::vector<IdentificationRow> rows;
};

struct EstimationErrorRow {
  CellKey key;
  std::size_t replications = 0;
  double mean_abs_error = 0.0;  ///< mean |argmax m_hat - tau| over [1, T]
  double stderr_abs_error = 0.0;
};

/// sqrt(r (1 - r) / reps).
[[nodiscard]] double bernoulli_stderr(double rate, std::size_t reps);

/// Rejection rate of the homogeneity test on [1, T] in every cell.
[[nodiscard]] SizePowerTable run_size_power(const ExperimentGrid& grid, VarianceMode mode);

/// Same as run_size_power with the pairwise variance; the grid's base scenario
/// must carry mixture_probs.
[[nodiscard]] SizePowerTable run_mixture_power(const ExperimentGrid& grid);

/// Binary segmentation plus exact-match scoring against the scenario's change-points.
[[nodiscard]] IdentificationCurves run_identification(const ExperimentGrid& grid,
                                                      VarianceMode mode,
                                                      std::size_t tolerance = 0);

/// Single change-point estimation error of argmax m_hat over [1, T].
[[nodiscard]] std::vector<EstimationErrorRow> run_estimation_error(const ExperimentGrid& grid);

/// Monte-Carlo moments of m_hat at every split of [1, T].
struct ScanMoments {
  std::vector<double> mean_m_hat;
  std::vector<double> sd_m_hat;
  std::vector<double> mean_null_variance;
  std::vector<double> sd_null_variance;
  std::vector<double> population_m;  ///< population_scan of the (mixture-averaged) means
  std::size_t replications = 0;
  std::size_t rejections = 0;  ///< homogeneity test rejections at `alpha`
};

[[nodiscard]] ScanMoments run_scan_moments(const SimulationScenario& scenario,
                                           std::size_t replications, VarianceMode mode,
                                           double alpha, std::uint64_t base_seed,
                                           std::size_t workers);

struct PowerBoundCheck {
  double bound = 0.0;
  double empirical_power = 0.0;
  double mc_stderr = 0.0;
  std::size_t replications = 0;
};

/// Plugs Monte-Carlo estimates of M_t, sigma_nt (alternative) and sigma_nt,0
/// (same scenario with delta = 0) into power_lower_bound and compares with the
/// empirical power of the max test.
[[nodiscard]] PowerBoundCheck check_power_bound(const SimulationScenario& scenario,
                                                std::size_t replications, double alpha,
                                                std::uint64_t base_seed, std::size_t workers);

/// Writes size_power.csv, manifest.json and power_vs_n.svg into out_dir.
void emit_report(const SizePowerTable& table, const ExperimentGrid& grid,
                 const std::filesystem::path& out_dir);
/// Writes identification.csv, manifest.json and fp_fn_vs_n.svg into out_dir.
void emit_report(const IdentificationCurves& curves, const ExperimentGrid& grid,
                 const std::filesystem::path& out_dir);

[[nodiscard]] std::string size_power_csv(const SizePowerTable& table);
[[nodiscard]] std::string identification_csv(const IdentificationCurves& curves);
[[nodiscard]] std::string manifest_json(const ExperimentGrid& grid, const std::string& kind,
                                        VarianceMode mode);

}  // namespace hdlp
