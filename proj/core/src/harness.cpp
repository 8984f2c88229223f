#include "hdlp/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hdlp/errors.hpp"
#include "hdlp/numeric.hpp"
#include "hdlp/parallel.hpp"
#include "hdlp/svg.hpp"

namespace hdlp {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw DataError("I/O failure writing '" + path.string() + "'");
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  if (xs.empty()) return r;
  r.mean = compensated_total(xs) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss.value() / static_cast<double>(xs.size() - 1));
  }
  return r;
}

/// Series keyed by everything except n, for plots against n.
LinePlot plot_against_n(const std::string& title, const std::string& y_label,
                        const std::vector<std::pair<CellKey, double>>& points) {
  std::map<std::string, PlotSeries> by_series;
  for (const auto& [key, y] : points) {
    const std::string name = "d=" + key.delta_label() + " p=" + std::to_string(key.p) +
                             " T=" + std::to_string(key.T);
    auto& s = by_series[name];
    s.name = name;
    s.x.push_back(static_cast<double>(key.n));
    s.y.push_back(y);
  }
  LinePlot plot{title, "n (subjects)", y_label, {}};
  for (auto& [name, s] : by_series) plot.series.push_back(std::move(s));
  return plot;
}

nlohmann::json grid_json(const ExperimentGrid& g) {
  return {
      {"delta", g.delta},
      {"n", g.n},
      {"p", g.p},
      {"T", g.T},
      {"replications", g.replications},
      {"alpha", g.alpha},
      {"workers", g.workers},
      {"base_seed", g.base_seed},
      {"min_len", g.min_len},
      {"scenario",
       {{"J", g.base.J},
        {"change_fracs", g.base.change_fracs},
        {"support_exponent", g.base.support_exponent},
        {"innovation", std::string(to_string(g.base.innovation))},
        {"mixture_middle", std::string(to_string(g.base.mixture_middle))},
        {"mixture_probs", g.base.mixture_probs}}},
  };
}

}  // namespace

std::string CellKey::delta_label() const {
  std::string s;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    if (k) s += '/';
    s += fmt(delta[k]);
  }
  return s;
}

std::uint64_t CellKey::hash() const {
  std::uint64_t h = derive_seed(n, {p, T, delta.size()});
  for (double d : delta) h = derive_seed(h, {std::bit_cast<std::uint64_t>(d)});
  return h;
}

void ExperimentGrid::validate() const {
  if (replications < 1) throw DomainError("grid: replications must be at least 1");
  if (delta.empty() || n.empty() || p.empty() || T.empty()) {
    throw DomainError("grid: every axis needs at least one value");
  }
  check_alpha(alpha);
  for (const auto& cell : cells()) scenario(cell, 0).validate();
}

std::vector<CellKey> ExperimentGrid::cells() const {
  std::vector<CellKey> out;
  for (const auto& d : delta) {
    for (auto nn : n) {
      for (auto pp : p) {
        for (auto tt : T) out.push_back({d, nn, pp, tt});
      }
    }
  }
  return out;
}

SimulationScenario ExperimentGrid::scenario(const CellKey& cell, std::size_t rep) const {
  SimulationScenario s = base;
  s.n = cell.n;
  s.p = cell.p;
  s.T = cell.T;
  s.delta = cell.delta;
  s.seed = derive_seed(base_seed, {cell.hash(), rep});
  return s;
}

ExperimentGrid grid_from_config(const KeyValueConfig& cfg) {
  ExperimentGrid g;
  g.base = scenario_from_config(cfg);
  g.delta = cfg.tuples("grid.delta").value_or(std::vector<std::vector<double>>{g.base.delta});
  auto axis = [&](const char* key, std::size_t fallback) {
    std::vector<std::size_t> out;
    if (auto v = cfg.integers(key)) {
      for (auto x : *v) out.push_back(static_cast<std::size_t>(x));
    } else {
      out.push_back(fallback);
    }
    return out;
  };
  g.n = axis("grid.n", g.base.n);
  g.p = axis("grid.p", g.base.p);
  g.T = axis("grid.T", g.base.T);
  if (auto v = cfg.integer("replications")) g.replications = *v;
  if (auto v = cfg.real("alpha")) g.alpha = *v;
  if (auto v = cfg.integer("workers")) g.workers = *v;
  if (auto v = cfg.integer("base_seed")) g.base_seed = *v;
  if (auto v = cfg.integer("min_len")) g.min_len = *v;
  return g;
}

double bernoulli_stderr(double rate, std::size_t reps) {
  if (reps == 0) return 0.0;
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(reps));
}

SizePowerTable run_size_power(const ExperimentGrid& grid, VarianceMode mode) {
  grid.validate();
  SizePowerTable table;
  table.variance_mode = mode;
  for (const auto& cell : grid.cells()) {
    // 1 = reject, 0 = accept, -1 = failure
    std::vector<int> outcome(grid.replications, -1);
    parallel_for(grid.replications, grid.workers, [&](std::size_t rep) {
      try {
        const auto sim = simulate_panel(grid.scenario(cell, rep));
        const auto report = homogeneity_test(sim.panel, sim.panel.full_interval(), mode,
                                             grid.alpha, TestOptions{grid.min_len, 1});
        outcome[rep] = report.reject ? 1 : 0;
      } catch (const std::exception&) {
        outcome[rep] = -1;
      }
    });
    SizePowerRow row;
    row.key = cell;
    for (int o : outcome) {
      if (o < 0) {
        ++row.failures;
      } else {
        ++row.replications;
        row.rejections += static_cast<std::size_t>(o);
      }
    }
    row.reject_rate = row.replications
                          ? static_cast<double>(row.rejections) / static_cast<double>(row.replications)
                          : 0.0;
    row.mc_stderr = bernoulli_stderr(row.reject_rate, row.replications);
    table.rows.push_back(row);
  }
  return table;
}

SizePowerTable run_mixture_power(const ExperimentGrid& grid) {
  if (!grid.base.is_mixture()) throw DomainError("run_mixture_power: mixture_probs required");
  return run_size_power(grid, VarianceMode::pairwise);
}

IdentificationCurves run_identification(const ExperimentGrid& grid, VarianceMode mode,
                                        std::size_t tolerance) {
  grid.validate();
  if (grid.base.change_fracs.empty()) {
    throw DomainError("run_identification: scenarios need at least one change-point");
  }
  IdentificationCurves curves;
  curves.variance_mode = mode;
  for (const auto& cell : grid.cells()) {
    struct Outcome {
      bool ok = false;
      EvalMetrics metrics;
      std::size_t truth = 0;
    };
    std::vector<Outcome> outcome(grid.replications);
    parallel_for(grid.replications, grid.workers, [&](std::size_t rep) {
      try {
        const auto scen = grid.scenario(cell, rep);
        const auto sim = simulate_panel(scen);
        // Truth: union of the groups' change-points.
        std::vector<std::size_t> truth;
        for (const auto& g : sim.group_means) {
          truth.insert(truth.end(), g.change_points().begin(), g.change_points().end());
        }
        std::sort(truth.begin(), truth.end());
        truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
        SegmentationOptions opt;
        opt.alpha = grid.alpha;
        opt.variance_mode = mode;
        opt.min_len = grid.min_len;
        const auto seg = binary_segmentation(sim.panel, opt);
        outcome[rep] = {true, score_identification(seg.change_points, truth, tolerance),
                        truth.size()};
      } catch (const std::exception&) {
        outcome[rep].ok = false;
      }
    });
    IdentificationRow row;
    row.key = cell;
    CompensatedSum fp, fn, tp;
    for (const auto& o : outcome) {
      if (!o.ok) {
        ++row.failures;
        continue;
      }
      ++row.replications;
      fp += static_cast<double>(o.metrics.fp);
      fn += static_cast<double>(o.metrics.fn);
      tp += static_cast<double>(o.metrics.tp);
      row.true_change_points = std::max(row.true_change_points, o.truth);
    }
    if (row.replications) {
      const double r = static_cast<double>(row.replications);
      row.mean_fp = fp.value() / r;
      row.mean_fn = fn.value() / r;
      row.mean_tp = tp.value() / r;
      row.mean_fp_plus_fn = row.mean_fp + row.mean_fn;
    }
    curves.rows.push_back(row);
  }
  return curves;
}

std::vector<EstimationErrorRow> run_estimation_error(const ExperimentGrid& grid) {
  grid.validate();
  if (grid.base.change_fracs.size() != 1 || grid.base.is_mixture()) {
    throw DomainError("run_estimation_error: needs a single-population, single-change scenario");
  }
  std::vector<EstimationErrorRow> rows;
  for (const auto& cell : grid.cells()) {
    std::vector<double> err(grid.replications, 0.0);
    parallel_for(grid.replications, grid.workers, [&](std::size_t rep) {
      const auto scen = grid.scenario(cell, rep);
      const auto sim = simulate_panel(scen);
      const std::size_t tau = scen.change_locations().front();
      const auto prof = mean_scan(sim.panel, sim.panel.full_interval(), VarianceMode::pairwise);
      const std::size_t est = argmax_split(prof);
      err[rep] = static_cast<double>(est > tau ? est - tau : tau - est);
    });
    const auto ms = mean_sd(err);
    rows.push_back({cell, grid.replications, ms.mean,
                    ms.sd / std::sqrt(static_cast<double>(grid.replications))});
  }
  return rows;
}

ScanMoments run_scan_moments(const SimulationScenario& scenario, std::size_t replications,
                             VarianceMode mode, double alpha, std::uint64_t base_seed,
                             std::size_t workers) {
  scenario.validate();
  if (replications < 2) throw DomainError("run_scan_moments: need at least 2 replications");
  const std::size_t splits = scenario.T - 1;
  std::vector<std::vector<double>> m(replications), v(replications), pop(replications);
  std::vector<int> reject(replications, 0);
  parallel_for(replications, workers, [&](std::size_t rep) {
    SimulationScenario s = scenario;
    s.seed = derive_seed(base_seed, {rep});
    const auto sim = simulate_panel(s);
    const auto prof = mean_scan(sim.panel, sim.panel.full_interval(), mode);
    m[rep] = prof.m_hat;
    v[rep] = prof.null_variance;
    const MeanProfile truth = s.is_mixture() ? mixture_mean(sim.group_means, s.mixture_probs)
                                             : sim.group_means.front();
    pop[rep] = population_scan(truth, sim.panel.full_interval());
    try {
      reject[rep] = test_from_profile(prof, alpha).reject ? 1 : 0;
    } catch (const StatisticUndefined&) {
      reject[rep] = 0;
    }
  });
  ScanMoments out;
  out.replications = replications;
  for (int r : reject) out.rejections += static_cast<std::size_t>(r);
  std::vector<double> col(replications);
  auto column = [&](const std::vector<std::vector<double>>& src, std::size_t k) {
    for (std::size_t r = 0; r < replications; ++r) col[r] = src[r][k];
    return mean_sd(col);
  };
  for (std::size_t k = 0; k < splits; ++k) {
    const auto ms = column(m, k);
    out.mean_m_hat.push_back(ms.mean);
    out.sd_m_hat.push_back(ms.sd);
    const auto vs = column(v, k);
    out.mean_null_variance.push_back(vs.mean);
    out.sd_null_variance.push_back(vs.sd);
    out.population_m.push_back(column(pop, k).mean);
  }
  return out;
}

PowerBoundCheck check_power_bound(const SimulationScenario& scenario, std::size_t replications,
                                  double alpha, std::uint64_t base_seed, std::size_t workers) {
  const auto alt = run_scan_moments(scenario, replications, VarianceMode::ustat, alpha,
                                    derive_seed(base_seed, {1}), workers);
  SimulationScenario null_scenario = scenario;
  std::fill(null_scenario.delta.begin(), null_scenario.delta.end(), 0.0);
  const auto null = run_scan_moments(null_scenario, replications, VarianceMode::ustat, alpha,
                                     derive_seed(base_seed, {2}), workers);
  PowerBoundCheck out;
  out.replications = replications;
  out.bound = power_lower_bound(alt.population_m, alt.sd_m_hat, null.sd_m_hat,
                                max_threshold(scenario.T, alpha));
  out.empirical_power = static_cast<double>(alt.rejections) / static_cast<double>(replications);
  out.mc_stderr = bernoulli_stderr(out.empirical_power, replications);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string size_power_csv(const SizePowerTable& table) {
  std::ostringstream o;
  o << "delta,n,p,T,reps,reject_rate,mc_stderr\n";
  for (const auto& r : table.rows) {
    o << r.key.delta_label() << ',' << r.key.n << ',' << r.key.p << ',' << r.key.T << ','
      << r.replications << ',' << fmt(r.reject_rate) << ',' << fmt(r.mc_stderr) << '\n';
  }
  return o.str();
}

std::string identification_csv(const IdentificationCurves& curves) {
  std::ostringstream o;
  o << "delta,n,p,T,reps,mean_fp_plus_fn,mean_tp\n";
  for (const auto& r : curves.rows) {
    o << r.key.delta_label() << ',' << r.key.n << ',' << r.key.p << ',' << r.key.T << ','
      << r.replications << ',' << fmt(r.mean_fp_plus_fn) << ',' << fmt(r.mean_tp) << '\n';
  }
  return o.str();
}

std::string manifest_json(const ExperimentGrid& grid, const std::string& kind,
                          VarianceMode mode) {
  nlohmann::json j{
      {"kind", kind},
      {"version", kVersion},
      {"variance_mode", std::string(to_string(mode))},
      {"base_seed", grid.base_seed},
      {"seed_rule", "replication seed = derive_seed(base_seed, {cell_hash, replication})"},
      {"grid", grid_json(grid)},
  };
  return j.dump(2);
}

void emit_report(const SizePowerTable& table, const ExperimentGrid& grid,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "size_power.csv", size_power_csv(table));
  write_file(out_dir / "manifest.json", manifest_json(grid, "size_power", table.variance_mode));
  std::vector<std::pair<CellKey, double>> pts;
  for (const auto& r : table.rows) pts.emplace_back(r.key, r.reject_rate);
  write_file(out_dir / "power_vs_n.svg",
             render_svg(plot_against_n("Rejection rate", "reject rate", pts)));
}

void emit_report(const IdentificationCurves& curves, const ExperimentGrid& grid,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "identification.csv", identification_csv(curves));
  write_file(out_dir / "manifest.json",
             manifest_json(grid, "identification", curves.variance_mode));
  std::vector<std::pair<CellKey, double>> pts;
  for (const auto& r : curves.rows) pts.emplace_back(r.key, r.mean_fp_plus_fn);
  write_file(out_dir / "fp_fn_vs_n.svg",
             render_svg(plot_against_n("Average FP+FN", "mean FP+FN", pts)));
}

}  // namespace hdlp
