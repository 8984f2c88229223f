#include "hdlp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdlp/config.hpp"
#include "hdlp/errors.hpp"
#include "hdlp/harness.hpp"
#include "hdlp/homogeneity.hpp"
#include "hdlp/localize.hpp"
#include "hdlp/panel.hpp"
#include "hdlp/segmentation.hpp"
#include "hdlp/simgen.hpp"

namespace hdlp {

namespace {

namespace fs = std::filesystem;

/// Raw flag values keyed by config field name. Flags land in the config as
/// plain text, so they go through the same typed parsing and override
/// whatever the config file said.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help));
  }

  void apply(KeyValueConfig& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
  }
};

struct Context {
  KeyValueConfig cfg;
  std::ostream& out;
};

std::size_t positive(std::optional<std::uint64_t> v, std::size_t fallback, const char* field) {
  if (!v) return fallback;
  if (*v < 1) throw ConfigError(std::string(field) + " must be at least 1");
  return static_cast<std::size_t>(*v);
}

std::string required(const KeyValueConfig& cfg, const char* key) {
  auto v = cfg.string(key);
  if (!v || v->empty()) throw ConfigError(std::string("missing required field '") + key + "'");
  return *v;
}

PanelFormat panel_format(const KeyValueConfig& cfg, const fs::path& path) {
  auto v = cfg.string("format");
  if (!v) return format_from_path(path);
  if (*v == "csv") return PanelFormat::csv;
  if (*v == "binary") return PanelFormat::binary;
  throw ConfigError("format must be 'csv' or 'binary', got '" + *v + "'");
}

template <class Parse>
auto parsed(const KeyValueConfig& cfg, const char* key, Parse parse,
            decltype(parse(std::string_view{})) fallback) {
  auto v = cfg.string(key);
  if (!v) return fallback;
  try {
    return parse(*v);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

PanelTensor read_input(const KeyValueConfig& cfg) {
  const fs::path path = required(cfg, "input");
  const auto format = panel_format(cfg, path);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw DataError("input: cannot read '" + path.string() + "'");
  }
  return load_panel(path, format);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("out: cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f.flush()) throw DataError("out: I/O failure writing '" + path.string() + "'");
}

/// Prints to the output stream, or writes to `out` when one was given.
void emit(Context& ctx, const std::optional<std::string>& out_path, const std::string& text) {
  if (out_path) {
    write_text(*out_path, text + "\n");
  } else {
    ctx.out << text << '\n';
  }
}

/// Fields consumed later (after require_all_used) by read_input.
void mark_read(const KeyValueConfig& cfg, std::initializer_list<const char*> keys) {
  for (const char* k : keys) static_cast<void>(cfg.string(k));
}

std::size_t workers(const KeyValueConfig& cfg) {
  return positive(cfg.integer("workers"), 1, "workers");
}

void cmd_test(Context& ctx) {
  auto& cfg = ctx.cfg;
  const double alpha = cfg.real("alpha").value_or(0.05);
  const auto mode = parsed(cfg, "variance_mode", parse_variance_mode, VarianceMode::ustat);
  TestOptions opt;
  opt.min_len = positive(cfg.integer("min_len"), opt.min_len, "min_len");
  opt.workers = workers(cfg);
  const auto lo = cfg.integer("lo");
  const auto hi = cfg.integer("hi");
  const auto out_path = cfg.string("out");
  mark_read(cfg, {"input", "format"});
  cfg.require_all_used();
  check_alpha(alpha);

  const auto panel = read_input(cfg);
  TimeInterval interval = panel.full_interval();
  if (lo) interval.lo = *lo;
  if (hi) interval.hi = *hi;
  check_interval(panel, interval);
  const auto report = homogeneity_test(panel, interval, mode, alpha, opt);
  emit(ctx, out_path, to_json(report));
}

void cmd_segment(Context& ctx) {
  auto& cfg = ctx.cfg;
  SegmentationOptions opt;
  opt.alpha = cfg.real("alpha").value_or(opt.alpha);
  opt.variance_mode = parsed(cfg, "variance_mode", parse_variance_mode, opt.variance_mode);
  opt.min_len = positive(cfg.integer("min_len"), opt.min_len, "min_len");
  opt.alpha_policy = parsed(cfg, "alpha_policy", parse_alpha_policy, opt.alpha_policy);
  opt.workers = workers(cfg);
  const auto out_path = cfg.string("out");
  mark_read(cfg, {"input", "format"});
  cfg.require_all_used();
  check_alpha(opt.alpha);

  const auto panel = read_input(cfg);
  emit(ctx, out_path, to_json(binary_segmentation(panel, opt)));
}

void cmd_simulate(Context& ctx) {
  auto& cfg = ctx.cfg;
  const auto scenario = scenario_from_config(cfg);
  const std::size_t w = workers(cfg);
  const fs::path out_path = required(cfg, "out");
  const auto format = panel_format(cfg, out_path);
  cfg.require_all_used();
  try {
    scenario.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  const auto sim = simulate_panel(scenario, w);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_panel(sim.panel, out_path, format);
  nlohmann::json summary{
      {"out", out_path.string()},
      {"n", scenario.n},
      {"T", scenario.T},
      {"p", scenario.p},
      {"seed", scenario.seed},
      {"change_points", scenario.change_locations()},
  };
  ctx.out << summary.dump(2) << '\n';
}

ExperimentGrid read_grid(KeyValueConfig& cfg) {
  ExperimentGrid grid = grid_from_config(cfg);
  grid.replications = positive(cfg.integer("replications"), grid.replications, "replications");
  grid.workers = positive(cfg.integer("workers"), grid.workers, "workers");
  return grid;
}

void validate_grid(const ExperimentGrid& grid) {
  try {
    grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

void cmd_bench_power(Context& ctx) {
  auto& cfg = ctx.cfg;
  const auto grid = read_grid(cfg);
  auto mode = parsed(cfg, "variance_mode", parse_variance_mode, VarianceMode::ustat);
  const fs::path out_dir = required(cfg, "out");
  cfg.require_all_used();
  validate_grid(grid);

  SizePowerTable table;
  if (grid.base.is_mixture()) {
    if (cfg.has("variance_mode") && mode != VarianceMode::pairwise) {
      throw ConfigError("variance_mode must be 'pairwise' for a mixture scenario");
    }
    table = run_mixture_power(grid);
  } else {
    table = run_size_power(grid, mode);
  }
  emit_report(table, grid, out_dir);
  ctx.out << size_power_csv(table);
}

void cmd_bench_identify(Context& ctx) {
  auto& cfg = ctx.cfg;
  const auto grid = read_grid(cfg);
  const auto mode = parsed(cfg, "variance_mode", parse_variance_mode,
                           grid.base.is_mixture() ? VarianceMode::pairwise : VarianceMode::ustat);
  const auto tolerance = cfg.integer("tolerance").value_or(0);
  const fs::path out_dir = required(cfg, "out");
  cfg.require_all_used();
  validate_grid(grid);

  const auto curves = run_identification(grid, mode, static_cast<std::size_t>(tolerance));
  emit_report(curves, grid, out_dir);
  ctx.out << identification_csv(curves);
}

void cmd_localize(Context& ctx) {
  auto& cfg = ctx.cfg;
  const auto tau = cfg.integer("tau");
  const std::size_t window = positive(cfg.integer("window"), 1, "window");
  const double q = cfg.real("q").value_or(0.01);
  FdrOptions fdr;
  fdr.method = parsed(cfg, "method", parse_fdr_method, fdr.method);
  fdr.lambda = cfg.real("lambda").value_or(fdr.lambda);
  const std::size_t w = workers(cfg);
  const auto out_path = cfg.string("out");
  mark_read(cfg, {"input", "format"});
  cfg.require_all_used();
  if (!tau) throw ConfigError("missing required field 'tau'");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("q must lie in (0, 1)");
  if (!(fdr.lambda > 0.0 && fdr.lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");

  const auto panel = read_input(cfg);
  if (*tau < 1 || *tau >= panel.n_times()) throw ConfigError("tau must satisfy 1 <= tau < T");
  if (*tau < window || *tau + window > panel.n_times()) {
    throw ConfigError("window: pre/post windows around tau leave [1, T]");
  }
  const auto report = localize_change(panel, *tau, q, fdr, window, w);
  if (out_path && fs::path(*out_path).extension() != ".json") {
    write_text(*out_path, to_csv(report));
  } else {
    emit(ctx, out_path, to_json(report));
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-dimensional longitudinal mean homogeneity testing and segmentation", "hdlp"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    FlagSet flags;
    std::string config_path;
    CLI::Option* config_opt = nullptr;
    std::function<void(Context&)> run;
  };
  std::map<std::string, Command> commands;

  auto make = [&](const std::string& name, const std::string& help,
                  std::function<void(Context&)> run) -> Command& {
    auto& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.config_opt = c.app->add_option("--config", c.config_path, "key = value config file");
    c.run = std::move(run);
    return c;
  };

  {
    auto& c = make("test", "Max-type homogeneity test on one interval", cmd_test);
    c.flags.add(c.app, "--input", "input", "panel file (.csv or binary)");
    c.flags.add(c.app, "--format", "format", "csv | binary (default: by extension)");
    c.flags.add(c.app, "--alpha", "alpha", "significance level in (0, 1)");
    c.flags.add(c.app, "--variance-mode", "variance_mode", "ustat | pairwise");
    c.flags.add(c.app, "--min-len", "min_len", "shortest testable interval");
    c.flags.add(c.app, "--lo", "lo", "first time point of the interval");
    c.flags.add(c.app, "--hi", "hi", "last time point of the interval");
    c.flags.add(c.app, "--workers", "workers", "worker threads");
    c.flags.add(c.app, "--out", "out", "write the JSON report here");
  }
  {
    auto& c = make("segment", "Binary segmentation over [1, T]", cmd_segment);
    c.flags.add(c.app, "--input", "input", "panel file (.csv or binary)");
    c.flags.add(c.app, "--format", "format", "csv | binary (default: by extension)");
    c.flags.add(c.app, "--alpha", "alpha", "significance level in (0, 1)");
    c.flags.add(c.app, "--variance-mode", "variance_mode", "ustat | pairwise");
    c.flags.add(c.app, "--min-len", "min_len", "shortest testable interval");
    c.flags.add(c.app, "--alpha-policy", "alpha_policy", "fixed | per_level");
    c.flags.add(c.app, "--workers", "workers", "worker threads");
    c.flags.add(c.app, "--out", "out", "write the JSON result here");
  }
  {
    auto& c = make("simulate", "Generate a panel from a scenario", cmd_simulate);
    c.flags.add(c.app, "--out", "out", "panel file to write");
    c.flags.add(c.app, "--format", "format", "csv | binary (default: by extension)");
    c.flags.add(c.app, "--seed", "seed", "random seed");
    c.flags.add(c.app, "--workers", "workers", "worker threads");
  }
  for (const auto& [name, help] :
       {std::pair<std::string, std::string>{"bench-power", "Size/power over a scenario grid"},
        {"bench-identify", "Change-point identification over a scenario grid"}}) {
    auto& c = make(name, help, name == "bench-power" ? cmd_bench_power : cmd_bench_identify);
    c.flags.add(c.app, "--out", "out", "output directory");
    c.flags.add(c.app, "--seed", "base_seed", "base seed of the replication streams");
    c.flags.add(c.app, "--reps", "replications", "replications per cell");
    c.flags.add(c.app, "--alpha", "alpha", "significance level in (0, 1)");
    c.flags.add(c.app, "--variance-mode", "variance_mode", "ustat | pairwise");
    c.flags.add(c.app, "--min-len", "min_len", "shortest testable interval");
    c.flags.add(c.app, "--workers", "workers", "worker threads");
    if (name == "bench-identify") {
      c.flags.add(c.app, "--tolerance", "tolerance", "match tolerance in time points");
    }
  }
  {
    auto& c = make("localize", "Per-coordinate paired t-tests with FDR selection", cmd_localize);
    c.flags.add(c.app, "--input", "input", "panel file (.csv or binary)");
    c.flags.add(c.app, "--format", "format", "csv | binary (default: by extension)");
    c.flags.add(c.app, "--tau", "tau", "change-point (last time of the first segment)");
    c.flags.add(c.app, "--window", "window", "time points averaged on each side");
    c.flags.add(c.app, "--q", "q", "FDR level in (0, 1)");
    c.flags.add(c.app, "--method", "method", "storey | bh");
    c.flags.add(c.app, "--lambda", "lambda", "Storey tuning parameter");
    c.flags.add(c.app, "--workers", "workers", "worker threads");
    c.flags.add(c.app, "--out", "out", "report file (.json, otherwise CSV)");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (const auto& [name, c] : commands) {
      if (c.app->parsed()) {
        out << c.app->help();
        return kExitOk;
      }
    }
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (msg.empty()) msg = "invalid command line";
    err << "error: " << msg << '\n';
    return kExitUsage;
  }

  for (auto& [name, c] : commands) {
    if (!c.app->parsed()) continue;
    try {
      Context ctx{c.config_opt->count() ? KeyValueConfig::load(c.config_path) : KeyValueConfig{},
                  out};
      c.flags.apply(ctx.cfg);
      c.run(ctx);
      return kExitOk;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const DomainError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const DataError& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    }
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace hdlp
