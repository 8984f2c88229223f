#include "hdlp/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hdlp/errors.hpp"
#include "hdlp/parallel.hpp"

namespace hdlp {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags for the scenario-level draws.
constexpr std::uint64_t kMeansStream = 1;
constexpr std::uint64_t kLabelsStream = 2;
constexpr std::uint64_t kInnovationStream = 3;

std::size_t support_size(std::size_t p, double exponent) {
  const auto s = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(p), exponent) + 1e-12));
  if (s < 1) throw DomainError("degenerate support size: floor(p^support_exponent) < 1");
  return std::min(s, p);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix(base);
  for (auto k : keys) h = splitmix(h ^ splitmix(k + 0x632be59bd9b4e019ULL));
  return h;
}

std::string_view to_string(Innovation innovation) {
  return innovation == Innovation::gaussian ? "gaussian" : "centered_gamma";
}

Innovation parse_innovation(std::string_view text) {
  if (text == "gaussian") return Innovation::gaussian;
  if (text == "centered_gamma" || text == "gamma") return Innovation::centered_gamma;
  throw DomainError("innovation must be 'gaussian' or 'centered_gamma', got '" +
                    std::string(text) + "'");
}

std::string_view to_string(MixtureMiddle middle) {
  return middle == MixtureMiddle::independent ? "independent" : "shared";
}

MixtureMiddle parse_mixture_middle(std::string_view text) {
  if (text == "independent") return MixtureMiddle::independent;
  if (text == "shared") return MixtureMiddle::shared;
  throw DomainError("expected 'independent' or 'shared', got '" + std::string(text) + "'");
}

std::vector<std::size_t> SimulationScenario::change_locations() const {
  std::vector<std::size_t> out;
  for (double f : change_fracs) {
    out.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(T) + 1e-9)));
  }
  return out;
}

void SimulationScenario::validate() const {
  if (n < 2) throw DomainError("scenario: n must be at least 2");
  if (p < 1) throw DomainError("scenario: p must be at least 1");
  if (T < 2) throw DomainError("scenario: T must be at least 2");
  for (double f : change_fracs) {
    if (!(f > 0.0 && f < 1.0)) throw DomainError("scenario: change_fracs must lie in (0, 1)");
  }
  if (!std::is_sorted(change_fracs.begin(), change_fracs.end()) ||
      std::adjacent_find(change_fracs.begin(), change_fracs.end()) != change_fracs.end()) {
    throw DomainError("scenario: change_fracs must be strictly increasing");
  }
  const auto locs = change_locations();
  for (std::size_t k = 0; k < locs.size(); ++k) {
    if (locs[k] < 1 || locs[k] >= T || (k > 0 && locs[k] == locs[k - 1])) {
      throw DomainError("scenario: change locations must be distinct interior time points");
    }
  }
  for (double d : delta) {
    if (!std::isfinite(d) || d < 0.0) throw DomainError("scenario: delta must be finite and >= 0");
  }
  if (!(support_exponent > 0.0 && support_exponent <= 1.0)) {
    throw DomainError("scenario: support_exponent must lie in (0, 1]");
  }
  if (is_mixture()) {
    if (mixture_probs.size() != 3) throw DomainError("scenario: mixture_probs needs 3 weights");
    double total = 0.0;
    for (double w : mixture_probs) {
      if (!(w >= 0.0)) throw DomainError("scenario: mixture_probs must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("scenario: mixture_probs must sum to 1");
    if (delta.size() != 3) throw DomainError("scenario: mixture needs delta = d1/d2/d3");
    if (change_fracs.size() != 2) throw DomainError("scenario: mixture needs two change_fracs");
  } else if (delta.size() != 1) {
    throw DomainError("scenario: delta must be a single value without mixture_probs");
  }
}

SimulationScenario scenario_from_config(const KeyValueConfig& cfg, SimulationScenario s) {
  if (auto v = cfg.integer("n")) s.n = *v;
  if (auto v = cfg.integer("p")) s.p = *v;
  if (auto v = cfg.integer("T")) s.T = *v;
  if (auto v = cfg.integer("J")) s.J = *v;
  if (auto v = cfg.tuples("delta")) {
    if (v->size() != 1) throw ConfigError("'delta' takes one value (use grid.delta for lists)");
    s.delta = v->front();
  }
  if (auto v = cfg.reals("change_fracs")) s.change_fracs = *v;
  if (auto v = cfg.real("support_exponent")) s.support_exponent = *v;
  if (auto v = cfg.string("innovation")) {
    try {
      s.innovation = parse_innovation(*v);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("innovation: ") + e.what());
    }
  }
  if (auto v = cfg.reals("mixture_probs")) s.mixture_probs = *v;
  if (auto v = cfg.string("mixture_middle")) {
    try {
      s.mixture_middle = parse_mixture_middle(*v);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("mixture_middle: ") + e.what());
    }
  }
  if (auto v = cfg.integer("seed")) s.seed = *v;
  return s;
}

// ---------------------------------------------------------------------------

BandedCoefficients::BandedCoefficients(std::size_t p, std::size_t J) : p_(p), j_(J) {
  if (p < 1) throw DomainError("ma_coefficients: p must be positive");
}

double BandedCoefficients::entry(std::size_t l, std::size_t i, std::size_t j) const {
  if (l > j_) throw DomainError("ma_coefficients: lag exceeds order");
  const std::size_t gap = i > j ? i - j : j - i;
  if (2 * gap >= p_) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(gap)) * lag_scale(l);
}

void BandedCoefficients::apply(std::size_t l, std::span<const double> in,
                               std::span<double> out) const {
  const std::size_t k_max = max_offset();
  const double scale = lag_scale(l);
  for (std::size_t i = 0; i < p_; ++i) {
    const std::size_t lo = i >= k_max ? i - k_max : 0;
    const std::size_t hi = std::min(p_ - 1, i + k_max);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      acc += std::ldexp(1.0, -static_cast<int>(i > j ? i - j : j - i)) * in[j];
    }
    out[i] = scale * acc;
  }
}

void BandedCoefficients::apply_band(std::span<const double> in, std::span<double> out) const {
  // forward f_i = in_i + f_{i-1}/2 covers offsets 0..i below; truncating at
  // the band edge subtracts 2^{-(K+1)} f_{i-K-1}. Same for the backward pass.
  const std::size_t k = max_offset();
  const double cut = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(k + 1, 1100)));
  std::vector<double> fwd(p_), bwd(p_);
  for (std::size_t i = 0; i < p_; ++i) fwd[i] = in[i] + (i > 0 ? 0.5 * fwd[i - 1] : 0.0);
  for (std::size_t i = p_; i-- > 0;) bwd[i] = in[i] + (i + 1 < p_ ? 0.5 * bwd[i + 1] : 0.0);
  for (std::size_t i = 0; i < p_; ++i) {
    double lower = fwd[i];
    if (i >= k + 1) lower -= cut * fwd[i - k - 1];
    double upper = bwd[i];
    if (i + k + 1 < p_) upper -= cut * bwd[i + k + 1];
    out[i] = lower + upper - in[i];
  }
}

BandedCoefficients ma_coefficients(std::size_t p, std::size_t J) { return {p, J}; }

// ---------------------------------------------------------------------------

std::vector<double> sample_sparse_mean(std::size_t p, double delta, double support_exponent,
                                       Rng& rng) {
  const std::size_t s = support_size(p, support_exponent);
  std::vector<std::size_t> coords(p);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  std::vector<std::size_t> support;
  support.reserve(s);
  std::sample(coords.begin(), coords.end(), std::back_inserter(support), s, rng);
  std::sort(support.begin(), support.end());
  std::bernoulli_distribution coin(0.5);
  std::vector<double> mu(p, 0.0);
  for (auto k : support) mu[k] = coin(rng) ? delta : -delta;
  return mu;
}

MeanProfile sample_mean_profile(std::size_t p, std::size_t T, double delta,
                                double support_exponent, std::span<const double> change_fracs,
                                Rng& rng) {
  // Draw first so a degenerate support is reported even when delta = 0.
  const auto mu = sample_sparse_mean(p, delta, support_exponent, rng);
  if (delta == 0.0) return MeanProfile(T, p);
  std::vector<double> values(T * p, 0.0);
  std::size_t t = 1;
  bool active = false;
  std::vector<std::size_t> ends;
  for (double f : change_fracs) {
    ends.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(T) + 1e-9)));
  }
  ends.push_back(T);
  for (auto end : ends) {
    for (; t <= end; ++t) {
      if (active) std::copy(mu.begin(), mu.end(), values.begin() + static_cast<std::ptrdiff_t>((t - 1) * p));
    }
    active = !active;
  }
  return MeanProfile(T, p, std::move(values));
}

std::vector<MeanProfile> sample_mixture_profiles(const SimulationScenario& s, Rng& rng) {
  const auto locs = s.change_locations();
  const std::size_t tau1 = locs.at(0), tau2 = locs.at(1);
  const auto mu1 = sample_sparse_mean(s.p, s.delta.at(0), s.support_exponent, rng);
  const auto mu2 = sample_sparse_mean(s.p, s.delta.at(1), s.support_exponent, rng);
  const auto fresh = sample_sparse_mean(s.p, s.delta.at(1), s.support_exponent, rng);
  const auto& nu = s.mixture_middle == MixtureMiddle::shared ? mu2 : fresh;
  const auto mu3 = sample_sparse_mean(s.p, s.delta.at(2), s.support_exponent, rng);

  auto build = [&](auto&& mean_at) {
    std::vector<double> v(s.T * s.p, 0.0);
    for (std::size_t t = 1; t <= s.T; ++t) {
      const std::vector<double>* m = mean_at(t);
      if (m) std::copy(m->begin(), m->end(), v.begin() + static_cast<std::ptrdiff_t>((t - 1) * s.p));
    }
    return MeanProfile(s.T, s.p, std::move(v));
  };
  std::vector<MeanProfile> groups;
  groups.push_back(build([&](std::size_t t) { return t > tau1 ? &mu1 : nullptr; }));
  groups.push_back(build([&](std::size_t t) { return t > tau2 ? &mu2 : nullptr; }));
  groups.push_back(build([&](std::size_t t) -> const std::vector<double>* {
    if (t <= tau1) return nullptr;
    return t <= tau2 ? &nu : &mu3;
  }));
  return groups;
}

MeanProfile mixture_mean(std::span<const MeanProfile> groups, std::span<const double> probs) {
  if (groups.empty() || groups.size() != probs.size()) {
    throw DomainError("mixture_mean: one probability per group required");
  }
  const std::size_t T = groups.front().n_times(), p = groups.front().n_coords();
  std::vector<double> v(T * p, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t k = 0; k < p; ++k) {
      double acc = 0.0;
      for (std::size_t g = 0; g < groups.size(); ++g) acc += probs[g] * groups[g].at(t)[k];
      v[(t - 1) * p + k] = acc;
    }
  }
  return MeanProfile(T, p, std::move(v));
}

Simulation simulate_panel(const SimulationScenario& s, std::size_t workers) {
  s.validate();
  Rng mean_rng = keyed_rng(s.seed, {kMeansStream});
  std::vector<MeanProfile> groups;
  if (s.is_mixture()) {
    groups = sample_mixture_profiles(s, mean_rng);
  } else {
    groups.push_back(sample_mean_profile(s.p, s.T, s.delta.front(), s.support_exponent,
                                         s.change_fracs, mean_rng));
  }

  std::optional<std::vector<std::uint32_t>> labels;
  if (s.is_mixture()) {
    Rng label_rng = keyed_rng(s.seed, {kLabelsStream});
    std::discrete_distribution<std::uint32_t> pick(s.mixture_probs.begin(), s.mixture_probs.end());
    labels.emplace(s.n);
    for (auto& g : *labels) g = pick(label_rng) + 1;
  }

  const auto coef = ma_coefficients(s.p, s.J);
  const std::size_t steps = s.T + s.J;  // innovation times 1-J..T
  PanelTensor panel(s.n, s.T, s.p);
  parallel_for(s.n, workers, [&](std::size_t i) {
    std::vector<double> eps(steps * s.p);
    for (std::size_t tt = 0; tt < steps; ++tt) {
      Rng rng = keyed_rng(s.seed, {kInnovationStream, i, tt});
      auto* row = eps.data() + tt * s.p;
      if (s.innovation == Innovation::gaussian) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < s.p; ++k) row[k] = normal(rng);
      } else {
        std::gamma_distribution<double> gamma(4.0, 0.5);
        for (std::size_t k = 0; k < s.p; ++k) row[k] = gamma(rng) - 2.0;
      }
    }
    const MeanProfile& mean = groups[labels ? (*labels)[i] - 1 : 0];
    std::vector<double> mixed(s.p), shaped(s.p);
    for (std::size_t t = 1; t <= s.T; ++t) {
      // Every Q_l is lag_scale(l) times the same band matrix, so combine the
      // lagged innovations first and apply the band once.
      std::fill(mixed.begin(), mixed.end(), 0.0);
      for (std::size_t l = 0; l <= s.J; ++l) {
        const double* e = eps.data() + (t + s.J - 1 - l) * s.p;
        const double c = coef.lag_scale(l);
        for (std::size_t k = 0; k < s.p; ++k) mixed[k] += c * e[k];
      }
      coef.apply_band(mixed, shaped);
      auto x = panel.at(i, t);
      const auto mu = mean.at(t);
      for (std::size_t k = 0; k < s.p; ++k) x[k] = mu[k] + shaped[k];
    }
  });
  panel.set_group_labels(std::move(labels));
  return {std::move(panel), std::move(groups)};
}

}  // namespace hdlp
