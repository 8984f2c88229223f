#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "hdlp/config.hpp"
#include "hdlp/errors.hpp"
#include "hdlp/simgen.hpp"

using namespace hdlp;

namespace {

/// Sample covariance of columns a and b plus its Monte-Carlo standard error.
struct CovEstimate {
  double cov;
  double se;
};

CovEstimate sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double c = 0, c2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = (a[i] - ma) * (b[i] - mb);
    c += v;
    c2 += v * v;
  }
  const double mean = c / n;
  return {c / (n - 1), std::sqrt((c2 / n - mean * mean) / n)};
}

std::vector<double> column(const PanelTensor& x, std::size_t t, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < x.n_subjects(); ++i) out.push_back(x.at(i, t)[k]);
  return out;
}

}  // namespace

TEST(DeriveSeed, DeterministicAndKeySensitive) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}

TEST(BandedCoefficients, Entries) {
  const auto q = ma_coefficients(10, 2);
  EXPECT_DOUBLE_EQ(q.entry(0, 0, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(q.entry(2, 0, 1), 0.5);
  EXPECT_EQ(q.entry(0, 0, 5), 0.0);  // |i - j| = p / 2
  EXPECT_DOUBLE_EQ(q.entry(1, 2, 6), std::pow(0.5, 4) / 2.0);
  EXPECT_THROW((void)q.entry(3, 0, 0), DomainError);
}

TEST(BandedCoefficients, RecursionMatchesDirectBand) {
  for (std::size_t p : {1, 2, 3, 4, 10, 11, 64, 101}) {
    const auto q = ma_coefficients(p, 2);
    const auto x = hdlp::testing::random_panel(1, 1, p, p);
    const auto in = x.at(0, 1);
    std::vector<double> direct(p), fast(p), dense(p, 0.0);
    q.apply(0, in, direct);
    q.apply_band(in, fast);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) dense[i] += q.entry(0, i, j) * in[j];
    }
    for (std::size_t i = 0; i < p; ++i) {
      EXPECT_NEAR(direct[i], dense[i], 1e-12);
      EXPECT_NEAR(fast[i] * q.lag_scale(0), dense[i], 1e-12) << "p=" << p << " i=" << i;
    }
  }
}

TEST(SparseMean, SupportSizeAndMagnitude) {
  Rng rng(4);
  const auto mu = sample_sparse_mean(100, 0.3, 0.7, rng);
  std::size_t nonzero = 0;
  for (double v : mu) {
    if (v != 0.0) {
      ++nonzero;
      EXPECT_EQ(std::abs(v), 0.3);
    }
  }
  EXPECT_EQ(nonzero, 25u);
}

TEST(MeanProfileSampling, ZeroDeltaHasNoChange) {
  Rng rng(5);
  const std::vector<double> fracs{0.4};
  const auto m = sample_mean_profile(50, 20, 0.0, 0.7, fracs, rng);
  EXPECT_TRUE(m.change_points().empty());
  for (std::size_t t = 1; t <= 20; ++t) {
    for (double v : m.at(t)) EXPECT_EQ(v, 0.0);
  }
}

TEST(MeanProfileSampling, AlternatingSegments) {
  Rng rng(6);
  const std::vector<double> fracs{0.4, 0.7};
  const auto m = sample_mean_profile(50, 100, 0.5, 0.7, fracs, rng);
  EXPECT_EQ(m.change_points(), (std::vector<std::size_t>{40, 70}));
  for (double v : m.at(1)) EXPECT_EQ(v, 0.0);
  for (double v : m.at(100)) EXPECT_EQ(v, 0.0);
}

TEST(Scenario, ChangeLocationsAndValidation) {
  SimulationScenario s;
  s.change_fracs = {0.4, 0.7};
  EXPECT_EQ(s.change_locations(), (std::vector<std::size_t>{40, 70}));
  s.change_fracs = {0.7, 0.4};
  EXPECT_THROW(s.validate(), DomainError);
  s.change_fracs = {0.4};
  s.mixture_probs = {0.5, 0.5};
  EXPECT_THROW(s.validate(), DomainError);
  s.mixture_probs = {0.3, 0.3, 0.4};
  EXPECT_THROW(s.validate(), DomainError);  // needs three deltas and two fracs
  s.delta = {0.1, 0.2, 0.3};
  s.change_fracs = {0.4, 0.7};
  EXPECT_NO_THROW(s.validate());
}

TEST(Scenario, FromConfig) {
  std::istringstream in("n = 12\np = 7\nT = 30\ndelta = 0.25/0.35/0.4\nchange_fracs = 0.4, 0.7\n"
                        "mixture_probs = 0.3, 0.3, 0.4\ninnovation = gamma\nseed = 77\n");
  const auto cfg = KeyValueConfig::parse(in);
  const auto s = scenario_from_config(cfg);
  cfg.require_all_used();
  EXPECT_EQ(s.n, 12u);
  EXPECT_EQ(s.p, 7u);
  EXPECT_EQ(s.T, 30u);
  EXPECT_EQ(s.delta, (std::vector<double>{0.25, 0.35, 0.4}));
  EXPECT_EQ(s.innovation, Innovation::centered_gamma);
  EXPECT_EQ(s.seed, 77u);
  EXPECT_NO_THROW(s.validate());
}

TEST(Simulation, IndependentOfWorkerCount) {
  SimulationScenario s;
  s.n = 13;
  s.p = 17;
  s.T = 9;
  s.delta = {0.4};
  s.seed = 12;
  EXPECT_EQ(simulate_panel(s, 1).panel, simulate_panel(s, 4).panel);
  auto t = s;
  t.seed = 13;
  EXPECT_FALSE(simulate_panel(s).panel == simulate_panel(t).panel);
}

TEST(Simulation, NoSerialCorrelationWithoutMovingAverage) {
  SimulationScenario s;
  s.n = 2000;
  s.p = 4;
  s.T = 3;
  s.J = 0;
  s.seed = 21;
  const auto x = simulate_panel(s).panel;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const auto c = sample_cov(column(x, 1, a), column(x, 2, b));
      EXPECT_LE(std::abs(c.cov), 5 * c.se);
    }
  }
}

TEST(Simulation, CovarianceMatchesBandRule) {
  SimulationScenario s;
  s.n = 6000;
  s.p = 10;
  s.T = 4;
  s.J = 2;
  s.seed = 22;
  const auto x = simulate_panel(s).panel;
  const auto q = ma_coefficients(s.p, s.J);
  // Cov(X_t, X_{t-k}) = sum_{l=k}^J Q_l Q_{l-k}'.
  for (std::size_t k = 0; k <= 2; ++k) {
    for (std::size_t a = 0; a < s.p; ++a) {
      for (std::size_t b = 0; b < s.p; ++b) {
        double theory = 0.0;
        for (std::size_t l = k; l <= s.J; ++l) {
          for (std::size_t m = 0; m < s.p; ++m) theory += q.entry(l, a, m) * q.entry(l - k, b, m);
        }
        const auto c = sample_cov(column(x, 4, a), column(x, 4 - k, b));
        EXPECT_LE(std::abs(c.cov - theory), 5 * c.se) << "lag " << k << " (" << a << "," << b << ")";
      }
    }
  }
}

TEST(Simulation, CenteredGammaMoments) {
  SimulationScenario s;
  s.n = 2000;
  s.p = 1;
  s.T = 5;
  s.J = 0;
  s.innovation = Innovation::centered_gamma;
  s.seed = 23;
  const auto x = simulate_panel(s).panel;
  const auto v = x.values();
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double e : v) mean += e;
  mean /= n;
  double var = 0;
  for (double e : v) var += (e - mean) * (e - mean);
  var /= n - 1;
  EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(n));
  EXPECT_LE(std::abs(var - 1.0), 4.0 * std::sqrt(3.5 / n));  // fourth central moment 4.5
}

TEST(Simulation, MixtureLabelFrequencies) {
  SimulationScenario s;
  s.n = 10000;
  s.p = 2;
  s.T = 10;
  s.delta = {0.5, 0.7, 0.8};
  s.change_fracs = {0.4, 0.7};
  s.mixture_probs = {0.3, 0.3, 0.4};
  s.seed = 24;
  const auto sim = simulate_panel(s);
  ASSERT_TRUE(sim.panel.group_labels().has_value());
  std::vector<double> count(3, 0.0);
  for (auto g : *sim.panel.group_labels()) count.at(g - 1) += 1.0;
  for (std::size_t g = 0; g < 3; ++g) {
    const double pg = s.mixture_probs[g];
    EXPECT_LE(std::abs(count[g] / 1e4 - pg), 4 * std::sqrt(pg * (1 - pg) / 1e4));
  }
  ASSERT_EQ(sim.group_means.size(), 3u);
}

TEST(Simulation, MixtureProfiles) {
  SimulationScenario s;
  s.p = 100;
  s.T = 100;
  s.delta = {0.5, 0.7, 0.8};
  s.change_fracs = {0.4, 0.7};
  s.mixture_probs = {0.3, 0.3, 0.4};
  Rng rng(25);
  const auto g = sample_mixture_profiles(s, rng);
  EXPECT_EQ(g[0].change_points(), std::vector<std::size_t>{40});
  EXPECT_EQ(g[1].change_points(), std::vector<std::size_t>{70});
  EXPECT_EQ(g[2].change_points(), (std::vector<std::size_t>{40, 70}));
  for (double v : g[2].at(50)) EXPECT_TRUE(v == 0.0 || std::abs(v) == 0.7);
  for (double v : g[2].at(80)) EXPECT_TRUE(v == 0.0 || std::abs(v) == 0.8);
  const auto mix = mixture_mean(g, s.mixture_probs);
  EXPECT_EQ(mix.change_points(), (std::vector<std::size_t>{40, 70}));
}

TEST(Simulation, MixtureMiddleSegment) {
  SimulationScenario s;
  s.p = 100;
  s.T = 100;
  s.delta = {0.5, 0.7, 0.8};
  s.change_fracs = {0.4, 0.7};
  s.mixture_probs = {0.3, 0.3, 0.4};
  Rng a(26), b(26);
  const auto shared = sample_mixture_profiles(s, a);
  EXPECT_TRUE(std::ranges::equal(shared[2].at(50), shared[1].at(80)));
  s.mixture_middle = MixtureMiddle::independent;
  const auto fresh = sample_mixture_profiles(s, b);
  EXPECT_TRUE(std::ranges::equal(fresh[1].at(80), shared[1].at(80)));
  EXPECT_FALSE(std::ranges::equal(fresh[2].at(50), fresh[1].at(80)));
  EXPECT_EQ(parse_mixture_middle("independent"), MixtureMiddle::independent);
  EXPECT_THROW((void)parse_mixture_middle("copy"), DomainError);
}
