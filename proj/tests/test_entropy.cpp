#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "soficlab/entropy.hpp"

namespace sl = soficlab;

namespace {

std::vector<double> brute_cell_masses(const sl::Measure& mu, const sl::Partition& p) {
  std::map<sl::CellSequence, double> cells;
  sl::for_each_configuration(mu.vertex_count(), mu.alphabet_size(), [&](const sl::Configuration& x) {
    const double m = sl::atom_mass(mu, x);
    if (m > 0.0) cells[p.cells_of(x)] += m;
  });
  std::vector<double> out;
  for (const auto& [c, m] : cells) out.push_back(m);
  return out;
}

double brute_entropy(const std::vector<double>& masses) {
  double h = 0.0;
  for (double m : masses) h -= m * std::log(m);
  return h;
}

// Smallest number of cells with mass > 1 - eps, by sorting every cell.
std::uint64_t brute_cover(std::vector<double> masses, double eps) {
  std::sort(masses.rbegin(), masses.rend());
  double cum = 0.0;
  std::uint64_t count = 0;
  for (double m : masses) {
    cum += m;
    ++count;
    if (cum > 1.0 - eps) break;
  }
  return count;
}

// Pascal-triangle binomial sum, independent of the log-domain path.
std::uint64_t pascal_ball(int n, int r, std::uint64_t cells) {
  std::vector<std::vector<std::uint64_t>> c(n + 1, std::vector<std::uint64_t>(n + 1, 0));
  for (int i = 0; i <= n; ++i) {
    c[i][0] = 1;
    for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
  }
  std::uint64_t total = 0;
  for (int j = 0; j <= r; ++j) {
    std::uint64_t t = c[n][j];
    for (int i = 0; i < j; ++i) t *= cells - 1;
    total += t;
  }
  return total;
}

std::vector<double> random_dist(sl::Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& x : p) s += (x = 0.02 + rng.uniform());
  for (auto& x : p) x /= s;
  return p;
}

sl::Measure random_measure(sl::Rng& rng, std::size_t k, std::size_t n) {
  switch (rng.below(4)) {
    case 0: return sl::iid_product(random_dist(rng, k), n);
    case 1: return sl::mixture({0.4, 0.6}, {sl::iid_product(random_dist(rng, k), n), sl::iid_product(random_dist(rng, k), n)});
    case 2: {
      std::vector<std::pair<sl::Configuration, double>> atoms;
      for (int i = 0; i < 6; ++i) {
        sl::Configuration x(n);
        for (auto& s : x) s = static_cast<sl::Symbol>(rng.below(k));
        atoms.emplace_back(x, 0.1 + rng.uniform());
      }
      double s = 0.0;
      for (auto& a : atoms) s += a.second;
      for (auto& a : atoms) a.second /= s;
      return sl::sparse_measure(k, n, atoms);
    }
    default: {
      const double h = std::log(static_cast<double>(k));
      sl::Event ev{sl::Partition::singletons(k), sl::CellBand{0.4 * h, 1.6 * h}, {}, {}};
      return sl::conditioned(sl::iid_product(random_dist(rng, k), n), ev);
    }
  }
}

}  // namespace

TEST(Entropy, FairCoinIsNLog2) {
  for (std::size_t n : {1, 7, 100, 1000}) {
    auto r = sl::shannon_entropy(sl::iid_product({0.5, 0.5}, n), sl::Partition::singletons(2));
    EXPECT_NEAR(r.h_nats, static_cast<double>(n) * std::log(2.0), 1e-9 * static_cast<double>(n));
    EXPECT_EQ(r.method, "type_class");
  }
}

TEST(Entropy, BiasedCoinClosedForm) {
  auto r = sl::shannon_entropy(sl::iid_product({0.9, 0.1}, 1), sl::Partition::singletons(2));
  EXPECT_NEAR(r.h_nats, -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-15);
  EXPECT_NEAR(r.h_nats, 0.325, 5e-4);
}

TEST(Entropy, AdditivityUnderFibreProduct) {
  auto single = sl::Partition::singletons(2);
  for (std::size_t n : {10, 100, 1000}) {
    auto mu = sl::iid_product({0.8, 0.2}, n);
    const double h = sl::shannon_entropy(mu, single).h_nats;
    for (std::size_t w : {2, 4, 8}) {
      auto prod = sl::fibre_product(std::vector<sl::Measure>(w, mu));
      const double hw = sl::shannon_entropy(prod, single).h_nats;
      EXPECT_NEAR(hw, static_cast<double>(w) * h, 1e-9 * hw);
    }
  }
}

TEST(Entropy, AdditiveForDistinctFibresMatchesBruteForce) {
  auto a = sl::iid_product({0.3, 0.7}, 3);
  auto b = sl::mixture({0.5, 0.5}, {sl::iid_product({0.9, 0.1}, 3), sl::iid_product({0.5, 0.5}, 3)});
  auto prod = sl::fibre_product({a, b});
  auto single = sl::Partition::singletons(2);
  auto r = sl::shannon_entropy(prod, single);
  EXPECT_EQ(r.method, "additive");
  EXPECT_NEAR(r.h_nats, brute_entropy(brute_cell_masses(prod, single)), 1e-12);
}

TEST(Entropy, NonIidProductAdditive) {
  auto mu = sl::product_measure({{0.5, 0.5}, {0.9, 0.1}, {0.2, 0.8}, {1.0, 0.0}});
  auto r = sl::shannon_entropy(mu, sl::Partition::singletons(2));
  EXPECT_EQ(r.method, "additive");
  EXPECT_NEAR(r.h_nats, brute_entropy(brute_cell_masses(mu, sl::Partition::singletons(2))), 1e-12);
}

TEST(Entropy, MixtureComponents) {
  const std::size_t n = 50;
  auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, n), sl::iid_product({0.9, 0.1}, n)});
  auto r = sl::shannon_entropy(mu, sl::Partition::singletons(2));
  ASSERT_EQ(r.components.size(), 2u);
  EXPECT_NEAR(r.components[0].h_nats, n * std::log(2.0), 1e-9);
  EXPECT_NEAR(r.components[1].h_nats, n * (-0.9 * std::log(0.9) - 0.1 * std::log(0.1)), 1e-9);
  // Mixing two measures adds at most log 2.
  const double avg = 0.5 * (r.components[0].h_nats + r.components[1].h_nats);
  EXPECT_GE(r.h_nats, avg - 1e-9);
  EXPECT_LE(r.h_nats, avg + std::log(2.0) + 1e-9);
}

TEST(Entropy, SampledPlugInOnlyWhenAllowed) {
  auto a = sl::product_measure({{0.5, 0.5}, {0.9, 0.1}, {0.3, 0.7}});
  auto b = sl::product_measure({{0.2, 0.8}, {0.5, 0.5}, {0.6, 0.4}});
  auto mu = sl::mixture({0.5, 0.5}, {a, b});
  auto single = sl::Partition::singletons(2);
  EXPECT_THROW(sl::shannon_entropy(mu, single), sl::CapabilityMissing);
  sl::EntropyOptions opt;
  opt.allow_sampling = true;
  opt.samples = 200'000;
  opt.seed = 5;
  auto r = sl::shannon_entropy(mu, single, opt);
  EXPECT_EQ(r.method, "sampled");
  EXPECT_EQ(r.samples, 200'000u);
  EXPECT_NEAR(r.h_nats, brute_entropy(brute_cell_masses(mu, single)), 0.01);
  opt.jobs = 4;
  EXPECT_EQ(sl::shannon_entropy(mu, single, opt).h_nats, r.h_nats);
}

TEST(Entropy, RelabelingInvariance) {
  auto a = sl::iid_product({0.2, 0.5, 0.3}, 40);
  auto b = sl::iid_product({0.3, 0.2, 0.5}, 40);
  auto p = sl::Partition::singletons(3);
  EXPECT_NEAR(sl::shannon_entropy(a, p).h_nats, sl::shannon_entropy(b, p).h_nats, 1e-10);
  EXPECT_NEAR(sl::covering_number(a, p, 0.1).log_count, sl::covering_number(b, p, 0.1).log_count, 1e-10);
}

TEST(Entropy, BoundsAndBruteForce) {
  sl::Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.below(2);
    const std::size_t n = 2 + rng.below(5);
    auto mu = random_measure(rng, k, n);
    // Conditioned tables need a partition refining the event partition.
    const bool coarse = k == 3 && rng.below(2) && mu.kind_name() != "conditioned";
    sl::Partition p = coarse ? sl::Partition({0, 1, 1}) : sl::Partition::singletons(k);
    const double h = sl::shannon_entropy(mu, p).h_nats;
    EXPECT_NEAR(h, brute_entropy(brute_cell_masses(mu, p)), 1e-11);
    EXPECT_GE(h, -1e-12);
    EXPECT_LE(h, static_cast<double>(n) * std::log(static_cast<double>(p.cell_count())) + 1e-12);
  }
}

TEST(Covering, UniformAtoms) {
  auto single = sl::Partition::singletons(2);
  for (std::size_t n : {3, 8, 12}) {
    auto mu = sl::uniform_on_first_cells(single, n, 1ull << n);
    for (double eps : {0.01, 0.1, 0.37}) {
      auto c = sl::covering_number(mu, single, eps);
      const auto expect = static_cast<std::uint64_t>(std::floor((1.0 - eps) * std::ldexp(1.0, static_cast<int>(n)))) + 1;
      ASSERT_TRUE(c.count.has_value());
      EXPECT_EQ(*c.count, expect);
      EXPECT_GT(c.achieved_mass, 1.0 - eps);
    }
  }
}

TEST(Covering, PointMass) {
  auto mu = sl::point_mass(3, {0, 2, 1, 1});
  for (double eps : {0.001, 0.5, 0.999}) EXPECT_EQ(*sl::covering_number(mu, sl::Partition::singletons(3), eps).count, 1u);
}

TEST(Covering, MatchesSortedBruteForce) {
  sl::Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + rng.below(2);
    const std::size_t n = 2 + rng.below(6);
    auto mu = random_measure(rng, k, n);
    auto p = sl::Partition::singletons(k);
    const double eps = 0.01 + 0.9 * rng.uniform();
    auto masses = brute_cell_masses(mu, p);
    auto c = sl::covering_number(mu, p, eps);
    ASSERT_TRUE(c.count.has_value());
    EXPECT_EQ(*c.count, brute_cover(masses, eps)) << "trial " << trial;
  }
}

TEST(Covering, NonincreasingInEps) {
  auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, 200), sl::iid_product({0.9, 0.1}, 200)});
  auto p = sl::Partition::singletons(2);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double c = sl::covering_number(mu, p, eps).log_count;
    EXPECT_LE(c, prev + 1e-12);
    prev = c;
  }
}

TEST(Covering, MixtureRateNearLog2) {
  const std::size_t n = 1000;
  auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, n), sl::iid_product({0.9, 0.1}, n)});
  const double rate = sl::covering_number(mu, sl::Partition::singletons(2), 0.05).log_count / n;
  EXPECT_GE(rate, 0.98 * std::log(2.0));
  EXPECT_LE(rate, std::log(2.0));
}

TEST(Covering, RequiresEnumeration) {
  auto mu = sl::product_measure({{0.5, 0.5}, {0.9, 0.1}});
  EXPECT_THROW(sl::covering_number(mu, sl::Partition::singletons(2), 0.1), sl::CapabilityMissing);
  EXPECT_THROW(sl::covering_number(sl::iid_product({0.5, 0.5}, 2), sl::Partition::singletons(2), 1.0),
               sl::InvalidArgument);
}

TEST(Covering, EntropyInequalityOnRandomInstances) {
  sl::Rng rng(4242);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(3);
    const std::size_t n = 1 + rng.below(60);
    sl::Measure mu;
    if (rng.below(2)) mu = sl::iid_product(random_dist(rng, k), n);
    else mu = sl::mixture({0.5, 0.5}, {sl::iid_product(random_dist(rng, k), n), sl::iid_product(random_dist(rng, k), n)});
    auto p = sl::Partition::singletons(k);
    const double eps = 0.01 + 0.9 * rng.uniform();
    const double h = sl::shannon_entropy(mu, p).h_nats;
    const double lc = sl::covering_number(mu, p, eps).log_count;
    EXPECT_GE(sl::covering_entropy_slack(h, lc, eps, n, k), 0.0);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Covering, UniformOnCellCountRates) {
  auto single = sl::Partition::singletons(3);
  for (double h : {0.3, 0.7}) {
    for (std::size_t n : {100, 1000}) {
      auto mu = sl::uniform_on_cell_count(single, n, h * static_cast<double>(n));
      const double cov = sl::covering_number(mu, single, 0.1).log_count / static_cast<double>(n);
      const double ent = sl::shannon_entropy(mu, single).h_nats / static_cast<double>(n);
      EXPECT_NEAR(cov, h, 2.0 / static_cast<double>(n) + 1e-9);
      EXPECT_NEAR(ent, h, 2.0 / static_cast<double>(n) + 1e-9);
    }
  }
}

namespace {

// Exact binomial probability that the count of symbol 0 lands in [lo, hi].
double binomial_range(int n, double p, double lo, double hi) {
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    if (j < lo || j > hi) continue;
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * std::log(p) +
                      (n - j) * std::log1p(-p));
  }
  return total;
}

}  // namespace

TEST(Aep, UniformIsStrong) {
  auto p = sl::Partition::singletons(2);
  auto mu = sl::uniform_on_cell_count(p, 300, 0.4 * 300);
  auto r = sl::aep_check(mu, p, 0.4);
  for (const auto& e : r.entries) {
    EXPECT_NEAR(e.typical_mass, 1.0, 1e-12);
    EXPECT_TRUE(e.strong);
  }
}

TEST(Aep, BiasedCoinMatchesBinomialSum) {
  const int n = 2000;
  const double p0 = 0.7, eps = 0.05;
  const double h = -p0 * std::log(p0) - (1 - p0) * std::log(1 - p0);
  auto r = sl::aep_check(sl::iid_product({p0, 1 - p0}, n), sl::Partition::singletons(2), h, {eps});
  // -log m / n = -(j/n) log p0 - (1 - j/n) log(1-p0) must lie strictly within eps of h.
  const double slope = std::log(p0) - std::log(1 - p0);
  const double c = -std::log(1 - p0);
  // (h - eps) < c - (j/n) slope < (h + eps)
  const double jlo = (c - (h + eps)) / slope * n, jhi = (c - (h - eps)) / slope * n;
  const double oracle = binomial_range(n, p0, std::floor(jlo) + 1, std::ceil(jhi) - 1);
  EXPECT_NEAR(r.entries[0].typical_mass, oracle, 1e-10);
  EXPECT_GE(r.entries[0].typical_mass, 0.99);
}

TEST(Aep, MixtureTypicalMassTendsToHalf) {
  const double h = std::log(2.0);
  double prev_gap = 1.0;
  for (std::size_t n : {100, 400, 1600}) {
    auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, n), sl::iid_product({0.9, 0.1}, n)});
    auto r = sl::aep_check(mu, sl::Partition::singletons(2), h, {0.05});
    const double gap = std::abs(r.entries[0].typical_mass - 0.5);
    EXPECT_LE(gap, prev_gap + 1e-12);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.01);
}

TEST(Aep, MonotoneAndFullBeyondMaxDeviation) {
  auto mu = sl::mixture({0.3, 0.7}, {sl::iid_product({0.6, 0.4}, 120), sl::iid_product({0.8, 0.2}, 120)});
  auto p = sl::Partition::singletons(2);
  auto probe = sl::aep_check(mu, p, 0.6, {1.0});
  auto r = sl::aep_check(mu, p, 0.6, {0.01, 0.05, 0.1, 0.25, probe.max_deviation + 1e-9});
  for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_GE(r.entries[i].typical_mass, r.entries[i - 1].typical_mass);
  EXPECT_NEAR(r.entries.back().typical_mass, 1.0, 1e-12);
}

TEST(Rate, Examples) {
  std::vector<std::pair<double, double>> linear{{100, 70}, {200, 140}, {400, 280}};
  auto r = sl::rate_estimate(linear);
  EXPECT_NEAR(r.slope, 0.7, 1e-12);
  for (double res : r.residuals) EXPECT_NEAR(res, 0.0, 1e-12);
  std::vector<std::pair<double, double>> affine;
  for (double n : {250.0, 500.0, 1000.0}) affine.emplace_back(n, n * std::log(2.0) + std::log(0.9));
  EXPECT_NEAR(sl::rate_estimate(affine).slope, std::log(2.0), 1e-3);
  EXPECT_THROW(sl::rate_estimate({{1, 1}}), sl::InvalidArgument);
}

TEST(Rate, CoveringSeriesSlope) {
  std::vector<std::pair<double, double>> series;
  for (std::size_t n : {250, 500, 1000}) {
    auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, n), sl::iid_product({0.9, 0.1}, n)});
    series.emplace_back(n, sl::covering_number(mu, sl::Partition::singletons(2), 0.05).log_count);
  }
  EXPECT_NEAR(sl::rate_estimate(series).slope, std::log(2.0), 0.02 * std::log(2.0));
}

TEST(Hamming, Examples) {
  EXPECT_EQ(*sl::hamming_ball_count(10, 0, 2).exact, 1u);
  EXPECT_EQ(*sl::hamming_ball_count(12, 3, 2).exact, 299u);
  EXPECT_NEAR(sl::hamming_ball_count(12, 3, 2).log_count, std::log(299.0), 1e-12);
  EXPECT_THROW(sl::hamming_ball_count(3, 4, 2), sl::InvalidArgument);
}

TEST(Hamming, EnumerationOracle) {
  for (int n = 1; n <= 10; ++n) {
    for (std::size_t k : {2, 3}) {
      std::vector<std::uint64_t> by_weight(n + 1, 0);
      sl::for_each_configuration(n, k, [&](const sl::Configuration& x) {
        int w = 0;
        for (auto s : x) w += s != 0;
        ++by_weight[w];
      });
      std::uint64_t cum = 0;
      for (int r = 0; r <= n; ++r) {
        cum += by_weight[r];
        EXPECT_EQ(*sl::hamming_ball_count(n, r, k).exact, cum);
      }
    }
  }
}

TEST(Hamming, BoundHoldsUpTo20) {
  for (int n = 1; n <= 20; ++n)
    for (double eps : {0.05, 0.1})
      for (std::size_t k : {2, 3}) {
        const int r = static_cast<int>(std::floor(3 * eps * n));
        auto b = sl::hamming_ball_count(n, r, k, 3 * eps);
        ASSERT_TRUE(b.exact.has_value());
        EXPECT_EQ(*b.exact, pascal_ball(n, r, k));
        EXPECT_LE(std::log(static_cast<double>(*b.exact)), b.log_bound + 1e-12) << n << " " << eps << " " << k;
      }
  auto twelve = sl::hamming_ball_count(12, 3, 2, 0.3);
  EXPECT_NEAR(twelve.log_bound, 12 * (-0.3 * std::log(0.3) - 0.7 * std::log(0.7)) + 3.6 * std::log(2.0), 1e-12);
}

TEST(MetricCover, DiscreteMetricSingletons) {
  const std::size_t n = 30;
  auto mu = sl::iid_product({0.7, 0.3}, n);
  auto alpha = sl::Alphabet::numbered(2);
  auto single = sl::Partition::singletons(2);
  auto b = sl::metric_cov_bounds(mu, alpha, 0.5, 0.1, single);
  EXPECT_DOUBLE_EQ(b.upper_log, sl::covering_number(mu, single, 0.1).log_count);
  ASSERT_TRUE(b.lower_log.has_value());
  EXPECT_LE(*b.lower_log, b.upper_log);
  EXPECT_FALSE(sl::metric_cov_bounds(mu, alpha, 0.5, 0.2, single).lower_log.has_value());
}

TEST(MetricCover, DiameterChecked) {
  auto mu = sl::iid_product({0.2, 0.3, 0.5}, 5);
  sl::Alphabet alpha({"a", "b", "c"}, {{0, 0.2, 1}, {0.2, 0, 1}, {1, 1, 0}});
  sl::Partition coarse({0, 0, 1});
  EXPECT_NO_THROW(sl::metric_cov_bounds(mu, alpha, 0.3, 0.05, coarse));
  EXPECT_THROW(sl::metric_cov_bounds(mu, alpha, 0.1, 0.05, coarse), sl::InvalidArgument);
  EXPECT_THROW(sl::metric_cov_bounds(mu, sl::Alphabet::numbered(3), 0.5, 0.05, coarse), sl::InvalidArgument);
}

TEST(MetricCover, LowerNeverExceedsUpper) {
  sl::Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product(random_dist(rng, 2), n), sl::iid_product(random_dist(rng, 2), n)});
    const double eps = 0.01 + 0.15 * rng.uniform();
    auto b = sl::metric_cov_bounds(mu, sl::Alphabet::numbered(2), 0.5, eps, sl::Partition::singletons(2));
    ASSERT_TRUE(b.lower_log.has_value());
    EXPECT_LE(*b.lower_log, b.upper_log);
  }
}
