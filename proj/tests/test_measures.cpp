#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "soficlab/marginals.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/type_classes.hpp"
#include "soficlab/window_distribution.hpp"

namespace sl = soficlab;

namespace {

sl::Measure mixture_example(std::size_t n) {
  return sl::mixture({0.5, 0.5}, {sl::iid_product({0.9, 0.1}, n), sl::iid_product({0.5, 0.5}, n)});
}

// Brute-force cell masses: sum of atom masses over all of X^V.
std::map<sl::CellSequence, double> brute_cells(const sl::Measure& mu, const sl::Partition& p) {
  std::map<sl::CellSequence, double> out;
  sl::for_each_configuration(mu.vertex_count(), mu.alphabet_size(), [&](const sl::Configuration& x) {
    const double m = sl::atom_mass(mu, x);
    if (m > 0.0) out[p.cells_of(x)] += m;
  });
  return out;
}

// Direct pushforward oracle: sum atom masses over all configurations.
sl::WindowDistribution brute_window(const sl::Measure& mu, const sl::SoficApproximation& s, sl::Vertex v,
                                    const sl::GroupWindow& w) {
  sl::WindowDistribution out(w.labels(), mu.alphabet_size());
  sl::for_each_configuration(mu.vertex_count(), mu.alphabet_size(), [&](const sl::Configuration& x) {
    sl::Configuration y(w.size());
    for (std::size_t g = 0; g < w.size(); ++g) y[g] = x[s.apply(w.element(g), v)];
    out.add(y, sl::atom_mass(mu, x));
  });
  return out;
}

double max_abs_diff(const sl::WindowDistribution& a, const sl::WindowDistribution& b) {
  double d = 0.0;
  sl::for_each_configuration(a.window_size(), a.alphabet_size(),
                             [&](const sl::Configuration& y) { d = std::max(d, std::abs(a.mass(y) - b.mass(y))); });
  return d;
}

}  // namespace

TEST(Alphabet, MetricValidation) {
  EXPECT_NO_THROW(sl::Alphabet({"a", "b"}));
  EXPECT_THROW(sl::Alphabet({"a", "a"}), sl::InvalidArgument);
  EXPECT_THROW(sl::Alphabet({"a", "b"}, {{0, 1}, {2, 0}}), sl::InvalidArgument);
  EXPECT_THROW(sl::Alphabet({"a", "b", "c"}, {{0, 1, 5}, {1, 0, 1}, {5, 1, 0}}), sl::InvalidArgument);
  EXPECT_THROW(sl::Partition({0, 2}), sl::InvalidArgument);
}

TEST(AtomMass, UniformProduct) {
  auto mu = sl::iid_product({0.5, 0.5}, 10);
  EXPECT_DOUBLE_EQ(sl::atom_mass(mu, sl::Configuration(10, 1)), std::pow(2.0, -10));
}

TEST(AtomMass, MixtureExample) {
  EXPECT_NEAR(sl::atom_mass(mixture_example(3), {0, 0, 0}), 0.5 * 0.729 + 0.5 * 0.125, 1e-15);
  EXPECT_NEAR(sl::atom_mass(mixture_example(3), {0, 0, 0}), 0.427, 1e-12);
}

TEST(AtomMass, PointMass) {
  auto mu = sl::point_mass(2, {0, 1, 1});
  EXPECT_EQ(sl::atom_mass(mu, {0, 1, 0}), 0.0);
  EXPECT_EQ(sl::atom_mass(mu, {0, 1, 1}), 1.0);
}

TEST(AtomMass, MissingCapability) {
  auto mu = sl::uniform_on_cell_count(sl::Partition::singletons(2), 100, 30.0);
  EXPECT_THROW(sl::atom_mass(mu, sl::Configuration(100, 0)), sl::CapabilityMissing);
  EXPECT_THROW(sl::sample(mu, *std::make_unique<sl::Rng>(1)), sl::CapabilityMissing);
}

TEST(CellMass, ProductFormula) {
  auto mu = sl::iid_product({0.7, 0.3}, 4);
  auto single = sl::Partition::singletons(2);
  EXPECT_NEAR(std::exp(sl::log_class_cell_mass(mu, single, {2, 2})), 0.0441, 1e-15);
  EXPECT_NEAR(sl::cell_mass(mu, single, {0, 1, 1, 0}), 0.0441, 1e-15);
  EXPECT_DOUBLE_EQ(sl::cell_mass(mu, sl::Partition::trivial(2), {0, 0, 0, 0}), 1.0);
}

TEST(CellMass, MixtureCellEqualsAtom) {
  auto mu = mixture_example(3);
  EXPECT_NEAR(sl::cell_mass(mu, sl::Partition::singletons(2), {0, 0, 0}), 0.427, 1e-12);
}

TEST(CellMass, MixtureLinearity) {
  auto a = sl::iid_product({0.2, 0.3, 0.5}, 5);
  auto b = sl::product_measure({{0.1, 0.1, 0.8}, {0.3, 0.3, 0.4}, {1, 0, 0}, {0.5, 0, 0.5}, {0.2, 0.2, 0.6}});
  auto mix = sl::mixture({0.25, 0.75}, {a, b});
  sl::Partition p({0, 1, 1});
  sl::for_each_configuration(5, 2, [&](const sl::Configuration& c) {
    sl::CellSequence cells(c.begin(), c.end());
    EXPECT_NEAR(sl::cell_mass(mix, p, cells), 0.25 * sl::cell_mass(a, p, cells) + 0.75 * sl::cell_mass(b, p, cells),
                1e-15);
  });
}

TEST(Sample, PointMassAlwaysSame) {
  auto mu = sl::point_mass(3, {2, 0, 1});
  sl::Rng rng(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sl::sample(mu, rng), (sl::Configuration{2, 0, 1}));
}

TEST(Sample, LargeProductFrequencies) {
  auto mu = sl::iid_product({0.5, 0.5}, 10000);
  sl::Rng rng(11);
  std::vector<std::uint32_t> ones(10000, 0);
  sl::Configuration x(10000);
  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    sl::sample_into(mu, rng, x, {});
    for (std::size_t v = 0; v < x.size(); ++v) ones[v] += x[v];
  }
  // Binomial(1e5, 1/2) has sd ~0.0016 per coordinate; 0.01 is > 6 sd.
  for (std::size_t v = 0; v < ones.size(); ++v) ASSERT_NEAR(ones[v] / double(samples), 0.5, 0.01) << v;
}

TEST(Sample, ConditionedOnFirstSymbolIsDegenerate) {
  auto base = sl::iid_product({0.25, 0.25, 0.25, 0.25}, 4);
  sl::Event ev{sl::Partition::singletons(4), std::nullopt, {}, {{0, 2}}};
  auto mu = sl::conditioned(base, ev);
  sl::Rng rng(3);
  for (int i = 0; i < 2000; ++i) EXPECT_EQ(sl::sample(mu, rng)[0], 2);
  EXPECT_NEAR(std::exp(mu.as<sl::ConditionedNode>()->log_event_mass), 0.25, 1e-15);
}

TEST(Sample, DeterministicGivenSeed) {
  auto mu = mixture_example(50);
  sl::Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sl::sample(mu, a), sl::sample(mu, b));
}

TEST(Sample, RejectionBudget) {
  auto base = sl::iid_product({0.5, 0.5}, 40);
  sl::Event ev{sl::Partition::singletons(2), std::nullopt, {{0, sl::Cmp::GreaterEqual, 40}}, {}};
  auto mu = sl::conditioned(base, ev);
  sl::Rng rng(1);
  EXPECT_THROW(sl::sample(mu, rng, {.max_rejections = 1000}), sl::RejectionBudgetExhausted);
}

TEST(Conditioned, ZeroMassRejected) {
  auto base = sl::iid_product({1.0, 0.0}, 5);
  sl::Event ev{sl::Partition::singletons(2), std::nullopt, {}, {{0, 1}}};
  EXPECT_THROW(sl::conditioned(base, ev), sl::InvalidArgument);
}

TEST(Conditioned, IdentityOnSparse) {
  // atom_mass(mu | A, x) = atom_mass(mu, x) / mu(A) inside A, 0 outside.
  auto base = sl::sparse_measure(3, 3, {{{0, 1, 2}, 0.1}, {{0, 0, 0}, 0.2}, {{1, 1, 1}, 0.3}, {{2, 1, 0}, 0.4}});
  sl::Partition p({0, 1, 1});
  sl::Event ev{p, std::nullopt, {{0, sl::Cmp::GreaterEqual, 1}}, {}};
  auto mu = sl::conditioned(base, ev);
  const double a = 0.1 + 0.2 + 0.4;
  EXPECT_NEAR(sl::atom_mass(mu, {0, 1, 2}), 0.1 / a, 1e-15);
  EXPECT_NEAR(sl::atom_mass(mu, {2, 1, 0}), 0.4 / a, 1e-15);
  EXPECT_EQ(sl::atom_mass(mu, {1, 1, 1}), 0.0);
}

TEST(Conditioned, EnumerationPathMatchesTable) {
  // Non-iid product: the event mass comes from enumerating X^V.
  auto base = sl::product_measure({{0.1, 0.9}, {0.6, 0.4}, {0.3, 0.7}, {0.5, 0.5}});
  sl::Event ev{sl::Partition::singletons(2), std::nullopt, {{1, sl::Cmp::Equal, 2}}, {}};
  auto mu = sl::conditioned(base, ev);
  double a = 0.0;
  sl::for_each_configuration(4, 2, [&](const sl::Configuration& x) {
    if (x[0] + x[1] + x[2] + x[3] == 2) a += sl::atom_mass(base, x);
  });
  EXPECT_NEAR(std::exp(mu.as<sl::ConditionedNode>()->log_event_mass), a, 1e-15);
}

TEST(Uniform, FirstCellsCount) {
  auto mu = sl::uniform_on_first_cells(sl::Partition::singletons(2), 10, 300);
  double total = 0.0;
  std::size_t support = 0;
  sl::for_each_configuration(10, 2, [&](const sl::Configuration& x) {
    const double m = sl::atom_mass(mu, x);
    total += m;
    support += m > 0.0;
  });
  EXPECT_EQ(support, 300U);
  EXPECT_NEAR(total, 1.0, 1e-12);
  sl::Rng rng(2);
  for (int i = 0; i < 200; ++i) EXPECT_GT(sl::atom_mass(mu, sl::sample(mu, rng)), 0.0);
}

TEST(Uniform, CoarseCellsSplitEvenly) {
  sl::Partition p({0, 0, 1});
  auto mu = sl::uniform_on_cells(p, 2, {{0, 1}, {1, 1}});
  EXPECT_NEAR(sl::atom_mass(mu, {0, 2}), 0.25, 1e-15);
  EXPECT_NEAR(sl::atom_mass(mu, {2, 2}), 0.5, 1e-15);
  EXPECT_EQ(sl::atom_mass(mu, {0, 0}), 0.0);
}

TEST(FibreProduct, AtomMassIsProductOfFibres) {
  auto m0 = sl::iid_product({0.3, 0.7}, 2);
  auto m1 = sl::point_mass(2, {1, 0});
  auto nu = sl::fibre_product({m0, m1});
  // x[v * 2 + w]
  EXPECT_NEAR(sl::atom_mass(nu, {0, 1, 1, 0}), 0.3 * 0.7, 1e-15);
  EXPECT_EQ(sl::atom_mass(nu, {0, 0, 1, 0}), 0.0);
}

TEST(TypeClasses, BinomialRows) {
  auto t = sl::build_type_classes(sl::iid_product({0.5, 0.5}, 2), sl::Partition::singletons(2));
  ASSERT_EQ(t.rows.size(), 3U);
  std::map<sl::Counts, std::uint64_t> mult;
  for (const auto& r : t.rows) {
    mult[r.counts] = *r.exact_mult;
    EXPECT_NEAR(std::exp(r.log_mass), 0.25, 1e-15);
  }
  EXPECT_EQ(mult[(sl::Counts{2, 0})], 1U);
  EXPECT_EQ(mult[(sl::Counts{1, 1})], 2U);
  EXPECT_EQ(mult[(sl::Counts{0, 2})], 1U);
}

TEST(TypeClasses, TotalAtLargeN) {
  auto t = sl::build_type_classes(sl::iid_product({0.7, 0.3}, 1000), sl::Partition::singletons(2));
  EXPECT_NEAR(std::exp(t.log_total()), 1.0, 1e-9);
  auto t3 = sl::build_type_classes(sl::iid_product({0.2, 0.3, 0.5}, 300), sl::Partition::singletons(3));
  EXPECT_NEAR(std::exp(t3.log_total()), 1.0, 1e-9);
}

TEST(TypeClasses, MixtureRowsAreLinear) {
  const std::size_t n = 40;
  auto p = sl::iid_product({0.5, 0.5}, n);
  auto q = sl::iid_product({0.9, 0.1}, n);
  auto single = sl::Partition::singletons(2);
  auto t = sl::build_type_classes(sl::mixture({0.5, 0.5}, {p, q}), single);
  for (const auto& r : t.rows) {
    const double expect = 0.5 * std::exp(sl::log_class_cell_mass(p, single, r.counts)) +
                          0.5 * std::exp(sl::log_class_cell_mass(q, single, r.counts));
    EXPECT_NEAR(std::exp(r.log_mass) / expect, 1.0, 1e-12);
  }
}

TEST(TypeClasses, SortedDescending) {
  auto t = sl::build_type_classes(mixture_example(60), sl::Partition::singletons(2));
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GE(t.rows[i - 1].log_mass, t.rows[i].log_mass);
}

TEST(TypeClasses, BudgetExceeded) {
  EXPECT_THROW(sl::build_type_classes(sl::iid_product({0.25, 0.25, 0.25, 0.25}, 1000), sl::Partition::singletons(4)),
               sl::BudgetExceeded);
}

TEST(TypeClasses, NonIidProductMissing) {
  auto mu = sl::product_measure({{0.5, 0.5}, {0.1, 0.9}});
  EXPECT_THROW(sl::build_type_classes(mu, sl::Partition::singletons(2)), sl::CapabilityMissing);
}

TEST(TypeClasses, FibreProductFlattens) {
  auto mu = sl::iid_product({0.7, 0.3}, 5);
  auto nu = sl::fibre_product({mu, mu, mu});
  auto t = sl::build_type_classes(nu, sl::Partition::singletons(2));
  EXPECT_EQ(t.rows.size(), 16U);
  EXPECT_NEAR(std::exp(t.log_total()), 1.0, 1e-12);
}

// Property: for random small iid/mixture measures and random events the
// table, expanded to cells, equals brute-force enumeration over X^V.
TEST(TypeClasses, ConditionedMatchesBruteForce) {
  sl::Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + rng.below(2);
    const std::size_t n = 3 + rng.below(4);
    auto random_dist = [&] {
      std::vector<double> p(k);
      double s = 0.0;
      for (auto& x : p) s += (x = 0.05 + rng.uniform());
      for (auto& x : p) x /= s;
      return p;
    };
    sl::Measure base = rng.below(2) ? sl::iid_product(random_dist(), n)
                                    : sl::mixture({0.3, 0.7}, {sl::iid_product(random_dist(), n),
                                                               sl::iid_product(random_dist(), n)});
    sl::Partition p = k == 3 && rng.below(2) ? sl::Partition({0, 1, 1}) : sl::Partition::singletons(k);
    sl::Event ev{p, std::nullopt, {}, {}};
    const double h = -std::log(1.0 / static_cast<double>(p.cell_count()));
    if (rng.below(2)) ev.band = sl::CellBand{h * (0.3 + 0.6 * rng.uniform()), h * (1.2 + rng.uniform())};
    if (rng.below(2)) ev.bounds.push_back({0, sl::Cmp::GreaterEqual, static_cast<double>(rng.below(n / 2 + 1))});
    if (rng.below(2)) ev.pins.push_back({static_cast<sl::Vertex>(rng.below(n)), 0});
    sl::Measure mu;
    try {
      mu = sl::conditioned(base, ev);
    } catch (const sl::InvalidArgument&) {
      continue;  // empty event
    }
    auto table = sl::build_type_classes(mu, p);
    auto brute = brute_cells(mu, p);
    EXPECT_NEAR(std::exp(table.log_total()), 1.0, 1e-12);
    double table_cells = 0.0;
    for (const auto& r : table.rows) table_cells += static_cast<double>(*r.exact_mult);
    EXPECT_EQ(table_cells, static_cast<double>(brute.size()));
    for (const auto& [cell, m] : brute) {
      EXPECT_NEAR(std::exp(sl::table_log_cell_mass(table, cell)), m, 1e-12);
      EXPECT_NEAR(sl::cell_mass(mu, p, cell), m, 1e-12);
    }
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(TypeClasses, NestedPinInsideBand) {
  const std::size_t n = 8;
  auto nu = mixture_example(n);
  auto single = sl::Partition::singletons(2);
  sl::Event band{single, sl::CellBand{0.5, 0.8}, {}, {}};
  auto a = sl::conditioned(nu, band);
  sl::Event pin{single, std::nullopt, {}, {{3, 1}}};
  auto b = sl::conditioned(a, pin);
  auto table = sl::build_type_classes(b, single);
  for (const auto& [cell, m] : brute_cells(b, single))
    EXPECT_NEAR(std::exp(sl::table_log_cell_mass(table, cell)), m, 1e-12);
}

TEST(WindowMarginal, IidInjectiveIsProduct) {
  auto s = sl::random_sofic(2, 60, 4);
  auto w = sl::ball(sl::free_group(2), 1);
  auto mu = sl::iid_product({0.7, 0.3}, 60);
  auto target = sl::iid_window(w.labels(), {0.7, 0.3});
  for (sl::Vertex v = 0; v < 60; ++v) {
    auto m = sl::window_marginal(mu, s, v, w);
    EXPECT_EQ(m.mode, sl::MarginalMode::Exact);
    if (m.injective) EXPECT_LT(sl::tv_distance(m.dist, target), 1e-12);
  }
}

TEST(WindowMarginal, DiagonalIdentification) {
  auto s = sl::cyclic_sofic(3);
  auto w = sl::ball(sl::integer_lattice(1), 2);  // +2 and -1 land on the same vertex
  auto mu = sl::iid_product({0.6, 0.4}, 3);
  auto m = sl::window_marginal(mu, s, 0, w);
  EXPECT_FALSE(m.injective);
  const auto i2 = *w.index_of(w.generators().parse("+1+1"));
  const auto im = *w.index_of(w.generators().parse("-1"));
  m.dist.for_each([&](const sl::Configuration& y, double) { EXPECT_EQ(y[i2], y[im]); });
  EXPECT_LT(max_abs_diff(m.dist, brute_window(mu, s, 0, w)), 1e-15);
}

TEST(WindowMarginal, MixtureLinearity) {
  auto s = sl::random_sofic(2, 200, 8);
  auto w = sl::ball(sl::free_group(2), 1);
  auto mu = sl::mixture({0.5, 0.5}, {sl::iid_product({0.5, 0.5}, 200), sl::iid_product({0.9, 0.1}, 200)});
  auto target = sl::combine({0.5, 0.5}, {sl::iid_window(w.labels(), {0.5, 0.5}), sl::iid_window(w.labels(), {0.9, 0.1})});
  auto m = sl::window_marginal(mu, s, 17, w);
  ASSERT_TRUE(m.injective);
  EXPECT_LT(sl::tv_distance(m.dist, target), 1e-12);
  // Monte Carlo check of the same marginal.
  sl::Rng rng(77);
  sl::WindowDistribution mc(w.labels(), 2);
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    auto x = sl::sample(mu, rng);
    sl::Configuration y(w.size());
    for (std::size_t g = 0; g < w.size(); ++g) y[g] = x[s.apply(w.element(g), 17)];
    mc.add(y, 1.0 / samples);
  }
  sl::for_each_configuration(w.size(), 2, [&](const sl::Configuration& y) {
    const double p = m.dist.mass(y);
    EXPECT_LE(std::abs(mc.mass(y) - p), 3.0 * std::sqrt(p * (1 - p) / samples) + 1e-9);
  });
}

TEST(WindowMarginal, ExactPathsMatchEnumeration) {
  auto s = sl::random_sofic(1, 6, 2);
  auto w = sl::ball(sl::free_group(1), 2);
  auto single = sl::Partition::singletons(2);
  std::vector<sl::Measure> cases = {
      sl::mixture({0.4, 0.6}, {sl::iid_product({0.2, 0.8}, 6), sl::iid_product({0.7, 0.3}, 6)}),
      sl::conditioned(sl::iid_product({0.3, 0.7}, 6), {single, std::nullopt, {{0, sl::Cmp::GreaterEqual, 3}}, {}}),
      sl::conditioned(mixture_example(6), {single, sl::CellBand{0.3, 1.0}, {}, {}}),
      sl::fibre_product({sl::iid_product({0.5, 0.5}, 3), sl::point_mass(2, {1, 0, 1})}),
      sl::sparse_measure(2, 6, {{{0, 1, 0, 1, 1, 0}, 0.5}, {{1, 1, 1, 0, 0, 0}, 0.5}}),
      sl::uniform_on_cells(single, 6, {{0, 0, 1, 1, 0, 1}, {1, 1, 1, 1, 1, 1}}),
  };
  for (const auto& mu : cases) {
    for (sl::Vertex v = 0; v < 6; ++v) {
      auto m = sl::window_marginal(mu, s, v, w);
      EXPECT_EQ(m.mode, sl::MarginalMode::Exact) << mu.kind_name();
      EXPECT_LT(max_abs_diff(m.dist, brute_window(mu, s, v, w)), 1e-13) << mu.kind_name();
    }
  }
}

TEST(WindowMarginal, MonteCarloFallbackRecorded) {
  // The first 2^29 cells of {0,1}^30 are the configurations with x_0 = 0.
  auto mu = sl::uniform_on_first_cells(sl::Partition::singletons(2), 30, 1ULL << 29);
  auto s = sl::cyclic_sofic(30);
  auto w = sl::ball(sl::integer_lattice(1), 1);
  auto m = sl::window_marginal(mu, s, 1, w, {.samples = 20000, .seed = 5});
  EXPECT_EQ(m.mode, sl::MarginalMode::MonteCarlo);
  EXPECT_EQ(m.samples, 20000U);
  const auto minus = *w.index_of(w.generators().parse("-1"));
  m.dist.for_each([&](const sl::Configuration& y, double) { EXPECT_EQ(y[minus], 0); });
  auto again = sl::window_marginal(mu, s, 1, w, {.samples = 20000, .seed = 5, .jobs = 4});
  EXPECT_EQ(again.dist, m.dist);
}

TEST(Tv, Examples) {
  std::vector<std::string> one{"e"};
  auto a = sl::iid_window(one, {0.7, 0.3});
  auto b = sl::iid_window(one, {0.5, 0.5});
  EXPECT_NEAR(sl::tv_distance(a, b), 0.2, 1e-15);
  EXPECT_EQ(sl::tv_distance(a, a), 0.0);
  EXPECT_EQ(sl::tv_distance(sl::point_window({"e", "a"}, 2, {0, 1}), sl::point_window({"e", "a"}, 2, {1, 1})), 1.0);
  EXPECT_THROW(sl::tv_distance(a, sl::iid_window({"e", "a"}, {0.5, 0.5})), sl::WindowMismatch);
}

TEST(Tv, SparseStorageAgrees) {
  std::vector<std::string> labels{"e", "a", "b"};
  sl::WindowDistribution dense(labels, 3), sparse(labels, 3, 1.0);
  sl::Rng rng(4);
  sl::for_each_configuration(3, 3, [&](const sl::Configuration& y) {
    const double m = rng.uniform();
    dense.add(y, m);
    sparse.add(y, m);
  });
  EXPECT_FALSE(sparse.dense());
  EXPECT_EQ(sl::tv_distance(dense, sparse), 0.0);
}

TEST(Barycentre, Examples) {
  std::vector<std::string> one{"e"};
  auto p = sl::iid_window(one, {0.5, 0.5});
  auto q = sl::iid_window(one, {0.9, 0.1});
  EXPECT_TRUE(sl::barycentre_check({{1.0, p}}).is_point_mass_consistent);
  EXPECT_FALSE(sl::barycentre_check({{0.5, p}, {0.5, q}}).is_point_mass_consistent);
  EXPECT_TRUE(sl::barycentre_check({{0.5, p}, {0.5, p}}).is_point_mass_consistent);
}

TEST(Barycentre, MatchesVarianceOracle) {
  sl::Rng rng(31);
  std::vector<std::string> one{"e"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, sl::WindowDistribution>> theta;
    std::vector<double> w(5);
    double s = 0.0;
    for (auto& x : w) s += (x = rng.uniform() + 0.01);
    const bool equal = trial % 3 == 0;
    std::vector<double> shared{0.2, 0.3, 0.5};
    for (int i = 0; i < 5; ++i) {
      std::vector<double> p(3);
      double t = 0.0;
      for (auto& x : p) t += (x = rng.uniform() + 0.01);
      for (auto& x : p) x /= t;
      theta.emplace_back(w[i] / s, sl::iid_window(one, equal ? shared : p));
    }
    double total = 0.0;
    for (auto& [wi, nu] : theta) total += wi;
    theta.back().first += 1.0 - total;
    // Variance oracle over every subset A of X.
    double max_var = 0.0;
    for (int mask = 1; mask < 8; ++mask) {
      double m1 = 0.0, m2 = 0.0;
      for (auto& [wi, nu] : theta) {
        double a = 0.0;
        for (sl::Symbol x = 0; x < 3; ++x)
          if (mask >> x & 1) a += nu.mass({x});
        m1 += wi * a;
        m2 += wi * a * a;
      }
      max_var = std::max(max_var, m2 - m1 * m1);
    }
    auto r = sl::barycentre_check(theta);
    EXPECT_EQ(r.is_point_mass_consistent, max_var <= 1e-9) << trial;
    EXPECT_EQ(r.is_point_mass_consistent, equal) << trial;
  }
}

TEST(WindowCsv, RoundTrip) {
  auto d = sl::iid_window({"e", "a"}, {0.1, 0.2, 0.7});
  std::vector<std::string> symbols{"x", "y", "z"};
  auto text = sl::to_csv(d, symbols);
  EXPECT_EQ(text.substr(0, 19), "configuration,mass\n");
  EXPECT_EQ(sl::from_csv(text, {"e", "a"}, symbols), d);
}
