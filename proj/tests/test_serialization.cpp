#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "soficlab/experiment.hpp"
#include "soficlab/serialization.hpp"

namespace sl = soficlab;
using Json = nlohmann::json;

namespace {

// Atom masses of two measures agree on every configuration of X^V.
void expect_same_law(const sl::Measure& a, const sl::Measure& b) {
  ASSERT_EQ(a.vertex_count(), b.vertex_count());
  ASSERT_EQ(a.alphabet_size(), b.alphabet_size());
  sl::for_each_configuration(a.vertex_count(), a.alphabet_size(), [&](const sl::Configuration& x) {
    EXPECT_NEAR(sl::atom_mass(a, x), sl::atom_mass(b, x), 1e-15);
  });
}

std::string pointer_of(const Json& config) {
  try {
    sl::plan_experiment(config);
  } catch (const sl::SchemaError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

}  // namespace

TEST(Serialization, GroupKindsRoundTrip) {
  const std::vector<sl::GroupKindPtr> kinds{
      sl::free_group(2), sl::integer_lattice(3), sl::cyclic_group(5),
      sl::finite_group({{0, 1}, {1, 0}}, {1}), sl::direct_product(sl::integer_lattice(1), sl::cyclic_group(3))};
  for (const auto& k : kinds) {
    const Json j = sl::group_kind_to_json(*k);
    EXPECT_EQ(sl::group_kind_to_json(*sl::group_kind_from_json(j)), j);
  }
  EXPECT_THROW(sl::group_kind_from_json(Json{{"type", "heisenberg"}}), sl::UnsupportedGroup);
}

TEST(Serialization, SoficRoundTripKeepsPermutations) {
  const auto s = sl::random_sofic(2, 40, 9);
  const auto back = sl::sofic_from_json(sl::sofic_to_json(s));
  ASSERT_EQ(back.vertex_count(), 40U);
  for (std::uint32_t g = 0; g < 2; ++g) EXPECT_EQ(back.generator_perm(g), s.generator_perm(g));
  EXPECT_EQ(back.seed(), s.seed());
  Json bad = sl::sofic_to_json(s);
  bad["perms"]["a"][0] = bad["perms"]["a"][1];
  EXPECT_THROW(sl::sofic_from_json(bad), sl::InvalidArgument);
}

TEST(Serialization, WindowFromRadiusOrElements) {
  const auto w = sl::ball(sl::free_group(2), 1);
  const auto back = sl::window_from_json(sl::window_to_json(w));
  EXPECT_EQ(back.labels(), w.labels());
  const auto r = sl::window_from_json(Json{{"group_kind", {{"type", "integer_lattice"}, {"rank", 1}}}, {"radius", 2}});
  EXPECT_EQ(r.size(), 5U);
}

TEST(Serialization, MeasureTreesRoundTrip) {
  const sl::Partition two = sl::Partition::singletons(2);
  const sl::Measure iid = sl::iid_product({0.3, 0.7}, 4);
  const sl::Measure mix = sl::mixture({0.25, 0.75}, {iid, sl::iid_product({0.9, 0.1}, 4)});
  sl::Event ev{two, std::nullopt, {{0, sl::Cmp::GreaterEqual, 2.0}}, {{1, 1}}};
  const std::vector<sl::Measure> cases{
      iid,
      sl::product_measure({{0.1, 0.9}, {0.5, 0.5}, {1.0, 0.0}}),
      sl::sparse_measure(3, 2, {{{0, 2}, 0.25}, {{1, 1}, 0.75}}),
      mix,
      sl::conditioned(mix, ev),
      sl::uniform_on_cells(two, 3, {{0, 0, 1}, {1, 1, 1}}),
      sl::uniform_on_first_cells(two, 3, 5),
      sl::fibre_product({sl::iid_product({0.5, 0.5}, 2), sl::iid_product({0.2, 0.8}, 2)}),
  };
  for (const auto& mu : cases) {
    const Json j = sl::measure_to_json(mu);
    const auto back = sl::measure_from_json(j);
    EXPECT_EQ(sl::measure_to_json(back), j) << j.dump();
    expect_same_law(mu, back);
  }
  // Without a stored event mass the mass is recomputed.
  Json j = sl::measure_to_json(cases[4]);
  const double stored = j["log_event_mass"].get<double>();
  j.erase("log_event_mass");
  EXPECT_NEAR(sl::measure_from_json(j).as<sl::ConditionedNode>()->log_event_mass, stored, 1e-12);
}

TEST(Serialization, EventRoundTrip) {
  sl::Event ev{sl::Partition({0, 0, 1}), sl::CellBand{0.2, 0.4}, {{1, sl::Cmp::Less, 3.0}}, {{0, 1}, {4, 0}}};
  const Json j = sl::event_to_json(ev);
  EXPECT_EQ(sl::event_to_json(sl::event_from_json(j)), j);
}

TEST(Config, NegativeSizeNamesTheElement) {
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"n_list", {-5, 10}}}), "/n_list/0");
  EXPECT_EQ(pointer_of({{"scenario", "coinduction"}, {"n_list", {10, 2.5}}}), "/n_list/1");
  EXPECT_EQ(pointer_of({{"scenario", "covering_bounds"}, {"n_list", {100, 100}}}), "/n_list/1");
}

TEST(Config, ReportsNestedAndBatteryPointers) {
  EXPECT_EQ(pointer_of({{"scenario", "coinduction"}, {"fibre", {{"w", 0}}}}), "/fibre/w");
  EXPECT_EQ(pointer_of({{"scenario", "coinduction"}, {"fibre", {{"w", 4}, {"corrupted", {1, 4}}}}}), "/fibre/corrupted/1");
  const Json battery{{"scenarios", {{{"scenario", "barycentre"}}, {{"scenario", "barycentre"}, {"trials", 0}}}}};
  EXPECT_EQ(pointer_of(battery), "/scenarios/1/trials");
  EXPECT_EQ(pointer_of({{"scenarios", {{{"scenario", "nope"}}}}}), "/scenarios/0/scenario");
  EXPECT_EQ(pointer_of({{"scenarios", Json::array()}}), "/scenarios");
}

TEST(Config, CrossFieldRules) {
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"p", {0.6, 0.6}}}), "/p");
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"p", {0.9, 0.1}}, {"q", {0.5, 0.5}}}), "/q");
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"cov_eps", 0.3}}), "/cov_eps");
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"colour", "red"}}), "/colour");
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"sofic", {{"kind", "torus"}}}}), "/sofic/kind");
  EXPECT_EQ(pointer_of({{"scenario", "mixture_example"}, {"alphabet", {"x", "x"}}}), "/alphabet");
  EXPECT_EQ(pointer_of({{"scenario", "aep_conditioning"}, {"h_list", {"H(r)"}}}), "/h_list/0");
  EXPECT_EQ(pointer_of({{"scenario", "covering_bounds"}, {"h_list", {0.3, 1.2}}}), "/h_list/1");
  EXPECT_EQ(pointer_of({{"scenario", "barycentre"}}), "<accepted>");
  const Json dup{{"scenarios", {{{"scenario", "barycentre"}, {"id", "x"}}, {{"scenario", "barycentre"}, {"id", "x"}}}}};
  EXPECT_EQ(pointer_of(dup), "/scenarios/1/id");
}

TEST(Config, DefaultIdsAreDistinct) {
  const auto plan = sl::plan_experiment({{"scenarios", {{{"scenario", "barycentre"}}, {{"scenario", "barycentre"}}}}});
  ASSERT_EQ(plan.size(), 2U);
  EXPECT_EQ(plan[0].id, "barycentre");
  EXPECT_EQ(plan[1].id, "barycentre_2");
}

TEST(Config, SeedOverrideReplacesEverySeedField) {
  const auto plan = sl::plan_experiment({{"scenario", "mixture_example"}, {"seeds", {1, 2, 3}}, {"seed", 4}}, 77);
  EXPECT_EQ(plan[0].config["seed"], 77);
  ASSERT_EQ(plan[0].config["seeds"].size(), 3U);
  for (std::uint64_t i = 0; i < 3; ++i) EXPECT_EQ(plan[0].config["seeds"][i].get<std::uint64_t>(), sl::derive_seed(77, i));
  const auto c = sl::plan_experiment({{"scenario", "coinduction"}}, 5);
  EXPECT_EQ(c[0].config["fibre"]["seed"], 5);
}

TEST(Output, FnvReferenceValues) {
  EXPECT_EQ(sl::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(sl::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(sl::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Output, NumbersRoundTripThroughText) {
  sl::Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.below(200)) - 100);
    EXPECT_EQ(std::stod(sl::format_number(x)), x);
  }
  EXPECT_EQ(sl::format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(sl::format_number(0.1), "0.1");
}

TEST(Output, TableRowsMustMatchColumns) {
  sl::Table t("t", "m", "op", {"a", "b"});
  t.row(1, 0.5);
  EXPECT_THROW(t.row(1), sl::InvalidArgument);
  EXPECT_EQ(t.csv(), "a,b\n1,0.5\n");
  const auto parsed = sl::parse_csv(t.csv());
  EXPECT_EQ(parsed.num(0, "b"), 0.5);
}

TEST(Output, CoinductionScenarioInProcess) {
  const auto dir = std::filesystem::temp_directory_path() / "soficlab_inproc";
  std::filesystem::remove_all(dir);
  sl::ExperimentOptions opt;
  opt.out = dir;
  const Json cfg{{"scenario", "coinduction"}, {"n_list", {10, 100}}, {"w_list", {2, 3}}, {"cov_n_list", {4}},
                 {"fibre", {{"n", 20}, {"w", 4}, {"corrupted", {2}}}}};
  const auto summary = sl::run_experiment(cfg, opt);
  EXPECT_TRUE(summary.all_checks_passed);
  // Oracle: H(p^{x n}) = n H(p) for the default p = (0.9, 0.1).
  const double hp = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  const auto t = sl::parse_csv(sl::detail::read_file(dir / "coinduction" / "additivity.csv"));
  ASSERT_EQ(t.rows.size(), 4U);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_NEAR(t.num(i, "h_mu"), t.num(i, "n") * hp, 1e-9 * t.num(i, "n"));
    EXPECT_NEAR(t.num(i, "h_coinduced"), t.num(i, "w") * t.num(i, "n") * hp, 1e-9 * t.num(i, "n") * t.num(i, "w"));
  }
  const auto fs = sl::parse_csv(sl::detail::read_file(dir / "coinduction" / "fibre_summary.csv"));
  EXPECT_EQ(fs.num(0, "z_fraction"), 0.75);
  const auto report = sl::verify_output(dir);
  EXPECT_TRUE(report.passed()) << report.tsv();
  std::filesystem::remove_all(dir);
}
