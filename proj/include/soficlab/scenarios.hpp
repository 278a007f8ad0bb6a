#ifndef SOFICLAB_SCENARIOS_HPP
#define SOFICLAB_SCENARIOS_HPP

// Prepackaged experiments. Each scenario reads a JSON config, runs the
// library operations over its n series and returns tables, window
// distributions and per-instance checks. No wall-clock data is recorded here.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "soficlab/config.hpp"
#include "soficlab/constructions.hpp"
#include "soficlab/convergence.hpp"
#include "soficlab/entropy.hpp"
#include "soficlab/sofic.hpp"

namespace soficlab {

// ---------------------------------------------------------------------------
// Results.

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string format_field(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_number(static_cast<double>(v));
  } else if constexpr (std::is_same_v<T, std::optional<double>>) {
    return v ? format_number(*v) : std::string{};
  } else if constexpr (std::is_same_v<T, std::optional<int>>) {
    return v ? std::to_string(*v) : std::string{};
  } else {
    return std::string(v);
  }
}

class Table {
public:
  Table(std::string name, std::string module, std::string operation, std::vector<std::string> columns)
      : name_(std::move(name)), module_(std::move(module)), operation_(std::move(operation)),
        columns_(std::move(columns)) {}

  template <typename... Ts>
  void row(const Ts&... values) {
    require(sizeof...(Ts) == columns_.size(), "table " + name_ + ": row has the wrong number of fields");
    rows_.push_back({format_field(values)...});
  }

  const std::string& name() const { return name_; }
  const std::string& module() const { return module_; }
  const std::string& operation() const { return operation_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += '\n';
    }
    return out;
  }

private:
  std::string name_, module_, operation_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct WindowTable {
  std::string name;
  std::string module;
  std::string operation;
  WindowDistribution dist;
  std::vector<std::string> symbols;
};

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // <=, >=, ==
  double bound = 0.0;
  bool passed = false;
};

inline bool check_holds(double value, const std::string& relation, double bound) {
  if (relation == "<=") return value <= bound;
  if (relation == ">=") return value >= bound;
  if (relation == "==") return value == bound;
  throw InvalidArgument("check: unknown relation '" + relation + "'");
}

struct ScenarioResult {
  std::string id;
  std::string scenario;
  std::deque<Table> tables;
  std::vector<WindowTable> windows;
  std::vector<Check> checks;
  nlohmann::json metadata = nlohmann::json::object();

  Table& table(std::string name, std::string module, std::string operation, std::vector<std::string> columns) {
    tables.emplace_back(std::move(name), std::move(module), std::move(operation), std::move(columns));
    return tables.back();
  }

  void check(std::string name, double value, std::string relation, double bound) {
    const bool ok = check_holds(value, relation, bound);
    checks.push_back({std::move(name), value, std::move(relation), bound, ok});
  }

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

struct RunContext {
  unsigned jobs = 1;
  std::uint64_t budget_cells = 10'000'000;
  std::uint64_t budget_samples = 10'000'000;
  std::function<void(const std::string&)> log;

  void note(const std::string& s) const {
    if (log) log(s);
  }

  void use_samples(std::uint64_t samples) const {
    if (samples > budget_samples) {
      throw BudgetExceeded("samples = " + std::to_string(samples) + " exceeds the sample budget " +
                           std::to_string(budget_samples));
    }
  }

  TableOptions table() const { return TableOptions{budget_cells}; }

  ConvergenceOptions convergence(std::uint64_t samples, std::uint64_t seed) const {
    use_samples(samples);
    ConvergenceOptions o;
    o.samples = samples;
    o.seed = seed;
    o.jobs = jobs;
    o.marginal.jobs = jobs;
    o.marginal.seed = derive_seed(seed, 0x3a);
    o.marginal.table = table();
    return o;
  }
};

// ---------------------------------------------------------------------------
// Config pieces shared by several scenarios.

struct SoficSpec {
  std::string kind = "random_free";  // random_free | cyclic
  int rank = 2;
};

inline SoficSpec read_sofic(ConfigReader r, const std::string& default_kind) {
  SoficSpec s;
  s.kind = r.text("kind", default_kind);
  r.check(s.kind == "random_free" || s.kind == "cyclic", "kind", "must be \"random_free\" or \"cyclic\"");
  s.rank = static_cast<int>(r.count("rank", 2, 1));
  r.check(s.kind != "cyclic" || s.rank == 1 || !r.has("rank"), "rank", "cyclic approximations have rank 1");
  r.finish();
  return s;
}

inline SoficApproximation build_sofic(const SoficSpec& s, std::size_t n, std::uint64_t seed) {
  if (s.kind == "cyclic") return cyclic_sofic(static_cast<Vertex>(n));
  return random_sofic(s.rank, static_cast<Vertex>(n), seed);
}

inline nlohmann::json sofic_metadata(const SoficSpec& s) {
  return {{"kind", s.kind}, {"rank", s.kind == "cyclic" ? 1 : s.rank}, {"word_maps", "generator_composition"}};
}

inline std::vector<std::string> read_alphabet(ConfigReader& r, std::size_t size) {
  std::vector<std::string> a;
  if (!r.has("alphabet")) {
    for (std::size_t i = 0; i < size; ++i) a.push_back(std::to_string(i));
    return a;
  }
  const auto& j = r.raw("alphabet");
  r.check(j.is_array() && j.size() == size, "alphabet", "must list " + std::to_string(size) + " symbols");
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError(r.where("alphabet") + "/" + std::to_string(i), "must be a string");
    a.push_back(j[i].get<std::string>());
  }
  if (std::set<std::string>(a.begin(), a.end()).size() != a.size()) r.fail("alphabet", "symbols must be distinct");
  return a;
}

inline std::vector<double> read_eps(ConfigReader& r, const std::string& key, std::vector<double> fallback,
                                    double hi = 1.0) {
  auto eps = r.numbers(key, std::move(fallback));
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!(eps[i] > 0.0 && eps[i] < hi))
      throw SchemaError(r.where(key) + "/" + std::to_string(i), "must lie in (0, " + format_number(hi) + ")");
  return eps;
}

inline Measure mixture_measure(const std::vector<double>& p, const std::vector<double>& q, std::size_t n) {
  return mixture({0.5, 0.5}, {iid_product(p, n), iid_product(q, n)});
}

inline double h_of(const std::vector<double>& p) { return entropy_nats(p); }

// Rows of a conditioned table with their sandwich bounds.
inline void sandwich_rows(Table& t, const std::string& tag, const ConditioningResult& r, const TypeClassTable& cond) {
  const double n = static_cast<double>(cond.vertex_count);
  const double lo = -r.band.a_hi * n - r.log_event_mass;
  const double hi = -r.band.a_lo * n - r.log_event_mass;
  for (const auto& row : cond.rows) t.row(tag, r.h, r.k, cond.vertex_count, row.log_mass, row.log_mult, lo, hi);
}

inline const std::vector<std::string>& sandwich_columns() {
  static const std::vector<std::string> c{"instance", "h", "k", "n", "log_mass", "log_mult", "lower", "upper"};
  return c;
}

// ---------------------------------------------------------------------------
// Mixture example: 1/2 p^V + 1/2 q^V on random free-group approximations.

struct MixtureExampleConfig {
  std::string id;
  std::vector<std::string> alphabet;
  std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  std::vector<std::uint64_t> n_list{250, 500, 1000};
  std::vector<double> eps_list{0.25, 0.1, 0.05, 0.01};
  double cov_eps = 0.05;
  SoficSpec sofic;
  std::vector<std::uint64_t> seeds{1};
  int window_radius = 1;
  double tol = 0.05;
  std::uint64_t samples = 10'000;
  std::uint64_t seed = 1;
  int k = 10;
  double band_eps = 0.2;
};

inline MixtureExampleConfig parse_mixture_example(ConfigReader r, const std::string& id) {
  MixtureExampleConfig c;
  c.id = id;
  c.p = r.distribution("p", c.p);
  c.q = r.distribution("q", c.q);
  r.check(c.q.size() == c.p.size(), "q", "must have the same length as p");
  r.check(h_of(c.p) > h_of(c.q), "q", "needs H(p) > H(q)");
  c.alphabet = read_alphabet(r, c.p.size());
  c.n_list = r.increasing_sizes("n_list", c.n_list, 2);
  r.check(c.n_list.size() >= 2, "n_list", "needs at least two sizes for a rate");
  c.eps_list = read_eps(r, "eps_list", c.eps_list);
  c.cov_eps = r.number("cov_eps", c.cov_eps);
  r.check(std::find(c.eps_list.begin(), c.eps_list.end(), c.cov_eps) != c.eps_list.end(), "cov_eps",
          "must appear in eps_list");
  c.sofic = read_sofic(r.object("sofic"), "random_free");
  c.seeds = r.counts("seeds", c.seeds);
  c.window_radius = static_cast<int>(r.count("window_radius", 1));
  c.tol = r.number("tol", c.tol);
  r.check(c.tol > 0.0 && c.tol <= 1.0, "tol", "must lie in (0, 1]");
  c.samples = r.count("samples", c.samples, 1);
  c.seed = r.count("seed", c.seed);
  c.k = static_cast<int>(r.count("k", 10, 1));
  c.band_eps = r.number("band_eps", c.band_eps);
  r.check(c.band_eps > 0.0, "band_eps", "must be positive");
  r.finish();
  return c;
}

inline ScenarioResult run_mixture_example(const MixtureExampleConfig& c, const RunContext& ctx) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "mixture_example";
  const Partition part = Partition::singletons(c.p.size());
  const std::size_t cells = part.cell_count();
  const double hp = h_of(c.p), hq = h_of(c.q);

  auto& cov = out.table("covering", "entropy", "covering_number",
                        {"n", "eps", "cells", "log_cov", "cov_rate", "h_nats", "h_rate", "slack"});
  auto& aep = out.table("aep", "entropy", "aep_check", {"n", "h", "eps", "typical_mass", "strong"});
  std::map<double, std::vector<std::pair<double, double>>> series;
  double min_slack = std::numeric_limits<double>::infinity();
  for (auto n : c.n_list) {
    ctx.note("mixture_example: type classes at n = " + std::to_string(n));
    const TypeClassTable t = build_type_classes(mixture_measure(c.p, c.q, n), part, ctx.table());
    const double h = table_entropy(t);
    const double nn = static_cast<double>(n);
    for (double eps : c.eps_list) {
      const auto cv = covering_from_table(t, eps);
      const double slack = covering_entropy_slack(h, cv.log_count, eps, n, cells);
      min_slack = std::min(min_slack, slack);
      cov.row(n, eps, cells, cv.log_count, cv.log_count / nn, h, h / nn, slack);
      series[eps].emplace_back(nn, cv.log_count);
    }
    for (const auto& e : aep_from_table(t, hp, c.eps_list).entries) aep.row(n, hp, e.eps, e.typical_mass, e.strong);
  }
  auto& rates = out.table("rates", "entropy", "rate_estimate", {"eps", "slope", "intercept", "target", "rel_err"});
  double cov_rel_err = 0.0;
  for (double eps : c.eps_list) {
    const auto fit = rate_estimate(series[eps]);
    const double rel = std::abs(fit.slope / hp - 1.0);
    rates.row(eps, fit.slope, fit.intercept, hp, rel);
    if (eps == c.cov_eps) cov_rel_err = rel;
  }
  out.check("covering_slope_rel_err", cov_rel_err, "<=", 0.02);
  out.check("covering_entropy_min_slack", min_slack, ">=", 0.0);

  // lw*, LE, LDE against the mixture target.
  auto& conv = out.table("convergence", "convergence", "convergence_report",
                         {"n", "seed", "lw_fraction", "non_injective", "le_estimate", "le_lower", "le_upper",
                          "le_mode", "lde_pair_mass", "lde_pair_lw"});
  const std::uint64_t n_max = c.n_list.back();
  double lw_min = 1.0, le_max = 0.0;
  WindowDistribution target;
  std::vector<std::uint64_t> seeds = c.sofic.kind == "cyclic" ? std::vector<std::uint64_t>{0} : c.seeds;
  for (auto n : c.n_list) {
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      ctx.note("mixture_example: convergence at n = " + std::to_string(n) + ", seed " + std::to_string(seeds[si]));
      const auto sigma = build_sofic(c.sofic, n, seeds[si]);
      const auto window = ball(sigma.kind_ptr(), c.window_radius);
      const auto labels = window.labels();
      target = combine({0.5, 0.5}, {iid_window(labels, c.p), iid_window(labels, c.q)});
      const auto u = make_neighbourhood(window, target, c.tol);
      const auto rep = convergence_report(sigma, mixture_measure(c.p, c.q, n), u,
                                          ctx.convergence(c.samples, derive_seed(derive_seed(c.seed, n), si)));
      conv.row(n, seeds[si], rep.lw.fraction, rep.lw.non_injective, rep.le.estimate, rep.le.lower, rep.le.upper,
               rep.le.mode, rep.lde.pair_mass.estimate, rep.lde.pair_lw_fraction);
      if (n == n_max) {
        lw_min = std::min(lw_min, rep.lw.fraction);
        le_max = std::max(le_max, rep.le.estimate);
      }
    }
  }
  out.check("lw_fraction_at_max_n", lw_min, ">=", 0.95);
  out.check("le_mass_at_max_n", le_max, "<=", 0.05);
  out.windows.push_back({"target", "measures", "window_marginal", target, c.alphabet});
  {
    const auto sigma = build_sofic(c.sofic, n_max, seeds.front());
    Rng rng(derive_seed(c.seed, 0xe3));
    const auto x = sample(mixture_measure(c.p, c.q, n_max), rng);
    const auto window = ball(sigma.kind_ptr(), c.window_radius);
    out.windows.push_back(
        {"empirical", "convergence", "empirical_distribution", empirical_distribution(sigma, x, window, c.p.size()), c.alphabet});
  }

  // Conditioning on the bands around H(p) and H(q).
  auto& cond = out.table("conditioning", "constructions", "aep_condition",
                         {"instance", "h", "k", "n", "event_mass", "log_event_mass", "cond_rate", "band_classes",
                          "upper_classes", "lower_classes", "sandwich_violations", "sandwich_checked",
                          "strong_threshold", "strong_band_mass", "band_eps", "band_mass"});
  auto& sw = out.table("sandwich", "constructions", "aep_condition", sandwich_columns());
  std::size_t violations = 0;
  double strong_min = 1.0;
  for (const auto& [tag, h] : std::vector<std::pair<std::string, double>>{{"H(p)", hp}, {"H(q)", hq}}) {
    for (auto n : c.n_list) {
      const auto r = aep_condition(mixture_measure(c.p, c.q, n), part, h, c.k, ctx.table());
      const auto ct = build_type_classes(r.measure, part, ctx.table());
      const double rate = table_entropy(ct) / static_cast<double>(n);
      const double thr = strong_aep_threshold(r, n);
      const auto a = aep_from_table(ct, h, {thr + 1e-9, c.band_eps});
      violations += r.sandwich_violations;
      strong_min = std::min(strong_min, a.entries[0].typical_mass);
      cond.row(tag, h, c.k, n, r.event_mass, r.log_event_mass, rate, r.band_cells.classes, r.upper_set.classes,
               r.lower_set.classes, r.sandwich_violations, r.sandwich_checked, thr, a.entries[0].typical_mass,
               c.band_eps, a.entries[1].typical_mass);
      sandwich_rows(sw, tag, r, ct);
      if (n != n_max) continue;
      if (h == hq) {
        out.check("q_band_event_mass_low", r.event_mass, ">=", 0.4);
        out.check("q_band_event_mass_high", r.event_mass, "<=", 0.6);
        out.check("q_band_rate_rel_err", std::abs(rate / hq - 1.0), "<=", 0.03);
      } else {
        out.check("p_band_event_mass_low", r.event_mass, ">=", 0.45);
        out.check("p_band_event_mass_high", r.event_mass, "<=", 0.55);
        out.check("p_band_mass_at_band_eps", a.entries[1].typical_mass, ">=", 1.0 - 1e-12);
      }
    }
  }
  out.check("sandwich_violations", static_cast<double>(violations), "==", 0.0);
  out.check("strong_aep_at_threshold", strong_min, ">=", 1.0 - 1e-12);

  out.metadata = {{"p", c.p},
                  {"q", c.q},
                  {"alphabet", c.alphabet},
                  {"sofic", sofic_metadata(c.sofic)},
                  {"seeds", seeds},
                  {"seed", c.seed},
                  {"window", ball(build_sofic(c.sofic, 2, 0).kind_ptr(), c.window_radius).labels()},
                  {"window_radius", c.window_radius},
                  {"tol", c.tol},
                  {"samples", c.samples},
                  {"k", c.k},
                  {"expansion", "assumed, not verified"}};
  return out;
}

// ---------------------------------------------------------------------------
// Conditioning stability: mu_n vs mu_n( . | A_n).

struct ConditioningStabilityConfig {
  std::string id;
  std::vector<std::string> alphabet;
  std::vector<double> p{0.5, 0.5};
  std::vector<std::uint64_t> n_list{64, 128, 256, 512, 1024};
  SoficSpec sofic{"cyclic", 1};
  std::vector<std::uint64_t> seeds{1};
  int window_radius = 1;
  double tol = 0.05;
  std::uint64_t samples = 10'000;
  std::uint64_t seed = 1;
  std::string event = "majority";  // majority | full
  std::uint64_t event_cell = 0;
  double mass_floor = 0.49;
  double lw_target = 0.99;
  std::uint64_t max_rejections = 1'000'000;
};

inline ConditioningStabilityConfig parse_conditioning_stability(ConfigReader r, const std::string& id) {
  ConditioningStabilityConfig c;
  c.id = id;
  c.p = r.distribution("p", c.p);
  c.alphabet = read_alphabet(r, c.p.size());
  c.n_list = r.increasing_sizes("n_list", c.n_list, 2);
  c.sofic = read_sofic(r.object("sofic"), "cyclic");
  c.seeds = r.counts("seeds", c.seeds);
  c.window_radius = static_cast<int>(r.count("window_radius", 1));
  c.tol = r.number("tol", c.tol);
  r.check(c.tol > 0.0 && c.tol <= 1.0, "tol", "must lie in (0, 1]");
  c.samples = r.count("samples", c.samples, 1);
  c.seed = r.count("seed", c.seed);
  {
    auto ev = r.object("event");
    c.event = ev.text("type", "majority");
    ev.check(c.event == "majority" || c.event == "full", "type", "must be \"majority\" or \"full\"");
    c.event_cell = ev.count("cell", 0);
    ev.check(c.event_cell < c.p.size(), "cell", "must index a symbol");
    ev.finish();
  }
  c.mass_floor = r.number("mass_floor", c.mass_floor);
  r.check(c.mass_floor > 0.0 && c.mass_floor <= 1.0, "mass_floor", "must lie in (0, 1]");
  c.lw_target = r.number("lw_target", c.lw_target);
  c.max_rejections = r.count("max_rejections", c.max_rejections, 1);
  r.finish();
  return c;
}

inline ScenarioResult run_conditioning_stability(const ConditioningStabilityConfig& c, const RunContext& ctx) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "conditioning_stability";
  const Partition part = Partition::singletons(c.p.size());
  auto& st = out.table("stability", "convergence", "convergence_report",
                       {"n", "seed", "variant", "event_mass", "lw_fraction", "le_estimate", "le_lower", "le_upper",
                        "le_half_width", "le_mode", "lde_pair_mass", "lde_pair_lw"});
  auto& bd = out.table("bound", "constructions", "conditioning_stability",
                       {"n", "seed", "mass_floor", "event_mass", "uncond_bad", "uncond_half_width", "cond_bad",
                        "cond_half_width", "bound", "holds"});
  std::size_t failures = 0;
  double min_mass = 1.0, lw_last = 1.0;
  bool identical = true;
  const std::vector<std::uint64_t> seeds = c.sofic.kind == "cyclic" ? std::vector<std::uint64_t>{0} : c.seeds;
  for (auto n : c.n_list) {
    const Measure mu = iid_product(c.p, n);
    Event ev{part, std::nullopt, {}, {}};
    if (c.event == "majority")
      ev.bounds.push_back({static_cast<Cell>(c.event_cell), Cmp::GreaterEqual, static_cast<double>(n) / 2.0});
    const Measure nu = conditioned(mu, ev, ConditionOptions{ctx.table(), 0.0});
    const double mass = std::exp(nu.as<ConditionedNode>()->log_event_mass);
    min_mass = std::min(min_mass, mass);
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      ctx.note("conditioning_stability: n = " + std::to_string(n));
      const auto sigma = build_sofic(c.sofic, n, seeds[si]);
      const auto window = ball(sigma.kind_ptr(), c.window_radius);
      const auto u = make_neighbourhood(window, iid_window(window.labels(), c.p), c.tol);
      auto opt = ctx.convergence(c.samples, derive_seed(derive_seed(c.seed, n), si));
      opt.sampling.max_rejections = c.max_rejections;
      const auto a = convergence_report(sigma, mu, u, opt);
      const auto b = convergence_report(sigma, nu, u, opt);
      st.row(n, seeds[si], "unconditioned", 1.0, a.lw.fraction, a.le.estimate, a.le.lower, a.le.upper,
             a.le.half_width, a.le.mode, a.lde.pair_mass.estimate, a.lde.pair_lw_fraction);
      st.row(n, seeds[si], "conditioned", mass, b.lw.fraction, b.le.estimate, b.le.lower, b.le.upper,
             b.le.half_width, b.le.mode, b.lde.pair_mass.estimate, b.lde.pair_lw_fraction);
      const double ub = 1.0 - a.le.estimate, cb = 1.0 - b.le.estimate;
      const double bound = ub / c.mass_floor + b.le.half_width + a.le.half_width / c.mass_floor;
      const bool holds = cb <= bound;
      failures += holds ? 0 : 1;
      bd.row(n, seeds[si], c.mass_floor, mass, ub, a.le.half_width, cb, b.le.half_width, bound, holds);
      if (n == c.n_list.back()) lw_last = std::min(lw_last, b.lw.fraction);
      identical = identical && a.lw.fraction == b.lw.fraction && a.le.estimate == b.le.estimate &&
                  a.lde.pair_mass.estimate == b.lde.pair_mass.estimate;
    }
  }
  out.check("conditioning_bound_failures", static_cast<double>(failures), "==", 0.0);
  out.check("min_event_mass", min_mass, ">=", c.mass_floor);
  out.check("conditioned_lw_at_max_n", lw_last, ">=", c.lw_target);
  if (c.event == "full") out.check("full_event_series_identical", identical ? 1.0 : 0.0, "==", 1.0);
  {
    const auto sigma = build_sofic(c.sofic, c.n_list.back(), seeds.front());
    const auto window = ball(sigma.kind_ptr(), c.window_radius);
    out.windows.push_back({"target", "measures", "window_marginal", iid_window(window.labels(), c.p), c.alphabet});
  }
  out.metadata = {{"p", c.p},
                  {"alphabet", c.alphabet},
                  {"sofic", sofic_metadata(c.sofic)},
                  {"seeds", seeds},
                  {"seed", c.seed},
                  {"window_radius", c.window_radius},
                  {"tol", c.tol},
                  {"samples", c.samples},
                  {"event", c.event == "majority" ? "count of cell " + std::to_string(c.event_cell) + " >= n/2" : "full"},
                  {"mass_floor", c.mass_floor}};
  return out;
}

// ---------------------------------------------------------------------------
// Co-induction: Shannon additivity, covering monotonicity, fibre selection.

struct CoinductionConfig {
  std::string id;
  std::vector<std::string> alphabet;
  std::vector<double> p{0.9, 0.1};
  std::vector<std::uint64_t> n_list{10, 100, 1000};
  std::vector<std::uint64_t> w_list{2, 4, 8};
  std::vector<std::uint64_t> cov_n_list{4, 8, 16};
  std::vector<std::uint64_t> cov_w_list{2, 3};
  std::vector<double> cov_eps_list{0.05, 0.2, 0.4};
  std::uint64_t fibre_n = 100;
  std::uint64_t fibre_w = 16;
  std::vector<std::uint64_t> corrupted{7};
  SoficSpec sofic{"cyclic", 1};
  std::uint64_t sofic_seed = 1;
  int window_radius = 1;
  double tol = 0.05;
  double fibre_eps = 0.05;
};

inline CoinductionConfig parse_coinduction(ConfigReader r, const std::string& id) {
  CoinductionConfig c;
  c.id = id;
  c.p = r.distribution("p", c.p);
  c.alphabet = read_alphabet(r, c.p.size());
  c.n_list = r.increasing_sizes("n_list", c.n_list);
  c.w_list = r.counts("w_list", c.w_list, 1);
  c.cov_n_list = r.increasing_sizes("cov_n_list", c.cov_n_list);
  c.cov_w_list = r.counts("cov_w_list", c.cov_w_list, 1);
  c.cov_eps_list = read_eps(r, "cov_eps_list", c.cov_eps_list, 0.5);
  auto f = r.object("fibre");
  c.fibre_n = f.count("n", c.fibre_n, 2);
  c.fibre_w = f.count("w", c.fibre_w, 1);
  c.corrupted = f.has("corrupted") && f.raw("corrupted").empty() ? std::vector<std::uint64_t>{}
                                                                 : f.counts("corrupted", c.corrupted);
  for (std::size_t i = 0; i < c.corrupted.size(); ++i)
    if (c.corrupted[i] >= c.fibre_w)
      throw SchemaError(f.where("corrupted") + "/" + std::to_string(i), "must index a fibre below w");
  c.sofic = read_sofic(f.object("sofic"), "cyclic");
  c.sofic_seed = f.count("seed", c.sofic_seed);
  c.window_radius = static_cast<int>(f.count("window_radius", 1));
  c.tol = f.number("tol", c.tol);
  f.check(c.tol > 0.0 && c.tol <= 1.0, "tol", "must lie in (0, 1]");
  c.fibre_eps = f.number("eps", c.fibre_eps);
  f.check(c.fibre_eps > 0.0 && c.fibre_eps <= 1.0, "eps", "must lie in (0, 1]");
  f.finish();
  r.finish();
  return c;
}

inline ScenarioResult run_coinduction(const CoinductionConfig& c, const RunContext& ctx) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "coinduction";
  const Partition part = Partition::singletons(c.p.size());
  EntropyOptions eopt;
  eopt.table = ctx.table();

  auto& add = out.table("additivity", "entropy", "shannon_entropy",
                        {"n", "w", "h_mu", "h_coinduced", "w_times_h_mu", "rel_err"});
  double max_rel = 0.0;
  for (auto n : c.n_list) {
    const Measure mu = iid_product(c.p, n);
    const double h = shannon_entropy(mu, part, eopt).h_nats;
    for (auto w : c.w_list) {
      const double hw = shannon_entropy(coinduct_measure(mu, w), part, eopt).h_nats;
      const double expect = static_cast<double>(w) * h;
      const double rel = expect > 0.0 ? std::abs(hw - expect) / expect : std::abs(hw);
      max_rel = std::max(max_rel, rel);
      add.row(n, w, h, hw, expect, rel);
    }
  }
  out.check("additivity_max_rel_err", max_rel, "<=", 1e-9);

  auto& cov = out.table("covering", "entropy", "covering_number",
                        {"n", "w", "eps", "log_cov_mu", "log_cov_coinduced", "monotone"});
  std::size_t cov_bad = 0;
  for (auto n : c.cov_n_list) {
    const Measure mu = iid_product(c.p, n);
    for (auto w : c.cov_w_list) {
      const Measure nu = coinduct_measure(mu, w);
      for (double eps : c.cov_eps_list) {
        const double a = covering_number(mu, part, eps, ctx.table()).log_count;
        const double b = covering_number(nu, part, eps, ctx.table()).log_count;
        const bool ok = b >= a;
        cov_bad += ok ? 0 : 1;
        cov.row(n, w, eps, a, b, ok);
      }
    }
  }
  out.check("covering_monotone_violations", static_cast<double>(cov_bad), "==", 0.0);

  // One measure per fibre; corrupted fibres carry uniform noise.
  const Measure mu = iid_product(c.p, c.fibre_n);
  const Measure noise = iid_product(std::vector<double>(c.p.size(), 1.0 / static_cast<double>(c.p.size())), c.fibre_n);
  std::vector<Measure> fibres(c.fibre_w, mu);
  for (auto w : c.corrupted) fibres[w] = noise;
  const Measure nu = fibre_product(fibres);
  const auto sigma = build_sofic(c.sofic, c.fibre_n, c.sofic_seed);
  const auto window = ball(sigma.kind_ptr(), c.window_radius);
  const auto u = make_neighbourhood(window, iid_window(window.labels(), c.p), c.tol);
  const auto rep = fibre_lw_check(nu, sigma, c.fibre_w, u, c.fibre_eps, ctx.convergence(0, derive_seed(c.sofic_seed, 0xf1)));
  auto& fb = out.table("fibre", "constructions", "fibre_lw_check", {"w", "corrupted", "fraction", "in_z"});
  for (std::size_t w = 0; w < c.fibre_w; ++w) {
    const bool corrupt = std::find(c.corrupted.begin(), c.corrupted.end(), w) != c.corrupted.end();
    const bool in_z = std::find(rep.z.begin(), rep.z.end(), w) != rep.z.end();
    fb.row(w, corrupt, rep.fraction[w], in_z);
  }
  auto& fs = out.table("fibre_summary", "constructions", "fibre_lw_check",
                       {"w_count", "corrupted", "z_fraction", "expected", "bad_vertex_mass", "eps", "markov_ok"});
  std::set<std::uint64_t> distinct(c.corrupted.begin(), c.corrupted.end());
  const double expected = static_cast<double>(c.fibre_w - distinct.size()) / static_cast<double>(c.fibre_w);
  fs.row(c.fibre_w, distinct.size(), rep.z_fraction, expected, rep.bad_vertex_mass, rep.eps, rep.markov_ok);
  out.check("z_fraction", rep.z_fraction, "==", expected);
  out.check("markov_consistent", rep.markov_ok ? 1.0 : 0.0, "==", 1.0);

  // Fibre marginals of mu^{x W} against mu itself.
  const Measure pure = coinduct_measure(mu, c.fibre_w);
  const auto wm_mu = window_marginal(mu, sigma, 0, window).dist;
  bool equal = true;
  for (std::size_t w = 0; w < c.fibre_w; ++w) equal = equal && window_marginal(fibre(pure, w), sigma, 0, window).dist == wm_mu;
  out.check("fibre_marginals_equal_mu", equal ? 1.0 : 0.0, "==", 1.0);
  out.windows.push_back({"mu_marginal", "measures", "window_marginal", wm_mu, c.alphabet});
  out.windows.push_back(
      {"fibre0_marginal", "measures", "window_marginal", window_marginal(fibre(pure, 0), sigma, 0, window).dist, c.alphabet});

  out.metadata = {{"p", c.p},
                  {"alphabet", c.alphabet},
                  {"sofic", sofic_metadata(c.sofic)},
                  {"sofic_seed", c.sofic_seed},
                  {"window", window.labels()},
                  {"tol", c.tol},
                  {"fibre_eps", c.fibre_eps},
                  {"corrupted", c.corrupted},
                  {"noise", "uniform"}};
  return out;
}

// ---------------------------------------------------------------------------
// AEP conditioning: event masses, sandwich, strong AEP, diagonal selection
// and the transfer to big enough subsets.

struct AepConditioningConfig {
  std::string id;
  std::vector<std::string> alphabet;
  std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  std::vector<std::uint64_t> n_list{25, 50, 100, 200, 400, 800};
  std::vector<std::uint64_t> k_list{2, 4, 6, 8, 10, 12};
  std::vector<std::string> h_names{"H(p)", "H(q)"};
  std::vector<double> h_list;
  double floor_root = 1.0;  // log floor = -floor_root * sqrt(n)
  double score_factor = 1.0;  // score = conditioned band mass at eps = score_factor / k
  std::uint64_t transfer_n = 1000;
  double transfer_eps = 0.1;
  double transfer_band = 0.1;
  double counterexample_rate = 0.5;  // nu(B) = e^{-rate n} nu(A) up to rounding
};

inline AepConditioningConfig parse_aep_conditioning(ConfigReader r, const std::string& id) {
  AepConditioningConfig c;
  c.id = id;
  c.p = r.distribution("p", c.p);
  c.q = r.distribution("q", c.q);
  r.check(c.q.size() == c.p.size(), "q", "must have the same length as p");
  r.check(c.p.size() == 2, "p", "the transfer counterexample pins binary symbols; use a two-letter alphabet");
  c.alphabet = read_alphabet(r, c.p.size());
  c.n_list = r.increasing_sizes("n_list", c.n_list);
  c.k_list = r.increasing_sizes("k_list", c.k_list);
  if (r.has("h_list")) {
    const auto& j = r.raw("h_list");
    r.check(j.is_array() && !j.empty(), "h_list", "must be a non-empty array");
    c.h_names.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string at = r.where("h_list") + "/" + std::to_string(i);
      if (j[i].is_string()) {
        const auto s = j[i].get<std::string>();
        if (s != "H(p)" && s != "H(q)") throw SchemaError(at, "must be a number, \"H(p)\" or \"H(q)\"");
        c.h_names.push_back(s);
      } else if (j[i].is_number() && j[i].get<double>() >= 0.0) {
        c.h_names.push_back(format_number(j[i].get<double>()));
      } else {
        throw SchemaError(at, "must be a nonnegative number, \"H(p)\" or \"H(q)\"");
      }
    }
  }
  for (const auto& s : c.h_names)
    c.h_list.push_back(s == "H(p)" ? h_of(c.p) : s == "H(q)" ? h_of(c.q) : std::stod(s));
  c.floor_root = r.number("floor_root", c.floor_root);
  r.check(c.floor_root > 0.0, "floor_root", "must be positive");
  c.score_factor = r.number("score_factor", c.score_factor);
  r.check(c.score_factor > 0.0, "score_factor", "must be positive");
  auto t = r.object("transfer");
  c.transfer_n = t.count("n", c.transfer_n, 2);
  c.transfer_eps = t.number("eps", c.transfer_eps);
  t.check(c.transfer_eps > 0.0, "eps", "must be positive");
  c.transfer_band = t.number("band", c.transfer_band);
  t.check(c.transfer_band > 0.0, "band", "must be positive");
  c.counterexample_rate = t.number("counterexample_rate", c.counterexample_rate);
  t.check(c.counterexample_rate > 0.0 && c.counterexample_rate < std::log(2.0), "counterexample_rate",
          "must lie in (0, log 2)");
  t.finish();
  r.finish();
  return c;
}

inline ScenarioResult run_aep_conditioning(const AepConditioningConfig& c, const RunContext& ctx) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "aep_conditioning";
  const Partition part = Partition::singletons(c.p.size());
  auto& cond = out.table("conditioning", "constructions", "aep_condition",
                         {"instance", "h", "k", "n", "empty_band", "event_mass", "log_event_mass", "band_classes",
                          "sandwich_violations", "sandwich_checked", "strong_threshold", "strong_band_mass",
                          "score_eps", "score"});
  auto& sw = out.table("sandwich", "constructions", "aep_condition", sandwich_columns());
  auto& dg = out.table("diagonal", "constructions", "diagonal_select", {"instance", "h", "n", "log_floor", "k_selected"});
  auto& rd = out.table("readiness", "constructions", "diagonal_select", {"instance", "h", "k", "ready_n"});
  std::size_t violations = 0, nondecreasing_bad = 0;
  double strong_min = 1.0;
  for (std::size_t hi = 0; hi < c.h_list.size(); ++hi) {
    const double h = c.h_list[hi];
    DiagonalInput in;
    for (auto n : c.n_list) in.n_values.push_back(n);
    in.log_floor = [&](std::size_t n) { return -c.floor_root * std::sqrt(static_cast<double>(n)); };
    for (auto k : c.k_list) {
      in.k_values.push_back(static_cast<int>(k));
      in.thresholds.push_back(1.0 - 1e-12);
      std::vector<double> scores, masses;
      for (auto n : c.n_list) {
        const double score_eps = c.score_factor / static_cast<double>(k);
        try {
          const auto r = aep_condition(mixture_measure(c.p, c.q, n), part, h, static_cast<int>(k), ctx.table());
          const auto ct = build_type_classes(r.measure, part, ctx.table());
          const double thr = strong_aep_threshold(r, n);
          const auto a = aep_from_table(ct, h, {thr + 1e-9, score_eps});
          violations += r.sandwich_violations;
          strong_min = std::min(strong_min, a.entries[0].typical_mass);
          cond.row(c.h_names[hi], h, k, n, false, r.event_mass, r.log_event_mass, r.band_cells.classes,
                   r.sandwich_violations, r.sandwich_checked, thr, a.entries[0].typical_mass, score_eps,
                   a.entries[1].typical_mass);
          sandwich_rows(sw, c.h_names[hi], r, ct);
          scores.push_back(a.entries[1].typical_mass);
          masses.push_back(r.log_event_mass);
        } catch (const EmptyBand&) {
          cond.row(c.h_names[hi], h, k, n, true, 0.0, -std::numeric_limits<double>::infinity(), 0, 0, 0,
                   std::numeric_limits<double>::infinity(), 0.0, score_eps, 0.0);
          scores.push_back(0.0);
          masses.push_back(-std::numeric_limits<double>::infinity());
        }
      }
      in.scores.push_back(scores);
      in.log_masses.push_back(masses);
    }
    DiagonalSelection sel;
    try {
      sel = diagonal_select(in);
    } catch (const InvalidArgument&) {
      sel.k_of_n.assign(in.n_values.size(), std::nullopt);
      sel.ready.assign(in.k_values.size(), std::nullopt);
    }
    std::optional<int> prev;
    for (std::size_t i = 0; i < in.n_values.size(); ++i) {
      dg.row(c.h_names[hi], h, in.n_values[i], in.log_floor(in.n_values[i]), sel.k_of_n[i]);
      if (prev && (!sel.k_of_n[i] || *sel.k_of_n[i] < *prev)) ++nondecreasing_bad;
      if (sel.k_of_n[i]) prev = sel.k_of_n[i];
    }
    for (std::size_t j = 0; j < in.k_values.size(); ++j) {
      std::optional<double> ready;
      if (j < sel.ready.size() && sel.ready[j]) ready = static_cast<double>(in.n_values[*sel.ready[j]]);
      rd.row(c.h_names[hi], h, in.k_values[j], ready);
    }
    if (hi == 0) {
      out.check("diagonal_last_k_" + c.h_names[hi], sel.k_of_n.back() ? *sel.k_of_n.back() : -1.0, "==",
                static_cast<double>(c.k_list.back()));
    }
  }
  out.check("sandwich_violations", static_cast<double>(violations), "==", 0.0);
  out.check("strong_aep_at_threshold", strong_min, ">=", 1.0 - 1e-12);
  out.check("diagonal_nondecreasing_failures", static_cast<double>(nondecreasing_bad), "==", 0.0);

  // Transfer from the H(p) band A to subsets B.
  const std::size_t n = c.transfer_n;
  const double hp = h_of(c.p);
  const Measure nu = mixture_measure(c.p, c.q, n);
  Event a{part, CellBand{hp - c.transfer_band, hp + c.transfer_band}, {}, {}};
  Event pinned = a;
  pinned.pins.push_back({0, 0});
  Event small = a;
  const auto pin_count = static_cast<Vertex>(std::ceil(c.counterexample_rate * static_cast<double>(n) / std::log(2.0)));
  for (Vertex v = 0; v < std::min<Vertex>(pin_count, static_cast<Vertex>(n)); ++v)
    small.pins.push_back({v, static_cast<Cell>(v % 2)});
  auto& tr = out.table("transfer", "constructions", "aep_transfer_check",
                       {"instance", "n", "eps", "pins", "kappa", "kappa_over_n", "q_mass_a", "log_q_cells",
                        "q_count_ok", "max_ratio_excess", "residual_mass", "log_residual_bound", "residual_ok",
                        "residual_below_decay", "band_mass_b"});
  for (const auto& [tag, b] : std::vector<std::pair<std::string, Event>>{{"same", a}, {"pinned", pinned}, {"small", small}}) {
    const auto r = aep_transfer_check(nu, part, hp, a, b, c.transfer_eps, ctx.table());
    tr.row(tag, n, c.transfer_eps, b.pins.size(), r.kappa, r.kappa / static_cast<double>(n), r.q_mass_a, r.log_q_cells,
           r.q_count_ok, r.max_ratio_excess, r.residual_mass, r.log_residual_bound, r.residual_ok,
           r.residual_below_decay, r.band_mass_b);
    if (tag == "same") out.check("transfer_same_kappa", std::abs(r.kappa), "<=", 1e-12);
    if (tag == "pinned") {
      out.check("transfer_pinned_band_mass", r.band_mass_b, ">=", 0.99);
      out.check("transfer_pinned_ratio_excess", r.max_ratio_excess, "<=", 1e-9);
      out.check("transfer_pinned_residual_ok", r.residual_ok ? 1.0 : 0.0, "==", 1.0);
    }
  }

  out.metadata = {{"p", c.p},
                  {"q", c.q},
                  {"alphabet", c.alphabet},
                  {"h", c.h_names},
                  {"h_values", c.h_list},
                  {"score", "conditioned band mass at eps = " + format_number(c.score_factor) + "/k"},
                  {"event_mass_floor", "exp(-" + format_number(c.floor_root) + " sqrt(n))"},
                  {"transfer_band", c.transfer_band},
                  {"counterexample_rate", c.counterexample_rate}};
  return out;
}

// ---------------------------------------------------------------------------
// Covering bounds: uniform instances, Hamming balls, the covering/entropy
// inequality on random instances, metric bounds.

struct CoveringBoundsConfig {
  std::string id;
  std::vector<double> h_list{0.3, 0.7};
  std::vector<std::uint64_t> n_list{100, 1000};
  std::vector<double> eps_list{0.05, 0.25, 0.5};
  std::uint64_t cells = 3;
  std::uint64_t hamming_n_max = 20;
  std::vector<double> hamming_eps{0.05, 0.1};
  std::vector<std::uint64_t> hamming_cells{2, 3};
  std::uint64_t random_count = 200;
  std::uint64_t random_n_max = 12;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> metric_n_list{6, 10, 14};
  std::vector<double> metric_eps{0.05, 0.1, 0.15};
  double delta = 1.5;
};

inline CoveringBoundsConfig parse_covering_bounds(ConfigReader r, const std::string& id) {
  CoveringBoundsConfig c;
  c.id = id;
  c.cells = r.count("cells", c.cells, 2);
  c.h_list = r.numbers("h_list", c.h_list);
  for (std::size_t i = 0; i < c.h_list.size(); ++i)
    if (!(c.h_list[i] >= 0.0 && c.h_list[i] <= std::log(static_cast<double>(c.cells))))
      throw SchemaError(r.where("h_list") + "/" + std::to_string(i), "must lie in [0, log cells]");
  c.n_list = r.increasing_sizes("n_list", c.n_list);
  c.eps_list = read_eps(r, "eps_list", c.eps_list, 1.0 - std::exp(-2.0));
  auto h = r.object("hamming");
  c.hamming_n_max = h.count("n_max", c.hamming_n_max, 1);
  c.hamming_eps = read_eps(h, "eps_list", c.hamming_eps, 1.0 / 6.0);
  c.hamming_cells = h.counts("cells_list", c.hamming_cells, 2);
  h.finish();
  auto rr = r.object("random");
  c.random_count = rr.count("count", c.random_count);
  c.random_n_max = rr.count("n_max", c.random_n_max, 1);
  c.seed = rr.count("seed", c.seed);
  rr.finish();
  auto m = r.object("metric");
  c.metric_n_list = m.increasing_sizes("n_list", c.metric_n_list);
  c.metric_eps = read_eps(m, "eps_list", c.metric_eps, 0.5);
  c.delta = m.number("delta", c.delta);
  m.check(c.delta > 1.0, "delta", "must exceed the diameter 1 of the coarse cell");
  m.finish();
  r.finish();
  return c;
}

inline ScenarioResult run_covering_bounds(const CoveringBoundsConfig& c, const RunContext& ctx) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "covering_bounds";
  EntropyOptions eopt;
  eopt.table = ctx.table();

  const Partition part = Partition::singletons(c.cells);
  auto& un = out.table("uniform_rates", "entropy", "covering_number",
                       {"h", "n", "eps", "log_cov", "cov_rate", "h_nats", "h_rate", "cov_gap", "h_gap", "tolerance"});
  std::size_t rate_bad = 0;
  for (double h : c.h_list) {
    for (auto n : c.n_list) {
      const double nn = static_cast<double>(n);
      const Measure mu = uniform_on_cell_count(part, n, h * nn);
      const double hn = shannon_entropy(mu, part, eopt).h_nats;
      for (double eps : c.eps_list) {
        const double lc = covering_number(mu, part, eps, ctx.table()).log_count;
        const double tol = 2.0 / nn + 1e-9;
        const double cg = std::abs(lc / nn - h), hg = std::abs(hn / nn - h);
        rate_bad += (cg <= tol && hg <= tol) ? 0 : 1;
        un.row(h, n, eps, lc, lc / nn, hn, hn / nn, cg, hg, tol);
      }
    }
  }
  out.check("uniform_rate_violations", static_cast<double>(rate_bad), "==", 0.0);

  auto& hm = out.table("hamming", "entropy", "hamming_ball_count",
                       {"n", "eps", "cells", "radius", "lambda", "count", "log_count", "log_bound"});
  std::size_t ham_bad = 0;
  for (std::uint64_t n = 1; n <= c.hamming_n_max; ++n) {
    for (double eps : c.hamming_eps) {
      for (auto cells : c.hamming_cells) {
        const auto nn = static_cast<std::int64_t>(n);
        const auto r = static_cast<std::int64_t>(std::floor(3.0 * eps * static_cast<double>(n)));
        const auto b = hamming_ball_count(nn, r, cells, 3.0 * eps);
        ham_bad += b.log_count <= b.log_bound + 1e-12 * std::max(1.0, std::abs(b.log_bound)) ? 0 : 1;
        hm.row(n, eps, cells, r, 3.0 * eps, b.exact ? std::to_string(*b.exact) : std::string{}, b.log_count, b.log_bound);
      }
    }
  }
  out.check("hamming_bound_violations", static_cast<double>(ham_bad), "==", 0.0);

  // Random measures: iid, mixtures of two iid, sparse.
  auto& pr = out.table("covering_entropy", "entropy", "covering_entropy_slack",
                       {"instance", "kind", "n", "alphabet", "cells", "eps", "h_nats", "log_cov", "slack"});
  std::size_t slack_bad = 0;
  Rng rng(c.seed);
  auto random_dist = [&](std::size_t k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& x : p) s += (x = rng.uniform() + 0.01);
    for (auto& x : p) x /= s;
    return p;
  };
  for (std::uint64_t i = 0; i < c.random_count; ++i) {
    const std::size_t k = 2 + rng.below(2);
    const std::size_t n = 1 + rng.below(c.random_n_max);
    const int kind = static_cast<int>(rng.below(3));
    Measure mu;
    std::string kind_name;
    if (kind == 0) {
      mu = iid_product(random_dist(k), n);
      kind_name = "iid";
    } else if (kind == 1) {
      const double w = 0.1 + 0.8 * rng.uniform();
      mu = mixture({w, 1.0 - w}, {iid_product(random_dist(k), n), iid_product(random_dist(k), n)});
      kind_name = "mixture";
    } else {
      const std::size_t atoms = 1 + rng.below(6);
      std::vector<std::pair<Configuration, double>> list;
      const auto w = random_dist(atoms);
      for (std::size_t a = 0; a < atoms; ++a) {
        Configuration x(n);
        for (auto& s : x) s = static_cast<Symbol>(rng.below(k));
        list.emplace_back(x, w[a]);
      }
      mu = sparse_measure(k, n, list);
      kind_name = "sparse";
    }
    const Partition pp = rng.below(2) == 0 ? Partition::singletons(k) : Partition(std::vector<Cell>(k, 0));
    const double eps = 0.01 + 0.98 * rng.uniform();
    const double h = shannon_entropy(mu, pp, eopt).h_nats;
    const double lc = covering_number(mu, pp, eps, ctx.table()).log_count;
    const double slack = covering_entropy_slack(h, lc, eps, n, pp.cell_count());
    slack_bad += slack >= 0.0 ? 0 : 1;
    pr.row(i, kind_name, n, k, pp.cell_count(), eps, h, lc, slack);
  }
  out.check("covering_entropy_violations", static_cast<double>(slack_bad), "==", 0.0);

  // Path metric 0 - 1 - 2 with unit steps; cells {0, 1} and {2}.
  const Alphabet alphabet({"0", "1", "2"}, {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const Partition coarse(std::vector<Cell>{0, 0, 1});
  auto& mt = out.table("metric", "entropy", "metric_cov_bounds",
                       {"n", "eps", "delta", "max_cell_diameter", "upper_log", "lower_log", "hamming_log_bound"});
  std::size_t metric_bad = 0;
  for (auto n : c.metric_n_list) {
    const Measure mu = iid_product({0.5, 0.3, 0.2}, n);
    for (double eps : c.metric_eps) {
      const auto b = metric_cov_bounds(mu, alphabet, c.delta, eps, coarse, ctx.table());
      metric_bad += (!b.lower_log || *b.lower_log <= b.upper_log) ? 0 : 1;
      mt.row(n, eps, c.delta, b.max_cell_diameter, b.upper_log, b.lower_log, b.hamming_log_bound);
    }
  }
  out.check("metric_lower_above_upper", static_cast<double>(metric_bad), "==", 0.0);

  out.metadata = {{"cells", c.cells},
                  {"uniform_measure", "uniform on e^{h n} cells (log-count representation)"},
                  {"hamming_radius", "floor(3 eps n)"},
                  {"random_seed", c.seed},
                  {"metric", alphabet.metric()},
                  {"metric_partition", coarse.cells()}};
  return out;
}

// ---------------------------------------------------------------------------
// Barycentre test on random finite theta.

struct BarycentreConfig {
  std::string id;
  std::uint64_t trials = 1000;
  std::uint64_t alphabet_size = 3;
  std::uint64_t window_size = 1;
  std::uint64_t max_atoms = 5;
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
};

inline BarycentreConfig parse_barycentre(ConfigReader r, const std::string& id) {
  BarycentreConfig c;
  c.id = id;
  c.trials = r.count("trials", c.trials, 1);
  c.alphabet_size = r.count("alphabet_size", c.alphabet_size, 2);
  c.window_size = r.count("window_size", c.window_size, 1);
  r.check(std::pow(static_cast<double>(c.alphabet_size), static_cast<double>(2 * c.window_size)) <= 1e6,
          "window_size", "pair tables would exceed 1e6 entries");
  c.max_atoms = r.count("max_atoms", c.max_atoms, 1);
  c.seed = r.count("seed", c.seed);
  c.tolerance = r.number("tolerance", c.tolerance);
  r.check(c.tolerance > 0.0, "tolerance", "must be positive");
  r.finish();
  return c;
}

inline ScenarioResult run_barycentre(const BarycentreConfig& c, const RunContext&) {
  ScenarioResult out;
  out.id = c.id;
  out.scenario = "barycentre";
  std::vector<std::string> labels{"e"};
  for (std::uint64_t i = 1; i < c.window_size; ++i) labels.push_back("g" + std::to_string(i));
  const std::size_t k = c.alphabet_size;
  Rng rng(c.seed);
  auto random_dist = [&] {
    WindowDistribution d(labels, k);
    std::vector<std::pair<Configuration, double>> entries;
    double s = 0.0;
    for_each_configuration(labels.size(), k, [&](const Configuration& y) {
      const double m = rng.uniform();
      s += m;
      entries.emplace_back(y, m);
    });
    for (const auto& [y, m] : entries) d.add(y, m / s);
    return d;
  };
  auto& t = out.table("barycentre", "measures", "barycentre_check",
                      {"trial", "family", "atoms", "max_deviation", "max_variance", "classified_consistent",
                       "atoms_coincide"});
  std::size_t wrong = 0;
  for (std::uint64_t i = 0; i < c.trials; ++i) {
    const std::size_t atoms = 1 + rng.below(c.max_atoms);
    const int family = static_cast<int>(rng.below(3));  // 0 equal, 1 random, 2 perturbed
    std::vector<double> w(atoms);
    double s = 0.0;
    for (auto& x : w) s += (x = 0.05 + rng.uniform());
    for (auto& x : w) x /= s;
    std::vector<std::pair<double, WindowDistribution>> theta;
    const WindowDistribution base = random_dist();
    for (std::size_t a = 0; a < atoms; ++a) {
      if (family == 0 || a == 0) {
        theta.emplace_back(w[a], base);
      } else if (family == 1) {
        theta.emplace_back(w[a], random_dist());
      } else {
        // move mass delta between two entries of the base
        const double delta = 1e-3 + 0.05 * rng.uniform();
        WindowDistribution d = base;
        Configuration y0(labels.size(), 0), y1(labels.size(), 0);
        y1.back() = 1;
        const double moved = std::min(delta, base.mass(y0));
        d.add(y0, -moved);
        d.add(y1, moved);
        theta.emplace_back(w[a], d);
      }
    }
    bool coincide = true;
    for (const auto& [wa, d] : theta) coincide = coincide && d == theta.front().second;
    // Oracle: largest variance of nu(A) over the singletons A of X^E.
    double max_var = 0.0;
    for_each_configuration(labels.size(), k, [&](const Configuration& y) {
      double m1 = 0.0, m2 = 0.0;
      for (const auto& [wa, d] : theta) {
        m1 += wa * d.mass(y);
        m2 += wa * d.mass(y) * d.mass(y);
      }
      max_var = std::max(max_var, m2 - m1 * m1);
    });
    const auto rep = barycentre_check(theta, c.tolerance);
    wrong += rep.is_point_mass_consistent == coincide ? 0 : 1;
    const char* names[] = {"equal", "random", "perturbed"};
    t.row(i, names[family], atoms, rep.max_deviation, max_var, rep.is_point_mass_consistent, coincide);
  }
  out.check("false_classifications", static_cast<double>(wrong), "==", 0.0);
  out.metadata = {{"trials", c.trials},
                  {"alphabet_size", c.alphabet_size},
                  {"window", labels},
                  {"tolerance", c.tolerance},
                  {"seed", c.seed}};
  return out;
}

// ---------------------------------------------------------------------------
// Registry.

struct ScenarioSpec {
  std::string name;
  std::string description;
  std::function<void(const nlohmann::json&, const std::string&)> validate;
  std::function<ScenarioResult(const nlohmann::json&, const std::string&, const RunContext&)> run;
};

namespace detail {

// Strips the fields every scenario shares before the scenario parser runs.
inline nlohmann::json scenario_body(const nlohmann::json& j) {
  nlohmann::json body = j;
  body.erase("scenario");
  body.erase("id");
  body.erase("description");
  return body;
}

template <typename Parse, typename Run>
ScenarioSpec make_spec(std::string name, std::string description, Parse parse, Run run) {
  ScenarioSpec s;
  s.name = name;
  s.description = std::move(description);
  s.validate = [parse](const nlohmann::json& j, const std::string& pointer) {
    const auto body = scenario_body(j);
    parse(ConfigReader(body, pointer), std::string{});
  };
  s.run = [parse, run](const nlohmann::json& j, const std::string& id, const RunContext& ctx) {
    const auto body = scenario_body(j);
    return run(parse(ConfigReader(body, ""), id), ctx);
  };
  return s;
}

}  // namespace detail

inline const std::vector<ScenarioSpec>& scenario_registry() {
  static const std::vector<ScenarioSpec> specs{
      detail::make_spec("mixture_example",
                        "covering, AEP, lw*/LE/LDE and band conditioning for 1/2 p^V + 1/2 q^V",
                        parse_mixture_example, run_mixture_example),
      detail::make_spec("conditioning_stability",
                        "lw*/LE/LDE of mu_n and mu_n(.|A_n) with the conditioning inequality per n",
                        parse_conditioning_stability, run_conditioning_stability),
      detail::make_spec("coinduction", "Shannon additivity, covering monotonicity and fibre selection for mu^{x W}",
                        parse_coinduction, run_coinduction),
      detail::make_spec("aep_conditioning",
                        "band conditioning, sandwich, strong AEP threshold, diagonal selection, subset transfer",
                        parse_aep_conditioning, run_aep_conditioning),
      detail::make_spec("covering_bounds", "uniform-cell rates, Hamming balls, covering/entropy inequality, metric bounds",
                        parse_covering_bounds, run_covering_bounds),
      detail::make_spec("barycentre", "product barycentre equality against coincidence of atoms", parse_barycentre,
                        run_barycentre),
  };
  return specs;
}

inline const ScenarioSpec& find_scenario(const std::string& name, const std::string& pointer) {
  for (const auto& s : scenario_registry())
    if (s.name == name) return s;
  throw SchemaError(pointer, "unknown scenario '" + name + "'");
}

}  // namespace soficlab

#endif  // SOFICLAB_SCENARIOS_HPP
