#ifndef SOFICLAB_EXPERIMENT_HPP
#define SOFICLAB_EXPERIMENT_HPP

// Runs scenario configs into an output directory and re-checks a finished
// output directory.
//
//   out/<id>/<table>.csv        numeric tables
//   out/<id>/window_<name>.csv  window distributions (configuration,mass)
//   out/results.json            checks and metadata per scenario
//   out/manifest.json           hashes, seeds, wall times, file provenance
//
// Everything except manifest.json is a pure function of the effective config.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soficlab/config.hpp"
#include "soficlab/scenarios.hpp"

namespace soficlab {

inline constexpr const char* kToolName = "soficlab";
inline constexpr const char* kToolVersion = "0.1.0";

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_json(const nlohmann::json& j) { return hex64(fnv1a(j.dump())); }

struct PlannedScenario {
  std::string id;
  std::string scenario;
  std::string pointer;  // where the entry sits in the config file
  nlohmann::json config;
};

// JSON pointers of the seed fields each scenario reads.
inline std::vector<std::string> seed_fields(const std::string& scenario) {
  if (scenario == "mixture_example" || scenario == "conditioning_stability") return {"/seed", "/seeds"};
  if (scenario == "coinduction") return {"/fibre/seed"};
  if (scenario == "covering_bounds") return {"/random/seed"};
  if (scenario == "barycentre") return {"/seed"};
  return {};
}

// A scalar seed field becomes the override; a list keeps its length with
// entries derive_seed(override, i).
inline void apply_seed_override(nlohmann::json& config, const std::string& scenario, std::uint64_t seed) {
  for (const auto& f : seed_fields(scenario)) {
    const nlohmann::json::json_pointer ptr(f);
    if (f.ends_with("seeds")) {
      const std::size_t len = config.contains(ptr) && config[ptr].is_array() && !config[ptr].empty() ? config[ptr].size() : 1;
      nlohmann::json list = nlohmann::json::array();
      for (std::size_t i = 0; i < len; ++i) list.push_back(derive_seed(seed, i));
      config[ptr] = list;
    } else {
      config[ptr] = seed;
    }
  }
}

// Accepts one scenario object or {"scenarios": [...]}. Validates every entry
// before anything runs.
inline std::vector<PlannedScenario> plan_experiment(const nlohmann::json& config,
                                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
  if (!config.is_object()) throw SchemaError("/", "must be an object");
  std::vector<std::pair<std::string, nlohmann::json>> entries;
  if (config.contains("scenarios")) {
    for (const auto& [key, value] : config.items())
      if (key != "scenarios" && key != "description") throw SchemaError("/" + key, "unknown field");
    const auto& list = config.at("scenarios");
    if (!list.is_array() || list.empty()) throw SchemaError("/scenarios", "must be a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) entries.emplace_back("/scenarios/" + std::to_string(i), list[i]);
  } else {
    entries.emplace_back("", config);
  }
  std::vector<PlannedScenario> out;
  std::set<std::string> ids;
  for (auto& [pointer, j] : entries) {
    if (!j.is_object()) throw SchemaError(pointer.empty() ? "/" : pointer, "must be an object");
    if (!j.contains("scenario") || !j.at("scenario").is_string())
      throw SchemaError(pointer + "/scenario", "is required and must be a string");
    const std::string name = j.at("scenario").get<std::string>();
    const auto& spec = find_scenario(name, pointer + "/scenario");
    std::string id = name;
    if (j.contains("id")) {
      if (!j.at("id").is_string()) throw SchemaError(pointer + "/id", "must be a string");
      id = j.at("id").get<std::string>();
      if (id.empty() || id.find_first_of("/\\.") != std::string::npos)
        throw SchemaError(pointer + "/id", "must be a non-empty name without '/', '\\' or '.'");
      if (ids.count(id)) throw SchemaError(pointer + "/id", "duplicates an earlier id");
    } else {
      for (int k = 2; ids.count(id); ++k) id = name + "_" + std::to_string(k);
    }
    if (j.contains("description") && !j.at("description").is_string())
      throw SchemaError(pointer + "/description", "must be a string");
    ids.insert(id);
    nlohmann::json effective = j;
    if (seed_override) apply_seed_override(effective, name, *seed_override);
    spec.validate(effective, pointer);
    out.push_back({id, name, pointer, effective});
  }
  return out;
}

struct ExperimentOptions {
  std::filesystem::path out;
  RunContext context;
  std::optional<std::uint64_t> seed_override;
};

struct ExperimentSummary {
  nlohmann::json manifest;
  nlohmann::json results;
  bool all_checks_passed = true;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline nlohmann::json check_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"bound", c.bound}, {"passed", c.passed}};
}

}  // namespace detail

inline ExperimentSummary run_experiment(const nlohmann::json& config, const ExperimentOptions& options) {
  const auto plan = plan_experiment(config, options.seed_override);
  nlohmann::json effective;
  if (config.contains("scenarios")) {
    effective = config;
    for (std::size_t i = 0; i < plan.size(); ++i) effective["scenarios"][i] = plan[i].config;
  } else {
    effective = plan.front().config;
  }
  std::filesystem::create_directories(options.out);

  ExperimentSummary summary;
  nlohmann::json scenarios = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json stages = nlohmann::json::array();
  nlohmann::json seeds = nlohmann::json::object();
  std::uint64_t numeric = 0xcbf29ce484222325ULL;

  auto emit = [&](const std::string& file, const std::string& module, const std::string& operation,
                  const std::string& input_hash, const std::string& text) {
    detail::write_file(options.out / file, text);
    const std::string content = hex64(fnv1a(text));
    numeric = fnv1a(file + ":" + content + "\n", numeric);
    outputs.push_back({{"file", file},
                       {"module", module},
                       {"operation", operation},
                       {"input_hash", input_hash},
                       {"content_hash", content}});
  };

  for (const auto& p : plan) {
    options.context.note("running " + p.id + " (" + p.scenario + ")");
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioResult r = find_scenario(p.scenario, p.pointer).run(p.config, p.id, options.context);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string input_hash = hash_json(p.config);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& t : r.tables) {
      const std::string file = p.id + "/" + t.name() + ".csv";
      emit(file, t.module(), t.operation(), input_hash, t.csv());
      files.push_back({{"file", file}, {"table", t.name()}, {"module", t.module()}, {"operation", t.operation()}});
    }
    for (const auto& w : r.windows) {
      const std::string file = p.id + "/window_" + w.name + ".csv";
      emit(file, w.module, w.operation, input_hash, to_csv(w.dist, w.symbols));
      files.push_back({{"file", file},
                       {"window", w.name},
                       {"labels", w.dist.labels()},
                       {"symbols", w.symbols},
                       {"module", w.module},
                       {"operation", w.operation}});
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back(detail::check_json(c));
    const bool passed = r.all_passed();
    summary.all_checks_passed = summary.all_checks_passed && passed;
    scenarios.push_back({{"id", p.id},
                         {"scenario", p.scenario},
                         {"input_hash", input_hash},
                         {"passed", passed},
                         {"checks", checks},
                         {"files", files},
                         {"metadata", r.metadata}});
    stages.push_back({{"id", p.id}, {"wall_seconds", seconds}});
    nlohmann::json s = nlohmann::json::object();
    for (const auto& f : seed_fields(p.scenario)) {
      const nlohmann::json::json_pointer ptr(f);
      if (p.config.contains(ptr)) s[f.substr(1)] = p.config[ptr];
    }
    seeds[p.id] = s;
  }

  summary.results = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"config_hash", hash_json(effective)},
                     {"passed", summary.all_checks_passed},
                     {"scenarios", scenarios}};
  detail::write_file(options.out / "results.json", summary.results.dump(2) + "\n");
  numeric = fnv1a("results.json:" + hex64(fnv1a(summary.results.dump(2) + "\n")) + "\n", numeric);

  summary.manifest = {{"tool", kToolName},
                      {"version", kToolVersion},
                      {"config_hash", hash_json(effective)},
                      {"config", effective},
                      {"seed_override", options.seed_override ? nlohmann::json(*options.seed_override) : nlohmann::json()},
                      {"seeds", seeds},
                      {"jobs", options.context.jobs},
                      {"budget_cells", options.context.budget_cells},
                      {"budget_samples", options.context.budget_samples},
                      {"stages", stages},
                      {"outputs", outputs},
                      {"results_hash", hex64(fnv1a(summary.results.dump(2) + "\n"))},
                      {"numeric_hash", hex64(numeric)}};
  detail::write_file(options.out / "manifest.json", summary.manifest.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// Verification.

struct Invariant {
  bool passed = false;
  std::string name;
  std::string detail;
};

struct VerifyReport {
  std::vector<Invariant> invariants;
  bool missing = false;  // manifest or listed outputs absent

  bool passed() const {
    if (missing) return false;
    for (const auto& i : invariants)
      if (!i.passed) return false;
    return true;
  }

  std::string tsv() const {
    std::string out;
    for (const auto& i : invariants) out += std::string(i.passed ? "PASS" : "FAIL") + "\t" + i.name + "\t" + i.detail + "\n";
    return out;
  }
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error("csv: no column '" + name + "'");
  }

  bool has(const std::string& name) const { return std::find(columns.begin(), columns.end(), name) != columns.end(); }

  double num(std::size_t row, const std::string& name) const {
    const std::string& s = rows.at(row).at(col(name));
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (s == "true") return 1.0;
    if (s == "false") return 0.0;
    return std::stod(s);
  }

  const std::string& text(std::size_t row, const std::string& name) const { return rows.at(row).at(col(name)); }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : l) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(in, line)) throw Error("csv: empty file");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
    if (t.rows.back().size() != t.columns.size()) throw Error("csv: ragged row");
  }
  return t;
}

namespace detail {

class Verifier {
public:
  explicit Verifier(std::filesystem::path out) : out_(std::move(out)) {}

  void add(bool ok, std::string name, std::string detail) {
    report.invariants.push_back({ok, std::move(name), std::move(detail)});
  }

  // Relative tolerance used when re-deriving a recorded quantity.
  static bool close(double a, double b, double tol = 1e-9) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  }

  void window(const std::string& file, const nlohmann::json& info) {
    const CsvTable t = parse_csv(read_file(out_ / file));
    double total = 0.0;
    bool nonneg = true;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double m = t.num(i, "mass");
      nonneg = nonneg && m >= 0.0;
      total += m;
    }
    add(std::abs(total - 1.0) <= 1e-9, "window_normalized", file + " total=" + format_number(total));
    add(nonneg, "window_nonnegative", file);
    const auto labels = info.at("labels").get<std::vector<std::string>>();
    const auto symbols = info.at("symbols").get<std::vector<std::string>>();
    bool shape = true;
    for (const auto& r : t.rows) {
      std::istringstream cfg(r.at(0));
      std::string tok;
      std::size_t count = 0;
      while (cfg >> tok) {
        ++count;
        shape = shape && std::find(symbols.begin(), symbols.end(), tok) != symbols.end();
      }
      shape = shape && count == labels.size();
    }
    add(shape, "window_shape", file);
  }

  void table(const std::string& scenario, const std::string& name, const std::string& file) {
    const CsvTable t = parse_csv(read_file(out_ / file));
    if (name == "sandwich") return sandwich(file, t);
    if (name == "covering" && t.has("slack")) {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double slack = std::log(2.0) + t.num(i, "log_cov") +
                             t.num(i, "eps") * t.num(i, "n") * std::log(t.num(i, "cells")) - t.num(i, "h_nats");
        bad += (slack >= 0.0 && close(slack, t.num(i, "slack"), 1e-6)) ? 0 : 1;
      }
      add(bad == 0, "covering_entropy_inequality", file + " violations=" + std::to_string(bad));
    }
    if (name == "covering_entropy") {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double slack = std::log(2.0) + t.num(i, "log_cov") +
                             t.num(i, "eps") * t.num(i, "n") * std::log(t.num(i, "cells")) - t.num(i, "h_nats");
        bad += slack >= 0.0 ? 0 : 1;
      }
      add(bad == 0, "covering_entropy_inequality", file + " violations=" + std::to_string(bad));
    }
    if (name == "hamming") {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double lb = t.num(i, "log_bound");
        bad += t.num(i, "log_count") <= lb + 1e-12 * std::max(1.0, std::abs(lb)) ? 0 : 1;
      }
      add(bad == 0, "hamming_ball_bound", file + " violations=" + std::to_string(bad));
    }
    if (name == "uniform_rates") {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double h = t.num(i, "h"), n = t.num(i, "n"), tol = 2.0 / n + 1e-9;
        bad += (std::abs(t.num(i, "log_cov") / n - h) <= tol && std::abs(t.num(i, "h_nats") / n - h) <= tol) ? 0 : 1;
      }
      add(bad == 0, "uniform_cell_rates", file + " violations=" + std::to_string(bad));
    }
    if (name == "additivity") {
      double worst = 0.0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double expect = t.num(i, "w") * t.num(i, "h_mu");
        const double err = std::abs(t.num(i, "h_coinduced") - expect) / std::max(expect, 1e-300);
        worst = std::max(worst, err);
      }
      add(worst <= 1e-9, "shannon_additivity", file + " max_rel_err=" + format_number(worst));
    }
    if (name == "bound") {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double floor = t.num(i, "mass_floor");
        const double bound = t.num(i, "uncond_bad") / floor + t.num(i, "cond_half_width") +
                             t.num(i, "uncond_half_width") / floor;
        bad += (close(bound, t.num(i, "bound")) && t.num(i, "cond_bad") <= bound) ? 0 : 1;
      }
      add(bad == 0, "conditioning_bound", file + " violations=" + std::to_string(bad));
    }
    if (name == "fibre_summary") {
      bool ok = true;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double zf = t.num(i, "z_fraction"), bad = t.num(i, "bad_vertex_mass"), eps = t.num(i, "eps");
        ok = ok && zf >= 1.0 - bad / eps - 1e-12;
      }
      add(ok, "fibre_markov", file);
    }
    if (name == "fibre") {
      std::size_t in_z = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) in_z += t.text(i, "in_z") == "true" ? 1 : 0;
      fibre_in_z_[scenario] = {in_z, t.rows.size()};
    }
    if (name == "barycentre") {
      std::size_t wrong = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) wrong += t.text(i, "classified_consistent") == t.text(i, "atoms_coincide") ? 0 : 1;
      add(wrong == 0, "barycentre_classification", file + " false=" + std::to_string(wrong));
    }
    if (name == "conditioning" && t.has("sandwich_violations")) {
      double total = 0.0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) total += t.num(i, "sandwich_violations");
      add(total == 0.0, "conditioning_sandwich_count", file + " violations=" + format_number(total));
    }
    if (name == "metric") {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double lo = t.num(i, "lower_log");
        bad += (std::isnan(lo) || lo <= t.num(i, "upper_log")) ? 0 : 1;
      }
      add(bad == 0, "metric_bounds_ordered", file + " violations=" + std::to_string(bad));
    }
  }

  // Each conditioned measure is a block of rows sharing (instance, h, k, n):
  // masses inside the exact band and summing to one.
  void sandwich(const std::string& file, const CsvTable& t) {
    std::map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const std::string key = t.text(i, "instance") + "|" + t.text(i, "h") + "|" + t.text(i, "k") + "|" + t.text(i, "n");
      if (!groups.count(key)) order.push_back(key);
      groups[key].push_back(i);
    }
    std::size_t bad = 0, rows = 0;
    double worst_norm = 0.0;
    for (const auto& key : order) {
      std::vector<double> terms;
      for (auto i : groups[key]) {
        const double lm = t.num(i, "log_mass");
        if (lm == -std::numeric_limits<double>::infinity()) continue;
        ++rows;
        bad += (lm > t.num(i, "lower") && lm <= t.num(i, "upper") + 1e-12) ? 0 : 1;
        terms.push_back(lm + t.num(i, "log_mult"));
      }
      if (!terms.empty()) worst_norm = std::max(worst_norm, std::abs(log_sum_exp(terms)));
    }
    add(bad == 0, "sandwich_bounds", file + " rows=" + std::to_string(rows) + " violations=" + std::to_string(bad));
    add(worst_norm <= 1e-9, "conditioned_normalized", file + " max_abs_log_total=" + format_number(worst_norm));
  }

  void fibre_exact(const std::string& scenario, const std::string& file) {
    const auto it = fibre_in_z_.find(scenario);
    if (it == fibre_in_z_.end()) return;
    const CsvTable t = parse_csv(read_file(out_ / file));
    bool ok = true;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double zf = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
      ok = ok && zf == t.num(i, "z_fraction");
    }
    add(ok, "fibre_z_fraction_consistent", file);
  }

  VerifyReport report;

private:
  std::filesystem::path out_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> fibre_in_z_;
};

}  // namespace detail

inline VerifyReport verify_output(const std::filesystem::path& out) {
  detail::Verifier v(out);
  auto& report = v.report;
  const auto manifest_path = out / "manifest.json";
  const auto results_path = out / "results.json";
  if (!std::filesystem::exists(manifest_path) || !std::filesystem::exists(results_path)) {
    report.missing = true;
    v.add(false, "outputs_present", "manifest.json or results.json missing in " + out.string());
    return report;
  }
  nlohmann::json manifest, results;
  try {
    manifest = nlohmann::json::parse(detail::read_file(manifest_path));
    results = nlohmann::json::parse(detail::read_file(results_path));
  } catch (const nlohmann::json::exception& e) {
    v.add(false, "outputs_parse", e.what());
    return report;
  }

  std::size_t absent = 0;
  for (const auto& o : manifest.at("outputs")) {
    const std::string file = o.at("file").get<std::string>();
    if (!std::filesystem::exists(out / file)) {
      ++absent;
      v.add(false, "output_present", file);
      continue;
    }
    const std::string h = hex64(fnv1a(detail::read_file(out / file)));
    v.add(h == o.at("content_hash").get<std::string>(), "content_hash", file);
  }
  if (absent) {
    report.missing = true;
    return report;
  }
  v.add(hex64(fnv1a(detail::read_file(results_path))) == manifest.value("results_hash", ""), "content_hash",
        "results.json");

  for (const auto& s : results.at("scenarios")) {
    const std::string scenario = s.at("scenario").get<std::string>();
    for (const auto& f : s.at("files")) {
      const std::string file = f.at("file").get<std::string>();
      try {
        if (f.contains("window")) v.window(file, f);
        else v.table(scenario + "/" + s.at("id").get<std::string>(), f.at("table").get<std::string>(), file);
      } catch (const std::exception& e) {
        v.add(false, "table_readable", file + ": " + e.what());
      }
    }
    for (const auto& f : s.at("files"))
      if (f.value("table", "") == "fibre_summary")
        v.fibre_exact(scenario + "/" + s.at("id").get<std::string>(), f.at("file").get<std::string>());
    for (const auto& c : s.at("checks")) {
      const auto value = c.at("value").is_number() ? c.at("value").get<double>() : std::numeric_limits<double>::quiet_NaN();
      const bool holds = check_holds(value, c.at("relation").get<std::string>(), c.at("bound").get<double>());
      v.add(holds && c.at("passed").get<bool>() == holds, "check",
            s.at("id").get<std::string>() + ":" + c.at("name").get<std::string>() + " value=" + format_number(value) +
                " " + c.at("relation").get<std::string>() + " " + format_number(c.at("bound").get<double>()));
    }
  }
  return report;
}

}  // namespace soficlab

#endif  // SOFICLAB_EXPERIMENT_HPP
