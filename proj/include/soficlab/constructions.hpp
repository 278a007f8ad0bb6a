#ifndef SOFICLAB_CONSTRUCTIONS_HPP
#define SOFICLAB_CONSTRUCTIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/convergence.hpp"
#include "soficlab/entropy.hpp"
#include "soficlab/errors.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/numeric.hpp"
#include "soficlab/type_classes.hpp"

namespace soficlab {

// ---------------------------------------------------------------------------
// Conditioning on a cell band.

struct CellTally {
  std::size_t classes = 0;  // rows of the type-class table
  double log_cells = kNegInf;
};

struct ConditioningResult {
  double h = 0.0;
  int k = 1;
  CellBand band;  // a_lo = h - 1/k, a_hi = h + 1/k
  double log_event_mass = kNegInf;
  double event_mass = 0.0;
  Measure measure;  // nu( . | A)
  CellTally upper_set;  // Q_{h+1/k}: nu(C) > e^{-(h+1/k)|V|}
  CellTally lower_set;  // Q_{h-1/k}: nu(C) > e^{-(h-1/k)|V|}
  CellTally band_cells;
  // Cells of positive conditioned mass outside
  // (e^{-(h+1/k)|V|} / nu(A), e^{-(h-1/k)|V|} / nu(A)].
  std::size_t sandwich_violations = 0;
  std::size_t sandwich_checked = 0;
};

namespace detail {

inline void tally(CellTally& t, const TypeClassRow& r) {
  ++t.classes;
  t.log_cells = log_add(t.log_cells, r.log_mult);
}

}  // namespace detail

// Counts the conditioned cells violating the band sandwich.
inline std::pair<std::size_t, std::size_t> sandwich_check(const TypeClassTable& conditioned_table, const CellBand& band,
                                                          double log_event_mass) {
  const double n = static_cast<double>(conditioned_table.vertex_count);
  const double lo = -band.a_hi * n - log_event_mass;
  const double hi = -band.a_lo * n - log_event_mass;
  std::size_t bad = 0;
  for (const auto& r : conditioned_table.rows)
    if (!(r.log_mass > lo && r.log_mass <= hi)) ++bad;
  return {bad, conditioned_table.rows.size()};
}

// nu( . | A_k) with A_k the union of cells C with
// e^{-(h+1/k)|V|} < nu(C) <= e^{-(h-1/k)|V|}.
inline ConditioningResult aep_condition(const Measure& nu, const Partition& partition, double h, int k,
                                        const TableOptions& options = {}) {
  require(k >= 1, "aep_condition: k must be positive");
  require(h >= 0.0, "aep_condition: h must be nonnegative");
  ConditioningResult r;
  r.h = h;
  r.k = k;
  r.band = {h - 1.0 / k, h + 1.0 / k};
  const TypeClassTable base = build_type_classes(nu, partition, options);
  const double n = static_cast<double>(base.vertex_count);
  std::vector<double> terms;
  for (const auto& row : base.rows) {
    if (row.log_mass > -r.band.a_hi * n) detail::tally(r.upper_set, row);
    if (row.log_mass > -r.band.a_lo * n) detail::tally(r.lower_set, row);
    if (in_band(r.band, row.log_mass, base.vertex_count)) {
      detail::tally(r.band_cells, row);
      terms.push_back(row.log_row_mass());
    }
  }
  r.log_event_mass = log_sum_exp(terms);
  if (!(r.log_event_mass > kNegInf)) {
    throw EmptyBand("aep_condition: no cell of positive mass in the band (h = " + std::to_string(h) +
                    ", k = " + std::to_string(k) + ")");
  }
  r.event_mass = std::exp(r.log_event_mass);
  r.measure = conditioned_with_mass(nu, Event{partition, r.band, {}, {}}, r.log_event_mass);
  const auto [bad, checked] = sandwich_check(build_type_classes(r.measure, partition, options), r.band, r.log_event_mass);
  r.sandwich_violations = bad;
  r.sandwich_checked = checked;
  return r;
}

// The smallest eps at which the conditioned measure's band mass must be 1.
inline double strong_aep_threshold(const ConditioningResult& r, std::size_t vertex_count) {
  return 1.0 / r.k - r.log_event_mass / static_cast<double>(vertex_count);
}

// ---------------------------------------------------------------------------
// Diagonal selection.

struct DiagonalInput {
  std::vector<std::size_t> n_values;            // strictly increasing
  std::vector<int> k_values;                    // strictly increasing
  std::vector<std::vector<double>> scores;      // scores[k][n]; k passes at n when score >= threshold
  std::vector<double> thresholds;               // per k
  std::vector<std::vector<double>> log_masses;  // optional log event masses [k][n]
  std::function<double(std::size_t)> log_floor;  // default -sqrt(n)
};

struct DiagonalSelection {
  std::vector<std::optional<int>> k_of_n;          // nullopt before any k is admissible
  std::vector<std::optional<std::size_t>> ready;   // N_k as an index into n_values
};

inline double default_log_floor(std::size_t n) { return -std::sqrt(static_cast<double>(n)); }

// The pointwise-largest nondecreasing k_n with n >= N_{k_n} and, when masses
// are given, log nu(A_{k_n, n}) >= floor(n). N_k is the first n from which k
// passes at every later n.
inline DiagonalSelection diagonal_select(const DiagonalInput& in) {
  const std::size_t nn = in.n_values.size(), nk = in.k_values.size();
  require(nn > 0 && nk > 0, "diagonal_select: empty table");
  require(in.scores.size() == nk && in.thresholds.size() == nk, "diagonal_select: one score row and threshold per k");
  for (std::size_t i = 1; i < nn; ++i) require(in.n_values[i] > in.n_values[i - 1], "diagonal_select: n must increase");
  for (std::size_t j = 1; j < nk; ++j) require(in.k_values[j] > in.k_values[j - 1], "diagonal_select: k must increase");
  require(in.log_masses.empty() || in.log_masses.size() == nk, "diagonal_select: one mass row per k");
  auto floor_of = in.log_floor ? in.log_floor : default_log_floor;

  DiagonalSelection out;
  out.ready.resize(nk);
  for (std::size_t j = 0; j < nk; ++j) {
    require(in.scores[j].size() == nn, "diagonal_select: score row has wrong length");
    for (std::size_t i = nn; i-- > 0;) {
      if (in.scores[j][i] < in.thresholds[j]) break;
      out.ready[j] = i;
    }
  }
  auto admissible = [&](std::size_t j, std::size_t i) {
    if (!out.ready[j] || i < *out.ready[j]) return false;
    if (!in.log_masses.empty() && in.log_masses[j].at(i) < floor_of(in.n_values[i])) return false;
    return true;
  };
  out.k_of_n.resize(nn);
  std::size_t bound = nk;  // candidates j < bound keep the sequence nondecreasing
  for (std::size_t i = nn; i-- > 0;) {
    std::optional<std::size_t> best;
    for (std::size_t j = bound; j-- > 0;) {
      if (admissible(j, i)) {
        best = j;
        break;
      }
    }
    if (!best) break;  // earlier n stay unselected
    out.k_of_n[i] = in.k_values[*best];
    bound = *best + 1;
  }
  bool any = false;
  for (const auto& k : out.k_of_n) any = any || k.has_value();
  if (!any) throw InvalidArgument("diagonal_select: no k is admissible at any n");
  return out;
}

// ---------------------------------------------------------------------------
// Passing from A to a big enough subset B.

struct TransferReport {
  double log_mass_a = 0.0;
  double log_mass_b = 0.0;
  double kappa = 0.0;  // log nu(A) - log nu(B)
  double eps = 0.0;
  double q_mass_a = 0.0;      // nu(union Q | A), Q the eps-band of nu( . | A)
  double log_q_cells = kNegInf;
  bool q_count_ok = true;     // |Q| < e^{(h + eps)|V|}
  double max_ratio_excess = 0.0;  // max over C in Q of log nu(C|B) - log nu(C|A) - kappa (<= 0)
  double residual_mass = 0.0;     // nu(union (Q \ Q') | B)
  double log_residual_bound = 0.0;  // log |Q| - (h + 2 eps)|V|
  bool residual_ok = true;
  bool residual_below_decay = true;  // residual bound < e^{-eps |V|}
  double band_mass_b = 0.0;  // eps-band mass of nu( . | B) at rate h
};

namespace detail {

inline const TypeClassRow* matching_row(const TypeClassTable& a, const TypeClassRow& row) {
  for (const auto& r : a.rows) {
    if (a.kind == RowKind::ExplicitCell ? r.cell == row.cell : r.counts == row.counts) return &r;
  }
  return nullptr;
}

}  // namespace detail

// Checks, at one instance, the two bounds behind passing from nu( . | A) with
// the strong AEP to nu( . | B) for B inside A.
inline TransferReport aep_transfer_check(const Measure& nu, const Partition& partition, double h, const Event& a,
                                         const Event& b, double eps, const TableOptions& options = {}) {
  require(eps > 0.0, "aep_transfer_check: eps must be positive");
  const Measure mu_a = conditioned(nu, a);
  const Measure mu_b = conditioned(nu, b);
  const TypeClassTable ta = build_type_classes(mu_a, partition, options);
  const TypeClassTable tb = build_type_classes(mu_b, partition, options);
  if (ta.kind == RowKind::UniformBlock || ta.kind != tb.kind) {
    throw CapabilityMissing("aep_transfer_check: needs type-class or explicit-cell tables");
  }
  // B inside A up to null sets: every B-cell is an A-cell.
  std::map<Vertex, Cell> pins_b;
  for (const auto& p : tb.pins) pins_b[p.vertex] = p.cell;
  for (const auto& p : ta.pins) {
    auto it = pins_b.find(p.vertex);
    if (it == pins_b.end() || it->second != p.cell) throw ContainmentViolated("aep_transfer_check: B is not inside A");
  }
  for (const auto& row : tb.rows) {
    const TypeClassRow* ra = detail::matching_row(ta, row);
    if (!ra || (ra->exact_mult && row.exact_mult && *row.exact_mult > *ra->exact_mult)) {
      throw ContainmentViolated("aep_transfer_check: B is not inside A");
    }
  }

  TransferReport r;
  r.eps = eps;
  r.log_mass_a = ta.log_normalizer;
  r.log_mass_b = tb.log_normalizer;
  r.kappa = r.log_mass_a - r.log_mass_b;
  const double n = static_cast<double>(ta.vertex_count);
  auto in_q = [&](double log_mass) { return log_mass > -(h + eps) * n && log_mass < -(h - eps) * n; };
  for (const auto& row : ta.rows) {
    if (!in_q(row.log_mass)) continue;
    r.q_mass_a += std::exp(row.log_row_mass());
    r.log_q_cells = log_add(r.log_q_cells, row.log_mult);
  }
  r.q_count_ok = r.log_q_cells < (h + eps) * n;
  r.max_ratio_excess = kNegInf;
  for (const auto& row : tb.rows) {
    const TypeClassRow* ra = detail::matching_row(ta, row);
    if (!in_q(ra->log_mass)) continue;
    r.max_ratio_excess = std::max(r.max_ratio_excess, row.log_mass - ra->log_mass - r.kappa);
    if (row.log_mass < -(h + 2.0 * eps) * n) r.residual_mass += std::exp(row.log_row_mass());
  }
  if (r.max_ratio_excess == kNegInf) r.max_ratio_excess = 0.0;
  r.log_residual_bound = r.log_q_cells - (h + 2.0 * eps) * n;
  r.residual_ok = r.residual_mass <= std::exp(r.log_residual_bound) * (1.0 + 1e-9) + 1e-300;
  r.residual_below_decay = r.log_residual_bound < -eps * n;
  r.band_mass_b = aep_from_table(tb, h, {eps}).entries.front().typical_mass;
  return r;
}

// ---------------------------------------------------------------------------
// Co-induction.

// mu^{x W} over V x W, vertex (v, w) at index v * |W| + w.
inline Measure coinduct_measure(const Measure& mu, std::size_t w) {
  require(w >= 1, "coinduct_measure: |W| must be positive");
  return fibre_product(std::vector<Measure>(w, mu));
}

struct FibreReport {
  std::vector<double> fraction;  // lw fraction of the fibre marginal, per w
  std::vector<std::size_t> z;    // fibres with fraction >= 1 - eps
  double z_fraction = 0.0;       // |Z| / |W|
  double bad_vertex_mass = 0.0;  // fraction of bad (v, w) overall
  double eps = 0.0;
  bool markov_ok = true;         // |Z|/|W| >= 1 - bad / eps
};

// Per-fibre lw* fractions of nu over V x W against a target on a G-window,
// read along sigma in each fibre V x {w}.
inline FibreReport fibre_lw_check(const Measure& nu, const SoficApproximation& sigma, std::size_t w_count,
                                  const Neighbourhood& u, double eps, const ConvergenceOptions& options = {}) {
  require(eps > 0.0 && eps <= 1.0, "fibre_lw_check: eps must lie in (0, 1]");
  require(nu.vertex_count() == sigma.vertex_count() * w_count, "fibre_lw_check: |V x W| does not match the measure");
  FibreReport r;
  r.eps = eps;
  if (nu.as<FibreProductNode>()) {
    std::map<const void*, double> cache;  // identical fibre measures share a fraction
    for (std::size_t w = 0; w < w_count; ++w) {
      const Measure f = fibre(nu, w);
      auto it = cache.find(&f.node());
      if (it == cache.end()) it = cache.emplace(&f.node(), lw_stat(sigma, f, u, options).fraction).first;
      r.fraction.push_back(it->second);
    }
  } else {
    // sigma x trivial(W) moves only the v coordinate; E sits in the left factor.
    const SoficApproximation prod = product_sofic(sigma, trivial_sofic(static_cast<Vertex>(w_count)));
    const GroupWindow win = embed_left(u.window, prod.kind_ptr(), prod.generators());
    WindowDistribution target(win.labels(), u.target.alphabet_size());
    u.target.for_each([&](const Configuration& y, double m) { target.add(y, m); });
    const LwResult lw = lw_stat(prod, nu, {win, target, u.tol}, options);
    r.fraction.assign(w_count, 0.0);
    for (std::size_t i = 0; i < lw.per_vertex_tv.size(); ++i)
      if (lw.per_vertex_tv[i] <= u.tol) r.fraction[i % w_count] += 1.0 / static_cast<double>(sigma.vertex_count());
  }
  for (std::size_t w = 0; w < w_count; ++w) {
    if (r.fraction[w] >= 1.0 - eps) r.z.push_back(w);
    r.bad_vertex_mass += (1.0 - r.fraction[w]) / static_cast<double>(w_count);
  }
  r.z_fraction = static_cast<double>(r.z.size()) / static_cast<double>(w_count);
  r.markov_ok = r.z_fraction >= 1.0 - r.bad_vertex_mass / eps - 1e-12;
  return r;
}

}  // namespace soficlab

#endif  // SOFICLAB_CONSTRUCTIONS_HPP
