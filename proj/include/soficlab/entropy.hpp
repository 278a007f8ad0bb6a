#ifndef SOFICLAB_ENTROPY_HPP
#define SOFICLAB_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/alphabet.hpp"
#include "soficlab/errors.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/numeric.hpp"
#include "soficlab/parallel.hpp"
#include "soficlab/rng.hpp"
#include "soficlab/type_classes.hpp"

namespace soficlab {

// ---------------------------------------------------------------------------
// Shannon entropy H_mu(P^V) in nats.

struct ComponentEntropy {
  double weight = 1.0;
  double h_nats = 0.0;
};

struct EntropyReport {
  double h_nats = 0.0;
  double normalized = 0.0;  // h / |V|
  std::string method;       // type_class | sparse | additive | sampled
  std::uint64_t samples = 0;
  std::vector<ComponentEntropy> components;  // mixtures of iid products
};

struct EntropyOptions {
  TableOptions table;
  bool allow_sampling = false;
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

inline double table_entropy(const TypeClassTable& t) {
  double h = 0.0;
  for (const auto& r : t.rows) h -= std::exp(r.log_row_mass()) * r.log_mass;
  return h;
}

inline EntropyReport shannon_entropy(const Measure& mu, const Partition& partition, const EntropyOptions& options = {});

namespace detail {

inline std::optional<EntropyReport> exact_entropy(const Measure& mu, const Partition& partition,
                                                  const EntropyOptions& options) {
  const double n = static_cast<double>(mu.vertex_count());
  if (mu.capabilities().cell_table) {
    try {
      TypeClassTable t = build_type_classes(mu, partition, options.table);
      EntropyReport r;
      r.h_nats = table_entropy(t);
      r.method = t.kind == RowKind::ExplicitCell ? "sparse" : "type_class";
      if (t.kind == RowKind::TypeClass && t.component_weights.size() > 1 && t.log_normalizer == 0.0) {
        for (std::size_t i = 0; i < t.component_weights.size(); ++i) {
          auto c = build_type_classes(iid_product(t.component_symbol_dists[i], mu.vertex_count()), partition,
                                      options.table);
          r.components.push_back({t.component_weights[i], table_entropy(c)});
        }
      }
      r.normalized = r.h_nats / n;
      return r;
    } catch (const CapabilityMissing&) {
      // try additivity below
    } catch (const BudgetExceeded&) {
      if (!mu.as<ProductNode>() && !mu.as<FibreProductNode>()) throw;
    }
  }
  // Independent coordinates or fibres: entropies add.
  if (const auto* p = mu.as<ProductNode>()) {
    EntropyReport r;
    r.method = "additive";
    for (std::size_t v = 0; v < mu.vertex_count(); ++v) r.h_nats += entropy_nats(partition.cell_distribution(p->dist(v)));
    r.normalized = r.h_nats / n;
    return r;
  }
  if (const auto* f = mu.as<FibreProductNode>()) {
    EntropyReport r;
    r.method = "additive";
    for (const auto& fib : f->fibres) {
      auto part = exact_entropy(fib, partition, options);
      if (!part) return std::nullopt;
      r.h_nats += part->h_nats;
    }
    r.normalized = r.h_nats / n;
    return r;
  }
  return std::nullopt;
}

}  // namespace detail

// Exact by type classes, atoms or additivity; otherwise (if allowed) the
// plug-in estimate from sampled cells.
inline EntropyReport shannon_entropy(const Measure& mu, const Partition& partition, const EntropyOptions& options) {
  require(partition.alphabet_size() == mu.alphabet_size(), "entropy: partition does not match alphabet");
  if (auto r = detail::exact_entropy(mu, partition, options)) return *r;
  if (!options.allow_sampling || !mu.capabilities().exact_sampling) {
    throw CapabilityMissing("entropy: no exact path for " + mu.kind_name() + " and sampling disabled");
  }
  constexpr std::uint64_t kBlock = 1024;
  const std::size_t blocks = block_count(options.samples, kBlock);
  std::vector<std::map<CellSequence, std::uint64_t>> tallies(blocks);
  parallel_for(blocks, options.jobs, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, b));
    const std::uint64_t count = std::min<std::uint64_t>(kBlock, options.samples - b * kBlock);
    Configuration x(mu.vertex_count());
    for (std::uint64_t s = 0; s < count; ++s) {
      sample_into(mu, rng, x, {});
      ++tallies[b][partition.cells_of(x)];
    }
  });
  std::map<CellSequence, std::uint64_t> total;
  for (const auto& t : tallies)
    for (const auto& [c, k] : t) total[c] += k;
  EntropyReport r;
  r.method = "sampled";
  r.samples = options.samples;
  for (const auto& [c, k] : total) {
    const double f = static_cast<double>(k) / static_cast<double>(options.samples);
    r.h_nats -= f * std::log(f);
  }
  r.normalized = r.h_nats / static_cast<double>(mu.vertex_count());
  return r;
}

// ---------------------------------------------------------------------------
// Covering numbers cov_eps(mu; P^V): fewest cells with union mass > 1 - eps.

struct CoveringResult {
  std::optional<std::uint64_t> count;  // exact when representable
  double log_count = 0.0;
  double achieved_mass = 0.0;
};

namespace detail {

inline std::optional<std::uint64_t> checked_add(std::optional<std::uint64_t> a, std::optional<std::uint64_t> b) {
  if (!a || !b) return std::nullopt;
  const unsigned __int128 s = static_cast<unsigned __int128>(*a) + *b;
  if (s >= (static_cast<unsigned __int128>(1) << 63)) return std::nullopt;
  return static_cast<std::uint64_t>(s);
}

}  // namespace detail

// Greedy over rows in descending per-cell mass; the boundary row is split:
// it contributes floor((1 - eps - covered) / m) + 1 cells.
inline CoveringResult covering_from_table(const TypeClassTable& t, double eps) {
  require(eps > 0.0 && eps < 1.0, "covering_number: eps must lie in (0, 1)");
  const double target = 1.0 - eps;
  CoveringResult r;
  std::optional<std::uint64_t> count = 0;
  std::vector<double> log_terms;
  double covered = 0.0;
  for (const auto& row : t.rows) {
    const double row_mass = std::exp(row.log_row_mass());
    if (covered + row_mass > target) {
      const double m = std::exp(row.log_mass);
      const double need = (target - covered) / m;  // cells needed, before flooring
      std::optional<std::uint64_t> j;
      double log_j;
      if (need < 9.0e15) {
        auto cells = static_cast<std::uint64_t>(std::floor(need)) + 1;
        if (row.exact_mult) cells = std::min(cells, *row.exact_mult);
        j = cells;
        log_j = std::log(static_cast<double>(cells));
      } else {
        log_j = std::min(std::log(target - covered) - row.log_mass, row.log_mult);
      }
      count = detail::checked_add(count, j);
      log_terms.push_back(log_j);
      covered += j ? static_cast<double>(*j) * m : std::exp(log_j + row.log_mass);
      r.count = count;
      r.log_count = log_sum_exp(log_terms);
      r.achieved_mass = covered;
      return r;
    }
    covered += row_mass;
    count = detail::checked_add(count, row.exact_mult);
    log_terms.push_back(row.log_mult);
  }
  // Rounding left the total at or below 1 - eps: every cell is needed.
  r.count = count;
  r.log_count = log_sum_exp(log_terms);
  r.achieved_mass = covered;
  return r;
}

inline CoveringResult covering_number(const Measure& mu, const Partition& partition, double eps,
                                      const TableOptions& options = {}) {
  if (!mu.capabilities().cell_table) throw CapabilityMissing("covering_number: no cell enumeration for " + mu.kind_name());
  return covering_from_table(build_type_classes(mu, partition, options), eps);
}

// H <= log 2 + log cov_eps + eps |V| log |P|; returns the slack (>= 0 when it holds).
inline double covering_entropy_slack(double h_nats, double log_cov, double eps, std::size_t n, std::size_t cells) {
  return std::log(2.0) + log_cov + eps * static_cast<double>(n) * std::log(static_cast<double>(cells)) - h_nats;
}

// ---------------------------------------------------------------------------
// AEP bands.

struct AEPEntry {
  double eps = 0.0;
  double typical_mass = 0.0;  // mass of cells with e^{-(h+eps)n} < mu(C) < e^{-(h-eps)n}
  bool strong = false;        // typical mass is 1 within 1e-12
};

struct AEPReport {
  double h = 0.0;
  std::size_t vertex_count = 0;
  std::vector<AEPEntry> entries;
  double max_deviation = 0.0;  // max |(1/n) log mu(C) + h| over cells of positive mass
};

inline const std::vector<double>& default_eps_grid() {
  static const std::vector<double> grid{0.25, 0.1, 0.05, 0.01};
  return grid;
}

inline AEPReport aep_from_table(const TypeClassTable& t, double h, const std::vector<double>& eps_list) {
  AEPReport r;
  r.h = h;
  r.vertex_count = t.vertex_count;
  const double n = static_cast<double>(t.vertex_count);
  for (const auto& row : t.rows) r.max_deviation = std::max(r.max_deviation, std::abs(row.log_mass / n + h));
  for (double eps : eps_list) {
    require(eps > 0.0, "aep_check: eps must be positive");
    AEPEntry e;
    e.eps = eps;
    for (const auto& row : t.rows)
      if (row.log_mass > -(h + eps) * n && row.log_mass < -(h - eps) * n) e.typical_mass += std::exp(row.log_row_mass());
    e.strong = std::abs(e.typical_mass - 1.0) <= 1e-12;
    r.entries.push_back(e);
  }
  return r;
}

inline AEPReport aep_check(const Measure& mu, const Partition& partition, double h,
                           const std::vector<double>& eps_list = default_eps_grid(), const TableOptions& options = {}) {
  return aep_from_table(build_type_classes(mu, partition, options), h, eps_list);
}

// ---------------------------------------------------------------------------
// Rates: least squares q_n = h |V_n| + c.

struct RateEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;  // (q_n - fit_n) / |V_n|
};

inline RateEstimate rate_estimate(const std::vector<std::pair<double, double>>& series) {
  require(series.size() >= 2, "rate_estimate: needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : series) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(series.size());
  my /= static_cast<double>(series.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : series) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  require(sxx > 0.0, "rate_estimate: needs two distinct sizes");
  RateEstimate r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  for (const auto& [x, y] : series) r.residuals.push_back((y - (r.slope * x + r.intercept)) / x);
  return r;
}

// ---------------------------------------------------------------------------
// Hamming balls and metric covering bounds.

struct HammingBallCount {
  std::optional<std::uint64_t> exact;
  double log_count = 0.0;
  double log_bound = 0.0;  // n H(lambda, 1 - lambda) + lambda n log |P|, in nats
};

// Points of P^n within Hamming distance r of a fixed point, and the
// exponential bound 2^{H_2(lambda) n} |P|^{lambda n} (lambda defaults to r/n).
inline HammingBallCount hamming_ball_count(std::int64_t n, std::int64_t r, std::size_t cells, double lambda = -1.0) {
  require(n >= 0 && r >= 0 && r <= n, "hamming_ball_count: need 0 <= r <= n");
  require(cells >= 1, "hamming_ball_count: need at least one cell");
  if (lambda < 0.0) lambda = n > 0 ? static_cast<double>(r) / static_cast<double>(n) : 0.0;
  HammingBallCount out;
  std::vector<double> terms;
  unsigned __int128 exact = 0;
  bool fits = true;
  for (std::int64_t j = 0; j <= r; ++j) {
    if (cells == 1 && j > 0) break;
    terms.push_back(log_binomial(n, j) + static_cast<double>(j) * std::log(static_cast<double>(cells - 1)));
    if (fits) {
      unsigned __int128 term = 1;
      for (std::int64_t i = 0; i < j && fits; ++i) {
        term = term * static_cast<unsigned __int128>(n - i) / static_cast<unsigned __int128>(i + 1);
        fits = term < (static_cast<unsigned __int128>(1) << 62);
      }
      for (std::int64_t i = 0; i < j && fits; ++i) {
        term *= cells - 1;
        fits = term < (static_cast<unsigned __int128>(1) << 62);
      }
      exact += term;
      fits = fits && exact < (static_cast<unsigned __int128>(1) << 62);
    }
  }
  if (fits) out.exact = static_cast<std::uint64_t>(exact);
  out.log_count = log_sum_exp(terms);
  const double nn = static_cast<double>(n);
  out.log_bound = nn * binary_entropy_nats(lambda) + lambda * nn * std::log(static_cast<double>(cells));
  return out;
}

struct MetricCoverBounds {
  double upper_log = 0.0;                // log cov_eps(mu; P_fine^V)
  std::optional<double> lower_log;       // log cov_{2 eps} - Hamming-ball bound at 3 eps; eps < 1/6 only
  double hamming_log_bound = 0.0;
  double max_cell_diameter = 0.0;
};

// Bounds on the number of delta-balls of the Hamming average metric needed
// to cover mass 1 - eps. The lower bound counts balls of radius delta / 2.
inline MetricCoverBounds metric_cov_bounds(const Measure& mu, const Alphabet& alphabet, double delta, double eps,
                                           const Partition& fine, const TableOptions& options = {}) {
  require(alphabet.size() == mu.alphabet_size(), "metric_cov_bounds: alphabet does not match measure");
  MetricCoverBounds b;
  b.max_cell_diameter = max_cell_diameter(alphabet, fine);
  require(b.max_cell_diameter < delta, "metric_cov_bounds: a cell of the partition has diameter >= delta");
  const TypeClassTable t = build_type_classes(mu, fine, options);
  b.upper_log = covering_from_table(t, eps).log_count;
  const auto n = static_cast<std::int64_t>(mu.vertex_count());
  b.hamming_log_bound =
      hamming_ball_count(n, static_cast<std::int64_t>(std::floor(3.0 * eps * static_cast<double>(n))), fine.cell_count(),
                         3.0 * eps)
          .log_bound;
  if (eps < 1.0 / 6.0) b.lower_log = covering_from_table(t, 2.0 * eps).log_count - b.hamming_log_bound;
  return b;
}

}  // namespace soficlab

#endif  // SOFICLAB_ENTROPY_HPP
