#ifndef SOFICLAB_MARGINALS_HPP
#define SOFICLAB_MARGINALS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/alphabet.hpp"
#include "soficlab/group.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/parallel.hpp"
#include "soficlab/rng.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/type_classes.hpp"
#include "soficlab/window_distribution.hpp"

namespace soficlab {

enum class MarginalMode { Exact, Enumeration, MonteCarlo };

inline std::string mode_name(MarginalMode m) {
  switch (m) {
    case MarginalMode::Exact: return "exact";
    case MarginalMode::Enumeration: return "enumeration";
    case MarginalMode::MonteCarlo: return "monte_carlo";
  }
  return "?";
}

struct MarginalOptions {
  double dense_budget = WindowDistribution::kDenseBudget;
  double enumeration_budget = 1e6;   // |X|^|V| for brute-force marginals
  std::uint64_t samples = 100'000;   // Monte Carlo fallback
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool allow_sampling = true;
  TableOptions table;
};

struct JointMarginal {
  WindowDistribution dist;  // positions are the requested vertices, in order
  MarginalMode mode = MarginalMode::Exact;
  std::uint64_t samples = 0;
};

namespace detail {

inline std::vector<std::string> vertex_labels(const std::vector<Vertex>& d) {
  std::vector<std::string> out;
  for (auto v : d) out.push_back("v" + std::to_string(v));
  return out;
}

// Joint law of x_D under a table of an exchangeable conditioned measure:
// P(x_D = a) = sum_rows mult(n - d; k - c(a)) sum_i m_i(C) prod_u p_i(a_u) / q_i(c(a_u)).
inline WindowDistribution exchangeable_joint(const TypeClassTable& t, std::size_t d, std::size_t k,
                                             const std::vector<std::string>& labels) {
  const Partition& p = t.partition;
  std::vector<std::vector<double>> q;
  for (const auto& dist : t.component_symbol_dists) q.push_back(p.cell_distribution(dist));
  WindowDistribution out(labels, k);
  const auto n = static_cast<std::int64_t>(t.vertex_count);
  for_each_configuration(d, k, [&](const Configuration& a) {
    Counts ca(p.cell_count(), 0);
    for (auto s : a) ++ca[p.cell_of(s)];
    std::vector<double> log_within(q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (auto s : a) {
        const double num = t.component_symbol_dists[i][s];
        log_within[i] += num > 0.0 ? std::log(num / q[i][p.cell_of(s)]) : kNegInf;
      }
    std::vector<double> terms;
    Counts rest(p.cell_count());
    for (const auto& row : t.rows) {
      bool ok = true;
      for (std::size_t c = 0; c < rest.size(); ++c) {
        rest[c] = row.counts[c] - ca[c];
        ok = ok && rest[c] >= 0;
      }
      if (!ok) continue;
      const double lm = log_multinomial(rest);
      for (std::size_t i = 0; i < q.size(); ++i)
        terms.push_back(lm + row.component_log_mass[i] - t.log_normalizer + log_within[i]);
    }
    const double m = std::exp(log_sum_exp(terms));
    if (m != 0.0) out.add(a, m);
  });
  return out;
}

// Fills the positions `pos` of `y` from each block's support in turn.
inline void combine_blocks(const std::vector<WindowDistribution>& blocks,
                           const std::vector<std::vector<std::size_t>>& positions, std::size_t b, double mass,
                           Configuration& y, WindowDistribution& out) {
  if (b == blocks.size()) {
    out.add(y, mass);
    return;
  }
  blocks[b].for_each([&](const Configuration& z, double m) {
    for (std::size_t i = 0; i < z.size(); ++i) y[positions[b][i]] = z[i];
    combine_blocks(blocks, positions, b + 1, mass * m, y, out);
  });
}

}  // namespace detail

inline JointMarginal joint_marginal(const Measure& mu, const std::vector<Vertex>& d,
                                    const MarginalOptions& options = {});

namespace detail {

inline std::optional<WindowDistribution> exact_joint(const Measure& mu, const std::vector<Vertex>& d,
                                                     const MarginalOptions& options) {
  const std::size_t k = mu.alphabet_size();
  const auto labels = vertex_labels(d);
  if (configuration_space_size(d.size(), k) > options.dense_budget) return std::nullopt;
  if (const auto* p = mu.as<ProductNode>()) {
    WindowDistribution out(labels, k, options.dense_budget);
    for_each_configuration(d.size(), k, [&](const Configuration& a) {
      double m = 1.0;
      for (std::size_t i = 0; i < a.size(); ++i) m *= p->dist(d[i])[a[i]];
      if (m != 0.0) out.add(a, m);
    });
    return out;
  }
  if (const auto* s = mu.as<SparseNode>()) {
    WindowDistribution out(labels, k, options.dense_budget);
    Configuration a(d.size());
    for (std::size_t j = 0; j < s->atoms.size(); ++j) {
      for (std::size_t i = 0; i < d.size(); ++i) a[i] = s->atoms[j][d[i]];
      out.add(a, s->probs[j]);
    }
    return out;
  }
  if (const auto* m = mu.as<MixtureNode>()) {
    std::vector<WindowDistribution> parts;
    for (const auto& c : m->children) {
      auto part = exact_joint(c, d, options);
      if (!part) return std::nullopt;
      parts.push_back(std::move(*part));
    }
    return combine(m->weights, parts);
  }
  if (const auto* f = mu.as<FibreProductNode>()) {
    const std::size_t w = f->fibres.size();
    std::map<std::size_t, std::pair<std::vector<Vertex>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto& g = groups[d[i] % w];
      g.first.push_back(static_cast<Vertex>(d[i] / w));
      g.second.push_back(i);
    }
    std::vector<WindowDistribution> blocks;
    std::vector<std::vector<std::size_t>> positions;
    for (const auto& [fib, g] : groups) {
      auto part = exact_joint(f->fibres[fib], g.first, options);
      if (!part) return std::nullopt;
      blocks.push_back(std::move(*part));
      positions.push_back(g.second);
    }
    WindowDistribution out(labels, k, options.dense_budget);
    Configuration y(d.size());
    combine_blocks(blocks, positions, 0, 1.0, y, out);
    return out;
  }
  if (const auto* u = mu.as<UniformCellsNode>()) {
    if (!u->explicit_cells() || u->cells.size() > options.table.budget) return std::nullopt;
    WindowDistribution out(labels, k, options.dense_budget);
    const double w = 1.0 / static_cast<double>(u->cells.size());
    std::vector<std::vector<Symbol>> members(u->partition.cell_count());
    for (Cell c = 0; c < members.size(); ++c) members[c] = u->partition.members(c);
    for (const auto& cell : u->cells) {
      std::vector<WindowDistribution> blocks;
      std::vector<std::vector<std::size_t>> positions;
      for (std::size_t i = 0; i < d.size(); ++i) {
        WindowDistribution b({labels[i]}, k);
        const auto& mem = members[cell[d[i]]];
        for (auto s : mem) b.add({s}, 1.0 / static_cast<double>(mem.size()));
        blocks.push_back(std::move(b));
        positions.push_back({i});
      }
      Configuration y(d.size());
      combine_blocks(blocks, positions, 0, w, y, out);
    }
    return out;
  }
  if (const auto* c = mu.as<ConditionedNode>()) {
    if (!mu.capabilities().exchangeable || !mu.capabilities().cell_table) return std::nullopt;
    try {
      TypeClassTable t = build_type_classes(mu, c->event.partition, options.table);
      if (t.kind != RowKind::TypeClass || !t.pins.empty() || t.component_symbol_dists.empty()) return std::nullopt;
      return exchangeable_joint(t, d.size(), k, labels);
    } catch (const CapabilityMissing&) {
      return std::nullopt;
    } catch (const BudgetExceeded&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Law of (x_u)_{u in d} for distinct vertices d.
inline JointMarginal joint_marginal(const Measure& mu, const std::vector<Vertex>& d, const MarginalOptions& options) {
  for (auto v : d) require(v < mu.vertex_count(), "joint_marginal: vertex out of range");
  {
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "joint_marginal: repeated vertex");
  }
  const std::size_t k = mu.alphabet_size();
  if (auto exact = detail::exact_joint(mu, d, options)) return {std::move(*exact), MarginalMode::Exact, 0};

  const auto labels = detail::vertex_labels(d);
  if (mu.capabilities().exact_atom_mass &&
      configuration_space_size(mu.vertex_count(), k) <= options.enumeration_budget) {
    WindowDistribution out(labels, k, options.dense_budget);
    Configuration a(d.size());
    for_each_configuration(mu.vertex_count(), k, [&](const Configuration& x) {
      const double m = atom_mass(mu, x);
      if (m == 0.0) return;
      for (std::size_t i = 0; i < d.size(); ++i) a[i] = x[d[i]];
      out.add(a, m);
    });
    return {std::move(out), MarginalMode::Enumeration, 0};
  }

  if (!options.allow_sampling || !mu.capabilities().exact_sampling) {
    throw CapabilityMissing("joint_marginal: no exact path and sampling unavailable for " + mu.kind_name());
  }
  constexpr std::uint64_t kBlock = 1024;
  const std::size_t blocks = block_count(options.samples, kBlock);
  std::vector<std::map<Configuration, std::uint64_t>> tallies(blocks);
  parallel_for(blocks, options.jobs, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, b));
    const std::uint64_t count = std::min<std::uint64_t>(kBlock, options.samples - b * kBlock);
    Configuration x(mu.vertex_count());
    Configuration a(d.size());
    for (std::uint64_t s = 0; s < count; ++s) {
      sample_into(mu, rng, x, {});
      for (std::size_t i = 0; i < d.size(); ++i) a[i] = x[d[i]];
      ++tallies[b][a];
    }
  });
  std::map<Configuration, std::uint64_t> total;
  for (const auto& t : tallies)
    for (const auto& [a, c] : t) total[a] += c;
  WindowDistribution out(labels, k, options.dense_budget);
  for (const auto& [a, c] : total) out.add(a, static_cast<double>(c) / static_cast<double>(options.samples));
  return {std::move(out), MarginalMode::MonteCarlo, options.samples};
}

struct WindowMarginal {
  WindowDistribution dist;  // positions are window elements
  MarginalMode mode = MarginalMode::Exact;
  std::uint64_t samples = 0;
  bool injective = true;  // g -> sigma^g(v) injective on E
};

// Distinct vertices sigma^g(v) over the window, in order of first
// appearance, and for each window element the index of its vertex.
inline std::pair<std::vector<Vertex>, std::vector<std::size_t>> window_images(const std::vector<VertexMap>& maps,
                                                                              Vertex v) {
  std::vector<Vertex> distinct;
  std::vector<std::size_t> slot(maps.size());
  for (std::size_t g = 0; g < maps.size(); ++g) {
    const Vertex u = maps[g][v];
    auto it = std::find(distinct.begin(), distinct.end(), u);
    slot[g] = static_cast<std::size_t>(it - distinct.begin());
    if (it == distinct.end()) distinct.push_back(u);
  }
  return {distinct, slot};
}

// Pushes a law on X^D to X^E through the slot map (diagonal identifications
// where several window elements share a vertex).
inline WindowDistribution push_to_window(const WindowDistribution& joint, const std::vector<std::size_t>& slot,
                                         const std::vector<std::string>& labels, double dense_budget) {
  WindowDistribution out(labels, joint.alphabet_size(), dense_budget);
  Configuration y(slot.size());
  joint.for_each([&](const Configuration& a, double m) {
    for (std::size_t g = 0; g < slot.size(); ++g) y[g] = a[slot[g]];
    out.add(y, m);
  });
  return out;
}

// Caches joint laws of exchangeable measures, which depend only on |D|.
class MarginalEngine {
public:
  MarginalEngine(Measure mu, MarginalOptions options) : mu_(std::move(mu)), options_(std::move(options)) {}

  JointMarginal joint(const std::vector<Vertex>& d) {
    if (!mu_.capabilities().exchangeable) return joint_marginal(mu_, d, options_);
    auto it = by_size_.find(d.size());
    if (it == by_size_.end()) {
      std::vector<Vertex> first(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) first[i] = static_cast<Vertex>(i);
      it = by_size_.emplace(d.size(), joint_marginal(mu_, first, options_)).first;
    }
    return it->second;
  }

  WindowMarginal window(const std::vector<VertexMap>& maps, Vertex v, const std::vector<std::string>& labels) {
    auto [distinct, slot] = window_images(maps, v);
    JointMarginal j = joint(distinct);
    WindowMarginal out;
    out.dist = push_to_window(j.dist, slot, labels, options_.dense_budget);
    out.mode = j.mode;
    out.samples = j.samples;
    out.injective = distinct.size() == maps.size();
    return out;
  }

  const Measure& measure() const { return mu_; }

private:
  Measure mu_;
  MarginalOptions options_;
  std::map<std::size_t, JointMarginal> by_size_;
};

// (Pi_v^sigma)_* mu restricted to the window E.
inline WindowMarginal window_marginal(const Measure& mu, const SoficApproximation& sigma, Vertex v,
                                      const GroupWindow& window, const MarginalOptions& options = {}) {
  require(sigma.vertex_count() == mu.vertex_count(), "window_marginal: measure and sofic approximation differ in |V|");
  MarginalEngine engine(mu, options);
  return engine.window(window_maps(sigma, window), v, window.labels());
}

}  // namespace soficlab

#endif  // SOFICLAB_MARGINALS_HPP
