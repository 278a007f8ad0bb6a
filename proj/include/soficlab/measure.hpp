#ifndef SOFICLAB_MEASURE_HPP
#define SOFICLAB_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "soficlab/alphabet.hpp"
#include "soficlab/errors.hpp"
#include "soficlab/numeric.hpp"
#include "soficlab/rng.hpp"
#include "soficlab/sofic.hpp"

namespace soficlab {

// ---------------------------------------------------------------------------
// Events over P^V, expressed in the language of cell-count vectors.

enum class Cmp { Less, LessEqual, Greater, GreaterEqual, Equal };

inline bool compare(double lhs, Cmp op, double rhs) {
  switch (op) {
    case Cmp::Less: return lhs < rhs;
    case Cmp::LessEqual: return lhs <= rhs;
    case Cmp::Greater: return lhs > rhs;
    case Cmp::GreaterEqual: return lhs >= rhs;
    case Cmp::Equal: return lhs == rhs;
  }
  return false;
}

inline std::string cmp_name(Cmp op) {
  switch (op) {
    case Cmp::Less: return "<";
    case Cmp::LessEqual: return "<=";
    case Cmp::Greater: return ">";
    case Cmp::GreaterEqual: return ">=";
    case Cmp::Equal: return "==";
  }
  return "?";
}

inline Cmp parse_cmp(const std::string& s) {
  if (s == "<") return Cmp::Less;
  if (s == "<=") return Cmp::LessEqual;
  if (s == ">") return Cmp::Greater;
  if (s == ">=") return Cmp::GreaterEqual;
  if (s == "==") return Cmp::Equal;
  throw InvalidArgument("unknown comparison '" + s + "'");
}

// count of `cell` among the vertices `op` value.
struct CountBound {
  Cell cell = 0;
  Cmp op = Cmp::GreaterEqual;
  double value = 0.0;
};

struct Pin {
  Vertex vertex = 0;
  Cell cell = 0;
  auto operator<=>(const Pin&) const = default;
};

// Cells C of P^V with e^{-a_hi |V|} < child(C) <= e^{-a_lo |V|}.
struct CellBand {
  double a_lo = 0.0;
  double a_hi = 0.0;
};

inline bool in_band(const CellBand& band, double log_mass, std::size_t n) {
  const double nn = static_cast<double>(n);
  return log_mass > -band.a_hi * nn && log_mass <= -band.a_lo * nn;
}

// Intersection of an optional cell band, count bounds and pinned coordinates.
struct Event {
  Partition partition;
  std::optional<CellBand> band;
  std::vector<CountBound> bounds;
  std::vector<Pin> pins;

  bool counts_ok(const Counts& k) const {
    for (const auto& b : bounds)
      if (!compare(static_cast<double>(k.at(b.cell)), b.op, b.value)) return false;
    return true;
  }

  bool pins_ok(const CellSequence& cells) const {
    for (const auto& p : pins)
      if (cells.at(p.vertex) != p.cell) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Measure expressions.

struct Capabilities {
  bool exact_atom_mass = false;
  bool exact_cell_mass = false;
  bool exact_sampling = false;
  bool cell_table = false;    // cells enumerable by type classes or atoms
  bool exchangeable = false;  // invariant under vertex permutations
};

struct MeasureNode;

class Measure {
public:
  Measure() = default;
  explicit Measure(std::shared_ptr<const MeasureNode> node) : node_(std::move(node)) {}

  const MeasureNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }
  std::size_t vertex_count() const;
  std::size_t alphabet_size() const;
  const Capabilities& capabilities() const;
  std::string kind_name() const;

  template <typename T>
  const T* as() const;

private:
  std::shared_ptr<const MeasureNode> node_;
};

struct SparseNode {
  std::vector<Configuration> atoms;  // sorted, distinct
  std::vector<double> probs;
  std::vector<double> cumulative;
};

struct ProductNode {
  bool iid = true;
  std::vector<std::vector<double>> dists;  // one entry when iid
  std::vector<std::vector<double>> cumulative;
  const std::vector<double>& dist(std::size_t v) const { return iid ? dists.front() : dists.at(v); }
};

struct MixtureNode {
  std::vector<double> weights;
  std::vector<Measure> children;
  std::vector<double> cumulative;
};

struct ConditionedNode {
  Measure child;
  Event event;
  double log_event_mass = 0.0;  // log child(event)
};

// Uniform over a set of M cells of P^V and, inside a cell, uniform over the
// symbols of each coordinate's cell. The set is either explicit, the first M
// cells in lexicographic order (vertex 0 most significant), or known only by
// log M (no membership queries).
struct UniformCellsNode {
  Partition partition;
  std::vector<CellSequence> cells;  // explicit, sorted
  std::optional<std::uint64_t> prefix_count;
  double log_count = 0.0;
  bool explicit_cells() const { return !cells.empty(); }
};

// Independent fibres x_{(v, w)} = x[v * |W| + w]; fibre w is a measure on X^V.
struct FibreProductNode {
  std::vector<Measure> fibres;
};

struct MeasureNode {
  std::variant<SparseNode, ProductNode, MixtureNode, ConditionedNode, UniformCellsNode, FibreProductNode> value;
  std::size_t vertex_count = 0;
  std::size_t alphabet_size = 0;
  Capabilities caps;
};

inline std::size_t Measure::vertex_count() const { return node_->vertex_count; }
inline std::size_t Measure::alphabet_size() const { return node_->alphabet_size; }
inline const Capabilities& Measure::capabilities() const { return node_->caps; }

template <typename T>
const T* Measure::as() const {
  return std::get_if<T>(&node_->value);
}

inline std::string Measure::kind_name() const {
  static const char* names[] = {"sparse", "product", "mixture", "conditioned", "uniform_cells", "fibre_product"};
  return names[node_->value.index()];
}

namespace detail {

inline void check_distribution(const std::vector<double>& p, const std::string& what) {
  require(!p.empty(), what + ": empty distribution");
  double total = 0.0;
  for (double x : p) {
    require(x >= 0.0 && std::isfinite(x), what + ": probabilities must be finite and nonnegative");
    total += x;
  }
  require(std::abs(total - 1.0) <= 1e-9, what + ": probabilities must sum to 1");
}

inline Measure wrap(MeasureNode node) { return Measure(std::make_shared<const MeasureNode>(std::move(node))); }

// Number of the uniform node's selected cell in lexicographic order, when it
// is below `limit`.
inline bool lex_rank_below(const CellSequence& cells, std::size_t cell_count, std::uint64_t limit) {
  unsigned __int128 rank = 0;
  for (auto c : cells) {
    rank = rank * cell_count + c;
    if (rank >= limit) return false;
  }
  return rank < limit;
}

// True if every cell of `fine` lies inside one cell of `coarse`.
inline bool refines(const Partition& fine, const Partition& coarse) {
  if (fine.alphabet_size() != coarse.alphabet_size()) return false;
  std::vector<std::int64_t> image(fine.cell_count(), -1);
  for (std::size_t s = 0; s < fine.alphabet_size(); ++s) {
    auto f = fine.cell_of(static_cast<Symbol>(s));
    auto c = static_cast<std::int64_t>(coarse.cell_of(static_cast<Symbol>(s)));
    if (image[f] == -1) image[f] = c;
    if (image[f] != c) return false;
  }
  return true;
}

inline CellSequence coarsen(const CellSequence& cells, const Partition& fine, const Partition& coarse) {
  std::vector<Cell> image(fine.cell_count(), 0);
  for (std::size_t s = 0; s < fine.alphabet_size(); ++s)
    image[fine.cell_of(static_cast<Symbol>(s))] = coarse.cell_of(static_cast<Symbol>(s));
  CellSequence out(cells.size());
  for (std::size_t v = 0; v < cells.size(); ++v) out[v] = image[cells[v]];
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors.

inline Measure sparse_measure(std::size_t alphabet_size, std::size_t vertex_count,
                              const std::vector<std::pair<Configuration, double>>& atoms) {
  require(!atoms.empty(), "sparse: needs at least one atom");
  std::map<Configuration, double> merged;
  double total = 0.0;
  for (const auto& [x, p] : atoms) {
    require(x.size() == vertex_count, "sparse: configuration has wrong length");
    for (auto s : x) require(s < alphabet_size, "sparse: symbol out of range");
    require(p >= 0.0 && std::isfinite(p), "sparse: probabilities must be nonnegative");
    if (p > 0.0) merged[x] += p;
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "sparse: probabilities must sum to 1");
  SparseNode s;
  for (const auto& [x, p] : merged) {
    s.atoms.push_back(x);
    s.probs.push_back(p);
  }
  s.cumulative = cumulative_of(s.probs);
  MeasureNode node{std::move(s), vertex_count, alphabet_size, {}};
  node.caps = {true, true, true, true, false};
  return detail::wrap(std::move(node));
}

inline Measure point_mass(std::size_t alphabet_size, const Configuration& x) {
  return sparse_measure(alphabet_size, x.size(), {{x, 1.0}});
}

inline Measure iid_product(const std::vector<double>& p, std::size_t vertex_count) {
  detail::check_distribution(p, "product");
  require(vertex_count >= 1, "product: needs at least one vertex");
  ProductNode prod;
  prod.iid = true;
  prod.dists = {p};
  prod.cumulative = {cumulative_of(p)};
  MeasureNode node{std::move(prod), vertex_count, p.size(), {}};
  node.caps = {true, true, true, true, true};
  return detail::wrap(std::move(node));
}

inline Measure product_measure(const std::vector<std::vector<double>>& per_vertex) {
  require(!per_vertex.empty(), "product: needs at least one vertex");
  ProductNode prod;
  prod.iid = false;
  for (const auto& p : per_vertex) {
    detail::check_distribution(p, "product");
    require(p.size() == per_vertex.front().size(), "product: distributions over different alphabets");
    prod.dists.push_back(p);
    prod.cumulative.push_back(cumulative_of(p));
  }
  const std::size_t k = per_vertex.front().size();
  MeasureNode node{std::move(prod), per_vertex.size(), k, {}};
  node.caps = {true, true, true, false, false};
  return detail::wrap(std::move(node));
}

inline Measure mixture(const std::vector<double>& weights, const std::vector<Measure>& children) {
  require(!children.empty() && weights.size() == children.size(), "mixture: weights and children differ in size");
  detail::check_distribution(weights, "mixture");
  MixtureNode mix{weights, children, cumulative_of(weights)};
  Capabilities caps{true, true, true, true, true};
  bool all_sparse = true;
  bool all_exchangeable = true;
  for (const auto& c : children) {
    require(c.vertex_count() == children.front().vertex_count(), "mixture: children over different vertex sets");
    require(c.alphabet_size() == children.front().alphabet_size(), "mixture: children over different alphabets");
    caps.exact_atom_mass &= c.capabilities().exact_atom_mass;
    caps.exact_cell_mass &= c.capabilities().exact_cell_mass;
    caps.exact_sampling &= c.capabilities().exact_sampling;
    all_sparse &= c.as<SparseNode>() != nullptr;
    all_exchangeable &= c.capabilities().exchangeable && c.capabilities().cell_table;
  }
  caps.exchangeable = all_exchangeable;
  caps.cell_table = all_sparse || all_exchangeable;
  MeasureNode node{std::move(mix), children.front().vertex_count(), children.front().alphabet_size(), caps};
  return detail::wrap(std::move(node));
}

// Uniform over an explicit list of cells of P^V.
inline Measure uniform_on_cells(const Partition& partition, std::size_t vertex_count,
                                std::vector<CellSequence> cells) {
  require(!cells.empty(), "uniform_on_cells: needs at least one cell");
  for (const auto& c : cells) {
    require(c.size() == vertex_count, "uniform_on_cells: cell has wrong length");
    for (auto x : c) require(x < partition.cell_count(), "uniform_on_cells: cell index out of range");
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  UniformCellsNode u{partition, std::move(cells), std::nullopt, 0.0};
  u.log_count = std::log(static_cast<double>(u.cells.size()));
  MeasureNode node{std::move(u), vertex_count, partition.alphabet_size(), {true, true, true, true, false}};
  return detail::wrap(std::move(node));
}

// Uniform over the first `count` cells of P^V in lexicographic order.
inline Measure uniform_on_first_cells(const Partition& partition, std::size_t vertex_count, std::uint64_t count) {
  require(count >= 1, "uniform_on_first_cells: count must be positive");
  require(std::log(static_cast<double>(count)) <=
              static_cast<double>(vertex_count) * std::log(static_cast<double>(partition.cell_count())) + 1e-9,
          "uniform_on_first_cells: count exceeds the number of cells");
  UniformCellsNode u{partition, {}, count, std::log(static_cast<double>(count))};
  MeasureNode node{std::move(u), vertex_count, partition.alphabet_size(), {true, true, true, true, false}};
  return detail::wrap(std::move(node));
}

// Uniform over some e^{log_count} cells; only cell-table queries are exact.
inline Measure uniform_on_cell_count(const Partition& partition, std::size_t vertex_count, double log_count) {
  require(log_count >= 0.0 && std::isfinite(log_count), "uniform_on_cell_count: log_count must be nonnegative");
  require(log_count <=
              static_cast<double>(vertex_count) * std::log(static_cast<double>(partition.cell_count())) + 1e-9,
          "uniform_on_cell_count: count exceeds the number of cells");
  UniformCellsNode u{partition, {}, std::nullopt, log_count};
  MeasureNode node{std::move(u), vertex_count, partition.alphabet_size(), {false, false, false, true, false}};
  return detail::wrap(std::move(node));
}

// Product of independent fibres over V x W with row-major index v*|W| + w.
inline Measure fibre_product(const std::vector<Measure>& fibres) {
  require(!fibres.empty(), "fibre_product: needs at least one fibre");
  Capabilities caps{true, true, true, false, false};
  bool identical_iid = true;
  const auto* first = fibres.front().as<ProductNode>();
  for (const auto& f : fibres) {
    require(f.vertex_count() == fibres.front().vertex_count(), "fibre_product: fibres over different vertex sets");
    require(f.alphabet_size() == fibres.front().alphabet_size(), "fibre_product: fibres over different alphabets");
    caps.exact_atom_mass &= f.capabilities().exact_atom_mass;
    caps.exact_cell_mass &= f.capabilities().exact_cell_mass;
    caps.exact_sampling &= f.capabilities().exact_sampling;
    const auto* p = f.as<ProductNode>();
    identical_iid &= first && first->iid && p && p->iid && p->dists.front() == first->dists.front();
  }
  caps.cell_table = identical_iid;
  caps.exchangeable = identical_iid;
  const std::size_t n = fibres.front().vertex_count() * fibres.size();
  MeasureNode node{FibreProductNode{fibres}, n, fibres.front().alphabet_size(), caps};
  return detail::wrap(std::move(node));
}

// Conditioning with a precomputed event mass; see conditioned() in
// type_classes.hpp for the checked public entry point.
inline Measure conditioned_with_mass(const Measure& child, Event event, double log_event_mass) {
  require(event.partition.alphabet_size() == child.alphabet_size(), "conditioned: partition does not match alphabet");
  if (event.band) require(event.band->a_lo < event.band->a_hi, "conditioned: band needs a_lo < a_hi");
  for (const auto& b : event.bounds) require(b.cell < event.partition.cell_count(), "conditioned: bound cell out of range");
  for (const auto& p : event.pins) {
    require(p.vertex < child.vertex_count(), "conditioned: pinned vertex out of range");
    require(p.cell < event.partition.cell_count(), "conditioned: pinned cell out of range");
  }
  if (!(log_event_mass > kNegInf)) throw InvalidArgument("conditioned: event has zero mass");
  std::sort(event.pins.begin(), event.pins.end());
  Capabilities caps = child.capabilities();
  caps.exchangeable = caps.exchangeable && event.pins.empty();
  MeasureNode node{ConditionedNode{child, std::move(event), log_event_mass}, child.vertex_count(),
                   child.alphabet_size(), caps};
  return detail::wrap(std::move(node));
}

// ---------------------------------------------------------------------------
// Exact queries.

inline double log_cell_mass(const Measure& mu, const Partition& partition, const CellSequence& cells);

// Event membership of a P-cell sequence, where `partition` refines the
// event's partition.
inline bool event_contains(const Measure& child, const Event& ev, const Partition& partition,
                           const CellSequence& cells) {
  CellSequence own = partition == ev.partition ? cells : detail::coarsen(cells, partition, ev.partition);
  if (!ev.pins_ok(own)) return false;
  if (!ev.bounds.empty() && !ev.counts_ok(ev.partition.counts_of(own))) return false;
  if (ev.band && !in_band(*ev.band, log_cell_mass(child, ev.partition, own), own.size())) return false;
  return true;
}

// log mu(C) for the cell C = prod_v cells[v] of P^V.
inline double log_cell_mass(const Measure& mu, const Partition& partition, const CellSequence& cells) {
  require(cells.size() == mu.vertex_count(), "cell_mass: cell has wrong length");
  require(partition.alphabet_size() == mu.alphabet_size(), "cell_mass: partition does not match alphabet");
  if (!mu.capabilities().exact_cell_mass) throw CapabilityMissing("cell_mass: not exact for " + mu.kind_name());
  const auto& node = mu.node();
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SparseNode>) {
          std::vector<double> terms;
          for (std::size_t i = 0; i < m.atoms.size(); ++i) {
            bool inside = true;
            for (std::size_t v = 0; v < cells.size() && inside; ++v)
              inside = partition.cell_of(m.atoms[i][v]) == cells[v];
            if (inside) terms.push_back(std::log(m.probs[i]));
          }
          return log_sum_exp(terms);
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          double total = 0.0;
          std::vector<double> q;
          for (std::size_t v = 0; v < cells.size(); ++v) {
            if (v == 0 || !m.iid) q = partition.cell_distribution(m.dist(v));
            total += std::log(q.at(cells[v]));
          }
          return total;
        } else if constexpr (std::is_same_v<T, MixtureNode>) {
          std::vector<double> terms;
          for (std::size_t i = 0; i < m.children.size(); ++i) {
            if (m.weights[i] == 0.0) continue;
            terms.push_back(std::log(m.weights[i]) + log_cell_mass(m.children[i], partition, cells));
          }
          return log_sum_exp(terms);
        } else if constexpr (std::is_same_v<T, ConditionedNode>) {
          if (!detail::refines(partition, m.event.partition)) {
            throw CapabilityMissing("cell_mass: partition does not refine the conditioning event's partition");
          }
          if (!event_contains(m.child, m.event, partition, cells)) return kNegInf;
          return log_cell_mass(m.child, partition, cells) - m.log_event_mass;
        } else if constexpr (std::is_same_v<T, UniformCellsNode>) {
          if (!detail::refines(partition, m.partition)) {
            throw CapabilityMissing("cell_mass: partition does not refine the uniform measure's partition");
          }
          CellSequence own = partition == m.partition ? cells : detail::coarsen(cells, partition, m.partition);
          bool selected = m.explicit_cells() ? std::binary_search(m.cells.begin(), m.cells.end(), own)
                                             : detail::lex_rank_below(own, m.partition.cell_count(), *m.prefix_count);
          if (!selected) return kNegInf;
          double total = -m.log_count;
          if (!(partition == m.partition)) {
            std::vector<double> fine_size(partition.cell_count(), 0.0), coarse_size(m.partition.cell_count(), 0.0);
            for (auto c : partition.cells()) fine_size[c] += 1.0;
            for (auto c : m.partition.cells()) coarse_size[c] += 1.0;
            for (std::size_t v = 0; v < cells.size(); ++v)
              total += std::log(fine_size[cells[v]] / coarse_size[own[v]]);
          }
          return total;
        } else {
          const std::size_t w = m.fibres.size();
          const std::size_t nv = m.fibres.front().vertex_count();
          double total = 0.0;
          CellSequence part(nv);
          for (std::size_t f = 0; f < w; ++f) {
            for (std::size_t v = 0; v < nv; ++v) part[v] = cells[v * w + f];
            total += log_cell_mass(m.fibres[f], partition, part);
            if (total == kNegInf) break;
          }
          return total;
        }
      },
      node.value);
}

inline double cell_mass(const Measure& mu, const Partition& partition, const CellSequence& cells) {
  return std::exp(log_cell_mass(mu, partition, cells));
}

// Per-cell mass of the type class with count vector k (exchangeable measures).
// The representative cell puts cell 0 on the first k_0 vertices, and so on.
inline CellSequence representative_cell(const Counts& k) {
  CellSequence out;
  for (std::size_t c = 0; c < k.size(); ++c) out.insert(out.end(), static_cast<std::size_t>(k[c]), static_cast<Cell>(c));
  return out;
}

inline double log_class_cell_mass(const Measure& mu, const Partition& partition, const Counts& k) {
  if (!mu.capabilities().exchangeable) {
    throw CapabilityMissing("cell_mass by count vector needs an exchangeable measure");
  }
  require(k.size() == partition.cell_count(), "cell_mass: count vector has wrong length");
  std::int64_t total = 0;
  for (auto x : k) {
    require(x >= 0, "cell_mass: negative count");
    total += x;
  }
  require(static_cast<std::size_t>(total) == mu.vertex_count(), "cell_mass: counts do not sum to |V|");
  return log_cell_mass(mu, partition, representative_cell(k));
}

inline double log_atom_mass(const Measure& mu, const Configuration& x) {
  if (!mu.capabilities().exact_atom_mass) throw CapabilityMissing("atom_mass: not exact for " + mu.kind_name());
  require(x.size() == mu.vertex_count(), "atom_mass: configuration has wrong length");
  for (auto s : x) require(s < mu.alphabet_size(), "atom_mass: symbol out of range");
  if (const auto* s = mu.as<SparseNode>()) {
    auto it = std::lower_bound(s->atoms.begin(), s->atoms.end(), x);
    if (it == s->atoms.end() || *it != x) return kNegInf;
    return std::log(s->probs[static_cast<std::size_t>(it - s->atoms.begin())]);
  }
  // Atoms are the cells of the singleton partition.
  CellSequence cells(x.begin(), x.end());
  return log_cell_mass(mu, Partition::singletons(mu.alphabet_size()), cells);
}

inline double atom_mass(const Measure& mu, const Configuration& x) { return std::exp(log_atom_mass(mu, x)); }

// ---------------------------------------------------------------------------
// Sampling.

struct SampleOptions {
  std::uint64_t max_rejections = 1'000'000;
};

inline void sample_into(const Measure& mu, Rng& rng, Configuration& x, const SampleOptions& options);

inline Configuration sample(const Measure& mu, Rng& rng, const SampleOptions& options = {}) {
  if (!mu.capabilities().exact_sampling) throw CapabilityMissing("sample: no sampler for " + mu.kind_name());
  Configuration x(mu.vertex_count());
  sample_into(mu, rng, x, options);
  return x;
}

inline void sample_into(const Measure& mu, Rng& rng, Configuration& x, const SampleOptions& options) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SparseNode>) {
          x = m.atoms[rng.categorical(m.cumulative)];
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          for (std::size_t v = 0; v < x.size(); ++v)
            x[v] = static_cast<Symbol>(rng.categorical(m.iid ? m.cumulative.front() : m.cumulative[v]));
        } else if constexpr (std::is_same_v<T, MixtureNode>) {
          sample_into(m.children[rng.categorical(m.cumulative)], rng, x, options);
        } else if constexpr (std::is_same_v<T, ConditionedNode>) {
          const Partition& p = m.event.partition;
          for (std::uint64_t attempt = 0; attempt < options.max_rejections; ++attempt) {
            sample_into(m.child, rng, x, options);
            if (event_contains(m.child, m.event, p, p.cells_of(x))) return;
          }
          throw RejectionBudgetExhausted("sample: conditioning event not hit within the rejection budget");
        } else if constexpr (std::is_same_v<T, UniformCellsNode>) {
          CellSequence cells;
          if (m.explicit_cells()) {
            cells = m.cells[rng.below(m.cells.size())];
          } else {
            if (!m.prefix_count) throw CapabilityMissing("sample: uniform measure known only by its size");
            std::uint64_t rank = rng.below(*m.prefix_count);
            cells.assign(x.size(), 0);
            const std::uint64_t base = m.partition.cell_count();
            for (std::size_t v = x.size(); v-- > 0 && rank > 0;) {
              cells[v] = static_cast<Cell>(rank % base);
              rank /= base;
            }
          }
          for (std::size_t v = 0; v < x.size(); ++v) {
            const auto members = m.partition.members(cells[v]);
            x[v] = members.size() == 1 ? members.front() : members[rng.below(members.size())];
          }
        } else {
          const std::size_t w = m.fibres.size();
          const std::size_t nv = m.fibres.front().vertex_count();
          Configuration part(nv);
          for (std::size_t f = 0; f < w; ++f) {
            sample_into(m.fibres[f], rng, part, options);
            for (std::size_t v = 0; v < nv; ++v) x[v * w + f] = part[v];
          }
        }
      },
      mu.node().value);
}

// ---------------------------------------------------------------------------
// Structural helpers.

// (weight, per-symbol distribution) for every iid component of an
// exchangeable product/mixture tree; empty if the tree has another shape.
struct IidComponent {
  double weight = 1.0;
  std::vector<double> dist;
};

inline bool collect_iid_components(const Measure& mu, double weight, std::vector<IidComponent>& out) {
  if (const auto* p = mu.as<ProductNode>()) {
    if (!p->iid) return false;
    out.push_back({weight, p->dists.front()});
    return true;
  }
  if (const auto* m = mu.as<MixtureNode>()) {
    for (std::size_t i = 0; i < m->children.size(); ++i)
      if (!collect_iid_components(m->children[i], weight * m->weights[i], out)) return false;
    return true;
  }
  return false;
}

inline std::optional<std::vector<IidComponent>> iid_components(const Measure& mu) {
  std::vector<IidComponent> out;
  if (!collect_iid_components(mu, 1.0, out)) return std::nullopt;
  return out;
}

// Fibre measure of coordinate w in a fibre product.
inline const Measure& fibre(const Measure& mu, std::size_t w) {
  const auto* f = mu.as<FibreProductNode>();
  require(f != nullptr, "fibre: not a fibre product");
  return f->fibres.at(w);
}

}  // namespace soficlab

#endif  // SOFICLAB_MEASURE_HPP
