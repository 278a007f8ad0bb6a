#ifndef SOFICLAB_TYPE_CLASSES_HPP
#define SOFICLAB_TYPE_CLASSES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "soficlab/alphabet.hpp"
#include "soficlab/errors.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/numeric.hpp"

namespace soficlab {

// A row groups cells of P^V that share one per-cell mass: a type class
// (all cells with count vector `counts`), a single explicit cell, or a
// block of equally weighted cells known only by their number.
enum class RowKind { TypeClass, ExplicitCell, UniformBlock };

struct TypeClassRow {
  Counts counts;      // cell counts over all vertices, pinned ones included
  CellSequence cell;  // ExplicitCell rows only
  double log_mult = 0.0;
  std::optional<std::uint64_t> exact_mult;
  std::vector<double> component_log_mass;  // log(w_i * mu_i(C)) of the unconditioned components
  double log_mass = 0.0;                   // per-cell mass of the represented measure

  double log_row_mass() const { return log_mult + log_mass; }
};

struct TypeClassTable {
  Partition partition;
  std::size_t vertex_count = 0;
  RowKind kind = RowKind::TypeClass;
  std::vector<double> component_weights;
  std::vector<std::vector<double>> component_symbol_dists;  // TypeClass tables only
  std::vector<Pin> pins;                                    // sorted by vertex
  double log_normalizer = 0.0;  // log mass of the conditioning events under the base measure
  std::vector<TypeClassRow> rows;  // descending log_mass; ties by counts, then cell

  double log_total() const {
    std::vector<double> terms;
    terms.reserve(rows.size());
    for (const auto& r : rows) terms.push_back(r.log_row_mass());
    return log_sum_exp(terms);
  }

  double log_cell_total() const {
    std::vector<double> terms;
    for (const auto& r : rows) terms.push_back(r.log_mult);
    return log_sum_exp(terms);
  }
};

struct TableOptions {
  std::uint64_t budget = 10'000'000;  // count vectors or explicit cells
};

namespace detail {

// All count vectors of length `parts` summing to n, in lexicographic order.
template <typename Fn>
void for_each_composition(std::int64_t n, std::size_t parts, Fn&& fn) {
  Counts k(parts, 0);
  if (parts == 0) return;
  auto rec = [&](auto&& self, std::size_t i, std::int64_t remaining) -> void {
    if (i + 1 == parts) {
      k[i] = remaining;
      fn(static_cast<const Counts&>(k));
      return;
    }
    for (std::int64_t x = 0; x <= remaining; ++x) {
      k[i] = x;
      self(self, i + 1, remaining - x);
    }
  };
  rec(rec, 0, n);
}

inline void finish_row(TypeClassRow& row, double log_normalizer) {
  row.log_mass = log_sum_exp(row.component_log_mass) - log_normalizer;
}

inline void sort_rows(std::vector<TypeClassRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const TypeClassRow& a, const TypeClassRow& b) {
    if (a.log_mass != b.log_mass) return a.log_mass > b.log_mass;
    if (a.counts != b.counts) return a.counts < b.counts;
    return a.cell < b.cell;
  });
}

inline TypeClassTable iid_table(const std::vector<IidComponent>& comps, const Partition& partition, std::size_t n,
                                const TableOptions& options) {
  const std::size_t c = partition.cell_count();
  if (composition_count(static_cast<std::int64_t>(n), static_cast<std::int64_t>(c)) >
      static_cast<double>(options.budget)) {
    throw BudgetExceeded("type classes: number of count vectors exceeds the budget");
  }
  TypeClassTable t;
  t.partition = partition;
  t.vertex_count = n;
  t.kind = RowKind::TypeClass;
  std::vector<std::vector<double>> log_q;
  for (const auto& comp : comps) {
    require(comp.dist.size() == partition.alphabet_size(), "type classes: partition does not match alphabet");
    t.component_weights.push_back(comp.weight);
    t.component_symbol_dists.push_back(comp.dist);
    auto q = partition.cell_distribution(comp.dist);
    std::vector<double> lq(c);
    for (std::size_t j = 0; j < c; ++j) lq[j] = std::log(q[j]);
    log_q.push_back(std::move(lq));
  }
  for_each_composition(static_cast<std::int64_t>(n), c, [&](const Counts& k) {
    TypeClassRow row;
    row.counts = k;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      double lm = comps[i].weight > 0.0 ? std::log(comps[i].weight) : kNegInf;
      for (std::size_t j = 0; j < c && lm > kNegInf; ++j) {
        if (k[j] == 0) continue;
        lm = log_q[i][j] == kNegInf ? kNegInf : lm + static_cast<double>(k[j]) * log_q[i][j];
      }
      row.component_log_mass.push_back(lm);
    }
    finish_row(row, 0.0);
    if (row.log_mass == kNegInf) return;
    row.log_mult = log_multinomial(k);
    row.exact_mult = exact_multinomial(k);
    t.rows.push_back(std::move(row));
  });
  return t;
}

inline TypeClassTable sparse_table(const std::vector<std::pair<double, const SparseNode*>>& parts,
                                   const Partition& partition, std::size_t n, const TableOptions& options) {
  std::map<CellSequence, double> cells;
  std::size_t atoms = 0;
  for (const auto& [w, s] : parts) {
    atoms += s->atoms.size();
    if (atoms * std::max<std::size_t>(n, 1) > options.budget * 64) {
      throw BudgetExceeded("type classes: sparse measure too large");
    }
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < s->atoms.size(); ++i) cells[partition.cells_of(s->atoms[i])] += w * s->probs[i];
  }
  TypeClassTable t;
  t.partition = partition;
  t.vertex_count = n;
  t.kind = RowKind::ExplicitCell;
  t.component_weights = {1.0};
  for (const auto& [cell, p] : cells) {
    TypeClassRow row;
    row.counts = partition.counts_of(cell);
    row.cell = cell;
    row.log_mult = 0.0;
    row.exact_mult = 1;
    row.component_log_mass = {std::log(p)};
    finish_row(row, 0.0);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline TypeClassTable uniform_table(const UniformCellsNode& u, const Partition& partition, std::size_t n,
                                    const TableOptions& options) {
  if (!(partition == u.partition)) {
    throw CapabilityMissing("type classes: uniform measure is tabulated only on its own partition");
  }
  TypeClassTable t;
  t.partition = partition;
  t.vertex_count = n;
  t.component_weights = {1.0};
  if (u.explicit_cells()) {
    if (u.cells.size() > options.budget) throw BudgetExceeded("type classes: too many explicit cells");
    t.kind = RowKind::ExplicitCell;
    for (const auto& cell : u.cells) {
      TypeClassRow row;
      row.counts = partition.counts_of(cell);
      row.cell = cell;
      row.exact_mult = 1;
      row.component_log_mass = {-u.log_count};
      finish_row(row, 0.0);
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  t.kind = RowKind::UniformBlock;
  TypeClassRow row;
  row.log_mult = u.log_count;
  if (u.prefix_count && *u.prefix_count < (1ULL << 53)) row.exact_mult = *u.prefix_count;
  row.component_log_mass = {-u.log_count};
  finish_row(row, 0.0);
  t.rows.push_back(std::move(row));
  return t;
}

inline TypeClassTable base_table(const Measure& mu, const Partition& partition, const TableOptions& options);

// Restricts a table of `child` to the event and renormalizes. Returns the
// log event mass; on a null event the rows are cleared and -inf returned.
inline double apply_event(TypeClassTable& t, const Measure& child, const Event& ev) {
  const Partition& p = t.partition;
  const Partition& q = ev.partition;
  require(detail::refines(p, q), "type classes: table partition must refine the event partition");
  const bool same = p == q;
  if ((!ev.pins.empty() || !ev.bounds.empty()) && t.kind == RowKind::UniformBlock) {
    throw CapabilityMissing("type classes: count or pin events on a uniform block");
  }
  if (!ev.pins.empty() && !same) {
    throw CapabilityMissing("type classes: pinned events need the table partition to equal the event partition");
  }
  if (ev.band && !same && t.kind == RowKind::TypeClass && !child.capabilities().exchangeable) {
    throw CapabilityMissing("type classes: band on a coarser partition needs an exchangeable measure");
  }

  // Merge pins; a contradiction empties the event.
  std::map<Vertex, Cell> pins;
  bool contradiction = false;
  for (const auto& pin : t.pins) pins[pin.vertex] = pin.cell;
  for (const auto& pin : ev.pins) {
    auto [it, inserted] = pins.emplace(pin.vertex, pin.cell);
    if (!inserted && it->second != pin.cell) contradiction = true;
  }
  Counts pinned(p.cell_count(), 0);
  for (const auto& [v, c] : pins) ++pinned[c];

  std::vector<Cell> coarse(p.cell_count(), 0);
  for (std::size_t s = 0; s < p.alphabet_size(); ++s)
    coarse[p.cell_of(static_cast<Symbol>(s))] = q.cell_of(static_cast<Symbol>(s));
  auto coarse_counts = [&](const Counts& k) {
    Counts out(q.cell_count(), 0);
    for (std::size_t j = 0; j < k.size(); ++j) out[coarse[j]] += k[j];
    return out;
  };

  std::vector<TypeClassRow> kept;
  for (auto& row : t.rows) {
    if (contradiction) break;
    if (t.kind == RowKind::ExplicitCell) {
      bool ok = true;
      for (const auto& [v, c] : pins) ok = ok && row.cell[v] == c;
      if (!ok) continue;
    } else if (t.kind == RowKind::TypeClass && !pins.empty()) {
      Counts rest(row.counts.size());
      bool ok = true;
      for (std::size_t j = 0; j < rest.size(); ++j) {
        rest[j] = row.counts[j] - pinned[j];
        ok = ok && rest[j] >= 0;
      }
      if (!ok) continue;
      row.log_mult = log_multinomial(rest);
      row.exact_mult = exact_multinomial(rest);
    }
    if (!ev.bounds.empty() && !ev.counts_ok(same ? row.counts : coarse_counts(row.counts))) continue;
    if (ev.band) {
      double child_mass = row.log_mass;
      if (!same) {
        child_mass = t.kind == RowKind::ExplicitCell
                         ? log_cell_mass(child, q, detail::coarsen(row.cell, p, q))
                         : log_class_cell_mass(child, q, coarse_counts(row.counts));
      }
      if (!in_band(*ev.band, child_mass, t.vertex_count)) continue;
    }
    kept.push_back(std::move(row));
  }
  std::vector<double> terms;
  for (const auto& r : kept) terms.push_back(r.log_row_mass());
  const double log_event = log_sum_exp(terms);
  if (!(log_event > kNegInf)) {
    t.rows.clear();
    return kNegInf;
  }
  for (auto& r : kept) r.log_mass -= log_event;
  t.rows = std::move(kept);
  t.log_normalizer += log_event;
  t.pins.clear();
  for (const auto& [v, c] : pins) t.pins.push_back({v, c});
  return log_event;
}

inline TypeClassTable base_table(const Measure& mu, const Partition& partition, const TableOptions& options) {
  require(partition.alphabet_size() == mu.alphabet_size(), "type classes: partition does not match alphabet");
  if (const auto* c = mu.as<ConditionedNode>()) {
    TypeClassTable t = base_table(c->child, partition, options);
    if (apply_event(t, c->child, c->event) == kNegInf) throw InvalidArgument("conditioned: event has zero mass");
    return t;
  }
  if (const auto* s = mu.as<SparseNode>()) return sparse_table({{1.0, s}}, partition, mu.vertex_count(), options);
  if (const auto* u = mu.as<UniformCellsNode>()) return uniform_table(*u, partition, mu.vertex_count(), options);
  if (auto comps = iid_components(mu)) return iid_table(*comps, partition, mu.vertex_count(), options);
  if (const auto* m = mu.as<MixtureNode>()) {
    std::vector<std::pair<double, const SparseNode*>> parts;
    for (std::size_t i = 0; i < m->children.size(); ++i) {
      const auto* s = m->children[i].as<SparseNode>();
      if (!s) throw CapabilityMissing("type classes: mixture children must all be iid products or all sparse");
      parts.emplace_back(m->weights[i], s);
    }
    return sparse_table(parts, partition, mu.vertex_count(), options);
  }
  if (const auto* f = mu.as<FibreProductNode>()) {
    if (mu.capabilities().cell_table) {
      const auto* p = f->fibres.front().as<ProductNode>();
      return iid_table({{1.0, p->dists.front()}}, partition, mu.vertex_count(), options);
    }
  }
  throw CapabilityMissing("type classes: no cell enumeration for " + mu.kind_name());
}

}  // namespace detail

// Method-of-types table of mu over P^V. Rows with zero mass are omitted.
inline TypeClassTable build_type_classes(const Measure& mu, const Partition& partition,
                                         const TableOptions& options = {}) {
  TypeClassTable t = detail::base_table(mu, partition, options);
  detail::sort_rows(t.rows);
  return t;
}

struct ConditionOptions {
  TableOptions table;
  double enumeration_budget = 1e6;  // |X|^|V| limit for brute-force event masses
};

// log child(event), by type classes when possible and by enumeration of
// X^V for tiny models.
inline double log_event_mass(const Measure& child, const Event& event, const ConditionOptions& options = {}) {
  if (child.capabilities().cell_table) {
    try {
      TypeClassTable t = detail::base_table(child, event.partition, options.table);
      return detail::apply_event(t, child, event);
    } catch (const CapabilityMissing&) {
      // fall through to enumeration
    }
  }
  if (child.capabilities().exact_atom_mass &&
      configuration_space_size(child.vertex_count(), child.alphabet_size()) <= options.enumeration_budget) {
    std::vector<double> terms;
    for_each_configuration(child.vertex_count(), child.alphabet_size(), [&](const Configuration& x) {
      if (event_contains(child, event, event.partition, event.partition.cells_of(x)))
        terms.push_back(log_atom_mass(child, x));
    });
    return log_sum_exp(terms);
  }
  throw CapabilityMissing("conditioned: event mass not computable for " + child.kind_name());
}

// child( . | event); the event must have positive mass.
inline Measure conditioned(const Measure& child, const Event& event, const ConditionOptions& options = {}) {
  require(event.partition.alphabet_size() == child.alphabet_size(), "conditioned: partition does not match alphabet");
  if (event.band) require(event.band->a_lo < event.band->a_hi, "conditioned: band needs a_lo < a_hi");
  for (const auto& p : event.pins) require(p.vertex < child.vertex_count(), "conditioned: pinned vertex out of range");
  return conditioned_with_mass(child, event, log_event_mass(child, event, options));
}

// Per-cell mass of an explicit cell, looked up in a table.
inline double table_log_cell_mass(const TypeClassTable& t, const CellSequence& cell) {
  for (const auto& pin : t.pins)
    if (cell.at(pin.vertex) != pin.cell) return kNegInf;
  if (t.kind == RowKind::ExplicitCell) {
    for (const auto& r : t.rows)
      if (r.cell == cell) return r.log_mass;
    return kNegInf;
  }
  if (t.kind == RowKind::UniformBlock) throw CapabilityMissing("table: uniform block has no cell lookup");
  const Counts k = t.partition.counts_of(cell);
  for (const auto& r : t.rows)
    if (r.counts == k) return r.log_mass;
  return kNegInf;
}

}  // namespace soficlab

#endif  // SOFICLAB_TYPE_CLASSES_HPP
