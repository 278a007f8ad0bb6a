#ifndef SOFICLAB_SERIALIZATION_HPP
#define SOFICLAB_SERIALIZATION_HPP

// JSON forms of group kinds, windows, sofic approximations, partitions,
// events and measure expression trees.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "soficlab/sofic.hpp"
#include "soficlab/type_classes.hpp"

namespace soficlab {

using Json = nlohmann::json;

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("json: missing field '") + key + "'");
  return j.at(key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Groups.

inline Json group_kind_to_json(const GroupKind& kind) {
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FreeGroup>) {
          return {{"type", "free"}, {"rank", k.rank}};
        } else if constexpr (std::is_same_v<K, IntegerLattice>) {
          return {{"type", "integer_lattice"}, {"rank", k.rank}};
        } else if constexpr (std::is_same_v<K, CyclicGroup>) {
          return {{"type", "cyclic"}, {"order", k.order}};
        } else if constexpr (std::is_same_v<K, FiniteTable>) {
          return {{"type", "finite_table"}, {"table", k.table}, {"generators", k.generators}};
        } else {
          return {{"type", "direct_product"}, {"left", group_kind_to_json(*k.left)}, {"right", group_kind_to_json(*k.right)}};
        }
      },
      kind.value);
}

inline GroupKindPtr group_kind_from_json(const Json& j) {
  const auto type = detail::field(j, "type").get<std::string>();
  if (type == "free") return free_group(detail::field(j, "rank").get<int>());
  if (type == "integer_lattice") return integer_lattice(detail::field(j, "rank").get<int>());
  if (type == "cyclic") return cyclic_group(detail::field(j, "order").get<std::uint32_t>());
  if (type == "finite_table") {
    return finite_group(detail::field(j, "table").get<std::vector<std::vector<std::uint32_t>>>(),
                        detail::field(j, "generators").get<std::vector<std::uint32_t>>());
  }
  if (type == "direct_product") {
    return direct_product(group_kind_from_json(detail::field(j, "left")), group_kind_from_json(detail::field(j, "right")));
  }
  throw UnsupportedGroup("json: unknown group kind '" + type + "'");
}

inline Json generators_to_json(const Generators& g) {
  return {{"labels", g.labels}, {"inverse_labels", g.inverse_labels}};
}

inline Generators generators_from_json(const Json& j) {
  return Generators{detail::field(j, "labels").get<std::vector<std::string>>(),
                    detail::field(j, "inverse_labels").get<std::vector<std::string>>()};
}

inline Json window_to_json(const GroupWindow& w) {
  return {{"group_kind", group_kind_to_json(w.kind())},
          {"generators", generators_to_json(w.generators())},
          {"radius", w.radius()},
          {"elements", w.labels()}};
}

// A ball when only a radius is given, otherwise the listed elements.
inline GroupWindow window_from_json(const Json& j) {
  auto kind = group_kind_from_json(detail::field(j, "group_kind"));
  Generators gens = j.contains("generators") ? generators_from_json(j.at("generators")) : default_generators(*kind);
  const int radius = j.value("radius", -1);
  if (!j.contains("elements")) return GroupWindow::ball(kind, gens, radius);
  std::vector<Word> words;
  for (const auto& s : j.at("elements")) words.push_back(gens.parse(s.get<std::string>()));
  return GroupWindow::from_elements(kind, gens, words, radius);
}

inline Json sofic_to_json(const SoficApproximation& s) {
  Json perms = Json::object();
  for (std::uint32_t g = 0; g < s.generators().count(); ++g) perms[s.generators().labels[g]] = s.generator_perm(g);
  Json j{{"group_kind", group_kind_to_json(s.kind())},
         {"generators", generators_to_json(s.generators())},
         {"vertex_count", s.vertex_count()},
         {"perms", perms},
         {"label", s.label()}};
  j["seed"] = s.seed() ? Json(*s.seed()) : Json(nullptr);
  return j;
}

inline SoficApproximation sofic_from_json(const Json& j) {
  auto kind = group_kind_from_json(detail::field(j, "group_kind"));
  Generators gens = j.contains("generators") ? generators_from_json(j.at("generators")) : default_generators(*kind);
  const auto n = detail::field(j, "vertex_count").get<Vertex>();
  const std::string label = j.value("label", std::string{});
  std::optional<std::uint64_t> seed;
  if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<std::uint64_t>();
  if (gens.count() == 0) return SoficApproximation::without_generators(kind, n, label);
  const Json& perms = detail::field(j, "perms");
  std::vector<VertexMap> maps;
  for (const auto& l : gens.labels) {
    if (!perms.contains(l)) throw InvalidArgument("json: no permutation for generator '" + l + "'");
    maps.push_back(perms.at(l).get<VertexMap>());
    require(maps.back().size() == n, "json: permutation for '" + l + "' has wrong length");
  }
  return SoficApproximation(kind, gens, std::move(maps), label, seed);
}

// ---------------------------------------------------------------------------
// Partitions, events, measures.

inline Json partition_to_json(const Partition& p) { return {{"cell_of", p.cells()}}; }

inline Partition partition_from_json(const Json& j) {
  return Partition(detail::field(j, "cell_of").get<std::vector<Cell>>());
}

inline Json event_to_json(const Event& e) {
  Json j{{"partition", partition_to_json(e.partition)}};
  if (e.band) j["band"] = {{"a_lo", e.band->a_lo}, {"a_hi", e.band->a_hi}};
  Json bounds = Json::array();
  for (const auto& b : e.bounds) bounds.push_back({{"cell", b.cell}, {"op", cmp_name(b.op)}, {"value", b.value}});
  Json pins = Json::array();
  for (const auto& p : e.pins) pins.push_back({{"vertex", p.vertex}, {"cell", p.cell}});
  j["bounds"] = bounds;
  j["pins"] = pins;
  return j;
}

inline Event event_from_json(const Json& j) {
  Event e;
  e.partition = partition_from_json(detail::field(j, "partition"));
  if (j.contains("band")) e.band = CellBand{j.at("band").at("a_lo").get<double>(), j.at("band").at("a_hi").get<double>()};
  for (const auto& b : j.value("bounds", Json::array()))
    e.bounds.push_back({b.at("cell").get<Cell>(), parse_cmp(b.at("op").get<std::string>()), b.at("value").get<double>()});
  for (const auto& p : j.value("pins", Json::array())) e.pins.push_back({p.at("vertex").get<Vertex>(), p.at("cell").get<Cell>()});
  return e;
}

inline Json measure_to_json(const Measure& mu) {
  Json j{{"type", mu.kind_name()}, {"vertex_count", mu.vertex_count()}, {"alphabet_size", mu.alphabet_size()}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SparseNode>) {
          j["atoms"] = m.atoms;
          j["probs"] = m.probs;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          j["iid"] = m.iid;
          if (m.iid) j["p"] = m.dists.front();
          else j["dists"] = m.dists;
        } else if constexpr (std::is_same_v<T, MixtureNode>) {
          j["weights"] = m.weights;
          Json children = Json::array();
          for (const auto& c : m.children) children.push_back(measure_to_json(c));
          j["children"] = children;
        } else if constexpr (std::is_same_v<T, ConditionedNode>) {
          j["child"] = measure_to_json(m.child);
          j["event"] = event_to_json(m.event);
          j["log_event_mass"] = m.log_event_mass;
        } else if constexpr (std::is_same_v<T, UniformCellsNode>) {
          j["partition"] = partition_to_json(m.partition);
          if (m.explicit_cells()) j["cells"] = m.cells;
          else if (m.prefix_count) j["first"] = *m.prefix_count;
          else j["log_count"] = m.log_count;
        } else {
          Json fibres = Json::array();
          for (const auto& f : m.fibres) fibres.push_back(measure_to_json(f));
          j["fibres"] = fibres;
        }
      },
      mu.node().value);
  return j;
}

// Inverse of measure_to_json. A conditioned node without "log_event_mass"
// has its event mass recomputed.
inline Measure measure_from_json(const Json& j) {
  const auto type = detail::field(j, "type").get<std::string>();
  if (type == "sparse") {
    const auto atoms = detail::field(j, "atoms").get<std::vector<Configuration>>();
    const auto probs = detail::field(j, "probs").get<std::vector<double>>();
    require(atoms.size() == probs.size(), "json: atoms and probs differ in length");
    require(!atoms.empty(), "json: sparse measure needs atoms");
    std::vector<std::pair<Configuration, double>> pairs;
    for (std::size_t i = 0; i < atoms.size(); ++i) pairs.emplace_back(atoms[i], probs[i]);
    return sparse_measure(detail::field(j, "alphabet_size").get<std::size_t>(), atoms.front().size(), pairs);
  }
  if (type == "product") {
    if (j.value("iid", true)) return iid_product(detail::field(j, "p").get<std::vector<double>>(),
                                                 detail::field(j, "vertex_count").get<std::size_t>());
    return product_measure(detail::field(j, "dists").get<std::vector<std::vector<double>>>());
  }
  if (type == "mixture") {
    std::vector<Measure> children;
    for (const auto& c : detail::field(j, "children")) children.push_back(measure_from_json(c));
    return mixture(detail::field(j, "weights").get<std::vector<double>>(), children);
  }
  if (type == "conditioned") {
    const Measure child = measure_from_json(detail::field(j, "child"));
    Event ev = event_from_json(detail::field(j, "event"));
    if (j.contains("log_event_mass")) return conditioned_with_mass(child, std::move(ev), j.at("log_event_mass").get<double>());
    return conditioned(child, ev);
  }
  if (type == "uniform_cells") {
    const Partition p = partition_from_json(detail::field(j, "partition"));
    const auto n = detail::field(j, "vertex_count").get<std::size_t>();
    if (j.contains("cells")) return uniform_on_cells(p, n, j.at("cells").get<std::vector<CellSequence>>());
    if (j.contains("first")) return uniform_on_first_cells(p, n, j.at("first").get<std::uint64_t>());
    return uniform_on_cell_count(p, n, detail::field(j, "log_count").get<double>());
  }
  if (type == "fibre_product") {
    std::vector<Measure> fibres;
    for (const auto& f : detail::field(j, "fibres")) fibres.push_back(measure_from_json(f));
    return fibre_product(fibres);
  }
  throw InvalidArgument("json: unknown measure type '" + type + "'");
}

}  // namespace soficlab

#endif  // SOFICLAB_SERIALIZATION_HPP
