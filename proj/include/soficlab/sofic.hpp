#ifndef SOFICLAB_SOFIC_HPP
#define SOFICLAB_SOFIC_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/errors.hpp"
#include "soficlab/group.hpp"
#include "soficlab/parallel.hpp"
#include "soficlab/rng.hpp"

namespace soficlab {

using Vertex = std::uint32_t;
using VertexMap = std::vector<Vertex>;

// Per-generator permutations of {0..N-1}. A word acts by composing letter
// permutations right to left: sigma^{l1 l2 ... lk} = sigma^{l1} o ... o sigma^{lk}.
class SoficApproximation {
public:
  SoficApproximation(GroupKindPtr kind, Generators generators, std::vector<VertexMap> generator_perms,
                     std::string label = {}, std::optional<std::uint64_t> seed = std::nullopt)
      : kind_(std::move(kind)), generators_(std::move(generators)), label_(std::move(label)), seed_(seed) {
    require(kind_ != nullptr, "sofic: null group kind");
    require(generator_perms.size() == kind_->generator_count(),
            "sofic: need one permutation per generator of " + kind_->name());
    require(generators_.count() == kind_->generator_count(), "sofic: generator labels mismatch");
    vertex_count_ = generator_perms.empty() ? 0U : static_cast<Vertex>(generator_perms.front().size());
    for (auto& p : generator_perms) {
      require(p.size() == vertex_count_, "sofic: permutations have different sizes");
      VertexMap inv(p.size(), 0);
      std::vector<bool> hit(p.size(), false);
      for (Vertex v = 0; v < p.size(); ++v) {
        require(p[v] < p.size() && !hit[p[v]], "sofic: generator map is not a bijection");
        hit[p[v]] = true;
        inv[p[v]] = v;
      }
      letter_perms_.push_back(std::move(p));
      letter_perms_.push_back(std::move(inv));
    }
  }

  // Sofic approximation of a group with no generators on `vertices` points.
  static SoficApproximation without_generators(GroupKindPtr kind, Vertex vertices, std::string label = {}) {
    SoficApproximation s(std::move(kind), Generators{}, {}, std::move(label));
    s.vertex_count_ = vertices;
    return s;
  }

  Vertex vertex_count() const { return vertex_count_; }
  const GroupKind& kind() const { return *kind_; }
  const GroupKindPtr& kind_ptr() const { return kind_; }
  const Generators& generators() const { return generators_; }
  const std::string& label() const { return label_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  const VertexMap& letter_perm(Letter l) const { return letter_perms_.at(l); }
  const VertexMap& generator_perm(std::uint32_t g) const { return letter_perms_.at(2 * g); }

  Vertex apply(Letter l, Vertex v) const { return letter_perms_[l][v]; }

  Vertex apply(const Word& w, Vertex v) const {
    for (auto it = w.rbegin(); it != w.rend(); ++it) v = letter_perms_[*it][v];
    return v;
  }

  VertexMap word_map(const Word& w) const {
    VertexMap out(vertex_count_);
    for (Vertex v = 0; v < vertex_count_; ++v) out[v] = apply(w, v);
    return out;
  }

  bool compatible_with(const GroupWindow& window) const {
    return window.kind().letter_count() == kind_->letter_count() && window.generators() == generators_;
  }

private:
  GroupKindPtr kind_;
  Generators generators_;
  std::vector<VertexMap> letter_perms_;
  Vertex vertex_count_ = 0;
  std::string label_;
  std::optional<std::uint64_t> seed_;
};

// Z acting on Z/NZ by v -> v + 1.
inline SoficApproximation cyclic_sofic(Vertex n) {
  require(n >= 1, "cyclic_sofic: N must be at least 1");
  VertexMap shift(n);
  for (Vertex v = 0; v < n; ++v) shift[v] = (v + 1) % n;
  auto kind = integer_lattice(1);
  auto gens = default_generators(*kind);
  return SoficApproximation(kind, gens, {shift}, "cyclic(" + std::to_string(n) + ")");
}

// Independent uniform permutations, one per free generator. Generator g uses
// the stream derive_seed(seed, g).
inline SoficApproximation random_sofic(int rank, Vertex n, std::uint64_t seed) {
  require(n >= 2, "random_sofic: N must be at least 2");
  auto kind = free_group(rank);
  auto gens = default_generators(*kind);
  std::vector<VertexMap> perms;
  for (int g = 0; g < rank; ++g) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    perms.push_back(rng.permutation(n));
  }
  return SoficApproximation(kind, gens, std::move(perms),
                            "random_free(" + std::to_string(rank) + "," + std::to_string(n) + ")", seed);
}

// A finite group acting on itself by left translation (a genuine free action).
inline SoficApproximation translation_sofic(const GroupKindPtr& finite) {
  const auto* t = std::get_if<FiniteTable>(&finite->value);
  require(t != nullptr, "translation_sofic: needs a finite_table group");
  const auto m = static_cast<Vertex>(t->table.size());
  std::vector<VertexMap> perms;
  for (auto g : t->generators) {
    VertexMap p(m);
    for (Vertex v = 0; v < m; ++v) p[v] = t->table[g][v];
    perms.push_back(std::move(p));
  }
  return SoficApproximation(finite, default_generators(*finite), std::move(perms), "translation");
}

// The trivial group on k points.
inline SoficApproximation trivial_sofic(Vertex k) {
  return SoficApproximation::without_generators(trivial_group(), k, "trivial(" + std::to_string(k) + ")");
}

// sigma x tau on V x W with row-major index v*|W| + w. Left generators act on
// the v coordinate, right generators on the w coordinate.
inline SoficApproximation product_sofic(const SoficApproximation& sigma, const SoficApproximation& tau) {
  const Vertex nv = sigma.vertex_count();
  const Vertex nw = tau.vertex_count();
  require(static_cast<std::uint64_t>(nv) * nw < (1ULL << 32), "product_sofic: vertex set too large");
  std::vector<VertexMap> perms;
  for (std::uint32_t g = 0; g < sigma.kind().generator_count(); ++g) {
    const auto& p = sigma.generator_perm(g);
    VertexMap out(static_cast<std::size_t>(nv) * nw);
    for (Vertex v = 0; v < nv; ++v)
      for (Vertex w = 0; w < nw; ++w) out[v * nw + w] = p[v] * nw + w;
    perms.push_back(std::move(out));
  }
  for (std::uint32_t h = 0; h < tau.kind().generator_count(); ++h) {
    const auto& p = tau.generator_perm(h);
    VertexMap out(static_cast<std::size_t>(nv) * nw);
    for (Vertex v = 0; v < nv; ++v)
      for (Vertex w = 0; w < nw; ++w) out[v * nw + w] = v * nw + p[w];
    perms.push_back(std::move(out));
  }
  auto kind = direct_product(sigma.kind_ptr(), tau.kind_ptr());
  auto gens = product_generators(sigma.generators(), tau.generators());
  if (perms.empty()) {
    return SoficApproximation::without_generators(kind, nv * nw, sigma.label() + " x " + tau.label());
  }
  return SoficApproximation(kind, gens, std::move(perms), sigma.label() + " x " + tau.label());
}

// sigma^g as a vertex map for every element g of the window.
inline std::vector<VertexMap> window_maps(const SoficApproximation& sigma, const GroupWindow& window) {
  if (!sigma.compatible_with(window)) {
    throw WindowMismatch("window generators do not match the sofic approximation");
  }
  std::vector<VertexMap> maps;
  maps.reserve(window.size());
  for (const auto& w : window.elements()) maps.push_back(sigma.word_map(w));
  return maps;
}

struct DefectReport {
  int window_radius = -1;
  double homomorphism_defect = 0.0;
  double freeness_defect = 0.0;
  double injectivity_defect = 0.0;
  std::uint64_t relation_checks = 0;
  std::uint64_t relation_failures = 0;
  std::uint64_t freeness_checks = 0;
  std::uint64_t fixed_points = 0;
  std::uint64_t non_injective_vertices = 0;
};

struct DefectOptions {
  std::uint64_t budget = 500'000'000;  // vertex * |E|^2 work units
  unsigned jobs = 1;
};

// Exhaustive soficity defects on a window:
//  homomorphism: (v, g, h) with g, h, gh in E and sigma^g sigma^h v != sigma^{gh} v;
//  freeness: (v, g) with g != e and sigma^g v == v;
//  injectivity: v such that g -> sigma^g v is not injective on E.
inline DefectReport defect(const SoficApproximation& sigma, const GroupWindow& window,
                           const DefectOptions& options = {}) {
  const std::uint64_t n = sigma.vertex_count();
  const std::uint64_t e = window.size();
  if (n * e * e > options.budget) throw BudgetExceeded("defect: window too large for budget");
  const auto maps = window_maps(sigma, window);

  std::vector<std::size_t> products(e * e, GroupWindow::kOutside);
  std::uint64_t valid_pairs = 0;
  for (std::size_t g = 0; g < e; ++g) {
    for (std::size_t h = 0; h < e; ++h) {
      auto idx = window.index_of(concat(window.element(g), window.element(h)));
      if (idx) {
        products[g * e + h] = *idx;
        ++valid_pairs;
      }
    }
  }

  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = block_count(n, kBlock);
  struct Tally {
    std::uint64_t relation_failures = 0;
    std::uint64_t fixed = 0;
    std::uint64_t non_injective = 0;
  };
  std::vector<Tally> tallies(blocks);
  parallel_for(blocks, options.jobs, [&](std::size_t b) {
    Tally t;
    std::vector<Vertex> images(e);
    const std::size_t end = std::min<std::size_t>(n, (b + 1) * kBlock);
    for (std::size_t v = b * kBlock; v < end; ++v) {
      for (std::size_t g = 0; g < e; ++g) {
        for (std::size_t h = 0; h < e; ++h) {
          const std::size_t gh = products[g * e + h];
          if (gh == GroupWindow::kOutside) continue;
          if (maps[g][maps[h][v]] != maps[gh][v]) ++t.relation_failures;
        }
      }
      for (std::size_t g = 0; g < e; ++g) {
        images[g] = maps[g][v];
        if (g != window.identity_index() && images[g] == v) ++t.fixed;
      }
      std::sort(images.begin(), images.end());
      if (std::adjacent_find(images.begin(), images.end()) != images.end()) ++t.non_injective;
    }
    tallies[b] = t;
  });

  DefectReport r;
  r.window_radius = window.radius();
  for (const auto& t : tallies) {
    r.relation_failures += t.relation_failures;
    r.fixed_points += t.fixed;
    r.non_injective_vertices += t.non_injective;
  }
  r.relation_checks = n * valid_pairs;
  r.freeness_checks = n * (e - 1);
  r.homomorphism_defect =
      r.relation_checks ? static_cast<double>(r.relation_failures) / static_cast<double>(r.relation_checks) : 0.0;
  r.freeness_defect =
      r.freeness_checks ? static_cast<double>(r.fixed_points) / static_cast<double>(r.freeness_checks) : 0.0;
  r.injectivity_defect = n ? static_cast<double>(r.non_injective_vertices) / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace soficlab

#endif  // SOFICLAB_SOFIC_HPP
