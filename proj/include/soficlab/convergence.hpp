#ifndef SOFICLAB_CONVERGENCE_HPP
#define SOFICLAB_CONVERGENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "soficlab/errors.hpp"
#include "soficlab/group.hpp"
#include "soficlab/marginals.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/numeric.hpp"
#include "soficlab/parallel.hpp"
#include "soficlab/rng.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/window_distribution.hpp"

namespace soficlab {

// Weak* neighbourhood {nu : tv(nu_E, target) <= tol} of the target's window marginal.
struct Neighbourhood {
  GroupWindow window;
  WindowDistribution target;
  double tol = 0.1;
};

inline Neighbourhood make_neighbourhood(GroupWindow window, WindowDistribution target, double tol) {
  require(tol > 0.0 && tol <= 1.0, "neighbourhood: tolerance must lie in (0, 1]");
  require(target.labels() == window.labels(), "neighbourhood: target is not indexed by the window");
  require(std::abs(target.total() - 1.0) <= 1e-9, "neighbourhood: target mass must be 1");
  return {std::move(window), std::move(target), tol};
}

// Same window, target alpha x alpha over the doubled alphabet.
inline Neighbourhood pair_neighbourhood(const Neighbourhood& u) {
  return {u.window, pair_product(u.target, u.target), u.tol};
}

// (x_{sigma^g(v)})_{g in E}
inline Configuration pullback_name(const SoficApproximation& sigma, const Configuration& x, Vertex v,
                                   const GroupWindow& window) {
  require(x.size() == sigma.vertex_count(), "pullback_name: configuration length differs from |V|");
  Configuration y(window.size());
  for (std::size_t g = 0; g < window.size(); ++g) y[g] = x[sigma.apply(window.element(g), v)];
  return y;
}

// (1/|V|) sum_v delta_{Pi_v(x)} on X^E.
inline WindowDistribution empirical_distribution(const SoficApproximation& sigma, const Configuration& x,
                                                 const GroupWindow& window, std::size_t alphabet_size) {
  require(x.size() == sigma.vertex_count() && !x.empty(), "empirical_distribution: configuration length differs from |V|");
  const auto maps = window_maps(sigma, window);
  std::map<Configuration, std::uint64_t> counts;
  Configuration y(window.size());
  for (Vertex v = 0; v < x.size(); ++v) {
    for (std::size_t g = 0; g < maps.size(); ++g) y[g] = x[maps[g][v]];
    ++counts[y];
  }
  WindowDistribution out(window.labels(), alphabet_size);
  const double n = static_cast<double>(x.size());
  for (const auto& [c, k] : counts) out.add(c, static_cast<double>(k) / n);
  return out;
}

// Membership oracle for O(U, sigma) = {x : tv(P_x^sigma, target) <= tol}.
class GoodModelTest {
public:
  GoodModelTest(const SoficApproximation& sigma, Neighbourhood u)
      : u_(std::move(u)), maps_(window_maps(sigma, u_.window)), n_(sigma.vertex_count()) {
    require(n_ > 0, "good models: empty vertex set");
    k_ = u_.target.alphabet_size();
    target_total_ = u_.target.total();
    const double size = configuration_space_size(maps_.size(), k_);
    if (size <= 1e6) {
      dense_target_.assign(static_cast<std::size_t>(size), 0.0);
      u_.target.for_each([&](const Configuration& y, double m) { dense_target_[index(y)] = m; });
    }
  }

  const Neighbourhood& neighbourhood() const { return u_; }
  std::size_t vertex_count() const { return n_; }

  // tv(P_x^sigma, target), summed over the patterns present in x.
  double distance(const Configuration& x) const {
    require(x.size() == n_, "good models: configuration length differs from |V|");
    const double n = static_cast<double>(n_);
    double touched_diff = 0.0, touched_target = 0.0;
    if (!dense_target_.empty()) {
      std::vector<std::size_t> idx(n_);
      for (Vertex v = 0; v < n_; ++v) {
        std::size_t i = 0;
        for (const auto& m : maps_) i = i * k_ + x[m[v]];
        idx[v] = i;
      }
      std::sort(idx.begin(), idx.end());
      for (std::size_t a = 0; a < idx.size();) {
        std::size_t b = a;
        while (b < idx.size() && idx[b] == idx[a]) ++b;
        const double t = dense_target_[idx[a]];
        touched_diff += std::abs(static_cast<double>(b - a) / n - t);
        touched_target += t;
        a = b;
      }
    } else {
      std::map<Configuration, std::uint64_t> counts;
      Configuration y(maps_.size());
      for (Vertex v = 0; v < n_; ++v) {
        for (std::size_t g = 0; g < maps_.size(); ++g) y[g] = x[maps_[g][v]];
        ++counts[y];
      }
      for (const auto& [c, k] : counts) {
        const double t = u_.target.mass(c);
        touched_diff += std::abs(static_cast<double>(k) / n - t);
        touched_target += t;
      }
    }
    return 0.5 * (touched_diff + std::max(0.0, target_total_ - touched_target));
  }

  bool contains(const Configuration& x) const { return distance(x) <= u_.tol; }

private:
  std::size_t index(const Configuration& y) const {
    std::size_t i = 0;
    for (auto s : y) i = i * k_ + s;
    return i;
  }

  Neighbourhood u_;
  std::vector<VertexMap> maps_;
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  double target_total_ = 1.0;
  std::vector<double> dense_target_;
};

// Every good model, in lexicographic order.
inline std::vector<Configuration> good_model_set(const SoficApproximation& sigma, const Neighbourhood& u,
                                                 double enumeration_budget = 1e6) {
  const std::size_t k = u.target.alphabet_size();
  if (configuration_space_size(sigma.vertex_count(), k) > enumeration_budget) {
    throw BudgetExceeded("good_model_set: |X|^|V| exceeds the enumeration budget");
  }
  GoodModelTest test(sigma, u);
  std::vector<Configuration> out;
  for_each_configuration(sigma.vertex_count(), k, [&](const Configuration& x) {
    if (test.contains(x)) out.push_back(x);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Statistics.

struct MassEstimate {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double half_width = 0.0;  // 99% Wilson, 0 when exact
  std::uint64_t samples = 0;
  std::uint64_t successes = 0;
  std::string mode;  // exact | monte_carlo
};

struct ConvergenceOptions {
  MarginalOptions marginal;
  std::uint64_t samples = 10'000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double enumeration_budget = 1e6;  // |X|^|V| (squared for pairs) for exact good-model masses
  SampleOptions sampling;
};

struct LwResult {
  double fraction = 0.0;
  std::size_t good_vertices = 0;
  std::vector<double> per_vertex_tv;
  std::string mode;  // worst marginal mode used
  std::size_t non_injective = 0;
};

namespace detail {

inline std::string worse_mode(const std::string& a, MarginalMode m) {
  static const std::vector<std::string> order{"exact", "enumeration", "monte_carlo"};
  const std::string b = mode_name(m);
  auto rank = [&](const std::string& s) { return std::find(order.begin(), order.end(), s) - order.begin(); };
  return a.empty() || rank(b) > rank(a) ? b : a;
}

inline MassEstimate exact_estimate(double mass) {
  MassEstimate e;
  e.estimate = e.lower = e.upper = std::clamp(mass, 0.0, 1.0);
  e.mode = "exact";
  return e;
}

inline MassEstimate sampled_estimate(std::uint64_t successes, std::uint64_t trials) {
  const auto ci = wilson_interval(successes, trials);
  MassEstimate e;
  e.estimate = ci.estimate;
  e.lower = ci.lower;
  e.upper = ci.upper;
  e.half_width = ci.half_width;
  e.samples = trials;
  e.successes = successes;
  e.mode = "monte_carlo";
  return e;
}

// Monte Carlo tally in fixed blocks so the result does not depend on jobs.
template <typename Trial>
MassEstimate block_estimate(const ConvergenceOptions& options, Trial&& trial) {
  require(options.samples > 0, "convergence: samples must be positive");
  constexpr std::uint64_t kBlock = 256;
  const std::size_t blocks = block_count(options.samples, kBlock);
  std::vector<std::uint64_t> hits(blocks, 0);
  parallel_for(blocks, options.jobs, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, b));
    const std::uint64_t count = std::min<std::uint64_t>(kBlock, options.samples - b * kBlock);
    for (std::uint64_t s = 0; s < count; ++s) hits[b] += trial(rng) ? 1 : 0;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  return sampled_estimate(total, options.samples);
}

}  // namespace detail

// Fraction of vertices v with tv((Pi_v)_* mu on E, target) <= tol.
inline LwResult lw_stat(const SoficApproximation& sigma, const Measure& mu, const Neighbourhood& u,
                        const ConvergenceOptions& options = {}) {
  require(sigma.vertex_count() == mu.vertex_count(), "lw_stat: measure and sofic approximation differ in |V|");
  require(u.target.alphabet_size() == mu.alphabet_size(), "lw_stat: target alphabet differs from the measure's");
  MarginalEngine engine(mu, options.marginal);
  const auto maps = window_maps(sigma, u.window);
  const auto labels = u.window.labels();
  LwResult r;
  r.per_vertex_tv.resize(sigma.vertex_count());
  for (Vertex v = 0; v < sigma.vertex_count(); ++v) {
    WindowMarginal wm = engine.window(maps, v, labels);
    r.mode = detail::worse_mode(r.mode, wm.mode);
    if (!wm.injective) ++r.non_injective;
    r.per_vertex_tv[v] = tv_distance(wm.dist, u.target);
    if (r.per_vertex_tv[v] <= u.tol) ++r.good_vertices;
  }
  r.fraction = static_cast<double>(r.good_vertices) / static_cast<double>(sigma.vertex_count());
  return r;
}

// mu(O(U, sigma)): exact on enumerable models, Monte Carlo otherwise.
inline MassEstimate le_stat(const SoficApproximation& sigma, const Measure& mu, const Neighbourhood& u,
                            const ConvergenceOptions& options = {}) {
  require(sigma.vertex_count() == mu.vertex_count(), "le_stat: measure and sofic approximation differ in |V|");
  require(u.target.alphabet_size() == mu.alphabet_size(), "le_stat: target alphabet differs from the measure's");
  GoodModelTest test(sigma, u);
  if (mu.capabilities().exact_atom_mass &&
      configuration_space_size(mu.vertex_count(), mu.alphabet_size()) <= options.enumeration_budget) {
    double mass = 0.0;
    for_each_configuration(mu.vertex_count(), mu.alphabet_size(), [&](const Configuration& x) {
      if (test.contains(x)) mass += atom_mass(mu, x);
    });
    return detail::exact_estimate(mass);
  }
  return detail::block_estimate(options, [&](Rng& rng) {
    thread_local Configuration x;
    x.resize(mu.vertex_count());
    sample_into(mu, rng, x, options.sampling);
    return test.contains(x);
  });
}

struct LdeResult {
  MassEstimate pair_mass;        // (mu x nu)(O(U2, sigma)) over the doubled alphabet
  double pair_lw_fraction = 0.0;  // vertices with tv((Pi_v)_* mu x (Pi_v)_* nu, target) <= tol
};

inline Configuration pair_configuration(const Configuration& x, const Configuration& y, std::size_t k) {
  Configuration z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = pair_symbol(x[i], y[i], k);
  return z;
}

// Pairs (x, x') drawn from mu x nu, both read along the same sigma.
inline LdeResult lde_stat(const SoficApproximation& sigma, const Measure& mu, const Measure& nu, const Neighbourhood& u2,
                          const ConvergenceOptions& options = {}) {
  require(sigma.vertex_count() == mu.vertex_count() && nu.vertex_count() == mu.vertex_count(),
          "lde_stat: measures and sofic approximation differ in |V|");
  require(mu.alphabet_size() == nu.alphabet_size(), "lde_stat: measures on different alphabets");
  const std::size_t k = mu.alphabet_size();
  require(u2.target.alphabet_size() == k * k, "lde_stat: target must live on the doubled alphabet");
  LdeResult r;

  MarginalEngine em(mu, options.marginal), en(nu, options.marginal);
  const auto maps = window_maps(sigma, u2.window);
  const auto labels = u2.window.labels();
  std::size_t good = 0;
  for (Vertex v = 0; v < sigma.vertex_count(); ++v) {
    const auto a = em.window(maps, v, labels), b = en.window(maps, v, labels);
    if (tv_distance(pair_product(a.dist, b.dist), u2.target) <= u2.tol) ++good;
  }
  r.pair_lw_fraction = static_cast<double>(good) / static_cast<double>(sigma.vertex_count());

  GoodModelTest test(sigma, u2);
  const double space = configuration_space_size(mu.vertex_count(), k);
  if (mu.capabilities().exact_atom_mass && nu.capabilities().exact_atom_mass &&
      space * space <= options.enumeration_budget) {
    std::vector<std::pair<Configuration, double>> xs, ys;
    for_each_configuration(mu.vertex_count(), k, [&](const Configuration& x) {
      if (double m = atom_mass(mu, x); m > 0.0) xs.emplace_back(x, m);
      if (double m = atom_mass(nu, x); m > 0.0) ys.emplace_back(x, m);
    });
    double mass = 0.0;
    for (const auto& [x, mx] : xs)
      for (const auto& [y, my] : ys)
        if (test.contains(pair_configuration(x, y, k))) mass += mx * my;
    r.pair_mass = detail::exact_estimate(mass);
    return r;
  }
  r.pair_mass = detail::block_estimate(options, [&](Rng& rng) {
    thread_local Configuration x, y;
    x.resize(mu.vertex_count());
    y.resize(mu.vertex_count());
    sample_into(mu, rng, x, options.sampling);
    sample_into(nu, rng, y, options.sampling);
    return test.contains(pair_configuration(x, y, k));
  });
  return r;
}

inline LdeResult lde_stat(const SoficApproximation& sigma, const Measure& mu, const Neighbourhood& u2,
                          const ConvergenceOptions& options = {}) {
  return lde_stat(sigma, mu, mu, u2, options);
}

struct ConvergenceReport {
  LwResult lw;
  MassEstimate le;
  LdeResult lde;
  std::vector<std::string> window;
  double tol = 0.0;
};

// lw*, LE and LDE statistics at one neighbourhood; the pair neighbourhood is
// target x target at the same tolerance.
inline ConvergenceReport convergence_report(const SoficApproximation& sigma, const Measure& mu, const Neighbourhood& u,
                                            const ConvergenceOptions& options = {}) {
  ConvergenceReport r;
  r.window = u.window.labels();
  r.tol = u.tol;
  r.lw = lw_stat(sigma, mu, u, options);
  r.le = le_stat(sigma, mu, u, options);
  ConvergenceOptions pair_options = options;
  pair_options.seed = derive_seed(options.seed, 0x9a17);
  r.lde = lde_stat(sigma, mu, pair_neighbourhood(u), pair_options);
  return r;
}

}  // namespace soficlab

#endif  // SOFICLAB_CONVERGENCE_HPP
