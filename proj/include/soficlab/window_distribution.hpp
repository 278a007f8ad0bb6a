#ifndef SOFICLAB_WINDOW_DISTRIBUTION_HPP
#define SOFICLAB_WINDOW_DISTRIBUTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "soficlab/alphabet.hpp"
#include "soficlab/errors.hpp"

namespace soficlab {

// Finite distribution over X^E, positions labelled by window elements.
// Dense storage (base-|X| index, position 0 most significant) when
// |X|^|E| <= dense_budget, otherwise an ordered sparse map.
class WindowDistribution {
public:
  static constexpr double kDenseBudget = 1e6;

  WindowDistribution() = default;

  WindowDistribution(std::vector<std::string> labels, std::size_t alphabet_size,
                     double dense_budget = kDenseBudget)
      : labels_(std::move(labels)), alphabet_size_(alphabet_size) {
    require(alphabet_size_ >= 1, "window distribution: empty alphabet");
    const double size = configuration_space_size(labels_.size(), alphabet_size_);
    if (size <= dense_budget) dense_.assign(static_cast<std::size_t>(size), 0.0);
    else sparse_mode_ = true;
  }

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t window_size() const { return labels_.size(); }
  std::size_t alphabet_size() const { return alphabet_size_; }
  bool dense() const { return !sparse_mode_; }

  void add(const Configuration& y, double mass) {
    require(y.size() == labels_.size(), "window distribution: configuration has wrong length");
    if (sparse_mode_) sparse_[y] += mass;
    else dense_[index(y)] += mass;
  }

  double mass(const Configuration& y) const {
    if (sparse_mode_) {
      auto it = sparse_.find(y);
      return it == sparse_.end() ? 0.0 : it->second;
    }
    return dense_[index(y)];
  }

  // fn(y, mass) over entries with nonzero mass, in lexicographic order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    if (sparse_mode_) {
      for (const auto& [y, m] : sparse_)
        if (m != 0.0) fn(y, m);
      return;
    }
    Configuration y(labels_.size(), 0);
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      if (dense_[i] != 0.0) fn(static_cast<const Configuration&>(y), dense_[i]);
      for (std::size_t p = y.size(); p-- > 0;) {
        if (++y[p] < alphabet_size_) break;
        y[p] = 0;
      }
    }
  }

  double total() const {
    double t = 0.0;
    for_each([&](const Configuration&, double m) { t += m; });
    return t;
  }

  void scale(double factor) {
    for (auto& m : dense_) m *= factor;
    for (auto& [y, m] : sparse_) m *= factor;
  }

  bool same_shape(const WindowDistribution& other) const {
    return labels_ == other.labels_ && alphabet_size_ == other.alphabet_size_;
  }

  bool operator==(const WindowDistribution& other) const {
    if (!same_shape(other)) return false;
    bool equal = true;
    for_each([&](const Configuration& y, double m) { equal = equal && other.mass(y) == m; });
    other.for_each([&](const Configuration& y, double m) { equal = equal && mass(y) == m; });
    return equal;
  }

private:
  std::size_t index(const Configuration& y) const {
    std::size_t i = 0;
    for (auto s : y) {
      require(s < alphabet_size_, "window distribution: symbol out of range");
      i = i * alphabet_size_ + s;
    }
    return i;
  }

  std::vector<std::string> labels_;
  std::size_t alphabet_size_ = 0;
  bool sparse_mode_ = false;
  std::vector<double> dense_;
  std::map<Configuration, double> sparse_;
};

// Total variation distance 1/2 sum |alpha - beta|.
inline double tv_distance(const WindowDistribution& a, const WindowDistribution& b) {
  if (!a.same_shape(b)) throw WindowMismatch("tv_distance: distributions over different windows");
  double sum = 0.0;
  a.for_each([&](const Configuration& y, double m) { sum += std::abs(m - b.mass(y)); });
  b.for_each([&](const Configuration& y, double m) {
    if (a.mass(y) == 0.0) sum += std::abs(m);
  });
  return 0.5 * sum;
}

// p^{x E}: independent coordinates with law p.
inline WindowDistribution iid_window(const std::vector<std::string>& labels, const std::vector<double>& p) {
  WindowDistribution out(labels, p.size());
  for_each_configuration(labels.size(), p.size(), [&](const Configuration& y) {
    double m = 1.0;
    for (auto s : y) m *= p[s];
    if (m != 0.0) out.add(y, m);
  });
  return out;
}

inline WindowDistribution point_window(const std::vector<std::string>& labels, std::size_t alphabet_size,
                                       const Configuration& y) {
  WindowDistribution out(labels, alphabet_size);
  out.add(y, 1.0);
  return out;
}

inline WindowDistribution combine(const std::vector<double>& weights, const std::vector<WindowDistribution>& parts) {
  require(!parts.empty() && weights.size() == parts.size(), "combine: weights and parts differ in size");
  WindowDistribution out(parts.front().labels(), parts.front().alphabet_size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].same_shape(out)) throw WindowMismatch("combine: distributions over different windows");
    parts[i].for_each([&](const Configuration& y, double m) { out.add(y, weights[i] * m); });
  }
  return out;
}

// Pair symbols over the doubled alphabet X x X are encoded a * |X| + b.
inline Symbol pair_symbol(Symbol a, Symbol b, std::size_t k) { return static_cast<Symbol>(a * k + b); }

// alpha x beta as a distribution over (X x X)^E.
inline WindowDistribution pair_product(const WindowDistribution& a, const WindowDistribution& b) {
  if (!a.same_shape(b)) throw WindowMismatch("pair_product: distributions over different windows");
  const std::size_t k = a.alphabet_size();
  WindowDistribution out(a.labels(), k * k);
  Configuration y(a.window_size());
  a.for_each([&](const Configuration& ya, double ma) {
    b.for_each([&](const Configuration& yb, double mb) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = pair_symbol(ya[i], yb[i], k);
      out.add(y, ma * mb);
    });
  });
  return out;
}

// First (which = 0) or second (which = 1) coordinate of a pair distribution.
inline WindowDistribution pair_marginal(const WindowDistribution& pair, std::size_t alphabet_size, int which) {
  require(pair.alphabet_size() == alphabet_size * alphabet_size, "pair_marginal: not a doubled alphabet");
  WindowDistribution out(pair.labels(), alphabet_size);
  Configuration y(pair.window_size());
  pair.for_each([&](const Configuration& yy, double m) {
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = static_cast<Symbol>(which == 0 ? yy[i] / alphabet_size : yy[i] % alphabet_size);
    out.add(y, m);
  });
  return out;
}

struct BarycentreReport {
  WindowDistribution barycentre;          // sum w_i nu_i
  WindowDistribution product_barycentre;  // sum w_i (nu_i x nu_i)
  double max_deviation = 0.0;             // max entry of |sum w_i nu_i x nu_i - bar x bar|
  bool is_point_mass_consistent = false;  // deviation within tolerance
};

// sum w_i (nu_i x nu_i) equals bar x bar exactly when all nu_i with w_i > 0
// coincide; the diagonal entries are the variances of nu(A).
inline BarycentreReport barycentre_check(const std::vector<std::pair<double, WindowDistribution>>& theta,
                                         double tolerance = 1e-9) {
  require(!theta.empty(), "barycentre_check: empty list");
  double total = 0.0;
  for (const auto& [w, nu] : theta) {
    require(w >= 0.0, "barycentre_check: negative weight");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-9, "barycentre_check: weights must sum to 1");
  std::vector<double> weights;
  std::vector<WindowDistribution> parts;
  for (const auto& [w, nu] : theta) {
    weights.push_back(w);
    parts.push_back(nu);
  }
  BarycentreReport r;
  r.barycentre = combine(weights, parts);
  const std::size_t k = r.barycentre.alphabet_size();
  r.product_barycentre = WindowDistribution(r.barycentre.labels(), k * k);
  for (const auto& [w, nu] : theta) {
    if (w == 0.0) continue;
    pair_product(nu, nu).for_each([&](const Configuration& y, double m) { r.product_barycentre.add(y, w * m); });
  }
  const WindowDistribution squared = pair_product(r.barycentre, r.barycentre);
  r.product_barycentre.for_each(
      [&](const Configuration& y, double m) { r.max_deviation = std::max(r.max_deviation, std::abs(m - squared.mass(y))); });
  squared.for_each([&](const Configuration& y, double m) {
    if (r.product_barycentre.mass(y) == 0.0) r.max_deviation = std::max(r.max_deviation, m);
  });
  r.is_point_mass_consistent = r.max_deviation <= tolerance;
  return r;
}

// CSV with columns configuration,mass; configurations are space-joined symbol
// labels in window order.
inline std::string to_csv(const WindowDistribution& d, const std::vector<std::string>& symbols) {
  require(symbols.size() == d.alphabet_size(), "to_csv: symbol list has wrong size");
  std::string out = "configuration,mass\n";
  char buf[64];
  d.for_each([&](const Configuration& y, double m) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (i) out += ' ';
      out += symbols[y[i]];
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", m);
    out += buf;
  });
  return out;
}

inline WindowDistribution from_csv(const std::string& text, const std::vector<std::string>& labels,
                                   const std::vector<std::string>& symbols) {
  std::map<std::string, Symbol> index;
  for (std::size_t s = 0; s < symbols.size(); ++s) index[symbols[s]] = static_cast<Symbol>(s);
  WindowDistribution out(labels, symbols.size());
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "configuration,mass", "from_csv: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    require(comma != std::string::npos, "from_csv: missing mass column");
    std::istringstream cfg(line.substr(0, comma));
    Configuration y;
    std::string tok;
    while (cfg >> tok) {
      auto it = index.find(tok);
      require(it != index.end(), "from_csv: unknown symbol '" + tok + "'");
      y.push_back(it->second);
    }
    out.add(y, std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace soficlab

#endif  // SOFICLAB_WINDOW_DISTRIBUTION_HPP
