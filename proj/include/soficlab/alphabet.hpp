#ifndef SOFICLAB_ALPHABET_HPP
#define SOFICLAB_ALPHABET_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "soficlab/errors.hpp"

namespace soficlab {

using Symbol = std::uint16_t;
using Configuration = std::vector<Symbol>;
using Cell = std::uint32_t;
using CellSequence = std::vector<Cell>;  // an element of P^V
using Counts = std::vector<std::int64_t>;

// Finite state space with an optional metric (discrete metric by default).
class Alphabet {
public:
  explicit Alphabet(std::vector<std::string> symbols, std::vector<std::vector<double>> metric = {})
      : symbols_(std::move(symbols)), metric_(std::move(metric)) {
    require(!symbols_.empty(), "alphabet: needs at least one symbol");
    require(symbols_.size() <= 65535, "alphabet: too many symbols");
    std::set<std::string> unique(symbols_.begin(), symbols_.end());
    require(unique.size() == symbols_.size(), "alphabet: symbols must be distinct");
    const std::size_t k = symbols_.size();
    if (metric_.empty()) {
      metric_.assign(k, std::vector<double>(k, 1.0));
      for (std::size_t i = 0; i < k; ++i) metric_[i][i] = 0.0;
    }
    require(metric_.size() == k, "alphabet: metric has wrong size");
    for (std::size_t i = 0; i < k; ++i) {
      require(metric_[i].size() == k, "alphabet: metric has wrong size");
      require(metric_[i][i] == 0.0, "alphabet: metric must vanish on the diagonal");
      for (std::size_t j = 0; j < k; ++j) {
        require(metric_[i][j] >= 0.0, "alphabet: metric must be nonnegative");
        require(metric_[i][j] == metric_[j][i], "alphabet: metric must be symmetric");
      }
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
          require(metric_[i][l] <= metric_[i][j] + metric_[j][l] + 1e-12,
                  "alphabet: metric violates the triangle inequality");
  }

  // Symbols "0", "1", ..., "k-1" with the discrete metric.
  static Alphabet numbered(std::size_t k) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < k; ++i) s.push_back(std::to_string(i));
    return Alphabet(std::move(s));
  }

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(Symbol s) const { return symbols_.at(s); }
  double distance(Symbol a, Symbol b) const { return metric_[a][b]; }
  const std::vector<std::vector<double>>& metric() const { return metric_; }

private:
  std::vector<std::string> symbols_;
  std::vector<std::vector<double>> metric_;
};

// Finite partition of the alphabet; cell_of is surjective onto {0..cell_count-1}.
class Partition {
public:
  Partition() = default;

  explicit Partition(std::vector<Cell> cell_of) : cell_of_(std::move(cell_of)) {
    require(!cell_of_.empty(), "partition: empty alphabet");
    cell_count_ = *std::max_element(cell_of_.begin(), cell_of_.end()) + 1;
    std::vector<bool> used(cell_count_, false);
    for (auto c : cell_of_) used[c] = true;
    require(std::all_of(used.begin(), used.end(), [](bool b) { return b; }),
            "partition: cell indices must be surjective");
  }

  static Partition singletons(std::size_t alphabet_size) {
    std::vector<Cell> c(alphabet_size);
    for (std::size_t i = 0; i < alphabet_size; ++i) c[i] = static_cast<Cell>(i);
    return Partition(std::move(c));
  }

  static Partition trivial(std::size_t alphabet_size) { return Partition(std::vector<Cell>(alphabet_size, 0)); }

  std::size_t alphabet_size() const { return cell_of_.size(); }
  std::size_t cell_count() const { return cell_count_; }
  Cell cell_of(Symbol s) const { return cell_of_.at(s); }
  const std::vector<Cell>& cells() const { return cell_of_; }

  std::vector<Symbol> members(Cell c) const {
    std::vector<Symbol> out;
    for (std::size_t s = 0; s < cell_of_.size(); ++s)
      if (cell_of_[s] == c) out.push_back(static_cast<Symbol>(s));
    return out;
  }

  // Per-cell mass of a symbol distribution.
  std::vector<double> cell_distribution(const std::vector<double>& p) const {
    require(p.size() == cell_of_.size(), "partition: distribution has wrong size");
    std::vector<double> q(cell_count_, 0.0);
    for (std::size_t s = 0; s < p.size(); ++s) q[cell_of_[s]] += p[s];
    return q;
  }

  CellSequence cells_of(const Configuration& x) const {
    CellSequence out(x.size());
    for (std::size_t v = 0; v < x.size(); ++v) out[v] = cell_of_.at(x[v]);
    return out;
  }

  Counts counts_of(const CellSequence& cells) const {
    Counts k(cell_count_, 0);
    for (auto c : cells) ++k.at(c);
    return k;
  }

  bool operator==(const Partition&) const = default;

private:
  std::vector<Cell> cell_of_;
  std::size_t cell_count_ = 0;
};

// Largest metric distance between two symbols of the same cell.
inline double max_cell_diameter(const Alphabet& alphabet, const Partition& partition) {
  require(alphabet.size() == partition.alphabet_size(), "partition does not match alphabet");
  double d = 0.0;
  for (std::size_t a = 0; a < alphabet.size(); ++a)
    for (std::size_t b = 0; b < alphabet.size(); ++b)
      if (partition.cell_of(static_cast<Symbol>(a)) == partition.cell_of(static_cast<Symbol>(b)))
        d = std::max(d, alphabet.distance(static_cast<Symbol>(a), static_cast<Symbol>(b)));
  return d;
}

// Calls fn(x) for every x in {0..k-1}^n in lexicographic order.
template <typename Fn>
void for_each_configuration(std::size_t n, std::size_t k, Fn&& fn) {
  Configuration x(n, 0);
  for (;;) {
    fn(static_cast<const Configuration&>(x));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++x[i] < k) break;
      x[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

inline double configuration_space_size(std::size_t n, std::size_t k) {
  double s = 1.0;
  for (std::size_t i = 0; i < n; ++i) s *= static_cast<double>(k);
  return s;
}

}  // namespace soficlab

#endif  // SOFICLAB_ALPHABET_HPP
