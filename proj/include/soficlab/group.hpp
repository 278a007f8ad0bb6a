#ifndef SOFICLAB_GROUP_HPP
#define SOFICLAB_GROUP_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "soficlab/errors.hpp"

namespace soficlab {

// Letter 2*i is generator i, letter 2*i+1 its formal inverse.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

constexpr Letter inverse_letter(Letter l) noexcept { return l ^ 1U; }
constexpr Letter generator_letter(std::uint32_t g, bool inverse = false) noexcept {
  return 2U * g + (inverse ? 1U : 0U);
}

struct GroupKind;
using GroupKindPtr = std::shared_ptr<const GroupKind>;

struct FreeGroup {
  int rank = 1;
};

struct IntegerLattice {
  int rank = 1;
};

struct CyclicGroup {
  std::uint32_t order = 1;
};

// Finite group given by its multiplication table; element 0 is the identity.
struct FiniteTable {
  std::vector<std::vector<std::uint32_t>> table;
  std::vector<std::uint32_t> generators;  // element index of each generator
  std::vector<std::uint32_t> inverse;     // derived
  std::vector<Word> canonical;            // derived; empty word if unreachable
  std::vector<bool> reachable;            // derived
};

struct DirectProduct {
  GroupKindPtr left;
  GroupKindPtr right;
};

struct GroupKind {
  std::variant<FreeGroup, IntegerLattice, CyclicGroup, FiniteTable, DirectProduct> value;

  std::uint32_t generator_count() const;
  std::uint32_t letter_count() const { return 2U * generator_count(); }
  std::string name() const;
};

inline std::uint32_t GroupKind::generator_count() const {
  return std::visit(
      [](const auto& k) -> std::uint32_t {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FreeGroup> || std::is_same_v<K, IntegerLattice>) {
          return static_cast<std::uint32_t>(k.rank);
        } else if constexpr (std::is_same_v<K, CyclicGroup>) {
          return 1U;
        } else if constexpr (std::is_same_v<K, FiniteTable>) {
          return static_cast<std::uint32_t>(k.generators.size());
        } else {
          return k.left->generator_count() + k.right->generator_count();
        }
      },
      value);
}

inline std::string GroupKind::name() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FreeGroup>) {
          return "free(" + std::to_string(k.rank) + ")";
        } else if constexpr (std::is_same_v<K, IntegerLattice>) {
          return "Z^" + std::to_string(k.rank);
        } else if constexpr (std::is_same_v<K, CyclicGroup>) {
          return "Z/" + std::to_string(k.order);
        } else if constexpr (std::is_same_v<K, FiniteTable>) {
          return "finite(" + std::to_string(k.table.size()) + ")";
        } else {
          return "(" + k.left->name() + " x " + k.right->name() + ")";
        }
      },
      value);
}

inline GroupKindPtr free_group(int rank) {
  require(rank >= 1, "free_group: rank must be at least 1");
  return std::make_shared<GroupKind>(GroupKind{FreeGroup{rank}});
}

inline GroupKindPtr integer_lattice(int rank) {
  require(rank >= 1, "integer_lattice: rank must be at least 1");
  return std::make_shared<GroupKind>(GroupKind{IntegerLattice{rank}});
}

inline GroupKindPtr cyclic_group(std::uint32_t order) {
  require(order >= 1, "cyclic_group: order must be at least 1");
  return std::make_shared<GroupKind>(GroupKind{CyclicGroup{order}});
}

inline GroupKindPtr direct_product(GroupKindPtr left, GroupKindPtr right) {
  require(left && right, "direct_product: null factor");
  return std::make_shared<GroupKind>(GroupKind{DirectProduct{std::move(left), std::move(right)}});
}

namespace detail {

inline std::uint32_t finite_letter_element(const FiniteTable& t, Letter l) {
  const std::uint32_t g = t.generators[l / 2];
  return (l & 1U) ? t.inverse[g] : g;
}

}  // namespace detail

// Validates a Cayley table (identity 0, closure, associativity, inverses) and
// precomputes shortlex-minimal words for every element reachable from the
// generators.
inline GroupKindPtr finite_group(std::vector<std::vector<std::uint32_t>> table,
                                 std::vector<std::uint32_t> generators) {
  const auto m = static_cast<std::uint32_t>(table.size());
  require(m >= 1, "finite_group: empty table");
  for (const auto& row : table) {
    require(row.size() == m, "finite_group: table is not square");
    for (auto x : row) require(x < m, "finite_group: entry out of range");
  }
  for (std::uint32_t a = 0; a < m; ++a) {
    require(table[0][a] == a && table[a][0] == a, "finite_group: element 0 is not the identity");
  }
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = 0; b < m; ++b)
      for (std::uint32_t c = 0; c < m; ++c)
        require(table[table[a][b]][c] == table[a][table[b][c]], "finite_group: not associative");
  FiniteTable t;
  t.table = std::move(table);
  t.generators = std::move(generators);
  for (auto g : t.generators) require(g < m, "finite_group: generator out of range");
  t.inverse.assign(m, m);
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = 0; b < m; ++b)
      if (t.table[a][b] == 0) t.inverse[a] = b;
  for (auto inv : t.inverse) require(inv < m, "finite_group: missing inverse");

  t.canonical.assign(m, Word{});
  t.reachable.assign(m, false);
  t.reachable[0] = true;
  std::vector<std::uint32_t> queue{0};
  const auto letters = static_cast<Letter>(2 * t.generators.size());
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t x = queue[head];
    for (Letter l = 0; l < letters; ++l) {
      const std::uint32_t y = t.table[x][detail::finite_letter_element(t, l)];
      if (!t.reachable[y]) {
        t.reachable[y] = true;
        t.canonical[y] = t.canonical[x];
        t.canonical[y].push_back(l);
        queue.push_back(y);
      }
    }
  }
  return std::make_shared<GroupKind>(GroupKind{std::move(t)});
}

inline GroupKindPtr trivial_group() { return finite_group({{0}}, {}); }

// Canonical (shortlex-minimal reduced) representative of the element a word
// names.
inline Word normalize(const GroupKind& kind, const Word& word);

namespace detail {

inline Word shift_word(const Word& w, Letter offset) {
  Word out(w);
  for (auto& l : out) l += offset;
  return out;
}

}  // namespace detail

inline Word normalize(const GroupKind& kind, const Word& word) {
  const Letter letters = kind.letter_count();
  for (auto l : word) {
    if (l >= letters) throw InvalidArgument("normalize: letter out of range for " + kind.name());
  }
  return std::visit(
      [&](const auto& k) -> Word {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FreeGroup>) {
          Word stack;
          for (auto l : word) {
            if (!stack.empty() && stack.back() == inverse_letter(l)) {
              stack.pop_back();
            } else {
              stack.push_back(l);
            }
          }
          return stack;
        } else if constexpr (std::is_same_v<K, IntegerLattice>) {
          std::vector<std::int64_t> coord(static_cast<std::size_t>(k.rank), 0);
          for (auto l : word) coord[l / 2] += (l & 1U) ? -1 : 1;
          Word out;
          for (std::size_t i = 0; i < coord.size(); ++i) {
            const Letter l = generator_letter(static_cast<std::uint32_t>(i), coord[i] < 0);
            for (std::int64_t c = 0; c < std::abs(coord[i]); ++c) out.push_back(l);
          }
          return out;
        } else if constexpr (std::is_same_v<K, CyclicGroup>) {
          const std::int64_t n = k.order;
          std::int64_t s = 0;
          for (auto l : word) s += (l & 1U) ? -1 : 1;
          s = ((s % n) + n) % n;
          if (s <= n - s) return Word(static_cast<std::size_t>(s), 0U);
          return Word(static_cast<std::size_t>(n - s), 1U);
        } else if constexpr (std::is_same_v<K, FiniteTable>) {
          std::uint32_t e = 0;
          for (auto l : word) e = k.table[e][detail::finite_letter_element(k, l)];
          return k.canonical[e];
        } else {
          const Letter split = k.left->letter_count();
          Word left;
          Word right;
          for (auto l : word) {
            if (l < split) {
              left.push_back(l);
            } else {
              right.push_back(l - split);
            }
          }
          Word out = normalize(*k.left, left);
          const Word r = detail::shift_word(normalize(*k.right, right), split);
          out.insert(out.end(), r.begin(), r.end());
          return out;
        }
      },
      kind.value);
}

inline Word inverse_word(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& l : out) l = inverse_letter(l);
  return out;
}

inline Word concat(const Word& a, const Word& b) {
  Word out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Shortlex order: shorter first, then lexicographic by letter index.
inline bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

// Display labels for generators and their inverses.
struct Generators {
  std::vector<std::string> labels;
  std::vector<std::string> inverse_labels;

  std::uint32_t count() const { return static_cast<std::uint32_t>(labels.size()); }

  const std::string& letter_label(Letter l) const {
    return (l & 1U) ? inverse_labels.at(l / 2) : labels.at(l / 2);
  }

  std::string format(const Word& w) const {
    if (w.empty()) return "e";
    std::string out;
    for (auto l : w) out += letter_label(l);
    return out;
  }

  // Greedy longest-match tokenization; "e" or "" is the empty word.
  Word parse(const std::string& text) const {
    Word out;
    if (text.empty()) return out;
    if (text == "e" && std::find(labels.begin(), labels.end(), "e") == labels.end()) return out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t best_len = 0;
      Letter best = 0;
      for (Letter l = 0; l < 2 * count(); ++l) {
        const std::string& lab = letter_label(l);
        if (lab.size() > best_len && text.compare(pos, lab.size(), lab) == 0) {
          best_len = lab.size();
          best = l;
        }
      }
      if (best_len == 0) throw InvalidArgument("parse: unknown letter at '" + text.substr(pos) + "'");
      out.push_back(best);
      pos += best_len;
    }
    return out;
  }

  bool operator==(const Generators&) const = default;
};

inline Generators labelled_generators(std::vector<std::string> labels) {
  Generators g;
  for (const auto& l : labels) g.inverse_labels.push_back(l + "^-1");
  g.labels = std::move(labels);
  return g;
}

inline Generators default_generators(const GroupKind& kind);

// Disjoint union of two generator sets; labels are prefixed "1." / "2." only
// when the two sets collide.
inline Generators product_generators(const Generators& left, const Generators& right) {
  bool collide = false;
  for (Letter a = 0; a < 2 * left.count(); ++a)
    for (Letter b = 0; b < 2 * right.count(); ++b)
      if (left.letter_label(a) == right.letter_label(b)) collide = true;
  Generators out;
  const std::string lp = collide ? "1." : "";
  const std::string rp = collide ? "2." : "";
  for (std::uint32_t i = 0; i < left.count(); ++i) {
    out.labels.push_back(lp + left.labels[i]);
    out.inverse_labels.push_back(lp + left.inverse_labels[i]);
  }
  for (std::uint32_t i = 0; i < right.count(); ++i) {
    out.labels.push_back(rp + right.labels[i]);
    out.inverse_labels.push_back(rp + right.inverse_labels[i]);
  }
  return out;
}

inline Generators default_generators(const GroupKind& kind) {
  return std::visit(
      [&](const auto& k) -> Generators {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FreeGroup>) {
          std::vector<std::string> labels;
          for (int i = 0; i < k.rank; ++i) {
            labels.push_back(k.rank <= 4 ? std::string(1, static_cast<char>('a' + i))
                                         : "g" + std::to_string(i + 1));
          }
          return labelled_generators(std::move(labels));
        } else if constexpr (std::is_same_v<K, IntegerLattice>) {
          Generators g;
          for (int i = 0; i < k.rank; ++i) {
            const std::string suffix = k.rank == 1 ? "1" : "e" + std::to_string(i + 1);
            g.labels.push_back("+" + suffix);
            g.inverse_labels.push_back("-" + suffix);
          }
          return g;
        } else if constexpr (std::is_same_v<K, CyclicGroup>) {
          return Generators{{"+1"}, {"-1"}};
        } else if constexpr (std::is_same_v<K, FiniteTable>) {
          std::vector<std::string> labels;
          for (std::size_t i = 0; i < k.generators.size(); ++i) labels.push_back("s" + std::to_string(i));
          return labelled_generators(std::move(labels));
        } else {
          return product_generators(default_generators(*k.left), default_generators(*k.right));
        }
      },
      kind.value);
}

// A finite symmetric subset E of a group containing the identity, with words
// in canonical form and the partial right-multiplication table E x letters.
class GroupWindow {
public:
  static constexpr std::size_t kOutside = static_cast<std::size_t>(-1);

  // Ball of word length <= radius.
  static GroupWindow ball(GroupKindPtr kind, Generators generators, int radius,
                          std::size_t max_elements = 1'000'000) {
    require(radius >= 0, "ball: radius must be nonnegative");
    require(kind != nullptr, "ball: null group kind");
    check_generators(*kind, generators);
    std::vector<Word> elements{Word{}};
    std::map<Word, std::size_t> seen{{Word{}, 0}};
    std::size_t begin = 0;
    for (int r = 0; r < radius; ++r) {
      const std::size_t end = elements.size();
      for (std::size_t i = begin; i < end; ++i) {
        for (Letter l = 0; l < kind->letter_count(); ++l) {
          Word w = normalize(*kind, concat(elements[i], Word{l}));
          if (static_cast<int>(w.size()) > r + 1 || seen.count(w)) continue;
          seen.emplace(w, elements.size());
          elements.push_back(std::move(w));
          if (elements.size() > max_elements) throw BudgetExceeded("ball: window exceeds element budget");
        }
      }
      begin = end;
    }
    return GroupWindow(std::move(kind), std::move(generators), std::move(elements), radius);
  }

  // Window from an explicit element list; words are normalized and deduplicated.
  static GroupWindow from_elements(GroupKindPtr kind, Generators generators,
                                   const std::vector<Word>& words, int radius = -1) {
    require(kind != nullptr, "from_elements: null group kind");
    check_generators(*kind, generators);
    std::vector<Word> elements;
    std::map<Word, bool> seen;
    elements.push_back(Word{});
    seen[Word{}] = true;
    for (const auto& w : words) {
      Word c = normalize(*kind, w);
      if (seen.emplace(c, true).second) elements.push_back(std::move(c));
    }
    return GroupWindow(std::move(kind), std::move(generators), std::move(elements), radius);
  }

  const GroupKind& kind() const { return *kind_; }
  const GroupKindPtr& kind_ptr() const { return kind_; }
  const Generators& generators() const { return generators_; }
  int radius() const { return radius_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<Word>& elements() const { return elements_; }
  const Word& element(std::size_t i) const { return elements_.at(i); }
  std::size_t identity_index() const { return 0; }

  std::optional<std::size_t> index_of(const Word& word) const {
    auto it = index_.find(normalize(*kind_, word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Index of element(i) * letter, or kOutside.
  std::size_t multiply(std::size_t i, Letter l) const { return mult_.at(i).at(l); }

  std::string label(std::size_t i) const { return generators_.format(elements_.at(i)); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(label(i));
    return out;
  }

private:
  GroupWindow(GroupKindPtr kind, Generators generators, std::vector<Word> elements, int radius)
      : kind_(std::move(kind)), generators_(std::move(generators)), radius_(radius) {
    std::stable_sort(elements.begin() + 1, elements.end(), shortlex_less);
    elements_ = std::move(elements);
    for (std::size_t i = 0; i < elements_.size(); ++i) index_.emplace(elements_[i], i);
    mult_.assign(elements_.size(), std::vector<std::size_t>(kind_->letter_count(), kOutside));
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      for (Letter l = 0; l < kind_->letter_count(); ++l) {
        auto it = index_.find(normalize(*kind_, concat(elements_[i], Word{l})));
        if (it != index_.end()) mult_[i][l] = it->second;
      }
    }
  }

  static void check_generators(const GroupKind& kind, const Generators& g) {
    require(g.labels.size() == kind.generator_count() && g.inverse_labels.size() == g.labels.size(),
            "generator labels do not match group kind " + kind.name());
  }

  GroupKindPtr kind_;
  Generators generators_;
  int radius_ = -1;
  std::vector<Word> elements_;
  std::map<Word, std::size_t> index_;
  std::vector<std::vector<std::size_t>> mult_;
};

inline GroupWindow ball(const GroupKindPtr& kind, int radius) {
  return GroupWindow::ball(kind, default_generators(*kind), radius);
}

// All pairs (g, h) with g in left and h in right, as a window of the direct
// product group (left letters first).
inline GroupWindow product_window(const GroupWindow& left, const GroupWindow& right) {
  auto kind = direct_product(left.kind_ptr(), right.kind_ptr());
  auto gens = product_generators(left.generators(), right.generators());
  const Letter split = left.kind().letter_count();
  std::vector<Word> words;
  for (const auto& g : left.elements())
    for (const auto& h : right.elements()) words.push_back(concat(g, detail::shift_word(h, split)));
  return GroupWindow::from_elements(std::move(kind), std::move(gens), words);
}

// The window E x {e_H} inside a product window's group.
inline GroupWindow embed_left(const GroupWindow& left, const GroupKindPtr& product_kind,
                              const Generators& product_gens) {
  const auto* dp = std::get_if<DirectProduct>(&product_kind->value);
  require(dp != nullptr, "embed_left: not a direct product");
  require(dp->left->letter_count() == left.kind().letter_count(), "embed_left: factor mismatch");
  return GroupWindow::from_elements(product_kind, product_gens, left.elements(), left.radius());
}

}  // namespace soficlab

#endif  // SOFICLAB_GROUP_HPP
