#pragma once

// Functional-dependency algorithms: closure, keys, minimal cover, projection,
// 2NF/3NF violation enumeration, 3NF synthesis and the lossless-join chase.
//
// Every table-level operation treats a declared primary key as the dependency
// key -> all columns, in addition to the dependencies passed in. Dependencies
// may mention attributes outside the table; they take part in closures and are
// then projected away.

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "normloop/schema.hpp"

namespace normloop {

inline constexpr std::size_t kMaxTableAttributes = 16;
inline constexpr std::size_t kMaxUniverseAttributes = 64;

class AttributeSet {
 public:
  using container = std::set<std::string, ILess>;
  using const_iterator = container::const_iterator;

  AttributeSet() = default;
  AttributeSet(std::initializer_list<std::string> names) : attrs_(names.begin(), names.end()) {}
  template <typename Range>
  explicit AttributeSet(const Range& names) : attrs_(std::begin(names), std::end(names)) {}

  bool contains(std::string_view name) const { return attrs_.find(name) != attrs_.end(); }
  void insert(std::string name) { attrs_.insert(std::move(name)); }
  void erase(std::string_view name) {
    if (auto it = attrs_.find(name); it != attrs_.end()) attrs_.erase(it);
  }
  std::size_t size() const { return attrs_.size(); }
  bool empty() const { return attrs_.empty(); }
  const_iterator begin() const { return attrs_.begin(); }
  const_iterator end() const { return attrs_.end(); }

  bool subset_of(const AttributeSet& other) const {
    for (const auto& a : attrs_)
      if (!other.contains(a)) return false;
    return true;
  }
  bool proper_subset_of(const AttributeSet& other) const { return size() < other.size() && subset_of(other); }

  std::vector<std::string> to_vector() const { return {attrs_.begin(), attrs_.end()}; }
  std::string to_string() const { return "{" + join(to_vector(), ", ") + "}"; }

  friend bool operator==(const AttributeSet& a, const AttributeSet& b) {
    return a.size() == b.size() && a.subset_of(b);
  }
  // Lexicographic over the case-insensitively sorted members.
  friend bool operator<(const AttributeSet& a, const AttributeSet& b) { return icompare(a.to_vector(), b.to_vector()) < 0; }

 private:
  container attrs_;
};

struct DependencyViolation {
  enum class Kind { Partial, Transitive };
  Kind kind = Kind::Partial;
  std::string table;
  AttributeSet determinant;
  std::string dependent;
  AttributeSet witness_key;

  bool operator==(const DependencyViolation&) const = default;
};

inline std::string to_string(DependencyViolation::Kind k) {
  return k == DependencyViolation::Kind::Partial ? "PARTIAL" : "TRANSITIVE";
}

namespace detail {

using Mask = std::uint64_t;

inline Mask bit(std::size_t i) { return Mask{1} << i; }

// Attribute universe with the table's columns occupying the low bits.
class FdIndex {
 public:
  FdIndex(const std::vector<std::string>& table_columns, std::span<const FunctionalDependency> fds,
          const std::vector<std::string>& primary_key = {}) {
    for (const auto& c : table_columns) index_of(c);
    width_ = names_.size();
    for (const auto& fd : fds) {
      Mask l = 0, r = 0;
      for (const auto& a : fd.lhs) l |= bit(index_of(bare(a)));
      for (const auto& a : fd.rhs) r |= bit(index_of(bare(a)));
      add(l, r);
    }
    if (!primary_key.empty()) {
      Mask k = 0;
      for (const auto& a : primary_key) k |= bit(index_of(a));
      add(k, table_mask());
    }
  }

  std::size_t width() const { return width_; }
  Mask table_mask() const { return width_ == 64 ? ~Mask{0} : bit(width_) - 1; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  Mask closure(Mask x) const {
    Mask result = x;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [l, r] : fds_) {
        if ((l & ~result) == 0 && (r & ~result) != 0) {
          result |= r;
          changed = true;
        }
      }
    }
    return result;
  }

  const std::vector<std::pair<Mask, Mask>>& fds() const { return fds_; }

  AttributeSet to_set(Mask m) const {
    AttributeSet s;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (m & bit(i)) s.insert(names_[i]);
    return s;
  }

  Mask to_mask(const AttributeSet& s) {
    Mask m = 0;
    for (const auto& a : s) m |= bit(index_of(a));
    return m;
  }

  std::vector<std::string> to_names(Mask m) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (m & bit(i)) out.push_back(names_[i]);
    return sorted_unique(std::move(out));
  }

 private:
  static std::string bare(const std::string& a) { return std::string(split_qualified(a).second); }

  void add(Mask l, Mask r) {
    r &= ~l;
    if (l != 0 && r != 0) fds_.emplace_back(l, r);
  }

  std::size_t index_of(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (iequals(names_[i], name)) return i;
    if (names_.size() == kMaxUniverseAttributes) throw AttributeLimitExceeded(names_.size() + 1, kMaxUniverseAttributes);
    names_.push_back(name);
    return names_.size() - 1;
  }

  std::vector<std::string> names_;
  std::size_t width_ = 0;
  std::vector<std::pair<Mask, Mask>> fds_;
};

inline void check_width(std::size_t n) {
  if (n > kMaxTableAttributes) throw AttributeLimitExceeded(n, kMaxTableAttributes);
}

// Closure of every subset of the table's columns, indexed by mask.
inline std::vector<Mask> closure_table(const FdIndex& idx) {
  const std::size_t n = idx.width();
  std::vector<Mask> cl(std::size_t{1} << n);
  const Mask all = idx.table_mask();
  for (Mask x = 0; x < cl.size(); ++x) cl[x] = idx.closure(x) & all;
  return cl;
}

// Sort by (size, lexicographic names).
inline void sort_keys(std::vector<AttributeSet>& keys) {
  std::stable_sort(keys.begin(), keys.end(), [](const AttributeSet& a, const AttributeSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
}

// Breadth-first over subset sizes, seeded with attributes that no dependency
// can derive (they belong to every key).
inline std::vector<Mask> candidate_key_masks(const FdIndex& idx) {
  const Mask all = idx.table_mask();
  Mask derivable = 0;
  for (const auto& [l, r] : idx.fds()) derivable |= r;
  const Mask must = all & ~derivable;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < idx.width(); ++i)
    if (!(must & bit(i))) rest.push_back(i);

  std::vector<Mask> keys;
  const std::size_t m = rest.size();
  for (std::size_t size = 0; size <= m; ++size) {
    // Enumerate size-combinations of `rest` via Gosper's hack over positions.
    if (size == 0) {
      if ((idx.closure(must) & all) == all) keys.push_back(must);
      if (!keys.empty()) break;
      continue;
    }
    for (std::uint64_t comb = (std::uint64_t{1} << size) - 1; comb < (std::uint64_t{1} << m);) {
      Mask cand = must;
      for (std::size_t j = 0; j < m; ++j)
        if (comb & (std::uint64_t{1} << j)) cand |= bit(rest[j]);
      const bool has_smaller_key =
          std::any_of(keys.begin(), keys.end(), [&](Mask k) { return (k & ~cand) == 0; });
      if (!has_smaller_key && (idx.closure(cand) & all) == all) keys.push_back(cand);
      const std::uint64_t c = comb & (~comb + 1);
      const std::uint64_t r = comb + c;
      comb = (((r ^ comb) >> 2) / c) | r;
    }
  }
  return keys;
}

inline FdIndex table_index(const Table& table, std::span<const FunctionalDependency> fds) {
  check_width(table.columns.size());
  return FdIndex(table.column_names(), fds, table.primary_key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closure and keys
// ---------------------------------------------------------------------------

inline AttributeSet closure(const AttributeSet& x, std::span<const FunctionalDependency> fds) {
  AttributeSet result = x;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& fd : fds) {
      const bool applies = std::all_of(fd.lhs.begin(), fd.lhs.end(),
                                       [&](const std::string& a) { return result.contains(a); });
      if (!applies) continue;
      for (const auto& a : fd.rhs) {
        if (!result.contains(a)) {
          result.insert(a);
          changed = true;
        }
      }
    }
  }
  return result;
}

inline void require_table_attributes(const AttributeSet& x, const Table& table) {
  for (const auto& a : x)
    if (!table.has_column(a)) throw InvalidArgument("attribute \"" + a + "\" is not a column of " + table.name);
}

inline bool is_superkey(const AttributeSet& x, const Table& table, std::span<const FunctionalDependency> fds) {
  require_table_attributes(x, table);
  detail::FdIndex idx(table.column_names(), fds, table.primary_key);
  const auto all = idx.table_mask();
  return (idx.closure(idx.to_mask(x)) & all) == all;
}

inline std::vector<AttributeSet> candidate_keys(const Table& table, std::span<const FunctionalDependency> fds) {
  const auto idx = detail::table_index(table, fds);
  std::vector<AttributeSet> keys;
  for (auto m : detail::candidate_key_masks(idx)) keys.push_back(idx.to_set(m));
  detail::sort_keys(keys);
  return keys;
}

inline AttributeSet prime_attributes(const Table& table, std::span<const FunctionalDependency> fds) {
  AttributeSet prime;
  for (const auto& k : candidate_keys(table, fds))
    for (const auto& a : k) prime.insert(a);
  return prime;
}

// ---------------------------------------------------------------------------
// Covers and projection
// ---------------------------------------------------------------------------

namespace detail {

inline FdList masks_to_fds(const FdIndex& idx, const std::vector<std::pair<Mask, Mask>>& pairs,
                           const std::string& scope) {
  FdList out;
  for (const auto& [l, r] : pairs) out.push_back(FunctionalDependency::make(idx.to_names(l), idx.to_names(r), scope));
  std::stable_sort(out.begin(), out.end(),
                   [](const FunctionalDependency& a, const FunctionalDependency& b) { return compare_fds(a, b) < 0; });
  return out;
}

inline Mask closure_of(const std::vector<std::pair<Mask, Mask>>& fds, Mask x, std::size_t skip = SIZE_MAX) {
  Mask result = x;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (i == skip) continue;
      const auto& [l, r] = fds[i];
      if ((l & ~result) == 0 && (r & ~result) != 0) {
        result |= r;
        changed = true;
      }
    }
  }
  return result;
}

inline std::vector<std::pair<Mask, Mask>> minimal_cover_masks(const FdIndex& idx,
                                                              std::vector<std::pair<Mask, Mask>> fds) {
  // Singleton right-hand sides, trivial parts dropped.
  std::vector<std::pair<Mask, Mask>> single;
  for (const auto& [l, r] : fds)
    for (std::size_t i = 0; i < 64; ++i)
      if ((r & bit(i)) && !(l & bit(i))) single.emplace_back(l, bit(i));
  auto by_names = [&](const std::pair<Mask, Mask>& a, const std::pair<Mask, Mask>& b) {
    if (int c = icompare(idx.to_names(a.first), idx.to_names(b.first)); c != 0) return c < 0;
    return icompare(idx.to_names(a.second), idx.to_names(b.second)) < 0;
  };
  std::stable_sort(single.begin(), single.end(), by_names);
  single.erase(std::unique(single.begin(), single.end()), single.end());

  // Extraneous left-hand attributes, tested in name order.
  for (auto& [l, r] : single) {
    for (const auto& name : idx.to_names(l)) {
      Mask b = 0;
      for (std::size_t i = 0; i < 64; ++i)
        if ((l & bit(i)) && iequals(idx.name(i), name)) b = bit(i);
      const Mask reduced = l & ~b;
      if (reduced != 0 && (closure_of(single, reduced) & r) == r) l = reduced;
    }
  }
  std::stable_sort(single.begin(), single.end(), by_names);
  single.erase(std::unique(single.begin(), single.end()), single.end());

  // Redundant dependencies.
  for (std::size_t i = 0; i < single.size();) {
    const auto [l, r] = single[i];
    if ((closure_of(single, l, i) & r) == r)
      single.erase(single.begin() + static_cast<std::ptrdiff_t>(i));
    else
      ++i;
  }
  return single;
}

inline std::string common_scope(std::span<const FunctionalDependency> fds) {
  if (fds.empty()) return {};
  for (const auto& fd : fds)
    if (!iequals(fd.scope, fds.front().scope)) return {};
  return fds.front().scope;
}

// Every X -> A with X ∪ {A} ⊆ cols that holds, keeping only minimal X.
inline std::vector<std::pair<Mask, Mask>> projected_pairs(const FdIndex& idx, const std::vector<Mask>& cl) {
  const std::size_t n = idx.width();
  std::vector<std::pair<Mask, Mask>> out;
  for (Mask x = 1; x < cl.size(); ++x) {
    Mask implied = cl[x] & ~x;
    if (!implied) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(x & bit(j))) continue;
      implied &= ~cl[x & ~bit(j)];
    }
    if (implied) out.emplace_back(x, implied);
  }
  return out;
}

}  // namespace detail

inline FdList minimal_cover(std::span<const FunctionalDependency> fds) {
  detail::FdIndex idx({}, fds);
  return detail::masks_to_fds(idx, detail::minimal_cover_masks(idx, idx.fds()), detail::common_scope(fds));
}

inline FdList project_fds(std::span<const FunctionalDependency> fds, const AttributeSet& cols) {
  detail::check_width(cols.size());
  detail::FdIndex idx(cols.to_vector(), fds);
  const auto cl = detail::closure_table(idx);
  return detail::masks_to_fds(idx, detail::minimal_cover_masks(idx, detail::projected_pairs(idx, cl)),
                              detail::common_scope(fds));
}

// ---------------------------------------------------------------------------
// Normal-form violations
// ---------------------------------------------------------------------------

inline std::vector<DependencyViolation> partial_dependencies(const Table& table,
                                                             std::span<const FunctionalDependency> fds) {
  using detail::bit;
  using detail::Mask;
  const auto idx = detail::table_index(table, fds);
  const auto cl = detail::closure_table(idx);
  const auto key_masks = detail::candidate_key_masks(idx);
  std::vector<AttributeSet> key_sets;
  for (auto k : key_masks) key_sets.push_back(idx.to_set(k));
  std::vector<std::size_t> order(key_masks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key_sets[a].size() != key_sets[b].size()) return key_sets[a].size() < key_sets[b].size();
    return key_sets[a] < key_sets[b];
  });

  Mask prime = 0;
  for (auto k : key_masks) prime |= k;
  const Mask nonprime = idx.table_mask() & ~prime;

  std::vector<std::pair<Mask, std::size_t>> seen;  // (determinant, dependent)
  std::vector<DependencyViolation> out;
  for (std::size_t ki : order) {
    const Mask key = key_masks[ki];
    if (std::popcount(key) < 2) continue;
    // Proper, non-empty subsets of the key.
    for (Mask s = (key - 1) & key; s != 0; s = (s - 1) & key) {
      for (std::size_t a = 0; a < idx.width(); ++a) {
        if (!(nonprime & bit(a)) || !(cl[s] & bit(a))) continue;
        bool minimal = true;
        for (std::size_t j = 0; j < idx.width() && minimal; ++j)
          if ((s & bit(j)) && (cl[s & ~bit(j)] & bit(a))) minimal = false;
        if (!minimal) continue;
        if (std::find(seen.begin(), seen.end(), std::pair{s, a}) != seen.end()) continue;
        seen.emplace_back(s, a);
        out.push_back({DependencyViolation::Kind::Partial, table.name, idx.to_set(s), idx.name(a), key_sets[ki]});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DependencyViolation& x, const DependencyViolation& y) {
    if (int c = icompare(x.dependent, y.dependent); c != 0) return c < 0;
    return x.determinant < y.determinant;
  });
  return out;
}

inline std::vector<DependencyViolation> transitive_dependencies(const Table& table,
                                                                std::span<const FunctionalDependency> fds) {
  using detail::bit;
  using detail::Mask;
  const auto idx = detail::table_index(table, fds);
  const auto cl = detail::closure_table(idx);
  const auto key_masks = detail::candidate_key_masks(idx);
  const Mask all = idx.table_mask();
  Mask prime = 0;
  for (auto k : key_masks) prime |= k;
  std::vector<AttributeSet> keys;
  for (auto k : key_masks) keys.push_back(idx.to_set(k));
  detail::sort_keys(keys);
  const AttributeSet witness = keys.empty() ? AttributeSet{} : keys.front();

  // Minimal determinants of every non-prime attribute, from the projected cover
  // of the table (all X -> A holding over its columns).
  std::vector<DependencyViolation> out;
  for (const auto& [x, implied] : detail::projected_pairs(idx, cl)) {
    if (cl[x] == all) continue;  // superkey
    const bool inside_key = std::any_of(key_masks.begin(), key_masks.end(),
                                        [&](Mask k) { return (x & ~k) == 0 && x != k; });
    if (inside_key) continue;  // reported as partial
    for (std::size_t a = 0; a < idx.width(); ++a) {
      if (!(implied & bit(a)) || (prime & bit(a))) continue;
      out.push_back({DependencyViolation::Kind::Transitive, table.name, idx.to_set(x), idx.name(a), witness});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DependencyViolation& x, const DependencyViolation& y) {
    if (int c = icompare(x.dependent, y.dependent); c != 0) return c < 0;
    return x.determinant < y.determinant;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

// Bernstein synthesis. The output table holding a candidate key of the input
// keeps the input's name; the others are named <table>_<determinant columns>.
// Foreign keys of the input move to the first output table containing their
// columns, and the key-holding table references each other fragment whose key
// it contains.
inline std::vector<Table> synthesize_3nf(const Table& table, std::span<const FunctionalDependency> fds) {
  using detail::Mask;
  const auto idx = detail::table_index(table, fds);
  const auto cl = detail::closure_table(idx);
  auto cover = detail::minimal_cover_masks(idx, detail::projected_pairs(idx, cl));

  struct Group {
    Mask key;
    Mask cols;
  };
  std::vector<Group> groups;
  for (const auto& [l, r] : cover) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.key == l; });
    if (it == groups.end())
      groups.push_back({l, l | r});
    else
      it->cols |= r;
  }
  // Drop groups whose columns another group subsumes (the earlier survives ties).
  std::vector<Group> kept;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    bool subsumed = false;
    for (std::size_t j = 0; j < groups.size() && !subsumed; ++j) {
      if (i == j) continue;
      const bool within = (groups[i].cols & ~groups[j].cols) == 0;
      if (within && (groups[i].cols != groups[j].cols || j < i)) subsumed = true;
    }
    if (!subsumed) kept.push_back(groups[i]);
  }

  auto key_masks = detail::candidate_key_masks(idx);
  std::vector<AttributeSet> key_sets;
  for (auto k : key_masks) key_sets.push_back(idx.to_set(k));
  std::vector<std::size_t> key_order(key_masks.size());
  for (std::size_t i = 0; i < key_order.size(); ++i) key_order[i] = i;
  std::stable_sort(key_order.begin(), key_order.end(), [&](std::size_t a, std::size_t b) {
    if (key_sets[a].size() != key_sets[b].size()) return key_sets[a].size() < key_sets[b].size();
    return key_sets[a] < key_sets[b];
  });

  std::ptrdiff_t anchor = -1;
  for (std::size_t g = 0; g < kept.size() && anchor < 0; ++g)
    for (auto k : key_masks)
      if ((k & ~kept[g].cols) == 0) {
        anchor = static_cast<std::ptrdiff_t>(g);
        break;
      }
  if (anchor < 0) {
    const Mask first_key = key_masks[key_order.front()];
    kept.push_back({first_key, first_key});
    anchor = static_cast<std::ptrdiff_t>(kept.size() - 1);
  }

  auto make_table = [&](const Group& g, bool is_anchor) {
    Table t;
    std::vector<std::string> key_names;
    for (const auto& c : table.columns)
      if (g.key & detail::bit(static_cast<std::size_t>(&c - table.columns.data()))) key_names.push_back(c.name);
    t.name = is_anchor ? table.name : table.name + "_" + join(key_names, "_");
    t.primary_key = key_names;
    for (const auto& k : key_names) t.columns.push_back(*table.find_column(k));
    for (std::size_t i = 0; i < table.columns.size(); ++i)
      if ((g.cols & detail::bit(i)) && !(g.key & detail::bit(i))) t.columns.push_back(table.columns[i]);
    return t;
  };

  std::vector<Table> out;
  out.push_back(make_table(kept[static_cast<std::size_t>(anchor)], true));
  for (std::size_t g = 0; g < kept.size(); ++g)
    if (static_cast<std::ptrdiff_t>(g) != anchor) out.push_back(make_table(kept[g], false));

  for (const auto& fk : table.foreign_keys) {
    for (auto& t : out) {
      const bool holds = std::all_of(fk.columns.begin(), fk.columns.end(),
                                     [&](const std::string& c) { return t.has_column(c); });
      if (holds) {
        t.foreign_keys.push_back(fk);
        break;
      }
    }
  }
  Table& anchor_table = out.front();
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto& pk = out[i].primary_key;
    const bool contains = std::all_of(pk.begin(), pk.end(), [&](const std::string& c) { return anchor_table.has_column(c); });
    if (contains) anchor_table.foreign_keys.push_back({pk, out[i].name, pk});
  }
  return out;
}

// Tableau chase: one row per fragment, distinguished symbols on its columns;
// equate rows agreeing on an FD's left side until fixpoint.
inline bool chase_lossless(const std::vector<Table>& tables, const AttributeSet& universe,
                           std::span<const FunctionalDependency> fds) {
  detail::check_width(universe.size());
  const auto names = universe.to_vector();
  const std::size_t n = names.size();
  for (const auto& t : tables)
    for (const auto& c : t.columns)
      if (!universe.contains(c.name)) throw InvalidArgument("column \"" + c.name + "\" is outside the universe");

  auto col_of = [&](const std::string& a) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < n; ++i)
      if (iequals(names[i], a)) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  // Symbol 0 is distinguished; row r column c otherwise starts as 1 + r*n + c.
  std::vector<std::vector<int>> rows(tables.size(), std::vector<int>(n));
  for (std::size_t r = 0; r < tables.size(); ++r)
    for (std::size_t c = 0; c < n; ++c)
      rows[r][c] = tables[r].has_column(names[c]) ? 0 : static_cast<int>(1 + r * n + c);

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> deps;
  for (const auto& fd : fds) {
    std::vector<std::size_t> l, r;
    bool inside = true;
    for (const auto& a : fd.lhs) {
      auto i = col_of(std::string(detail::split_qualified(a).second));
      if (i < 0) inside = false;
      else l.push_back(static_cast<std::size_t>(i));
    }
    for (const auto& a : fd.rhs) {
      auto i = col_of(std::string(detail::split_qualified(a).second));
      if (i >= 0) r.push_back(static_cast<std::size_t>(i));
    }
    if (inside && !r.empty()) deps.emplace_back(std::move(l), std::move(r));
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [lhs, rhs] : deps) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
          const bool agree = std::all_of(lhs.begin(), lhs.end(), [&](std::size_t c) { return rows[i][c] == rows[j][c]; });
          if (!agree) continue;
          for (std::size_t c : rhs) {
            const int a = rows[i][c], b = rows[j][c];
            if (a == b) continue;
            const int keep = std::min(a, b), drop = std::max(a, b);
            for (auto& row : rows)
              if (row[c] == drop) row[c] = keep;
            changed = true;
          }
        }
      }
    }
  }
  return std::any_of(rows.begin(), rows.end(),
                     [](const std::vector<int>& row) { return std::all_of(row.begin(), row.end(), [](int v) { return v == 0; }); });
}

inline bool preserves_dependencies(const std::vector<Table>& tables, std::span<const FunctionalDependency> fds) {
  FdList local;
  for (const auto& t : tables) {
    auto projected = project_fds(fds, AttributeSet(t.column_names()));
    local.insert(local.end(), projected.begin(), projected.end());
  }
  for (const auto& fd : minimal_cover(fds)) {
    const auto cl = closure(AttributeSet(fd.lhs), local);
    for (const auto& a : fd.rhs)
      if (!cl.contains(a)) return false;
  }
  return true;
}

}  // namespace normloop
