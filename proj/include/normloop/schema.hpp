#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normloop/error.hpp"

namespace normloop {

// ---------------------------------------------------------------------------
// Identifier helpers. Names are stored as written and compared ignoring case.
// ---------------------------------------------------------------------------

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

inline int icompare(std::string_view a, std::string_view b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int x = std::tolower(static_cast<unsigned char>(a[i]));
    const int y = std::tolower(static_cast<unsigned char>(b[i]));
    if (x != y) return x < y ? -1 : 1;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

struct ILess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const { return icompare(a, b) < 0; }
};

// Lexicographic case-insensitive comparison of name lists.
inline int icompare(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = icompare(a[i], b[i]); c != 0) return c;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

inline bool icontains(const std::vector<std::string>& names, std::string_view name) {
  return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return iequals(n, name); });
}

// Sorted (case-insensitively), duplicate-free copy.
inline std::vector<std::string> sorted_unique(std::vector<std::string> names) {
  std::stable_sort(names.begin(), names.end(), ILess{});
  names.erase(std::unique(names.begin(), names.end(),
                          [](const std::string& a, const std::string& b) { return iequals(a, b); }),
              names.end());
  return names;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

enum class NormalForm { NF1 = 1, NF2 = 2, NF3 = 3 };

inline constexpr NormalForm kAllNormalForms[] = {NormalForm::NF1, NormalForm::NF2, NormalForm::NF3};

inline constexpr int level(NormalForm nf) { return static_cast<int>(nf); }

inline constexpr std::strong_ordering operator<=>(NormalForm a, NormalForm b) {
  return level(a) <=> level(b);
}

inline std::string to_string(NormalForm nf) { return "NF" + std::to_string(level(nf)); }

inline std::optional<NormalForm> normal_form_from_string(std::string_view s) {
  const std::string u = to_upper(s);
  if (u == "NF1" || u == "1NF" || u == "1") return NormalForm::NF1;
  if (u == "NF2" || u == "2NF" || u == "2") return NormalForm::NF2;
  if (u == "NF3" || u == "3NF" || u == "3") return NormalForm::NF3;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Schema model
// ---------------------------------------------------------------------------

enum class TypeKind { Int, BigInt, Decimal, Varchar, Text, Date, Timestamp, Boolean };

struct DataType {
  TypeKind kind = TypeKind::Int;
  int precision = 0;  // DECIMAL(p, s)
  int scale = 0;
  int length = 0;  // VARCHAR(n)
  // Unrecognized types keep their spelling here; kind is Text for them.
  std::string verbatim;

  static DataType of(TypeKind k, int p = 0, int s = 0, int n = 0) {
    DataType t;
    t.kind = k;
    t.precision = p;
    t.scale = s;
    t.length = n;
    return t;
  }
  static DataType integer() { return {}; }
  static DataType big_int() { return of(TypeKind::BigInt); }
  static DataType decimal(int p, int s) { return of(TypeKind::Decimal, p, s); }
  static DataType varchar(int n) { return of(TypeKind::Varchar, 0, 0, n); }
  static DataType text() { return of(TypeKind::Text); }
  static DataType date() { return of(TypeKind::Date); }
  static DataType timestamp() { return of(TypeKind::Timestamp); }
  static DataType boolean() { return of(TypeKind::Boolean); }

  std::string to_sql() const {
    if (!verbatim.empty()) return verbatim;
    switch (kind) {
      case TypeKind::Int: return "INT";
      case TypeKind::BigInt: return "BIGINT";
      case TypeKind::Decimal:
        return "DECIMAL(" + std::to_string(precision) + "," + std::to_string(scale) + ")";
      case TypeKind::Varchar: return "VARCHAR(" + std::to_string(length) + ")";
      case TypeKind::Text: return "TEXT";
      case TypeKind::Date: return "DATE";
      case TypeKind::Timestamp: return "TIMESTAMP";
      case TypeKind::Boolean: return "BOOLEAN";
    }
    return "TEXT";
  }

  bool operator==(const DataType&) const = default;
};

struct ColumnAnnotation {
  enum class Kind { Multivalued, DerivedFrom };
  Kind kind = Kind::Multivalued;
  std::vector<std::string> attrs;  // DerivedFrom only

  static ColumnAnnotation multivalued() { return {}; }
  static ColumnAnnotation derived_from(std::vector<std::string> attrs) {
    return {Kind::DerivedFrom, std::move(attrs)};
  }

  bool operator==(const ColumnAnnotation&) const = default;
};

struct Column {
  std::string name;
  DataType data_type;
  bool nullable = true;
  std::vector<ColumnAnnotation> annotations;

  bool is_multivalued() const {
    return std::any_of(annotations.begin(), annotations.end(),
                       [](const ColumnAnnotation& a) { return a.kind == ColumnAnnotation::Kind::Multivalued; });
  }

  bool operator==(const Column&) const = default;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string referenced_table;
  std::vector<std::string> referenced_columns;

  bool operator==(const ForeignKey&) const = default;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;  // empty: no key declared
  std::vector<ForeignKey> foreign_keys;

  bool has_primary_key() const { return !primary_key.empty(); }

  const Column* find_column(std::string_view col) const {
    for (const auto& c : columns)
      if (iequals(c.name, col)) return &c;
    return nullptr;
  }
  Column* find_column(std::string_view col) {
    for (auto& c : columns)
      if (iequals(c.name, col)) return &c;
    return nullptr;
  }
  bool has_column(std::string_view col) const { return find_column(col) != nullptr; }

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }

  bool operator==(const Table&) const = default;
};

// lhs -> rhs. An empty scope means the dependency is global and its
// attributes are written table.column (or bare when the column name is unique).
struct FunctionalDependency {
  std::vector<std::string> lhs;
  std::vector<std::string> rhs;
  std::string scope;

  static FunctionalDependency make(std::vector<std::string> lhs, std::vector<std::string> rhs,
                                   std::string scope = {}) {
    return {sorted_unique(std::move(lhs)), sorted_unique(std::move(rhs)), std::move(scope)};
  }

  bool is_trivial() const {
    return std::all_of(rhs.begin(), rhs.end(), [&](const std::string& a) { return icontains(lhs, a); });
  }

  bool operator==(const FunctionalDependency&) const = default;
};

using FdList = std::vector<FunctionalDependency>;

inline int compare_fds(const FunctionalDependency& a, const FunctionalDependency& b) {
  if (int c = icompare(a.scope, b.scope); c != 0) return c;
  if (int c = icompare(a.lhs, b.lhs); c != 0) return c;
  if (int c = icompare(a.rhs, b.rhs); c != 0) return c;
  // Fall back to exact spelling so the order is total.
  if (a.scope != b.scope) return a.scope < b.scope ? -1 : 1;
  if (a.lhs != b.lhs) return a.lhs < b.lhs ? -1 : 1;
  if (a.rhs != b.rhs) return a.rhs < b.rhs ? -1 : 1;
  return 0;
}

inline std::string to_string(const FunctionalDependency& fd) {
  std::string s = fd.scope.empty() ? "" : fd.scope + ": ";
  return s + join(fd.lhs, ", ") + " -> " + join(fd.rhs, ", ");
}

struct Schema {
  std::string name;
  std::vector<Table> tables;
  FdList fds;

  const Table* find_table(std::string_view t) const {
    for (const auto& tbl : tables)
      if (iequals(tbl.name, t)) return &tbl;
    return nullptr;
  }
  Table* find_table(std::string_view t) {
    for (auto& tbl : tables)
      if (iequals(tbl.name, t)) return &tbl;
    return nullptr;
  }

  std::size_t foreign_key_count() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.foreign_keys.size();
    return n;
  }

  bool operator==(const Schema&) const = default;
};

// ---------------------------------------------------------------------------
// Structural validation
// ---------------------------------------------------------------------------

struct StructuralError {
  std::string element;  // e.g. "table orders", "fd #2"
  std::string rule;     // short machine-friendly rule id
  std::string message;

  bool operator==(const StructuralError&) const = default;
};

class SchemaInvalid : public Error {
 public:
  explicit SchemaInvalid(std::vector<StructuralError> errors)
      : Error(summarize(errors)), errors_(std::move(errors)) {}

  const std::vector<StructuralError>& errors() const noexcept { return errors_; }

 private:
  static std::string summarize(const std::vector<StructuralError>& errors) {
    std::string s = "schema is structurally invalid";
    for (const auto& e : errors) s += "\n  " + e.element + ": " + e.message;
    return s;
  }
  std::vector<StructuralError> errors_;
};

namespace detail {

inline std::pair<std::string_view, std::string_view> split_qualified(std::string_view attr) {
  const auto dot = attr.find('.');
  if (dot == std::string_view::npos) return {{}, attr};
  return {attr.substr(0, dot), attr.substr(dot + 1)};
}

}  // namespace detail

// Resolves an FD/annotation attribute to (table, column). `scope` restricts
// bare names to one table; without it bare names must be unique in the schema.
struct ResolvedAttribute {
  const Table* table = nullptr;
  const Column* column = nullptr;
};

inline std::optional<ResolvedAttribute> resolve_attribute(const Schema& schema, std::string_view attr,
                                                          std::string_view scope = {}) {
  auto [qual, col] = detail::split_qualified(attr);
  if (!qual.empty()) {
    if (!scope.empty() && !iequals(qual, scope)) return std::nullopt;
    const Table* t = schema.find_table(qual);
    if (!t) return std::nullopt;
    const Column* c = t->find_column(col);
    if (!c) return std::nullopt;
    return ResolvedAttribute{t, c};
  }
  if (!scope.empty()) {
    const Table* t = schema.find_table(scope);
    if (!t) return std::nullopt;
    const Column* c = t->find_column(col);
    if (!c) return std::nullopt;
    return ResolvedAttribute{t, c};
  }
  std::optional<ResolvedAttribute> found;
  for (const auto& t : schema.tables) {
    if (const Column* c = t.find_column(col)) {
      if (found) return std::nullopt;  // ambiguous
      found = ResolvedAttribute{&t, c};
    }
  }
  return found;
}

inline std::vector<StructuralError> validate_schema(const Schema& schema) {
  std::vector<StructuralError> errors;
  auto add = [&](std::string element, std::string rule, std::string message) {
    errors.push_back({std::move(element), std::move(rule), std::move(message)});
  };

  std::map<std::string, int, ILess> table_names;
  for (const auto& t : schema.tables) {
    const std::string where = "table " + t.name;
    if (++table_names[t.name] == 2) add(where, "duplicate-table", "duplicate table name \"" + t.name + "\"");
    if (t.columns.empty()) add(where, "empty-table", "table has no columns");

    std::map<std::string, int, ILess> col_names;
    for (const auto& c : t.columns) {
      const std::string cwhere = where + " column " + c.name;
      if (++col_names[c.name] == 2) add(cwhere, "duplicate-column", "duplicate column name \"" + c.name + "\"");
      const auto& dt = c.data_type;
      if (dt.verbatim.empty()) {
        if (dt.kind == TypeKind::Decimal && (dt.precision <= 0 || dt.scale < 0 || dt.scale > dt.precision))
          add(cwhere, "bad-type-parameter", "DECIMAL parameters must satisfy 0 <= s <= p, p > 0");
        if (dt.kind == TypeKind::Varchar && dt.length <= 0)
          add(cwhere, "bad-type-parameter", "VARCHAR length must be positive");
      }
      for (const auto& a : c.annotations) {
        if (a.kind != ColumnAnnotation::Kind::DerivedFrom) continue;
        if (a.attrs.empty()) add(cwhere, "empty-annotation", "DERIVED_FROM needs at least one attribute");
        for (const auto& attr : a.attrs) {
          auto [qual, bare] = detail::split_qualified(attr);
          const bool ok = qual.empty() ? (t.has_column(bare) || resolve_attribute(schema, attr))
                                       : resolve_attribute(schema, attr).has_value();
          if (!ok) add(cwhere, "unresolved-annotation", "unresolved DERIVED_FROM attribute \"" + attr + "\"");
        }
      }
    }

    std::map<std::string, int, ILess> pk_names;
    for (const auto& k : t.primary_key) {
      if (!t.has_column(k)) add(where, "unresolved-primary-key", "primary key column \"" + k + "\" does not exist");
      if (++pk_names[k] == 2) add(where, "duplicate-primary-key", "primary key lists \"" + k + "\" twice");
    }

    for (const auto& fk : t.foreign_keys) {
      const std::string fwhere = where + " foreign key (" + join(fk.columns, ", ") + ")";
      if (fk.columns.empty()) add(fwhere, "empty-foreign-key", "foreign key has no columns");
      if (fk.columns.size() != fk.referenced_columns.size())
        add(fwhere, "foreign-key-arity", "foreign key arity does not match referenced column list");
      for (const auto& c : fk.columns)
        if (!t.has_column(c)) add(fwhere, "unresolved-foreign-key-column", "column \"" + c + "\" does not exist");
      const Table* ref = schema.find_table(fk.referenced_table);
      if (!ref) {
        add(fwhere, "unresolved-reference", "unresolved reference \"" + fk.referenced_table + "\"");
        continue;
      }
      for (const auto& c : fk.referenced_columns)
        if (!ref->has_column(c))
          add(fwhere, "unresolved-reference-column",
              "unresolved reference \"" + fk.referenced_table + "." + c + "\"");
    }
  }

  for (std::size_t i = 0; i < schema.fds.size(); ++i) {
    const auto& fd = schema.fds[i];
    const std::string where = "fd #" + std::to_string(i + 1) + " (" + to_string(fd) + ")";
    if (fd.lhs.empty() || fd.rhs.empty()) add(where, "empty-fd-side", "both sides of a dependency must be non-empty");
    if (!fd.scope.empty() && !schema.find_table(fd.scope)) {
      add(where, "unresolved-fd-scope", "unresolved FD scope \"" + fd.scope + "\"");
      continue;
    }
    for (const auto* side : {&fd.lhs, &fd.rhs})
      for (const auto& attr : *side)
        if (!resolve_attribute(schema, attr, fd.scope))
          add(where, "unresolved-fd-attribute", "unresolved FD attribute \"" + attr + "\"");
  }
  return errors;
}

inline void require_valid(const Schema& schema) {
  auto errors = validate_schema(schema);
  if (!errors.empty()) throw SchemaInvalid(std::move(errors));
}

// Tables sorted by name; primary-key columns first (key order), then the rest
// in their original order; annotations and FDs sorted and de-duplicated.
inline Schema canonicalize(const Schema& schema) {
  require_valid(schema);
  Schema out = schema;
  std::stable_sort(out.tables.begin(), out.tables.end(),
                   [](const Table& a, const Table& b) { return icompare(a.name, b.name) < 0; });
  for (auto& t : out.tables) {
    std::vector<Column> ordered;
    ordered.reserve(t.columns.size());
    for (const auto& k : t.primary_key) ordered.push_back(*t.find_column(k));
    for (const auto& c : t.columns)
      if (!icontains(t.primary_key, c.name)) ordered.push_back(c);
    t.columns = std::move(ordered);
    for (auto& c : t.columns) {
      auto& anns = c.annotations;
      for (auto& a : anns) a.attrs = sorted_unique(std::move(a.attrs));
      std::stable_sort(anns.begin(), anns.end(), [](const ColumnAnnotation& a, const ColumnAnnotation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return icompare(a.attrs, b.attrs) < 0;
      });
      anns.erase(std::unique(anns.begin(), anns.end()), anns.end());
    }
  }
  for (auto& fd : out.fds) fd = FunctionalDependency::make(std::move(fd.lhs), std::move(fd.rhs), fd.scope);
  std::stable_sort(out.fds.begin(), out.fds.end(),
                   [](const FunctionalDependency& a, const FunctionalDependency& b) { return compare_fds(a, b) < 0; });
  out.fds.erase(std::unique(out.fds.begin(), out.fds.end()), out.fds.end());
  return out;
}

// Dependencies that apply to one table, rewritten to the table's bare column
// spelling: FDs scoped to it plus global FDs whose attributes all live in it.
// Trivial dependencies are dropped.
inline FdList table_fds(const Schema& schema, const Table& table) {
  FdList out;
  for (const auto& fd : schema.fds) {
    if (!fd.scope.empty() && !iequals(fd.scope, table.name)) continue;
    bool applies = true;
    auto rewrite = [&](const std::vector<std::string>& side) {
      std::vector<std::string> names;
      for (const auto& attr : side) {
        auto r = resolve_attribute(schema, attr, fd.scope);
        if (!r || r->table != &table) {
          applies = false;
          break;
        }
        names.push_back(r->column->name);
      }
      return names;
    };
    auto lhs = rewrite(fd.lhs);
    auto rhs = applies ? rewrite(fd.rhs) : std::vector<std::string>{};
    if (!applies) continue;
    auto norm = FunctionalDependency::make(std::move(lhs), std::move(rhs), table.name);
    if (!norm.is_trivial()) out.push_back(std::move(norm));
  }
  return out;
}

// Table in `candidates` sharing the most column names with `columns`, provided
// the overlap covers at least half of the smaller of the two tables.
inline const Table* best_matching_table(const std::vector<std::string>& columns,
                                        const std::vector<Table>& candidates) {
  const Table* best = nullptr;
  std::size_t best_overlap = 0;
  for (const auto& t : candidates) {
    std::size_t overlap = 0;
    for (const auto& c : columns)
      if (t.has_column(c)) ++overlap;
    const std::size_t smaller = std::min(columns.size(), t.columns.size());
    if (overlap == 0 || 2 * overlap < smaller) continue;
    if (overlap > best_overlap || (overlap == best_overlap && best && icompare(t.name, best->name) < 0)) {
      best = &t;
      best_overlap = overlap;
    }
  }
  return best;
}

}  // namespace normloop
