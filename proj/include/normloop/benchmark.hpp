#pragma once

// Seeded anomaly injection with ground truth, per-trial scoring and the
// aggregate metrics reported per (dataset, normal form).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "normloop/datasets.hpp"
#include "normloop/fd_theory.hpp"
#include "normloop/interchange.hpp"
#include "normloop/refinement.hpp"
#include "normloop/verifier.hpp"

namespace normloop {

class InjectionImpossible : public Error {
 public:
  using Error::Error;
};

class TranscriptMismatch : public Error {
 public:
  using Error::Error;
};

struct AnomalyRecord {
  int id = 1;
  NormalForm normal_form = NormalForm::NF1;
  AnomalyKind kind = AnomalyKind::NonAtomic;
  std::string table;
  std::vector<std::string> columns;
  FdList injected_fds;
  std::string note;  // REPEATING_GROUP: the base column the members replace

  bool operator==(const AnomalyRecord&) const = default;
};

struct GroundTruth {
  Schema base_schema;  // includes the synthetic host table when one was added
  Schema mutated_schema;
  std::vector<AnomalyRecord> records;
  std::uint64_t seed = 0;
  NormalForm normal_form = NormalForm::NF1;

  bool operator==(const GroundTruth&) const = default;
};

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

namespace detail {

// Distributions in <random> are implementation-defined; the engine is not.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

inline constexpr const char* kFreshWords[] = {"region",  "segment", "tier",    "category", "zone",
                                              "channel", "grade",   "sector",  "district", "cluster",
                                              "label",   "owner",   "profile", "status",   "origin"};

class ColumnNames {
 public:
  explicit ColumnNames(const Schema& s) {
    for (const auto& t : s.tables)
      for (const auto& c : t.columns) used_.insert(c.name);
  }
  bool taken(const std::string& n) const { return used_.count(n) > 0; }
  void take(const std::string& n) { used_.insert(n); }
  // First unused "<prefix><word><suffix>"; falls back to doubled words.
  std::string fresh(const std::string& prefix, const std::string& suffix, SeededRng& rng) {
    const std::size_t n = std::size(kFreshWords);
    const std::size_t start = rng.below(n);
    for (std::size_t round = 0; round <= n; ++round) {
      for (std::size_t i = 0; i < n; ++i) {
        std::string word = kFreshWords[(start + i) % n];
        if (round > 0) word = std::string(kFreshWords[(round - 1) % n]) + "_" + word;
        std::string name = prefix + word + suffix;
        if (!taken(name)) {
          take(name);
          return name;
        }
      }
    }
    throw InjectionImpossible("ran out of fresh column names");
  }

 private:
  std::set<std::string, ILess> used_;
};

inline std::string stem(const std::string& col) {
  const std::string l = to_lower(col);
  if (l.size() > 3 && l.ends_with("_id")) return col.substr(0, col.size() - 3);
  return col;
}

inline bool ends_with_digit(const std::string& s) { return !s.empty() && std::isdigit(static_cast<unsigned char>(s.back())); }

inline bool referenced_elsewhere(const Schema& s, const Table& t, const std::string& col) {
  for (const auto& other : s.tables)
    for (const auto& fk : other.foreign_keys)
      if (iequals(fk.referenced_table, t.name) && icontains(fk.referenced_columns, col)) return true;
  return false;
}

inline bool in_foreign_key(const Table& t, const std::string& col) {
  for (const auto& fk : t.foreign_keys)
    if (icontains(fk.columns, col)) return true;
  return false;
}

inline bool mentioned_in_fds(const Schema& s, const Table& t, const std::string& col) {
  for (const auto& fd : table_fds(s, t))
    if (icontains(fd.lhs, col) || icontains(fd.rhs, col)) return true;
  return false;
}

inline Table generic_synthetic_table() {
  Table t;
  t.name = "aux_synthetic";
  t.columns = {{"aux_left_id", DataType::integer(), true, {}},
               {"aux_right_id", DataType::integer(), true, {}},
               {"aux_note", DataType::varchar(64), true, {}}};
  t.primary_key = {"aux_left_id", "aux_right_id"};
  return t;
}

// Tables in seeded order, visited round-robin so anomalies spread out.
class HostCycle {
 public:
  HostCycle(std::vector<std::string> names, SeededRng& rng) : names_(std::move(names)) { rng.shuffle(names_); }
  template <typename Pred>
  std::optional<std::string> next(Pred eligible) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const std::string& n = names_[(cursor_ + i) % names_.size()];
      if (eligible(n)) {
        cursor_ = (cursor_ + i + 1) % names_.size();
        return n;
      }
    }
    return std::nullopt;
  }

 private:
  std::vector<std::string> names_;
  std::size_t cursor_ = 0;
};

inline std::vector<std::string> table_names(const Schema& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tables) out.push_back(t.name);
  return out;
}

inline bool has_room(const Table& t, std::size_t extra) { return t.columns.size() + extra <= kMaxTableAttributes; }

inline void inject_nf1(Schema& m, int count, SeededRng& rng, ColumnNames& names, std::vector<AnomalyRecord>& out) {
  HostCycle cycle(table_names(m), rng);
  std::set<std::string, ILess> pk_dropped;
  std::vector<std::size_t> missing_pk;  // applied last so the recovery FD sees final columns
  static constexpr AnomalyKind kRotation[] = {AnomalyKind::NonAtomic, AnomalyKind::RepeatingGroup,
                                              AnomalyKind::MissingPk};
  for (int i = 0; i < count; ++i) {
    AnomalyRecord r;
    r.id = i + 1;
    r.normal_form = NormalForm::NF1;
    r.kind = kRotation[i % 3];
    if (r.kind == AnomalyKind::NonAtomic) {
      // Fold an attribute of a referencing child into the parent as a list.
      auto pick_child = [&](const Table& parent) -> std::optional<std::pair<const Table*, const Column*>> {
        std::vector<std::pair<const Table*, const Column*>> options;
        for (const auto& child : m.tables) {
          if (&child == &parent) continue;
          bool refs = false;
          for (const auto& fk : child.foreign_keys) refs = refs || iequals(fk.referenced_table, parent.name);
          if (!refs) continue;
          for (const auto& c : child.columns) {
            if (icontains(child.primary_key, c.name) || in_foreign_key(child, c.name) || !c.annotations.empty()) continue;
            if (names.taken(child.name + "_" + c.name + "_list")) continue;
            options.push_back({&child, &c});
          }
        }
        if (options.empty()) return std::nullopt;
        return options[rng.below(options.size())];
      };
      auto host = cycle.next([&](const std::string& n) {
        const Table* t = m.find_table(n);
        if (!t->has_primary_key() || !has_room(*t, 1)) return false;
        for (const auto& child : m.tables)
          for (const auto& fk : child.foreign_keys)
            if (iequals(fk.referenced_table, t->name) && &child != t) return true;
        return false;
      });
      if (!host) throw InjectionImpossible("no table with a referencing child can take a list-valued column");
      Table* t = m.find_table(*host);
      auto choice = pick_child(*t);
      if (!choice) throw InjectionImpossible("no foldable child attribute for table " + t->name);
      const std::string col = choice->first->name + "_" + choice->second->name + "_list";
      names.take(col);
      t->columns.push_back({col, DataType::text(), true, {ColumnAnnotation::multivalued()}});
      r.table = t->name;
      r.columns = {col};
      r.note = "folded " + choice->first->name + "." + choice->second->name + " into a delimiter-joined list";
    } else if (r.kind == AnomalyKind::RepeatingGroup) {
      auto eligible_col = [&](const Table& t, const Column& c) {
        if (icontains(t.primary_key, c.name) || in_foreign_key(t, c.name) || referenced_elsewhere(m, t, c.name)) return false;
        if (!c.annotations.empty() || ends_with_digit(c.name) || mentioned_in_fds(m, t, c.name)) return false;
        for (int k = 1; k <= 3; ++k)
          if (names.taken(c.name + std::to_string(k))) return false;
        return true;
      };
      auto host = cycle.next([&](const std::string& n) {
        const Table* t = m.find_table(n);
        if (!has_room(*t, 2)) return false;
        return std::any_of(t->columns.begin(), t->columns.end(), [&](const Column& c) { return eligible_col(*t, c); });
      });
      if (!host) throw InjectionImpossible("no column can be turned into a repeating group");
      Table* t = m.find_table(*host);
      std::vector<std::size_t> cols;
      for (std::size_t k = 0; k < t->columns.size(); ++k)
        if (eligible_col(*t, t->columns[k])) cols.push_back(k);
      const std::size_t at = cols[rng.below(cols.size())];
      const Column base = t->columns[at];
      std::vector<Column> members;
      for (int k = 1; k <= 3; ++k) {
        Column c = base;
        c.name = base.name + std::to_string(k);
        names.take(c.name);
        r.columns.push_back(c.name);
        members.push_back(std::move(c));
      }
      t->columns.erase(t->columns.begin() + static_cast<std::ptrdiff_t>(at));
      t->columns.insert(t->columns.begin() + static_cast<std::ptrdiff_t>(at), members.begin(), members.end());
      r.table = t->name;
      r.note = base.name;
    } else {
      auto host = cycle.next([&](const std::string& n) {
        const Table* t = m.find_table(n);
        return t->has_primary_key() && !pk_dropped.count(n);
      });
      if (!host) throw InjectionImpossible("no table left whose primary key can be dropped");
      pk_dropped.insert(*host);
      r.table = m.find_table(*host)->name;
      r.columns = m.find_table(*host)->primary_key;
      missing_pk.push_back(out.size());
    }
    out.push_back(std::move(r));
  }
  for (std::size_t idx : missing_pk) {
    AnomalyRecord& r = out[idx];
    Table* t = m.find_table(r.table);
    std::vector<std::string> rest;
    for (const auto& c : t->columns)
      if (!icontains(t->primary_key, c.name)) rest.push_back(c.name);
    if (!rest.empty()) {
      auto fd = FunctionalDependency::make(t->primary_key, rest, t->name);
      r.injected_fds.push_back(fd);
      m.fds.push_back(std::move(fd));
    }
    t->primary_key.clear();
  }
}

inline void inject_nf2(Schema& m, int count, SeededRng& rng, ColumnNames& names, std::vector<AnomalyRecord>& out) {
  HostCycle cycle(table_names(m), rng);
  for (int i = 0; i < count; ++i) {
    auto host = cycle.next([&](const std::string& n) {
      const Table* t = m.find_table(n);
      return t->primary_key.size() >= 2 && has_room(*t, 1);
    });
    if (!host) throw InjectionImpossible("no table with a composite primary key has room for a 2NF anomaly");
    Table* t = m.find_table(*host);
    // A random nonempty proper subset of the key.
    std::vector<std::string> key = t->primary_key;
    rng.shuffle(key);
    const std::size_t size = 1 + rng.below(key.size() - 1);
    std::vector<std::string> det(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(size));
    det = sorted_unique(det);
    const std::string col = names.fresh(stem(det.front()) + "_", "", rng);
    t->columns.push_back({col, DataType::varchar(40), true, {}});
    auto fd = FunctionalDependency::make(det, {col}, t->name);
    AnomalyRecord r;
    r.id = i + 1;
    r.normal_form = NormalForm::NF2;
    r.kind = AnomalyKind::Partial;
    r.table = t->name;
    r.columns = det;
    r.columns.push_back(col);
    r.injected_fds = {fd};
    r.note = col + " depends on part of the key (" + join(det, ", ") + ")";
    m.fds.push_back(std::move(fd));
    out.push_back(std::move(r));
  }
}

inline void inject_nf3(Schema& m, int count, SeededRng& rng, ColumnNames& names, std::vector<AnomalyRecord>& out) {
  HostCycle cycle(table_names(m), rng);
  for (int i = 0; i < count; ++i) {
    auto host = cycle.next([&](const std::string& n) {
      const Table* t = m.find_table(n);
      return t->has_primary_key() && has_room(*t, 2);
    });
    if (!host) throw InjectionImpossible("no keyed table has room for a 3NF anomaly");
    Table* t = m.find_table(*host);
    std::string code;
    std::string label;
    // Both names come from the same word so the pair reads naturally.
    for (int guard = 0;; ++guard) {
      code = names.fresh("", "_code", rng);
      const std::string word = code.substr(0, code.size() - 5);
      if (!names.taken(word + "_name")) {
        label = word + "_name";
        names.take(label);
        break;
      }
      if (guard > 64) throw InjectionImpossible("ran out of fresh column names");
    }
    t->columns.push_back({code, DataType::varchar(20), true, {}});
    t->columns.push_back({label, DataType::varchar(60), true, {}});
    auto fd = FunctionalDependency::make({code}, {label}, t->name);
    AnomalyRecord r;
    r.id = i + 1;
    r.normal_form = NormalForm::NF3;
    r.kind = AnomalyKind::Transitive;
    r.table = t->name;
    r.columns = {code, label};
    r.injected_fds = {fd};
    r.note = label + " depends on the non-key " + code;
    m.fds.push_back(std::move(fd));
    out.push_back(std::move(r));
  }
}

}  // namespace detail

// Small schemas get a synthetic host table first for 2NF/3NF; `synthetic`
// defaults to a generic two-column-key table.
inline GroundTruth inject_anomalies(const Schema& base, NormalForm nf, int count, std::uint64_t seed,
                                    const std::optional<Table>& synthetic = std::nullopt) {
  if (count < 1) throw InvalidArgument("anomaly count must be at least 1");
  if (!verify_deterministic(base, NormalForm::NF3).passes_target())
    throw InvalidArgument("the base schema must pass 3NF before injection");
  GroundTruth gt;
  gt.seed = seed;
  gt.normal_form = nf;
  gt.base_schema = canonicalize(base);

  const bool has_composite = std::any_of(base.tables.begin(), base.tables.end(),
                                         [](const Table& t) { return t.primary_key.size() >= 2; });
  const bool too_small = base.tables.size() < static_cast<std::size_t>(count);
  if (nf != NormalForm::NF1 && (too_small || (nf == NormalForm::NF2 && !has_composite))) {
    Table extra = synthetic ? *synthetic : detail::generic_synthetic_table();
    std::string name = extra.name;
    for (int k = 2; gt.base_schema.find_table(name); ++k) name = extra.name + "_" + std::to_string(k);
    extra.name = name;
    gt.base_schema.tables.push_back(std::move(extra));
    require_valid(gt.base_schema);
    gt.base_schema = canonicalize(gt.base_schema);
  }

  Schema m = gt.base_schema;
  detail::SeededRng rng(seed);
  detail::ColumnNames names(m);
  switch (nf) {
    case NormalForm::NF1: detail::inject_nf1(m, count, rng, names, gt.records); break;
    case NormalForm::NF2: detail::inject_nf2(m, count, rng, names, gt.records); break;
    case NormalForm::NF3: detail::inject_nf3(m, count, rng, names, gt.records); break;
  }
  require_valid(m);
  gt.mutated_schema = canonicalize(m);
  return gt;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct TrialResult {
  int trial_index = 0;
  std::vector<bool> eliminated;
  std::vector<bool> detected;
  int attempts_used = 0;
  bool converged = false;
  std::size_t tokens_est = 0;
  bool aborted = false;

  int eliminated_count() const { return static_cast<int>(std::count(eliminated.begin(), eliminated.end(), true)); }
  bool all_eliminated() const { return std::all_of(eliminated.begin(), eliminated.end(), [](bool b) { return b; }); }
};

namespace detail {

inline bool overlaps(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return icontains(b, x); });
}

// Names every final schema must still contain: the mutated schema's columns,
// with repeating-group members folded back to their base column.
inline std::set<std::string, ILess> required_attributes(const GroundTruth& truth) {
  std::set<std::string, ILess> out;
  std::set<std::string, ILess> members;
  for (const auto& r : truth.records) {
    if (r.kind != AnomalyKind::RepeatingGroup) continue;
    members.insert(r.columns.begin(), r.columns.end());
    out.insert(r.note);
  }
  for (const auto& t : truth.mutated_schema.tables)
    for (const auto& c : t.columns)
      if (!members.count(c.name)) out.insert(c.name);
  return out;
}

inline bool attributes_preserved(const GroundTruth& truth, const Schema& final_schema) {
  std::set<std::string, ILess> have;
  for (const auto& t : final_schema.tables)
    for (const auto& c : t.columns) have.insert(c.name);
  for (const auto& a : required_attributes(truth))
    if (!have.count(a)) return false;
  return true;
}

// Does any final table still carry the recorded determinant -> dependent
// violation once judged by the true dependencies of the host table?
inline bool dependency_violation_remains(const GroundTruth& truth, const AnomalyRecord& r, const Schema& final_schema) {
  const Table* host = truth.mutated_schema.find_table(r.table);
  if (!host || r.injected_fds.empty()) return true;
  FdList truth_fds = table_fds(truth.mutated_schema, *host);
  if (host->has_primary_key())
    truth_fds.push_back(FunctionalDependency::make(host->primary_key, host->column_names(), host->name));
  const auto& injected = r.injected_fds.front();
  const AttributeSet det(injected.lhs);
  const std::string& dep = injected.rhs.front();

  for (const auto& out : final_schema.tables) {
    if (!out.has_column(dep) ||
        !std::all_of(det.begin(), det.end(), [&](const std::string& a) { return out.has_column(a); }))
      continue;
    if (out.columns.size() > kMaxTableAttributes) return true;  // cannot be judged; count against it
    Table probe;
    probe.name = out.name;
    AttributeSet shared;
    for (const auto& c : out.columns) {
      const Column* hc = host->find_column(c.name);
      probe.columns.push_back({hc ? hc->name : c.name, c.data_type, true, {}});
      if (hc) shared.insert(hc->name);
    }
    const FdList fds = project_fds(truth_fds, shared);
    auto matches = [&](const DependencyViolation& v) { return iequals(v.dependent, dep) && v.determinant == det; };
    for (const auto& v : partial_dependencies(probe, fds))
      if (matches(v)) return true;
    for (const auto& v : transitive_dependencies(probe, fds))
      if (matches(v)) return true;
  }
  return false;
}

inline bool first_nf_pattern_absent(const GroundTruth& truth, const AnomalyRecord& r, const Schema& final_schema) {
  switch (r.kind) {
    case AnomalyKind::NonAtomic: {
      const std::string& col = r.columns.front();
      for (const auto& t : final_schema.tables) {
        const Column* c = t.find_column(col);
        if (c && (c->is_multivalued() || !icontains(t.primary_key, col))) return false;
      }
      return true;
    }
    case AnomalyKind::RepeatingGroup:
      for (const auto& t : final_schema.tables) {
        int present = 0;
        for (const auto& m : r.columns) present += t.has_column(m) ? 1 : 0;
        if (present >= 2) return false;
      }
      return true;
    case AnomalyKind::MissingPk: {
      const Table* host = truth.mutated_schema.find_table(r.table);
      if (!host) return false;
      const Table* site = best_matching_table(host->column_names(), final_schema.tables);
      return site && site->has_primary_key();
    }
    default: return false;
  }
}

inline bool item_hits(const AnomalyItem& item, const AnomalyRecord& r, const Schema& reported_on,
                      const Schema& mutated, bool same_schema) {
  if (!overlaps(item.columns, r.columns)) return false;
  if (iequals(item.table, r.table)) return true;
  if (same_schema) return false;
  const Table* t = reported_on.find_table(item.table);
  if (!t) return false;
  const Table* src = best_matching_table(t->column_names(), mutated.tables);
  return src && iequals(src->name, r.table);
}

}  // namespace detail

inline TrialResult score_trial(const GroundTruth& truth, const RefinementTranscript& transcript, int trial_index = 0) {
  if (canonicalize(transcript.input_schema) != canonicalize(truth.mutated_schema))
    throw TranscriptMismatch("the transcript was not produced from this ground truth's mutated schema");
  TrialResult res;
  res.trial_index = trial_index;
  res.attempts_used = transcript.attempts_used();
  res.converged = transcript.converged;
  res.tokens_est = transcript.total_prompt_tokens_est;
  res.aborted = transcript.aborted;

  const Schema& final_schema = transcript.final_schema;
  const bool preserved = detail::attributes_preserved(truth, final_schema);
  for (const auto& r : truth.records) {
    bool ok = preserved;
    if (ok) {
      ok = r.normal_form == NormalForm::NF1 ? detail::first_nf_pattern_absent(truth, r, final_schema)
                                            : !detail::dependency_violation_remains(truth, r, final_schema);
    }
    res.eliminated.push_back(ok);

    bool hit = false;
    if (transcript.input_report)
      for (const auto& item : transcript.input_report->anomalies)
        hit = hit || detail::item_hits(item, r, transcript.input_schema, truth.mutated_schema, true);
    for (const auto& a : transcript.attempts) {
      if (hit) break;
      if (!a.report || !a.generated()) continue;
      for (const auto& item : a.report->anomalies)
        hit = hit || detail::item_hits(item, r, a.generation().schema, truth.mutated_schema, false);
    }
    res.detected.push_back(hit);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::string dataset;
  NormalForm normal_form = NormalForm::NF1;
  int anomaly_count = 0;
  int trials = 0;
  int excluded_trials = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // population
  double detection_rate = 0.0;
  double elimination_rate = 0.0;
  std::map<int, int> attempts_histogram;
  double mean_tokens = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

// Aborted trials are left out and counted in excluded_trials.
inline MetricsReport compute_metrics(const std::vector<TrialResult>& results, int anomaly_count, int max_attempts) {
  MetricsReport m;
  m.anomaly_count = anomaly_count;
  m.trials = static_cast<int>(results.size());
  std::vector<const TrialResult*> kept;
  for (const auto& r : results) {
    if (r.aborted) ++m.excluded_trials;
    else kept.push_back(&r);
  }
  if (kept.empty()) return m;
  const double n = static_cast<double>(kept.size());
  double sum = 0, detected = 0, full = 0, tokens = 0, slots = 0;
  for (const auto* r : kept) {
    sum += r->eliminated_count();
    detected += static_cast<double>(std::count(r->detected.begin(), r->detected.end(), true));
    slots += static_cast<double>(r->detected.size());
    if (r->all_eliminated() && r->attempts_used <= max_attempts) full += 1;
    tokens += static_cast<double>(r->tokens_est);
    m.attempts_histogram[r->attempts_used] += 1;
  }
  m.accuracy_mean = sum / n;
  double var = 0;
  for (const auto* r : kept) var += std::pow(r->eliminated_count() - m.accuracy_mean, 2);
  m.accuracy_std = std::sqrt(var / n);
  m.detection_rate = slots > 0 ? detected / slots : 0.0;
  m.elimination_rate = full / n;
  m.mean_tokens = tokens / n;
  return m;
}

struct TrialPlan {
  std::string dataset;
  Schema base;
  std::optional<Table> synthetic;
  NormalForm normal_form = NormalForm::NF3;
  int anomaly_count = 5;
  int trials = 20;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: one per hardware thread
};

inline TrialPlan plan_for(const BundledDataset& d, NormalForm nf, int trials, std::uint64_t seed) {
  return {d.name, d.schema, d.synthetic_table, nf, 5, trials, seed, 0};
}

// Trial t injects with seed ^ t; results land by index, so the report does
// not depend on scheduling.
inline MetricsReport run_trials(const TrialPlan& plan, GeneratorBackend& generator, VerifierBackend& verifier,
                                const RefinementConfig& config, std::vector<RefinementTranscript>* transcripts = nullptr) {
  if (plan.trials < 1) throw InvalidArgument("trials must be at least 1");
  validate_config(config);
  std::vector<TrialResult> results(static_cast<std::size_t>(plan.trials));
  std::vector<RefinementTranscript> kept(transcripts ? results.size() : 0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (int t = next++; t < plan.trials; t = next++) {
      try {
        const GroundTruth truth =
            inject_anomalies(plan.base, plan.normal_form, plan.anomaly_count, plan.seed ^ static_cast<std::uint64_t>(t),
                             plan.synthetic);
        RefinementTranscript tr = run_refinement(truth.mutated_schema, generator, verifier, config);
        results[static_cast<std::size_t>(t)] = score_trial(truth, tr, t);
        if (transcripts) kept[static_cast<std::size_t>(t)] = std::move(tr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = plan.trials;
      }
    }
  };
  int workers = plan.workers > 0 ? plan.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, plan.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  MetricsReport m = compute_metrics(results, plan.anomaly_count, config.max_attempts);
  m.dataset = plan.dataset;
  m.normal_form = plan.normal_form;
  if (transcripts) *transcripts = std::move(kept);
  return m;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class ReportFormat { TextTable, Csv, Structured };

inline std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  const std::string l = to_lower(s);
  if (l == "text" || l == "table" || l == "text_table") return ReportFormat::TextTable;
  if (l == "csv") return ReportFormat::Csv;
  if (l == "json" || l == "structured") return ReportFormat::Structured;
  return std::nullopt;
}

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string histogram_text(const std::map<int, int>& h) {
  std::string out;
  for (const auto& [k, v] : h) {
    if (!out.empty()) out += ' ';
    out += std::to_string(k) + ":" + std::to_string(v);
  }
  return out.empty() ? "-" : out;
}

inline std::string pad(std::string s, std::size_t width) {
  // Count code points so the +- sign does not skew the columns.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  if (cps < width) s.append(width - cps, ' ');
  return s;
}

}  // namespace detail

inline std::string accuracy_cell(double mean, double std) {
  return detail::fixed(mean, 2) + " (±" + detail::fixed(std, 2) + ")";
}

inline Json to_json(const MetricsReport& m) {
  Json hist = Json::object();
  for (const auto& [k, v] : m.attempts_histogram) hist[std::to_string(k)] = v;
  Json j;
  j["dataset"] = m.dataset;
  j["normal_form"] = to_string(m.normal_form);
  j["anomaly_count"] = m.anomaly_count;
  j["trials"] = m.trials;
  j["excluded_trials"] = m.excluded_trials;
  j["accuracy_mean"] = m.accuracy_mean;
  j["accuracy_std"] = m.accuracy_std;
  j["detection_rate"] = m.detection_rate;
  j["elimination_rate"] = m.elimination_rate;
  j["attempts_histogram"] = std::move(hist);
  j["mean_tokens"] = m.mean_tokens;
  return j;
}

inline std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::TextTable: {
      const std::size_t w[] = {13, 4, 8, 9, 16, 10, 12, 14};
      const char* head[] = {"dataset", "nf", "trials", "excluded", "accuracy", "detection", "elimination", "attempts"};
      for (std::size_t i = 0; i < 8; ++i) out += detail::pad(head[i], w[i]) + " ";
      out += "tokens\n";
      for (const auto& m : reports) {
        const std::string cells[] = {m.dataset,
                                     to_string(m.normal_form),
                                     std::to_string(m.trials),
                                     std::to_string(m.excluded_trials),
                                     accuracy_cell(m.accuracy_mean, m.accuracy_std),
                                     detail::fixed(100.0 * m.detection_rate, 1) + "%",
                                     detail::fixed(100.0 * m.elimination_rate, 1) + "%",
                                     detail::histogram_text(m.attempts_histogram)};
        for (std::size_t i = 0; i < 8; ++i) out += detail::pad(cells[i], w[i]) + " ";
        out += detail::fixed(m.mean_tokens, 1) + "\n";
      }
      return out;
    }
    case ReportFormat::Csv: {
      out = "dataset,normal_form,anomaly_count,trials,excluded_trials,accuracy_mean,accuracy_std,detection_rate,"
            "elimination_rate,attempts_histogram,mean_tokens\n";
      for (const auto& m : reports) {
        out += m.dataset + "," + to_string(m.normal_form) + "," + std::to_string(m.anomaly_count) + "," +
               std::to_string(m.trials) + "," + std::to_string(m.excluded_trials) + "," +
               detail::fixed(m.accuracy_mean, 4) + "," + detail::fixed(m.accuracy_std, 4) + "," +
               detail::fixed(m.detection_rate, 4) + "," + detail::fixed(m.elimination_rate, 4) + "," +
               detail::histogram_text(m.attempts_histogram) + "," + detail::fixed(m.mean_tokens, 1) + "\n";
      }
      return out;
    }
    case ReportFormat::Structured: {
      Json arr = Json::array();
      for (const auto& m : reports) arr.push_back(to_json(m));
      return arr.dump(2) + "\n";
    }
  }
  return out;
}

inline std::string render_report(const MetricsReport& report, ReportFormat format) {
  return render_report(std::vector<MetricsReport>{report}, format);
}

// ---------------------------------------------------------------------------
// Ground truth interchange
// ---------------------------------------------------------------------------

inline Json to_json(const AnomalyRecord& r) {
  Json fds = Json::array();
  for (const auto& fd : r.injected_fds) fds.push_back(fd_to_json(fd));
  Json j;
  j["id"] = r.id;
  j["normal_form"] = to_string(r.normal_form);
  j["kind"] = to_string(r.kind);
  j["table"] = r.table;
  j["columns"] = r.columns;
  j["injected_fds"] = std::move(fds);
  j["note"] = r.note;
  return j;
}

inline Json to_json(const GroundTruth& g) {
  Json recs = Json::array();
  for (const auto& r : g.records) recs.push_back(to_json(r));
  Json j;
  j["base_schema"] = to_json(g.base_schema);
  j["mutated_schema"] = to_json(g.mutated_schema);
  j["records"] = std::move(recs);
  j["seed"] = g.seed;
  j["normal_form"] = to_string(g.normal_form);
  return j;
}

inline GroundTruth ground_truth_from_json(const Json& j) {
  try {
    GroundTruth g;
    g.base_schema = schema_from_json(j.at("base_schema"));
    g.mutated_schema = schema_from_json(j.at("mutated_schema"));
    g.seed = j.at("seed").get<std::uint64_t>();
    auto nf = normal_form_from_string(j.at("normal_form").get<std::string>());
    if (!nf) throw InvalidArgument("bad normal_form in ground truth");
    g.normal_form = *nf;
    for (const auto& jr : j.at("records")) {
      AnomalyRecord r;
      r.id = jr.at("id").get<int>();
      auto rnf = normal_form_from_string(jr.at("normal_form").get<std::string>());
      auto kind = anomaly_kind_from_string(jr.at("kind").get<std::string>());
      if (!rnf || !kind) throw InvalidArgument("bad record kind in ground truth");
      r.normal_form = *rnf;
      r.kind = *kind;
      r.table = jr.at("table").get<std::string>();
      r.columns = jr.at("columns").get<std::vector<std::string>>();
      for (const auto& jf : jr.at("injected_fds")) r.injected_fds.push_back(fd_from_json(jf));
      r.note = jr.value("note", std::string{});
      g.records.push_back(std::move(r));
    }
    return g;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed ground truth JSON: ") + e.what());
  }
}

}  // namespace normloop
