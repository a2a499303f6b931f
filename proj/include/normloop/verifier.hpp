#pragma once

#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "normloop/fd_theory.hpp"
#include "normloop/schema.hpp"

namespace normloop {

enum class AnomalyKind { NonAtomic, RepeatingGroup, MissingPk, Partial, Transitive };

inline std::string to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::NonAtomic: return "NON_ATOMIC";
    case AnomalyKind::RepeatingGroup: return "REPEATING_GROUP";
    case AnomalyKind::MissingPk: return "MISSING_PK";
    case AnomalyKind::Partial: return "PARTIAL";
    case AnomalyKind::Transitive: return "TRANSITIVE";
  }
  return "NON_ATOMIC";
}

inline std::optional<AnomalyKind> anomaly_kind_from_string(std::string_view s) {
  const std::string u = to_upper(s);
  if (u == "NON_ATOMIC") return AnomalyKind::NonAtomic;
  if (u == "REPEATING_GROUP") return AnomalyKind::RepeatingGroup;
  if (u == "MISSING_PK") return AnomalyKind::MissingPk;
  if (u == "PARTIAL") return AnomalyKind::Partial;
  if (u == "TRANSITIVE") return AnomalyKind::Transitive;
  return std::nullopt;
}

inline NormalForm normal_form_of(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::Partial: return NormalForm::NF2;
    case AnomalyKind::Transitive: return NormalForm::NF3;
    default: return NormalForm::NF1;
  }
}

inline AnomalyKind default_kind(NormalForm nf) {
  switch (nf) {
    case NormalForm::NF1: return AnomalyKind::NonAtomic;
    case NormalForm::NF2: return AnomalyKind::Partial;
    case NormalForm::NF3: return AnomalyKind::Transitive;
  }
  return AnomalyKind::NonAtomic;
}

struct AnomalyItem {
  NormalForm normal_form = NormalForm::NF1;
  AnomalyKind kind = AnomalyKind::NonAtomic;
  std::string table;
  std::vector<std::string> columns;
  std::string explanation;
  std::string suggested_action;

  bool operator==(const AnomalyItem&) const = default;
};

enum class Verdict { Pass, Fail };
enum class VerifierKind { Deterministic, Llm };

inline std::string to_string(Verdict v) { return v == Verdict::Pass ? "PASS" : "FAIL"; }
inline std::string to_string(VerifierKind k) { return k == VerifierKind::Deterministic ? "DETERMINISTIC" : "LLM"; }

struct VerificationReport {
  NormalForm target = NormalForm::NF3;
  std::map<NormalForm, Verdict> status;  // NF1..target
  std::vector<AnomalyItem> anomalies;
  VerifierKind backend = VerifierKind::Deterministic;
  // LLM backend only.
  std::optional<std::string> prompt;
  std::optional<std::string> raw_reply;

  bool passes(NormalForm nf) const {
    if (nf > target) return false;
    for (const auto& [form, verdict] : status)
      if (form <= nf && verdict == Verdict::Fail) return false;
    return true;
  }
  bool passes_target() const { return passes(target); }
  bool any_fail() const {
    return std::any_of(status.begin(), status.end(), [](const auto& kv) { return kv.second == Verdict::Fail; });
  }

  bool operator==(const VerificationReport&) const = default;
};

// Forces FAIL(NFk) => FAIL(NFk+1) and makes sure each failing form is backed
// by at least one anomaly at or below it.
inline void clamp_monotone(VerificationReport& report) {
  for (const auto& item : report.anomalies)
    if (item.normal_form <= report.target) report.status[item.normal_form] = Verdict::Fail;
  bool failed = false;
  for (NormalForm nf : kAllNormalForms) {
    if (nf > report.target) break;
    auto& v = report.status[nf];
    if (failed) v = Verdict::Fail;
    if (v == Verdict::Fail && !failed) {
      failed = true;
      const bool backed = std::any_of(report.anomalies.begin(), report.anomalies.end(),
                                      [&](const AnomalyItem& a) { return a.normal_form <= nf; });
      if (!backed)
        report.anomalies.push_back({nf, default_kind(nf), "", {},
                                    "the verifier reported " + to_string(nf) + " as failing without naming the violation",
                                    "re-check every table against the " + to_string(nf) + " requirements"});
    }
  }
}

// ---------------------------------------------------------------------------
// Deterministic checks
// ---------------------------------------------------------------------------

struct RepeatingGroup {
  std::string base;
  std::vector<std::string> members;
};

// Columns named <base><sep><index> (sep "" or "_", index 1..9) sharing base
// and type; groups of two or more.
inline std::vector<RepeatingGroup> repeating_groups(const Table& table) {
  static const std::regex pattern("^(.*[A-Za-z])_?([1-9])$");
  struct Key {
    std::string base;
    std::string type;
  };
  std::vector<std::pair<Key, std::vector<std::string>>> buckets;
  for (const auto& c : table.columns) {
    std::smatch m;
    if (!std::regex_match(c.name, m, pattern)) continue;
    const std::string base = m[1].str();
    const std::string type = c.data_type.to_sql();
    auto it = std::find_if(buckets.begin(), buckets.end(), [&](const auto& b) {
      return iequals(b.first.base, base) && b.first.type == type;
    });
    if (it == buckets.end())
      buckets.push_back({{base, type}, {c.name}});
    else
      it->second.push_back(c.name);
  }
  std::vector<RepeatingGroup> out;
  for (auto& [key, members] : buckets)
    if (members.size() >= 2) out.push_back({key.base, members});
  return out;
}

inline std::vector<AnomalyItem> check_1nf(const Schema& schema) {
  std::vector<AnomalyItem> items;
  for (const auto& t : schema.tables) {
    for (const auto& c : t.columns) {
      if (!c.is_multivalued()) continue;
      items.push_back({NormalForm::NF1, AnomalyKind::NonAtomic, t.name, {c.name},
                       "column " + c.name + " holds a list of values instead of one atomic value",
                       "move " + c.name + " into a child table keyed by the parent key plus " + c.name});
    }
    for (const auto& g : repeating_groups(t)) {
      items.push_back({NormalForm::NF1, AnomalyKind::RepeatingGroup, t.name, g.members,
                       "columns " + join(g.members, ", ") + " repeat the same attribute " + g.base,
                       "replace them with a child table holding one " + g.base + " per row"});
    }
    if (!t.has_primary_key()) {
      const auto fds = table_fds(schema, t);
      std::vector<std::string> suggestion;
      if (t.columns.size() <= kMaxTableAttributes) suggestion = candidate_keys(t, fds).front().to_vector();
      items.push_back({NormalForm::NF1, AnomalyKind::MissingPk, t.name, suggestion,
                       "table " + t.name + " declares no primary key",
                       suggestion.empty() ? "declare a primary key"
                                          : "declare PRIMARY KEY (" + join(suggestion, ", ") + ")"});
    }
  }
  return items;
}

namespace detail {

inline AnomalyItem violation_item(const DependencyViolation& v) {
  auto cols = v.determinant.to_vector();
  cols.push_back(v.dependent);
  const std::string det = join(v.determinant.to_vector(), ", ");
  AnomalyItem item;
  item.table = v.table;
  item.columns = cols;
  item.suggested_action = "split (" + join(cols, ", ") + ") into a table keyed by (" + det + ")";
  if (v.kind == DependencyViolation::Kind::Partial) {
    item.normal_form = NormalForm::NF2;
    item.kind = AnomalyKind::Partial;
    item.explanation = v.dependent + " depends on (" + det + "), a proper subset of the key (" +
                       join(v.witness_key.to_vector(), ", ") + ")";
  } else {
    item.normal_form = NormalForm::NF3;
    item.kind = AnomalyKind::Transitive;
    item.explanation = v.dependent + " depends on (" + det + "), which is not a key";
  }
  return item;
}

}  // namespace detail

inline std::vector<AnomalyItem> check_2nf(const Schema& schema) {
  std::vector<AnomalyItem> items;
  for (const auto& t : schema.tables)
    for (const auto& v : partial_dependencies(t, table_fds(schema, t))) items.push_back(detail::violation_item(v));
  return items;
}

inline std::vector<AnomalyItem> check_3nf(const Schema& schema) {
  std::vector<AnomalyItem> items;
  for (const auto& t : schema.tables)
    for (const auto& v : transitive_dependencies(t, table_fds(schema, t))) items.push_back(detail::violation_item(v));
  return items;
}

// Every check from NF1 up to the target runs so the feedback lists all
// anomalies; the verdict fails at the first violated form and above.
inline VerificationReport verify_deterministic(const Schema& schema, NormalForm target) {
  require_valid(schema);
  VerificationReport report;
  report.target = target;
  report.backend = VerifierKind::Deterministic;
  for (NormalForm nf : kAllNormalForms) {
    if (nf > target) break;
    std::vector<AnomalyItem> found = nf == NormalForm::NF1   ? check_1nf(schema)
                                     : nf == NormalForm::NF2 ? check_2nf(schema)
                                                             : check_3nf(schema);
    report.status[nf] = found.empty() ? Verdict::Pass : Verdict::Fail;
    report.anomalies.insert(report.anomalies.end(), found.begin(), found.end());
  }
  clamp_monotone(report);
  return report;
}

// ---------------------------------------------------------------------------
// Feedback
// ---------------------------------------------------------------------------

inline std::vector<AnomalyItem> ordered_anomalies(std::vector<AnomalyItem> items) {
  std::stable_sort(items.begin(), items.end(), [](const AnomalyItem& a, const AnomalyItem& b) {
    if (a.normal_form != b.normal_form) return a.normal_form < b.normal_form;
    if (int c = icompare(a.table, b.table); c != 0) return c < 0;
    return icompare(a.columns, b.columns) < 0;
  });
  return items;
}

inline std::string render_feedback(const VerificationReport& report) {
  if (!report.any_fail()) throw InvalidArgument("render_feedback needs a report with at least one FAIL");
  std::ostringstream out;
  int n = 0;
  for (const auto& a : ordered_anomalies(report.anomalies)) {
    out << ++n << ". [" << to_string(a.normal_form) << " " << to_string(a.kind) << "] table "
        << (a.table.empty() ? "(unspecified)" : a.table) << " (" << join(a.columns, ", ") << "): " << a.explanation
        << ". Action: " << a.suggested_action << ".\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Verdict block wire format
//
//   NF1: PASS|FAIL
//   NF2: PASS|FAIL
//   NF3: PASS|FAIL
//   ANOMALY: <NF> [<KIND>] | <table> | <col, col> | <explanation> | <action>
// ---------------------------------------------------------------------------

class VerdictParseError : public Error {
 public:
  using Error::Error;
};

inline VerificationReport parse_verdict_block(std::string_view reply, NormalForm target) {
  static const std::regex verdict_re(R"(^[\s*#>-]*(?:NF\s*([123])|([123])\s*NF)[\s*]*:[\s*]*(PASS|FAIL)\b)",
                                     std::regex::icase);
  static const std::regex anomaly_re(R"(^\W*ANOMALY\s*:\s*(.*)$)", std::regex::icase);
  VerificationReport report;
  report.target = target;
  report.backend = VerifierKind::Llm;

  std::istringstream in{std::string(reply)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_search(line, m, anomaly_re)) {
      std::vector<std::string> fields;
      std::string rest = m[1].str();
      std::size_t start = 0;
      while (true) {
        auto bar = rest.find('|', start);
        std::string f = rest.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
        f.erase(0, f.find_first_not_of(" \t"));
        f.erase(f.find_last_not_of(" \t") + 1);
        fields.push_back(f);
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
      AnomalyItem item;
      std::istringstream head(fields[0]);
      std::string nf_tok, kind_tok;
      head >> nf_tok >> kind_tok;
      // A kind that contradicts the stated form is dropped; a lone kind implies the form.
      const auto kind = anomaly_kind_from_string(kind_tok);
      const NormalForm nf = normal_form_from_string(nf_tok).value_or(kind ? normal_form_of(*kind) : NormalForm::NF1);
      item.normal_form = nf;
      item.kind = kind && normal_form_of(*kind) == nf ? *kind : default_kind(nf);
      if (fields.size() > 1) item.table = fields[1];
      if (fields.size() > 2) {
        std::istringstream cols(fields[2]);
        std::string col;
        while (std::getline(cols, col, ',')) {
          col.erase(0, col.find_first_not_of(" \t()"));
          col.erase(col.find_last_not_of(" \t()") + 1);
          if (!col.empty()) item.columns.push_back(col);
        }
      }
      if (fields.size() > 3) item.explanation = fields[3];
      if (fields.size() > 4) item.suggested_action = fields[4];
      report.anomalies.push_back(std::move(item));
      continue;
    }
    if (std::regex_search(line, m, verdict_re)) {
      const auto nf = static_cast<NormalForm>(std::stoi(m[1].matched ? m[1].str() : m[2].str()));
      if (nf > target) continue;
      report.status[nf] = iequals(m[3].str(), "PASS") ? Verdict::Pass : Verdict::Fail;
    }
  }
  for (NormalForm nf : kAllNormalForms) {
    if (nf > target) break;
    if (!report.status.count(nf))
      throw VerdictParseError("reply has no verdict line for " + to_string(nf) + " (expected \"" + to_string(nf) +
                              ": PASS\" or \"" + to_string(nf) + ": FAIL\")");
  }
  clamp_monotone(report);
  return report;
}

inline std::string render_verdict_block(const VerificationReport& report) {
  std::ostringstream out;
  for (const auto& [nf, v] : report.status) out << to_string(nf) << ": " << to_string(v) << "\n";
  for (const auto& a : ordered_anomalies(report.anomalies))
    out << "ANOMALY: " << to_string(a.normal_form) << " " << to_string(a.kind) << " | " << a.table << " | "
        << join(a.columns, ", ") << " | " << a.explanation << " | " << a.suggested_action << "\n";
  return out.str();
}

// Human-readable report for the CLI.
inline std::string render_report_text(const VerificationReport& report) {
  std::ostringstream out;
  out << "backend: " << to_string(report.backend) << "\n";
  for (const auto& [nf, v] : report.status) out << to_string(nf) << ": " << to_string(v) << "\n";
  if (report.any_fail()) out << "\n" << render_feedback(report);
  return out.str();
}

}  // namespace normloop
