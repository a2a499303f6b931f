#pragma once

// JSON interchange for schemas. Field names mirror the model one-for-one and
// keys are emitted in declaration order so dumps are byte-stable.

#include <json.hpp>
#include <string>

#include "normloop/ddl.hpp"
#include "normloop/schema.hpp"
#include "normloop/verifier.hpp"

namespace normloop {

using Json = nlohmann::ordered_json;

inline Json column_to_json(const Column& c) {
  Json anns = Json::array();
  for (const auto& a : c.annotations) {
    Json j;
    j["kind"] = a.kind == ColumnAnnotation::Kind::Multivalued ? "MULTIVALUED" : "DERIVED_FROM";
    if (a.kind == ColumnAnnotation::Kind::DerivedFrom) j["attrs"] = a.attrs;
    anns.push_back(std::move(j));
  }
  Json j;
  j["name"] = c.name;
  j["data_type"] = c.data_type.to_sql();
  j["nullable"] = c.nullable;
  j["annotations"] = std::move(anns);
  return j;
}

inline Json fd_to_json(const FunctionalDependency& fd) {
  Json j;
  j["lhs"] = fd.lhs;
  j["rhs"] = fd.rhs;
  j["scope"] = fd.scope.empty() ? Json(nullptr) : Json(fd.scope);
  return j;
}

inline Json to_json(const Schema& schema) {
  Json tables = Json::array();
  for (const auto& t : schema.tables) {
    Json cols = Json::array();
    for (const auto& c : t.columns) cols.push_back(column_to_json(c));
    Json fks = Json::array();
    for (const auto& fk : t.foreign_keys) {
      Json f;
      f["columns"] = fk.columns;
      f["referenced_table"] = fk.referenced_table;
      f["referenced_columns"] = fk.referenced_columns;
      fks.push_back(std::move(f));
    }
    Json jt;
    jt["name"] = t.name;
    jt["columns"] = std::move(cols);
    jt["primary_key"] = t.has_primary_key() ? Json(t.primary_key) : Json(nullptr);
    jt["foreign_keys"] = std::move(fks);
    tables.push_back(std::move(jt));
  }
  Json fds = Json::array();
  for (const auto& fd : schema.fds) fds.push_back(fd_to_json(fd));
  Json j;
  j["name"] = schema.name;
  j["tables"] = std::move(tables);
  j["fds"] = std::move(fds);
  return j;
}

// Data types go through the DDL parser so both formats share one vocabulary.
inline DataType data_type_from_string(const std::string& spelled) {
  const Schema probe = parse_ddl("CREATE TABLE probe (c " + spelled + ");");
  return probe.tables.front().columns.front().data_type;
}

inline FunctionalDependency fd_from_json(const Json& j) {
  FunctionalDependency fd;
  fd.lhs = j.at("lhs").get<std::vector<std::string>>();
  fd.rhs = j.at("rhs").get<std::vector<std::string>>();
  if (j.contains("scope") && !j.at("scope").is_null()) fd.scope = j.at("scope").get<std::string>();
  return fd;
}

// Throws InvalidArgument on shape errors and SchemaInvalid on model errors.
inline Schema schema_from_json(const Json& j) {
  try {
    Schema s;
    s.name = j.value("name", std::string{});
    for (const auto& jt : j.at("tables")) {
      Table t;
      t.name = jt.at("name").get<std::string>();
      for (const auto& jc : jt.at("columns")) {
        Column c;
        c.name = jc.at("name").get<std::string>();
        c.data_type = data_type_from_string(jc.at("data_type").get<std::string>());
        c.nullable = jc.value("nullable", true);
        if (jc.contains("annotations")) {
          for (const auto& ja : jc.at("annotations")) {
            const auto kind = ja.at("kind").get<std::string>();
            if (kind == "MULTIVALUED")
              c.annotations.push_back(ColumnAnnotation::multivalued());
            else if (kind == "DERIVED_FROM")
              c.annotations.push_back(ColumnAnnotation::derived_from(ja.at("attrs").get<std::vector<std::string>>()));
            else
              throw InvalidArgument("unknown annotation kind \"" + kind + "\"");
          }
        }
        t.columns.push_back(std::move(c));
      }
      if (jt.contains("primary_key") && !jt.at("primary_key").is_null())
        t.primary_key = jt.at("primary_key").get<std::vector<std::string>>();
      if (jt.contains("foreign_keys")) {
        for (const auto& jf : jt.at("foreign_keys"))
          t.foreign_keys.push_back({jf.at("columns").get<std::vector<std::string>>(),
                                    jf.at("referenced_table").get<std::string>(),
                                    jf.at("referenced_columns").get<std::vector<std::string>>()});
      }
      s.tables.push_back(std::move(t));
    }
    if (j.contains("fds"))
      for (const auto& jf : j.at("fds")) s.fds.push_back(fd_from_json(jf));
    require_valid(s);
    return s;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed schema JSON: ") + e.what());
  } catch (const DdlParseError& e) {
    throw InvalidArgument(std::string("malformed data type in schema JSON: ") + e.what());
  }
}

inline Json anomaly_to_json(const AnomalyItem& a) {
  Json j;
  j["normal_form"] = to_string(a.normal_form);
  j["kind"] = to_string(a.kind);
  j["table"] = a.table;
  j["columns"] = a.columns;
  j["explanation"] = a.explanation;
  j["suggested_action"] = a.suggested_action;
  return j;
}

inline Json to_json(const VerificationReport& r) {
  Json status = Json::object();
  for (const auto& [nf, v] : r.status) status[to_string(nf)] = to_string(v);
  Json anomalies = Json::array();
  for (const auto& a : r.anomalies) anomalies.push_back(anomaly_to_json(a));
  Json j;
  j["target"] = to_string(r.target);
  j["status"] = std::move(status);
  j["anomalies"] = std::move(anomalies);
  j["backend"] = to_string(r.backend);
  j["prompt"] = r.prompt ? Json(*r.prompt) : Json(nullptr);
  j["raw_reply"] = r.raw_reply ? Json(*r.raw_reply) : Json(nullptr);
  return j;
}

}  // namespace normloop
