#pragma once

// SQL-DDL subset used for all schema I/O:
//
//   CREATE TABLE [IF NOT EXISTS] name (
//     col TYPE [(n[, s])] [NOT NULL | NULL] [PRIMARY KEY] [REFERENCES t (c)],
//     ...
//     [CONSTRAINT name] PRIMARY KEY (cols),
//     [CONSTRAINT name] FOREIGN KEY (cols) REFERENCES t (cols)
//   );
//
// Comment directives carry what SQL cannot express:
//
//   -- @schema <name>
//   -- @fd <table>: a, b -> c, d        (scoped to one table)
//   -- @fd t.a -> u.b                   (global)
//   -- @multivalued <table>.<column>
//   -- @derived <table>.<column>: a, b

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "normloop/schema.hpp"

namespace normloop {

struct ParseError {
  int line = 1;
  int column = 1;
  std::string message;
  std::string expected;

  std::string to_string() const {
    std::string s = "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
    if (!expected.empty()) s += " (expected " + expected + ")";
    return s;
  }
};

class DdlParseError : public Error {
 public:
  explicit DdlParseError(ParseError e) : Error(e.to_string()), error_(std::move(e)) {}
  const ParseError& error() const noexcept { return error_; }

 private:
  ParseError error_;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

struct DdlDirective {
  int line = 0;
  std::string text;  // directive body after "-- "
};

struct DdlDocument {
  std::string source_text;
  Schema schema;
  std::vector<DdlDirective> annotations;
  std::vector<std::string> warnings;
};

namespace detail {

enum class Tok { Ident, Number, LParen, RParen, Comma, Semicolon, Dot, Directive, End, Other };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (c == '-' && peek(1) == '-') {
        std::size_t end = src_.find('\n', pos_);
        if (end == std::string_view::npos) end = src_.size();
        std::string body(src_.substr(pos_ + 2, end - pos_ - 2));
        auto first = body.find_first_not_of(" \t");
        if (first != std::string::npos && body[first] == '@') {
          t.kind = Tok::Directive;
          while (!body.empty() && (body.back() == '\r' || body.back() == ' ' || body.back() == '\t')) body.pop_back();
          t.text = body.substr(first);
          out.push_back(t);
        }
        advance(end - pos_);
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        std::size_t end = src_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) throw DdlParseError({line_, col_, "unterminated block comment", "*/"});
        advance(end + 2 - pos_);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t n = 0;
        while (pos_ + n < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_ + n])) || src_[pos_ + n] == '_'))
          ++n;
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(pos_, n));
        advance(n);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t n = 0;
        while (pos_ + n < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + n]))) ++n;
        t.kind = Tok::Number;
        t.text = std::string(src_.substr(pos_, n));
        advance(n);
      } else {
        t.text = std::string(1, c);
        switch (c) {
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ',': t.kind = Tok::Comma; break;
          case ';': t.kind = Tok::Semicolon; break;
          case '.': t.kind = Tok::Dot; break;
          default: t.kind = Tok::Other; break;
        }
        advance(1);
      }
      out.push_back(t);
    }
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance(1);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Directive: return "directive";
    default: return "\"" + t.text + "\"";
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(Lexer(src).run()) {}

  DdlDocument run() {
    DdlDocument doc;
    std::vector<Token> directives;
    while (true) {
      const Token& t = cur();
      if (t.kind == Tok::End) break;
      if (t.kind == Tok::Directive) {
        directives.push_back(t);
        doc.annotations.push_back({t.line, t.text});
        ++i_;
        continue;
      }
      if (t.kind == Tok::Semicolon) {
        ++i_;
        continue;
      }
      if (is_kw(t, "CREATE")) {
        doc.schema.tables.push_back(create_table(doc.warnings));
        for (auto& d : take_pending()) {
          doc.annotations.push_back({d.line, d.text});
          directives.push_back(std::move(d));
        }
        continue;
      }
      fail(t, "unexpected " + describe(t), "CREATE TABLE");
    }
    for (const auto& d : directives) apply_directive(d, doc.schema, doc.warnings);
    return doc;
  }

 private:
  static bool is_kw(const Token& t, std::string_view kw) { return t.kind == Tok::Ident && iequals(t.text, kw); }

  [[noreturn]] static void fail(const Token& t, std::string message, std::string expected) {
    throw DdlParseError({t.line, t.column, std::move(message), std::move(expected)});
  }

  const Token& cur() const { return tokens_[i_]; }
  const Token& next_token(std::size_t k = 1) const { return tokens_[std::min(i_ + k, tokens_.size() - 1)]; }

  // Directives may appear between any two tokens; statements skip them.
  void skip_directives() {
    while (cur().kind == Tok::Directive) {
      pending_directives_.push_back(cur());
      ++i_;
    }
  }

  const Token& expect(Tok kind, std::string_view what) {
    skip_directives();
    const Token& t = cur();
    if (t.kind != kind) fail(t, "unexpected " + describe(t), std::string(what));
    ++i_;
    return t;
  }

  void expect_kw(std::string_view kw) {
    skip_directives();
    const Token& t = cur();
    if (!is_kw(t, kw)) fail(t, "unexpected " + describe(t), std::string(kw));
    ++i_;
  }

  bool accept_kw(std::string_view kw) {
    skip_directives();
    if (is_kw(cur(), kw)) {
      ++i_;
      return true;
    }
    return false;
  }

  std::string identifier(std::string_view what) { return expect(Tok::Ident, what).text; }

  std::vector<std::string> ident_list() {
    expect(Tok::LParen, "(");
    std::vector<std::string> out{identifier("column name")};
    while (true) {
      skip_directives();
      if (cur().kind == Tok::Comma) {
        ++i_;
        out.push_back(identifier("column name"));
        continue;
      }
      expect(Tok::RParen, ", or )");
      return out;
    }
  }

  Table create_table(std::vector<std::string>& warnings) {
    expect_kw("CREATE");
    expect_kw("TABLE");
    if (accept_kw("IF")) {
      expect_kw("NOT");
      expect_kw("EXISTS");
    }
    Table table;
    table.name = identifier("table name");
    expect(Tok::LParen, "(");
    while (true) {
      skip_directives();
      const Token& t = cur();
      if (is_kw(t, "CONSTRAINT")) {
        ++i_;
        identifier("constraint name");
      }
      skip_directives();
      if (is_kw(cur(), "PRIMARY")) {
        const Token& at = cur();
        ++i_;
        expect_kw("KEY");
        if (table.has_primary_key()) fail(at, "second PRIMARY KEY clause", "one PRIMARY KEY per table");
        table.primary_key = ident_list();
      } else if (is_kw(cur(), "FOREIGN")) {
        ++i_;
        expect_kw("KEY");
        ForeignKey fk;
        fk.columns = ident_list();
        expect_kw("REFERENCES");
        fk.referenced_table = identifier("referenced table name");
        fk.referenced_columns = ident_list();
        table.foreign_keys.push_back(std::move(fk));
      } else {
        column_definition(table, warnings);
      }
      skip_directives();
      if (cur().kind == Tok::Comma) {
        ++i_;
        continue;
      }
      expect(Tok::RParen, ", or )");
      break;
    }
    skip_directives();
    if (cur().kind == Tok::Semicolon) ++i_;
    else if (cur().kind != Tok::End && !is_kw(cur(), "CREATE")) fail(cur(), "unexpected " + describe(cur()), ";");
    return table;
  }

  void column_definition(Table& table, std::vector<std::string>& warnings) {
    Column col;
    col.name = identifier("column name or table constraint");
    col.data_type = data_type(warnings, table.name + "." + col.name);
    while (true) {
      skip_directives();
      if (accept_kw("NOT")) {
        expect_kw("NULL");
        col.nullable = false;
      } else if (accept_kw("NULL")) {
        col.nullable = true;
      } else if (is_kw(cur(), "PRIMARY")) {
        const Token& at = cur();
        ++i_;
        expect_kw("KEY");
        if (table.has_primary_key()) fail(at, "second PRIMARY KEY clause", "one PRIMARY KEY per table");
        table.primary_key = {col.name};
      } else if (accept_kw("REFERENCES")) {
        ForeignKey fk;
        fk.columns = {col.name};
        fk.referenced_table = identifier("referenced table name");
        fk.referenced_columns = ident_list();
        table.foreign_keys.push_back(std::move(fk));
      } else {
        break;
      }
    }
    table.columns.push_back(std::move(col));
  }

  int number() {
    const Token& t = expect(Tok::Number, "number");
    try {
      return std::stoi(t.text);
    } catch (const std::exception&) {
      fail(t, "number out of range", "integer");
    }
  }

  DataType data_type(std::vector<std::string>& warnings, const std::string& where) {
    skip_directives();
    const Token& name_tok = cur();
    const std::string name = identifier("data type");
    const std::string u = to_upper(name);
    std::vector<int> args;
    skip_directives();
    if (cur().kind == Tok::LParen) {
      ++i_;
      args.push_back(number());
      skip_directives();
      while (cur().kind == Tok::Comma) {
        ++i_;
        args.push_back(number());
        skip_directives();
      }
      expect(Tok::RParen, ")");
    }
    auto no_args = [&](DataType dt) {
      if (!args.empty()) fail(name_tok, u + " takes no parameters", u);
      return dt;
    };
    if (u == "INT" || u == "INTEGER") return no_args(DataType::integer());
    if (u == "BIGINT") return no_args(DataType::big_int());
    if (u == "TEXT") return no_args(DataType::text());
    if (u == "DATE") return no_args(DataType::date());
    if (u == "TIMESTAMP") return no_args(DataType::timestamp());
    if (u == "BOOLEAN" || u == "BOOL") return no_args(DataType::boolean());
    if (u == "VARCHAR") {
      if (args.size() != 1) fail(name_tok, "VARCHAR needs one length parameter", "VARCHAR(n)");
      return DataType::varchar(args[0]);
    }
    if (u == "DECIMAL" || u == "NUMERIC") {
      if (args.empty() || args.size() > 2) fail(name_tok, "DECIMAL needs (p) or (p, s)", "DECIMAL(p,s)");
      return DataType::decimal(args[0], args.size() == 2 ? args[1] : 0);
    }
    DataType dt = DataType::text();
    dt.verbatim = name;
    if (!args.empty()) {
      dt.verbatim += "(";
      for (std::size_t k = 0; k < args.size(); ++k) dt.verbatim += (k ? "," : "") + std::to_string(args[k]);
      dt.verbatim += ")";
    }
    warnings.push_back("unknown data type " + dt.verbatim + " for " + where + " kept verbatim as TEXT");
    return dt;
  }

  static std::vector<std::string> split_attrs(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      auto b = cur.find_first_not_of(" \t");
      auto e = cur.find_last_not_of(" \t");
      out.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
      cur.clear();
    };
    for (char c : s) {
      if (c == ',') flush();
      else cur += c;
    }
    flush();
    return out;
  }

  static bool valid_attr(std::string_view a) {
    if (a.empty()) return false;
    std::size_t dots = 0;
    bool start = true;
    for (char c : a) {
      if (c == '.') {
        if (start || ++dots > 1) return false;
        start = true;
        continue;
      }
      if (start ? !(std::isalpha(static_cast<unsigned char>(c)) || c == '_')
                : !(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        return false;
      start = false;
    }
    return !start;
  }

  void apply_directive(const Token& t, Schema& schema, std::vector<std::string>& warnings) {
    const std::string& body = t.text;  // starts with '@'
    const auto sp = body.find_first_of(" \t");
    const std::string keyword = to_lower(body.substr(1, sp == std::string::npos ? std::string::npos : sp - 1));
    std::string rest = sp == std::string::npos ? "" : body.substr(sp + 1);
    rest.erase(0, rest.find_first_not_of(" \t"));

    auto bad = [&](const std::string& msg, const std::string& expected) -> void {
      throw DdlParseError({t.line, t.column, msg, expected});
    };
    auto attr_list = [&](std::string_view s, const std::string& expected) {
      auto attrs = split_attrs(s);
      for (const auto& a : attrs)
        if (!valid_attr(a)) bad("malformed attribute \"" + a + "\" in @" + keyword, expected);
      return attrs;
    };
    auto table_column = [&](std::string_view s, const std::string& expected) {
      std::string tc(s);
      tc.erase(tc.find_last_not_of(" \t") + 1);
      const auto dot = tc.find('.');
      if (dot == std::string::npos || !valid_attr(tc)) bad("expected <table>.<column> in @" + keyword, expected);
      return std::pair{tc.substr(0, dot), tc.substr(dot + 1)};
    };

    if (keyword == "schema") {
      if (!valid_attr(rest) || rest.find('.') != std::string::npos) bad("malformed schema name", "-- @schema <name>");
      schema.name = rest;
    } else if (keyword == "fd") {
      const std::string expected = "-- @fd <table>: a, b -> c";
      const auto arrow = rest.find("->");
      if (arrow == std::string::npos) bad("dependency without \"->\"", expected);
      std::string left = rest.substr(0, arrow);
      std::string scope;
      if (const auto colon = left.find(':'); colon != std::string::npos) {
        scope = left.substr(0, colon);
        scope.erase(0, scope.find_first_not_of(" \t"));
        scope.erase(scope.find_last_not_of(" \t") + 1);
        if (!valid_attr(scope) || scope.find('.') != std::string::npos) bad("malformed FD scope", expected);
        left = left.substr(colon + 1);
      }
      FunctionalDependency fd;
      fd.lhs = attr_list(left, expected);
      fd.rhs = attr_list(std::string_view(rest).substr(arrow + 2), expected);
      fd.scope = scope;
      schema.fds.push_back(std::move(fd));
    } else if (keyword == "multivalued") {
      auto [tbl, col] = table_column(rest, "-- @multivalued <table>.<column>");
      Column* c = find_column(schema, tbl, col);
      if (!c) throw SchemaInvalid({{"directive at line " + std::to_string(t.line), "unresolved-annotation",
                                    "unresolved annotation target \"" + tbl + "." + col + "\""}});
      if (!c->is_multivalued()) c->annotations.push_back(ColumnAnnotation::multivalued());
    } else if (keyword == "derived") {
      const std::string expected = "-- @derived <table>.<column>: a, b";
      const auto colon = rest.find(':');
      if (colon == std::string::npos) bad("derived annotation without ':'", expected);
      auto [tbl, col] = table_column(std::string_view(rest).substr(0, colon), expected);
      Column* c = find_column(schema, tbl, col);
      if (!c) throw SchemaInvalid({{"directive at line " + std::to_string(t.line), "unresolved-annotation",
                                    "unresolved annotation target \"" + tbl + "." + col + "\""}});
      c->annotations.push_back(ColumnAnnotation::derived_from(attr_list(std::string_view(rest).substr(colon + 1), expected)));
    } else {
      warnings.push_back("line " + std::to_string(t.line) + ": unknown directive @" + keyword + " ignored");
    }
  }

  static Column* find_column(Schema& schema, std::string_view tbl, std::string_view col) {
    Table* t = schema.find_table(tbl);
    return t ? t->find_column(col) : nullptr;
  }

  // Directives met inside statements still apply.
  std::vector<Token> take_pending() { return std::exchange(pending_directives_, {}); }

  std::vector<Token> tokens_;
  std::size_t i_ = 0;
  std::vector<Token> pending_directives_;
};

}  // namespace detail

// Throws DdlParseError on malformed text and SchemaInvalid when the parsed
// schema breaks a model invariant.
inline DdlDocument parse_ddl_document(std::string_view text) {
  detail::Parser parser(text);
  DdlDocument doc = parser.run();
  doc.source_text = std::string(text);
  require_valid(doc.schema);
  return doc;
}

inline Schema parse_ddl(std::string_view text) { return parse_ddl_document(text).schema; }

inline std::string emit_ddl(const Schema& input) {
  const Schema schema = canonicalize(input);
  std::ostringstream out;
  if (!schema.name.empty()) out << "-- @schema " << schema.name << "\n";
  for (const auto& fd : schema.fds)
    if (fd.scope.empty()) out << "-- @fd " << join(fd.lhs, ", ") << " -> " << join(fd.rhs, ", ") << "\n";
  bool first = schema.name.empty() && std::none_of(schema.fds.begin(), schema.fds.end(),
                                                   [](const FunctionalDependency& fd) { return fd.scope.empty(); });
  for (const auto& t : schema.tables) {
    if (!first) out << "\n";
    first = false;
    out << "CREATE TABLE " << t.name << " (\n";
    std::vector<std::string> lines;
    for (const auto& c : t.columns) lines.push_back(c.name + " " + c.data_type.to_sql() + (c.nullable ? "" : " NOT NULL"));
    if (t.has_primary_key()) lines.push_back("PRIMARY KEY (" + join(t.primary_key, ", ") + ")");
    for (const auto& fk : t.foreign_keys)
      lines.push_back("FOREIGN KEY (" + join(fk.columns, ", ") + ") REFERENCES " + fk.referenced_table + " (" +
                      join(fk.referenced_columns, ", ") + ")");
    for (std::size_t i = 0; i < lines.size(); ++i) out << "  " << lines[i] << (i + 1 < lines.size() ? ",\n" : "\n");
    out << ");\n";
    for (const auto& c : t.columns) {
      for (const auto& a : c.annotations) {
        if (a.kind == ColumnAnnotation::Kind::Multivalued)
          out << "-- @multivalued " << t.name << "." << c.name << "\n";
        else
          out << "-- @derived " << t.name << "." << c.name << ": " << join(a.attrs, ", ") << "\n";
      }
    }
    for (const auto& fd : schema.fds)
      if (iequals(fd.scope, t.name))
        out << "-- @fd " << t.name << ": " << join(fd.lhs, ", ") << " -> " << join(fd.rhs, ", ") << "\n";
  }
  return out.str();
}

namespace detail {

inline std::string trim_left(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  return b == std::string_view::npos ? std::string{} : std::string(s.substr(b));
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

}  // namespace detail

// First fenced block, else the longest run of DDL-looking lines (statement
// bodies included), else ExtractionError.
inline std::string extract_schema_block(std::string_view reply) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(reply)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!detail::trim_left(lines[i]).starts_with("```")) continue;
    std::string body;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (detail::trim_left(lines[j]).starts_with("```")) break;
      body += lines[j] + "\n";
    }
    if (body.find_first_not_of(" \t\n") == std::string::npos) throw ExtractionError("the first fenced block is empty");
    return body;
  }

  std::size_t best_start = 0, best_len = 0;
  std::size_t run_start = 0, run_len = 0, run_content = 0;
  int depth = 0;
  bool open_statement = false;
  for (std::size_t i = 0; i <= lines.size(); ++i) {
    const bool at_end = i == lines.size();
    const std::string t = at_end ? std::string{} : detail::trim_left(lines[i]);
    const bool ddl_start = detail::starts_with_ci(t, "CREATE TABLE") || t.starts_with("--");
    const bool continues = run_len > 0 && (open_statement || t.empty());
    if (!at_end && (ddl_start || continues)) {
      if (run_len == 0) run_start = i;
      ++run_len;
      if (!t.empty()) run_content = run_len;
      if (!t.starts_with("--")) {
        for (char c : t) {
          if (c == '(') ++depth;
          if (c == ')') --depth;
        }
        if (detail::starts_with_ci(t, "CREATE TABLE")) open_statement = true;
        if (depth <= 0 && t.find(';') != std::string::npos) {
          open_statement = false;
          depth = 0;
        }
      }
      continue;
    }
    if (run_content > best_len) {
      best_start = run_start;
      best_len = run_content;
    }
    run_len = run_content = 0;
    depth = 0;
    open_statement = false;
  }
  if (best_len == 0) throw ExtractionError("the reply contains no fenced block and no CREATE TABLE statements");
  std::string body;
  for (std::size_t i = best_start; i < best_start + best_len; ++i) body += lines[i] + "\n";
  return body;
}

}  // namespace normloop
