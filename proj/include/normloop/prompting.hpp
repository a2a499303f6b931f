#pragma once

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "normloop/ddl.hpp"
#include "normloop/schema.hpp"

namespace normloop {

enum class PromptRole { Generation, Verification };
enum class ShotMode { Zero, One, Few };

inline std::string to_string(ShotMode m) {
  switch (m) {
    case ShotMode::Zero: return "ZERO";
    case ShotMode::One: return "ONE";
    case ShotMode::Few: return "FEW";
  }
  return "ZERO";
}

inline std::optional<ShotMode> shot_mode_from_string(std::string_view s) {
  const std::string l = to_lower(s);
  if (l == "0" || l == "zero") return ShotMode::Zero;
  if (l == "1" || l == "one") return ShotMode::One;
  if (l == "few" || l == "3") return ShotMode::Few;
  return std::nullopt;
}

struct PromptTemplate {
  PromptRole role = PromptRole::Generation;
  ShotMode shot_mode = ShotMode::Zero;
  std::string body;  // placeholders: {schema} {feedback} {target_nf}
};

inline constexpr std::string_view kFeedbackHeader = "PREVIOUS VERIFICATION FEEDBACK:";
inline constexpr std::string_view kExampleMarker = "### Example";

namespace prompt_text {

inline constexpr std::string_view kRequirements =
    "1NF: atomic columns, no repeating groups (phone1, phone2), a PRIMARY KEY in every table.\n"
    "2NF: no non-prime attribute depends on a proper subset of a candidate key.\n"
    "3NF: for every nontrivial X -> A, X is a superkey or A is prime.\n";

inline constexpr std::string_view kNotation =
    "\"-- @fd t: a -> b\" is a functional dependency in table t; \"-- @multivalued t.c\" marks a list-valued "
    "column.\n";

inline constexpr std::string_view kGenerationTask =
    "You normalize relational schemas. Normalize the schema below to {target_nf}.\n";

inline constexpr std::string_view kGenerationRules =
    "Split tables to remove every violation. Keep every attribute, link split tables with FOREIGN KEY clauses "
    "and keep the \"-- @fd\" lines that still hold.\n";

inline constexpr std::string_view kGenerationOutput =
    "Reply with the complete schema in one ```sql block of CREATE TABLE statements.\n";

inline constexpr std::string_view kVerificationTask =
    "You verify relational schema normalization. Check the schema below against every normal form up to "
    "{target_nf}.\n";

inline constexpr std::string_view kVerificationOutput =
    "Reply with one verdict line per normal form up to {target_nf}:\n"
    "NF1: PASS or FAIL\n"
    "NF2: PASS or FAIL\n"
    "NF3: PASS or FAIL\n"
    "A failure at one form fails every higher form. Then add one line per violation:\n"
    "ANOMALY: <NF> <KIND> | <table> | <columns> | <explanation> | <suggested action>\n"
    "KIND is NON_ATOMIC, REPEATING_GROUP, MISSING_PK, PARTIAL or TRANSITIVE.\n";

// One example covering all three forms.
inline constexpr std::string_view kCombinedExample =
    "### Example\n"
    "Input:\n"
    "CREATE TABLE shipment (ship_id INT, box_id INT, carrier_id INT, carrier_name VARCHAR(40), weight1 INT, "
    "weight2 INT, box_label VARCHAR(20));\n"
    "-- @fd shipment: box_id -> box_label\n"
    "-- @fd shipment: carrier_id -> carrier_name\n"
    "-- @fd shipment: ship_id, box_id -> carrier_id, weight1, weight2\n"
    "Violations: no primary key and repeating group weight1, weight2 (1NF); box_label depends on box_id, part "
    "of the key (ship_id, box_id) (2NF); carrier_name depends on carrier_id, which is not a key (3NF).\n"
    "Fix:\n"
    "CREATE TABLE shipment (ship_id INT, box_id INT, carrier_id INT, PRIMARY KEY (ship_id, box_id), "
    "FOREIGN KEY (box_id) REFERENCES box (box_id), FOREIGN KEY (carrier_id) REFERENCES carrier (carrier_id));\n"
    "CREATE TABLE shipment_weight (ship_id INT, box_id INT, seq INT, weight INT, PRIMARY KEY (ship_id, box_id, "
    "seq));\n"
    "CREATE TABLE box (box_id INT, box_label VARCHAR(20), PRIMARY KEY (box_id));\n"
    "CREATE TABLE carrier (carrier_id INT, carrier_name VARCHAR(40), PRIMARY KEY (carrier_id));\n";

inline constexpr std::string_view kExample1nf =
    "### Example 1NF\n"
    "Input:\n"
    "CREATE TABLE member (member_id INT, name VARCHAR(40), phone1 VARCHAR(20), phone2 VARCHAR(20), "
    "emails TEXT);\n"
    "-- @multivalued member.emails\n"
    "Violations: no primary key; phone1, phone2 form a repeating group; emails is not atomic.\n"
    "Fix:\n"
    "CREATE TABLE member (member_id INT, name VARCHAR(40), PRIMARY KEY (member_id));\n"
    "CREATE TABLE member_phone (member_id INT, seq INT, phone VARCHAR(20), PRIMARY KEY (member_id, seq), "
    "FOREIGN KEY (member_id) REFERENCES member (member_id));\n"
    "CREATE TABLE member_emails (member_id INT, emails TEXT, PRIMARY KEY (member_id, emails), "
    "FOREIGN KEY (member_id) REFERENCES member (member_id));\n";

inline constexpr std::string_view kExample2nf =
    "### Example 2NF\n"
    "Input:\n"
    "CREATE TABLE loan (reader_id INT, book_id INT, due DATE, title VARCHAR(80), PRIMARY KEY (reader_id, "
    "book_id));\n"
    "-- @fd loan: book_id -> title\n"
    "Violation: title depends on book_id, a proper subset of the key (reader_id, book_id).\n"
    "Fix:\n"
    "CREATE TABLE loan (reader_id INT, book_id INT, due DATE, PRIMARY KEY (reader_id, book_id), "
    "FOREIGN KEY (book_id) REFERENCES book (book_id));\n"
    "CREATE TABLE book (book_id INT, title VARCHAR(80), PRIMARY KEY (book_id));\n";

inline constexpr std::string_view kExample3nf =
    "### Example 3NF\n"
    "Input:\n"
    "CREATE TABLE staff (staff_id INT, site_id INT, site_city VARCHAR(40), PRIMARY KEY (staff_id));\n"
    "-- @fd staff: site_id -> site_city\n"
    "Violation: site_city depends on site_id, which is not a key.\n"
    "Fix:\n"
    "CREATE TABLE staff (staff_id INT, site_id INT, PRIMARY KEY (staff_id), "
    "FOREIGN KEY (site_id) REFERENCES site (site_id));\n"
    "CREATE TABLE site (site_id INT, site_city VARCHAR(40), PRIMARY KEY (site_id));\n";

}  // namespace prompt_text

inline PromptTemplate default_template(PromptRole role, ShotMode mode) {
  std::string body;
  if (role == PromptRole::Generation) {
    body += prompt_text::kGenerationTask;
    body += prompt_text::kRequirements;
  } else {
    body += prompt_text::kVerificationTask;
    body += prompt_text::kRequirements;
  }
  body += prompt_text::kNotation;
  if (mode == ShotMode::One) {
    body += "\n";
    body += prompt_text::kCombinedExample;
  } else if (mode == ShotMode::Few) {
    body += "\n";
    body += prompt_text::kExample1nf;
    body += "\n";
    body += prompt_text::kExample2nf;
    body += "\n";
    body += prompt_text::kExample3nf;
  }
  if (role == PromptRole::Generation) body += prompt_text::kGenerationRules;
  body += "{feedback}";
  body += "\nSchema:\n```sql\n{schema}```\n";
  body += role == PromptRole::Generation ? prompt_text::kGenerationOutput : prompt_text::kVerificationOutput;
  return {role, mode, std::move(body)};
}

inline PromptTemplate load_template(const std::string& path, PromptRole role, ShotMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read prompt template " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return {role, mode, ss.str()};
}

inline std::size_t count_example_blocks(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    if (text.substr(pos, end - pos).starts_with(kExampleMarker)) ++n;
    pos = end + 1;
  }
  return n;
}

// Substitutes {schema}, {feedback} and {target_nf}; any other {name} in the
// template is rejected.
inline std::string build_prompt(const PromptTemplate& tmpl, const Schema& schema,
                                const std::optional<std::string>& feedback, NormalForm target) {
  std::string feedback_block;
  if (feedback) {
    feedback_block = "\n" + std::string(kFeedbackHeader) + "\n" + *feedback;
    if (!feedback_block.ends_with("\n")) feedback_block += "\n";
    feedback_block += "Resolve every item listed above.\n";
  }
  std::string out;
  const std::string& body = tmpl.body;
  for (std::size_t i = 0; i < body.size();) {
    if (body[i] == '{') {
      const std::size_t close = body.find('}', i);
      const std::string name = close == std::string::npos ? "" : body.substr(i + 1, close - i - 1);
      const bool ident = !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::islower(c) || c == '_';
      });
      if (ident) {
        if (name == "schema") out += emit_ddl(schema);
        else if (name == "feedback") out += feedback_block;
        else if (name == "target_nf") out += to_string(target);
        else throw InvalidArgument("unresolved placeholder {" + name + "} in prompt template");
        i = close + 1;
        continue;
      }
    }
    out += body[i++];
  }
  return out;
}

// ceil(chars / 4) after collapsing whitespace runs to one space.
inline std::size_t estimate_tokens(std::string_view text) {
  std::size_t chars = 0;
  bool in_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) ++chars;
      in_space = true;
    } else {
      ++chars;
      in_space = false;
    }
  }
  return (chars + 3) / 4;
}

}  // namespace normloop
