#include <gtest/gtest.h>

#include "normloop/ddl.hpp"
#include "normloop/normalizer.hpp"
#include "support/generators.hpp"

using namespace normloop;

namespace {

const char* kMessy = R"(CREATE TABLE contacts (
  person_id INT,
  tags TEXT,
  phone1 VARCHAR(20),
  phone2 VARCHAR(20),
  age INT
);
-- @multivalued contacts.tags
-- @fd contacts: person_id -> tags, phone1, phone2, age

CREATE TABLE enrolment (
  student_id INT,
  course_id INT,
  course_title VARCHAR(80),
  room VARCHAR(10),
  building VARCHAR(40),
  PRIMARY KEY (student_id, course_id),
  FOREIGN KEY (student_id) REFERENCES contacts (person_id)
);
-- @fd enrolment: course_id -> course_title
-- @fd enrolment: student_id, course_id -> room
-- @fd enrolment: room -> building
)";

std::set<std::string, ILess> column_names(const Schema& s) {
  std::set<std::string, ILess> out;
  for (const auto& t : s.tables)
    for (const auto& c : t.columns) out.insert(c.name);
  return out;
}

std::shared_ptr<ScriptedBackend> script(std::vector<std::string> replies) {
  std::vector<ScriptedBackend::Entry> entries;
  for (auto& r : replies) entries.push_back({"", std::move(r)});
  return std::make_shared<ScriptedBackend>(std::move(entries), false);
}

const char* kGoodReply = "Here it is:\n```sql\nCREATE TABLE a (x INT, y INT, PRIMARY KEY (x));\n```\n";

}  // namespace

TEST(DeterministicNormalize, FixesEveryKindOfAnomaly) {
  const Schema in = parse_ddl(kMessy);
  const Schema out = deterministic_normalize(in);
  const auto report = verify_deterministic(out, NormalForm::NF3);
  EXPECT_TRUE(report.passes_target()) << render_feedback(report);

  // The multivalued column and the phone group move to child tables.
  const Table* tags = out.find_table("contacts_tags");
  ASSERT_NE(tags, nullptr);
  EXPECT_EQ(tags->primary_key, (std::vector<std::string>{"person_id", "tags"}));
  const Table* phones = out.find_table("contacts_phone");
  ASSERT_NE(phones, nullptr);
  EXPECT_EQ(phones->primary_key, (std::vector<std::string>{"person_id", "seq"}));
  EXPECT_TRUE(phones->has_column("phone"));
  EXPECT_EQ(out.find_table("contacts")->primary_key, (std::vector<std::string>{"person_id"}));

  // enrolment splits along course_id -> course_title and room -> building.
  EXPECT_NE(out.find_table("enrolment_course_id"), nullptr);
  EXPECT_NE(out.find_table("enrolment_room"), nullptr);
  EXPECT_EQ(out.find_table("enrolment")->column_names(),
            (std::vector<std::string>{"student_id", "course_id", "room"}));

  auto cols = column_names(out);
  for (const char* c : {"person_id", "tags", "age", "student_id", "course_id", "course_title", "room", "building"})
    EXPECT_TRUE(cols.count(c)) << c;
}

TEST(DeterministicNormalize, KeepsForeignKeysResolvable) {
  const Schema out = deterministic_normalize(parse_ddl(kMessy));
  EXPECT_TRUE(validate_schema(out).empty());
  const Table* e = out.find_table("enrolment");
  ASSERT_NE(e, nullptr);
  const bool refs_contacts = std::any_of(e->foreign_keys.begin(), e->foreign_keys.end(), [](const ForeignKey& fk) {
    return fk.referenced_table == "contacts" && fk.columns == std::vector<std::string>{"student_id"};
  });
  EXPECT_TRUE(refs_contacts);
}

TEST(DeterministicNormalize, CleanSchemaIsUnchanged) {
  const Schema in = parse_ddl("CREATE TABLE a (x INT, y INT, PRIMARY KEY (x));\n-- @fd a: x -> y\n");
  // The FD is implied by the key, so only the tables are compared.
  EXPECT_EQ(deterministic_normalize(in).tables, canonicalize(in).tables);
}

TEST(DeterministicNormalize, SeededSchemasReach3nfKeepingColumns) {
  gen::Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const Schema in = gen::anomalous_schema(rng);
    const Schema out = deterministic_normalize(in);
    const auto report = verify_deterministic(out, NormalForm::NF3);
    ASSERT_TRUE(report.passes_target()) << emit_ddl(in) << "\n=>\n" << emit_ddl(out);
    // Every column survives, except repeating-group members, which fold into
    // their base column.
    const auto after = column_names(out);
    for (const auto& t : in.tables) {
      std::set<std::string, ILess> grouped;
      for (const auto& g : repeating_groups(t)) grouped.insert(g.members.begin(), g.members.end());
      for (const auto& c : t.columns) {
        if (grouped.count(c.name)) continue;
        EXPECT_TRUE(after.count(c.name)) << c.name << " lost in\n" << emit_ddl(out);
      }
    }
  }
}

TEST(DeterministicGenerator, IgnoresFeedbackAndCountsNoTokens) {
  DeterministicGenerator g;
  const auto out = g.generate({parse_ddl(kMessy), std::string("anything"), NormalForm::NF3, ShotMode::Few});
  EXPECT_EQ(out.schema, deterministic_normalize(parse_ddl(kMessy)));
  EXPECT_EQ(out.prompt_tokens_est, 0u);
  EXPECT_FALSE(out.raw_reply.has_value());
}

TEST(LlmGenerator, ParsesFencedReply) {
  auto backend = script({kGoodReply});
  LlmGenerator g(backend, {"m", 0.0, 100});
  const auto out = g.generate({parse_ddl(kMessy), std::nullopt, NormalForm::NF3, ShotMode::Zero});
  EXPECT_EQ(out.schema.tables.size(), 1u);
  EXPECT_EQ(out.raw_reply, std::string(kGoodReply));
  EXPECT_EQ(out.parse_retries_used, 0);
  ASSERT_EQ(out.prompts.size(), 1u);
  EXPECT_EQ(out.prompt_tokens_est, estimate_tokens(out.prompts[0]));
}

TEST(LlmGenerator, RepromptsOnUnusableReply) {
  auto backend = script({"I would rather not.", "```sql\nCREATE TABLE a (x INT, FOREIGN KEY (x) REFERENCES b (y));\n```",
                         kGoodReply});
  LlmGenerator g(backend, {"m", 0.0, 100});
  const auto out = g.generate({parse_ddl(kMessy), std::nullopt, NormalForm::NF3, ShotMode::Zero});
  EXPECT_EQ(out.parse_retries_used, 2);
  ASSERT_EQ(out.prompts.size(), 3u);
  EXPECT_NE(out.prompts[1].find("Your reply could not be used"), std::string::npos);
  EXPECT_NE(out.prompts[2].find("unresolved reference"), std::string::npos);
  EXPECT_EQ(backend->remaining(), 0u);
}

TEST(LlmGenerator, GivesUpAfterTwoRetries) {
  auto backend = script({"no", "still no", "never", kGoodReply});
  LlmGenerator g(backend, {"m", 0.0, 100});
  try {
    g.generate({parse_ddl(kMessy), std::nullopt, NormalForm::NF3, ShotMode::Zero});
    FAIL() << "expected GenerationFailed";
  } catch (const GenerationFailed& e) {
    EXPECT_EQ(e.parse_retries_used(), 2);
    EXPECT_GT(e.prompt_tokens_est(), 0u);
  }
  EXPECT_EQ(backend->remaining(), 1u);
}

TEST(LlmGenerator, TemplateOverrideIsUsed) {
  auto backend = script({kGoodReply});
  LlmGenerator g(backend, {"m", 0.0, 100}, std::string("Fix {schema} for {target_nf}."));
  const auto out = g.generate({parse_ddl("CREATE TABLE a (x INT);"), std::nullopt, NormalForm::NF2, ShotMode::Zero});
  EXPECT_EQ(out.prompts[0].rfind("Fix ", 0), 0u);
  EXPECT_NE(out.prompts[0].find("NF2"), std::string::npos);
}

TEST(LlmVerifier, RetriesUntilVerdictParses) {
  auto backend = script({"Looks fine to me!", "NF1: PASS\nNF2: FAIL\nNF3: FAIL\n"});
  LlmVerifier v(backend, {"m", 0.0, 100});
  const auto r = v.verify(parse_ddl(kMessy), NormalForm::NF3);
  EXPECT_EQ(r.backend, VerifierKind::Llm);
  EXPECT_EQ(r.status.at(NormalForm::NF2), Verdict::Fail);
  EXPECT_EQ(r.raw_reply, std::string("NF1: PASS\nNF2: FAIL\nNF3: FAIL\n"));
  ASSERT_TRUE(r.prompt.has_value());
  EXPECT_NE(r.prompt->find("CREATE TABLE contacts"), std::string::npos);
}

TEST(LlmVerifier, UnparseableRepliesBecomeBackendErrors) {
  auto backend = script({"?", "??", "???"});
  LlmVerifier v(backend, {"m", 0.0, 100});
  EXPECT_THROW(v.verify(parse_ddl(kMessy), NormalForm::NF3), VerifierReplyError);
}
