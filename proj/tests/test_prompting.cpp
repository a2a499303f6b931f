#include <gtest/gtest.h>

#include "normloop/datasets.hpp"
#include "normloop/prompting.hpp"

using namespace normloop;

namespace {

Schema tiny() { return parse_ddl("CREATE TABLE a (x INT, y INT, PRIMARY KEY (x));"); }

// Independent count: collapse whitespace runs, then ceil(len / 4).
std::size_t reference_tokens(const std::string& text) {
  std::string collapsed;
  for (char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
    if (space && !collapsed.empty() && collapsed.back() == ' ') continue;
    collapsed += space ? ' ' : c;
  }
  return (collapsed.size() + 3) / 4;
}

}  // namespace

TEST(Tokens, CeilOfCollapsedLengthOverFour) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("abcd"), 1u);
  EXPECT_EQ(estimate_tokens("abcde"), 2u);
  EXPECT_EQ(estimate_tokens("ab  \n\n  cd"), 2u);  // "ab cd"
  for (const auto& d : bundled_datasets()) {
    const std::string text = emit_ddl(d.schema);
    EXPECT_EQ(estimate_tokens(text), reference_tokens(text)) << d.name;
  }
}

TEST(Templates, ExampleCountsPerShotMode) {
  for (PromptRole role : {PromptRole::Generation, PromptRole::Verification}) {
    EXPECT_EQ(count_example_blocks(default_template(role, ShotMode::Zero).body), 0u);
    EXPECT_EQ(count_example_blocks(default_template(role, ShotMode::One).body), 1u);
    EXPECT_EQ(count_example_blocks(default_template(role, ShotMode::Few).body), 3u);
  }
}

TEST(Templates, ShotModeNames) {
  EXPECT_EQ(shot_mode_from_string("0"), ShotMode::Zero);
  EXPECT_EQ(shot_mode_from_string("one"), ShotMode::One);
  EXPECT_EQ(shot_mode_from_string("few"), ShotMode::Few);
  EXPECT_FALSE(shot_mode_from_string("many").has_value());
}

TEST(BuildPrompt, SubstitutesPlaceholders) {
  const PromptTemplate t{PromptRole::Generation, ShotMode::Zero, "Target {target_nf}.\n{feedback}---\n{schema}"};
  const std::string plain = build_prompt(t, tiny(), std::nullopt, NormalForm::NF2);
  EXPECT_EQ(plain, "Target NF2.\n---\n" + emit_ddl(tiny()));
  const std::string with = build_prompt(t, tiny(), std::string("1. fix it"), NormalForm::NF3);
  EXPECT_EQ(with, "Target NF3.\n\nPREVIOUS VERIFICATION FEEDBACK:\n1. fix it\nResolve every item listed above.\n---\n" +
                      emit_ddl(tiny()));
}

TEST(BuildPrompt, LeavesNonPlaceholderBracesAlone) {
  const PromptTemplate t{PromptRole::Generation, ShotMode::Zero, "json {\"a\": 1} {X} {schema"};
  EXPECT_EQ(build_prompt(t, tiny(), std::nullopt, NormalForm::NF3), "json {\"a\": 1} {X} {schema");
}

TEST(BuildPrompt, RejectsUnknownPlaceholders) {
  const PromptTemplate t{PromptRole::Generation, ShotMode::Zero, "{schema} {colour}"};
  EXPECT_THROW(build_prompt(t, tiny(), std::nullopt, NormalForm::NF3), InvalidArgument);
}

TEST(BuildPrompt, DefaultTemplatesMentionTargetAndSchema) {
  for (PromptRole role : {PromptRole::Generation, PromptRole::Verification}) {
    const std::string p = build_prompt(default_template(role, ShotMode::Zero), tiny(), std::nullopt, NormalForm::NF3);
    EXPECT_NE(p.find("CREATE TABLE a"), std::string::npos);
    EXPECT_NE(p.find("NF3"), std::string::npos);
    EXPECT_EQ(p.find("{schema}"), std::string::npos);
  }
}

TEST(PromptCost, ZeroOneFewOrderingOnBundledDatasets) {
  for (const auto& d : bundled_datasets()) {
    for (PromptRole role : {PromptRole::Generation, PromptRole::Verification}) {
      auto cost = [&](ShotMode m) {
        return estimate_tokens(build_prompt(default_template(role, m), d.schema, std::nullopt, NormalForm::NF3));
      };
      EXPECT_LT(cost(ShotMode::Zero), cost(ShotMode::One)) << d.name;
      EXPECT_LT(cost(ShotMode::One), cost(ShotMode::Few)) << d.name;
    }
  }
}

TEST(PromptCost, AdvertisingZeroShotFitsBudget) {
  const auto d = *find_dataset("Advertising");
  const auto p = build_prompt(default_template(PromptRole::Generation, ShotMode::Zero), d.schema, std::nullopt,
                              NormalForm::NF3);
  EXPECT_LE(estimate_tokens(p), 600u);
}
