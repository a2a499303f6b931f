#include <gtest/gtest.h>

#include "support/properties.hpp"

// Larger seeded sweeps than the per-module tests, on different seeds.

TEST(Properties, ViolationsMatchBruteForceOn600Relations) {
  const auto t = props::oracle_equivalence(1001, 600);
  EXPECT_TRUE(t.ok()) << t.failures << " failures; " << t.first_failure;
}

TEST(Properties, SynthesisIsValidOn600Relations) {
  const auto t = props::synthesis_validity(2002, 600);
  EXPECT_TRUE(t.ok()) << t.failures << " failures; " << t.first_failure;
}

TEST(Properties, VerificationIsMonotoneOn1200Inputs) {
  const auto t = props::monotone_verification(3003, 1200);
  EXPECT_TRUE(t.ok()) << t.failures << " failures; " << t.first_failure;
}

TEST(Properties, RoundTripOn300Schemas) {
  const auto t = props::round_trip(4004, 300);
  EXPECT_EQ(t.cases, 303);
  EXPECT_TRUE(t.ok()) << t.failures << " failures; " << t.first_failure;
  EXPECT_EQ(props::emit_corpus(4004, 300), props::emit_corpus(4004, 300));
}
