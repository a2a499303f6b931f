#include <gtest/gtest.h>

#include "normloop/fd_theory.hpp"
#include "oracle/brute_force.hpp"
#include "support/generators.hpp"

using namespace normloop;

namespace {

Table table(const std::string& name, std::vector<std::string> cols, std::vector<std::string> pk = {}) {
  Table t;
  t.name = name;
  for (auto& c : cols) t.columns.push_back({c, DataType::integer(), true, {}});
  t.primary_key = std::move(pk);
  return t;
}

FunctionalDependency fd(std::vector<std::string> l, std::vector<std::string> r, std::string scope = "r") {
  return FunctionalDependency::make(std::move(l), std::move(r), std::move(scope));
}

}  // namespace

TEST(Closure, FollowsChains) {
  FdList f = {fd({"a"}, {"b"}), fd({"b"}, {"c"}), fd({"c", "d"}, {"e"})};
  EXPECT_EQ(closure({"a"}, f), (AttributeSet{"a", "b", "c"}));
  EXPECT_EQ(closure({"a", "d"}, f), (AttributeSet{"a", "b", "c", "d", "e"}));
  EXPECT_EQ(closure({"e"}, f), (AttributeSet{"e"}));
}

TEST(Closure, IsCaseInsensitive) {
  FdList f = {fd({"A"}, {"b"})};
  EXPECT_TRUE(closure({"a"}, f).contains("B"));
}

TEST(CandidateKeys, SingleAndMultipleKeys) {
  const Table r = table("r", {"a", "b", "c", "d"});
  // ab -> c, c -> d: the only key is {a, b}.
  EXPECT_EQ(candidate_keys(r, FdList{fd({"a", "b"}, {"c"}), fd({"c"}, {"d"})}), (std::vector<AttributeSet>{{"a", "b"}}));
  // a -> b, b -> a, a -> c, a -> d: keys {a} and {b}.
  auto keys = candidate_keys(r, FdList{fd({"a"}, {"b", "c", "d"}), fd({"b"}, {"a"})});
  EXPECT_EQ(keys, (std::vector<AttributeSet>{{"a"}, {"b"}}));
  EXPECT_EQ(prime_attributes(r, FdList{fd({"a"}, {"b", "c", "d"}), fd({"b"}, {"a"})}), (AttributeSet{"a", "b"}));
}

TEST(CandidateKeys, NoDependenciesMeansAllColumns) {
  const Table r = table("r", {"a", "b", "c"});
  EXPECT_EQ(candidate_keys(r, FdList{}), (std::vector<AttributeSet>{{"a", "b", "c"}}));
}

TEST(CandidateKeys, DeclaredPrimaryKeyCounts) {
  const Table r = table("r", {"a", "b", "c"}, {"b"});
  EXPECT_EQ(candidate_keys(r, FdList{}), (std::vector<AttributeSet>{{"b"}}));
  EXPECT_TRUE(is_superkey({"b", "c"}, r, FdList{}));
  EXPECT_FALSE(is_superkey({"a", "c"}, r, FdList{}));
}

TEST(CandidateKeys, RejectsUnknownAttributesAndWideTables) {
  const Table r = table("r", {"a", "b"});
  EXPECT_THROW(is_superkey({"zz"}, r, FdList{}), InvalidArgument);
  std::vector<std::string> cols;
  for (int i = 0; i < 17; ++i) cols.push_back("c" + std::to_string(i));
  EXPECT_THROW(candidate_keys(table("wide", cols), FdList{}), AttributeLimitExceeded);
  cols.pop_back();
  EXPECT_NO_THROW(candidate_keys(table("ok", cols), FdList{}));
}

TEST(MinimalCover, RemovesRedundancy) {
  // a -> bc, b -> c, a -> b, ab -> c  reduces to  a -> b, b -> c.
  FdList f = {fd({"a"}, {"b", "c"}), fd({"b"}, {"c"}), fd({"a"}, {"b"}), fd({"a", "b"}, {"c"})};
  EXPECT_EQ(minimal_cover(f), (FdList{fd({"a"}, {"b"}), fd({"b"}, {"c"})}));
}

TEST(MinimalCover, DropsExtraneousLeftAttributes) {
  // a -> b, ab -> c: b is extraneous in ab -> c.
  FdList f = {fd({"a"}, {"b"}), fd({"a", "b"}, {"c"})};
  EXPECT_EQ(minimal_cover(f), (FdList{fd({"a"}, {"b"}), fd({"a"}, {"c"})}));
}

TEST(ProjectFds, KeepsTransitiveConsequences) {
  // a -> b, b -> c projected onto {a, c} gives a -> c.
  FdList f = {fd({"a"}, {"b"}), fd({"b"}, {"c"})};
  EXPECT_EQ(project_fds(f, {"a", "c"}), (FdList{fd({"a"}, {"c"})}));
  EXPECT_TRUE(project_fds(f, {"c"}).empty());
}

TEST(Violations, PartialDependencyInCompositeKey) {
  // order_items(order_id, product_id, qty, title), product_id -> title.
  const Table t = table("order_items", {"order_id", "product_id", "qty", "title"}, {"order_id", "product_id"});
  FdList f = {fd({"product_id"}, {"title"}, "order_items")};
  auto p = partial_dependencies(t, f);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].determinant, (AttributeSet{"product_id"}));
  EXPECT_EQ(p[0].dependent, "title");
  EXPECT_EQ(p[0].witness_key, (AttributeSet{"order_id", "product_id"}));
  EXPECT_TRUE(transitive_dependencies(t, f).empty());
}

TEST(Violations, TransitiveDependency) {
  const Table t = table("emp", {"id", "dept", "dept_name"}, {"id"});
  FdList f = {fd({"dept"}, {"dept_name"}, "emp")};
  auto tr = transitive_dependencies(t, f);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr[0].determinant, (AttributeSet{"dept"}));
  EXPECT_EQ(tr[0].dependent, "dept_name");
  EXPECT_TRUE(partial_dependencies(t, f).empty());
}

TEST(Violations, PrimeDependentsAreNotViolations) {
  // city, street -> zip; zip -> city. 3NF but not BCNF: city is prime.
  const Table t = table("addr", {"city", "street", "zip"});
  FdList f = {fd({"city", "street"}, {"zip"}, "addr"), fd({"zip"}, {"city"}, "addr")};
  EXPECT_TRUE(partial_dependencies(t, f).empty());
  EXPECT_TRUE(transitive_dependencies(t, f).empty());
}

TEST(Violations, MatchOracleOnSeededRelations) {
  gen::Rng rng(20240601);
  for (int i = 0; i < 300; ++i) {
    auto r = gen::relation(rng);
    const auto rel = oracle::relation_of(r.table, r.fds);
    EXPECT_EQ(oracle::pairs_of(r.table, partial_dependencies(r.table, r.fds)), oracle::partial(rel)) << "case " << i;
    EXPECT_EQ(oracle::pairs_of(r.table, transitive_dependencies(r.table, r.fds)), oracle::transitive(rel))
        << "case " << i;
    std::vector<oracle::Set> keys;
    for (const auto& k : candidate_keys(r.table, r.fds)) keys.push_back(oracle::mask_of(r.table, k));
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, oracle::keys(rel)) << "case " << i;
  }
}

TEST(Synthesis, SplitsTransitiveChain) {
  const Table t = table("emp", {"id", "dept", "dept_name"}, {"id"});
  FdList f = {fd({"dept"}, {"dept_name"}, "emp")};
  auto out = synthesize_3nf(t, f);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].name, "emp");
  EXPECT_EQ(out[0].primary_key, (std::vector<std::string>{"id"}));
  EXPECT_EQ(out[0].column_names(), (std::vector<std::string>{"id", "dept"}));
  EXPECT_EQ(out[1].name, "emp_dept");
  EXPECT_EQ(out[1].column_names(), (std::vector<std::string>{"dept", "dept_name"}));
  ASSERT_EQ(out[0].foreign_keys.size(), 1u);
  EXPECT_EQ(out[0].foreign_keys[0].referenced_table, "emp_dept");
  EXPECT_TRUE(chase_lossless(out, AttributeSet(t.column_names()), f));
  EXPECT_TRUE(preserves_dependencies(out, f));
}

TEST(Synthesis, AddsKeyTableWhenNoGroupHoldsAKey) {
  // a -> b, c -> d over (a, b, c, d): key {a, c} needs its own table.
  const Table t = table("r", {"a", "b", "c", "d"});
  FdList f = {fd({"a"}, {"b"}), fd({"c"}, {"d"})};
  auto out = synthesize_3nf(t, f);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].column_names(), (std::vector<std::string>{"a", "c"}));
  EXPECT_TRUE(chase_lossless(out, AttributeSet(t.column_names()), f));
}

TEST(Chase, DetectsLossyJoin) {
  const AttributeSet u{"a", "b", "c"};
  const std::vector<Table> parts = {table("p", {"a", "b"}), table("q", {"b", "c"})};
  EXPECT_FALSE(chase_lossless(parts, u, FdList{}));
  EXPECT_TRUE(chase_lossless(parts, u, FdList{fd({"b"}, {"c"})}));
  EXPECT_TRUE(chase_lossless(parts, u, FdList{fd({"b"}, {"a"})}));
}

TEST(Chase, RejectsColumnsOutsideUniverse) {
  EXPECT_THROW(chase_lossless({table("p", {"a", "z"})}, {"a"}, FdList{}), InvalidArgument);
}

TEST(Preservation, ClassicCounterexample) {
  // (street, zip), (zip, city) loses city, street -> zip.
  FdList f = {fd({"city", "street"}, {"zip"}), fd({"zip"}, {"city"})};
  const std::vector<Table> parts = {table("p", {"street", "zip"}), table("q", {"zip", "city"})};
  EXPECT_FALSE(preserves_dependencies(parts, f));
  EXPECT_TRUE(chase_lossless(parts, {"city", "street", "zip"}, f));
}

TEST(Preservation, MatchesOracle) {
  gen::Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    auto r = gen::relation(rng, 5, 4, 0.0);
    const auto rel = oracle::relation_of(r.table, r.fds);
    // Random two-way split with overlap.
    std::vector<Table> parts(2);
    std::vector<oracle::Set> masks(2, 0);
    for (std::size_t c = 0; c < r.table.columns.size(); ++c) {
      const int where = gen::pick(rng, 0, 2);  // 0, 1 or both
      for (int p = 0; p < 2; ++p)
        if (where == p || where == 2) {
          parts[static_cast<std::size_t>(p)].columns.push_back(r.table.columns[c]);
          masks[static_cast<std::size_t>(p)] |= oracle::Set{1} << c;
        }
    }
    std::erase_if(parts, [](const Table& t) { return t.columns.empty(); });
    std::erase(masks, oracle::Set{0});
    EXPECT_EQ(preserves_dependencies(parts, r.fds), oracle::preserves(rel, masks)) << "case " << i;
  }
}
