#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "normloop/datasets.hpp"
#include "normloop/ddl.hpp"
#include "support/generators.hpp"

using namespace normloop;

namespace {

constexpr const char* kSample = R"(-- @schema shop
create table if not exists Customer (
  id INT PRIMARY KEY,
  name VARCHAR(80) NOT NULL,
  phones TEXT,
  balance DECIMAL(10),
  joined DATE
);

CREATE TABLE orders (
  order_id BIGINT,
  customer_id INT REFERENCES Customer (id),
  total NUMERIC(8, 2),
  placed TIMESTAMP NULL,
  paid BOOLEAN,
  note JSONB,
  CONSTRAINT pk_orders PRIMARY KEY (order_id)
);
-- @multivalued Customer.phones
-- @derived orders.total: order_id
-- @fd orders: customer_id -> paid
-- @fd Customer.name -> Customer.joined
)";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DdlParseError parse_error(const std::string& text) {
  try {
    parse_ddl(text);
  } catch (const DdlParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no DdlParseError for:\n" << text;
  return DdlParseError({});
}

}  // namespace

TEST(Parse, ReadsEveryFeature) {
  const DdlDocument doc = parse_ddl_document(kSample);
  const Schema& s = doc.schema;
  EXPECT_EQ(s.name, "shop");
  ASSERT_EQ(s.tables.size(), 2u);
  const Table& c = s.tables[0];
  EXPECT_EQ(c.name, "Customer");
  EXPECT_EQ(c.primary_key, (std::vector<std::string>{"id"}));
  EXPECT_FALSE(c.find_column("name")->nullable);
  EXPECT_EQ(c.find_column("name")->data_type, DataType::varchar(80));
  EXPECT_EQ(c.find_column("balance")->data_type, DataType::decimal(10, 0));
  EXPECT_TRUE(c.find_column("phones")->is_multivalued());

  const Table& o = s.tables[1];
  EXPECT_EQ(o.primary_key, (std::vector<std::string>{"order_id"}));
  ASSERT_EQ(o.foreign_keys.size(), 1u);
  EXPECT_EQ(o.foreign_keys[0], (ForeignKey{{"customer_id"}, "Customer", {"id"}}));
  EXPECT_EQ(o.find_column("total")->data_type, DataType::decimal(8, 2));
  EXPECT_EQ(o.find_column("order_id")->data_type, DataType::big_int());
  EXPECT_EQ(o.find_column("note")->data_type.to_sql(), "JSONB");
  EXPECT_EQ(o.find_column("total")->annotations,
            (std::vector<ColumnAnnotation>{ColumnAnnotation::derived_from({"order_id"})}));

  ASSERT_EQ(s.fds.size(), 2u);
  EXPECT_EQ(s.fds[0], FunctionalDependency::make({"customer_id"}, {"paid"}, "orders"));
  EXPECT_EQ(s.fds[1], FunctionalDependency::make({"Customer.name"}, {"Customer.joined"}));
  ASSERT_EQ(doc.warnings.size(), 1u);
  EXPECT_NE(doc.warnings[0].find("JSONB"), std::string::npos);
  EXPECT_EQ(doc.source_text, kSample);
}

TEST(Parse, ErrorsCarryLineAndColumn) {
  auto e = parse_error("CREATE TABLE t (\n  a INT,\n  b VARCHAR\n);");
  EXPECT_EQ(e.error().line, 3);
  EXPECT_EQ(e.error().column, 5);
  EXPECT_EQ(e.error().expected, "VARCHAR(n)");

  e = parse_error("CREATE TABLE t (a INT)\nCREATE TABLE u (b INT);\nDROP TABLE t;");
  EXPECT_EQ(e.error().line, 3);
  EXPECT_EQ(e.error().expected, "CREATE TABLE");

  e = parse_error("CREATE TABLE t (a INT, PRIMARY KEY (a), PRIMARY KEY (a));");
  EXPECT_EQ(e.error().message, "second PRIMARY KEY clause");

  e = parse_error("CREATE TABLE t (a INT);\n-- @fd t: a b\n");
  EXPECT_EQ(e.error().line, 2);
  EXPECT_NE(e.error().message.find("->"), std::string::npos);
}

TEST(Parse, StructuralProblemsAreNotSyntaxErrors) {
  EXPECT_THROW(parse_ddl("CREATE TABLE t (a INT, FOREIGN KEY (a) REFERENCES nowhere (x));"), SchemaInvalid);
  EXPECT_THROW(parse_ddl("CREATE TABLE t (a INT);\n-- @fd t: a -> zz\n"), SchemaInvalid);
}

TEST(Parse, UnknownDirectivesWarn) {
  auto doc = parse_ddl_document("CREATE TABLE t (a INT);\n-- @owner alice\n-- plain comment\n");
  ASSERT_EQ(doc.warnings.size(), 1u);
  EXPECT_NE(doc.warnings[0].find("@owner"), std::string::npos);
}

TEST(Emit, CanonicalText) {
  const Schema s = parse_ddl(kSample);
  const std::string expected = R"(-- @schema shop
-- @fd Customer.name -> Customer.joined

CREATE TABLE Customer (
  id INT,
  name VARCHAR(80) NOT NULL,
  phones TEXT,
  balance DECIMAL(10,0),
  joined DATE,
  PRIMARY KEY (id)
);
-- @multivalued Customer.phones

CREATE TABLE orders (
  order_id BIGINT,
  customer_id INT,
  total DECIMAL(8,2),
  placed TIMESTAMP,
  paid BOOLEAN,
  note JSONB,
  PRIMARY KEY (order_id),
  FOREIGN KEY (customer_id) REFERENCES Customer (id)
);
-- @derived orders.total: order_id
-- @fd orders: customer_id -> paid
)";
  EXPECT_EQ(emit_ddl(s), expected);
}

TEST(RoundTrip, BundledDatasets) {
  for (const auto& d : bundled_datasets()) {
    const std::string text = emit_ddl(d.schema);
    EXPECT_EQ(canonicalize(parse_ddl(text)), canonicalize(d.schema)) << d.name;
    EXPECT_EQ(emit_ddl(parse_ddl(text)), text) << d.name;
  }
}

TEST(RoundTrip, SeededRandomSchemas) {
  gen::Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Schema s = gen::schema(rng);
    const std::string text = emit_ddl(s);
    const Schema back = parse_ddl(text);
    EXPECT_EQ(canonicalize(back), canonicalize(s)) << text;
    EXPECT_EQ(emit_ddl(back), text);
  }
}

TEST(RoundTrip, DataFilesMatchEmbeddedDatasets) {
  const std::pair<const char*, std::string_view> files[] = {
      {"orders.sql", dataset_ddl::kOrders},
      {"orders_synthetic.sql", dataset_ddl::kOrdersSynthetic},
      {"advertising.sql", dataset_ddl::kAdvertising},
      {"airportdb.sql", dataset_ddl::kAirportDb},
  };
  for (const auto& [file, text] : files) EXPECT_EQ(slurp(std::string(NORMLOOP_DATA_DIR) + "/" + file), text) << file;
}

TEST(Extract, FirstFencedBlock) {
  const std::string reply = "Sure.\n```sql\nCREATE TABLE a (x INT);\n```\nand\n```\nCREATE TABLE b (y INT);\n```\n";
  EXPECT_EQ(extract_schema_block(reply), "CREATE TABLE a (x INT);\n");
  EXPECT_THROW(extract_schema_block("```sql\n\n```"), ExtractionError);
}

TEST(Extract, UnfencedDdlRun) {
  const std::string reply =
      "Here you go:\nCREATE TABLE a (\n  x INT,\n  PRIMARY KEY (x)\n);\n-- @fd a: x -> x\nThat is all.\n";
  EXPECT_EQ(extract_schema_block(reply), "CREATE TABLE a (\n  x INT,\n  PRIMARY KEY (x)\n);\n-- @fd a: x -> x\n");
  EXPECT_THROW(extract_schema_block("I cannot help with that."), ExtractionError);
}
