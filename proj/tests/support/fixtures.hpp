#pragma once

// Scripted refinement fixture: three tables with one transitive dependency
// each, and replies that fix exactly one more table per call.

#include <memory>
#include <string>
#include <vector>

#include "normloop/refinement.hpp"

namespace fixtures {

inline const char* kThree = R"(CREATE TABLE emp (id INT, dept INT, dept_name TEXT, PRIMARY KEY (id));
-- @fd emp: dept -> dept_name
CREATE TABLE item (sku INT, maker INT, maker_city TEXT, PRIMARY KEY (sku));
-- @fd item: maker -> maker_city
CREATE TABLE trip (trip_id INT, pilot INT, pilot_rank TEXT, PRIMARY KEY (trip_id));
-- @fd trip: pilot -> pilot_rank
)";

// Replaces the named table by its 3NF synthesis; everything else is kept.
inline normloop::Schema fix_table(const normloop::Schema& s, const std::string& name) {
  normloop::Schema out;
  for (const auto& t : s.tables) {
    if (t.name != name) {
      out.tables.push_back(t);
      continue;
    }
    for (auto& part : normloop::synthesize_3nf(t, normloop::table_fds(s, t))) out.tables.push_back(part);
  }
  for (const auto& fd : s.fds)
    if (fd.scope != name) out.fds.push_back(fd);
  return normloop::canonicalize(out);
}

inline std::string fenced(const normloop::Schema& s) { return "Revised schema:\n```sql\n" + normloop::emit_ddl(s) + "```\n"; }

inline std::shared_ptr<normloop::ScriptedBackend> one_fix_per_call() {
  normloop::Schema s = normloop::parse_ddl(kThree);
  std::vector<normloop::ScriptedBackend::Entry> replies;
  for (const char* t : {"emp", "item", "trip"}) {
    s = fix_table(s, t);
    replies.push_back({"", fenced(s)});
  }
  return std::make_shared<normloop::ScriptedBackend>(std::move(replies), false);
}

}  // namespace fixtures
