#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <map>

#include "pms/audit.hpp"
#include "support.hpp"

using namespace pms;

namespace {

ResourceName consumer(const char* id) { return ResourceName::item("user", id, "acct"); }

ResourceName action(const char* id, Level l) { return ResourceName::permission("cam", id, "stream", l); }

Decision granted() { return Decision{Outcome::granted, Reason::granted, std::nullopt}; }
Decision denied(Reason r) { return Decision{Outcome::unauthorized, r, std::nullopt}; }

}  // namespace

TEST_CASE("one record per decision, indexed by consumer") {
  std::int64_t now = 1000;
  AuditLog log([&] { return now; });
  CHECK(log.size() == 0);
  CHECK(log.by_consumer(consumer("a")).empty());

  log.record(consumer("a"), action("1", Level::view), granted());
  now = 2000;
  log.record(consumer("b"), action("2", Level::edit), denied(Reason::insufficient_level));

  CHECK(log.size() == 2);
  auto a_records = log.by_consumer(consumer("a"));
  REQUIRE(a_records.size() == 1);
  CHECK(a_records[0].seq == 1);
  CHECK(a_records[0].unix_millis == 1000);
  CHECK(a_records[0].consumer == "rn:user:a:acct");
  CHECK(a_records[0].request == "rn:cam:1:stream:view");
  CHECK(a_records[0].outcome == Outcome::granted);
  CHECK(a_records[0].reason == Reason::granted);

  auto b_records = log.by_consumer(consumer("b"));
  REQUIRE(b_records.size() == 1);
  CHECK(b_records[0].seq == 2);
  CHECK(b_records[0].outcome == Outcome::unauthorized);
}

TEST_CASE("time range filters inclusively") {
  std::int64_t now = 0;
  AuditLog log([&] { return now; });
  for (std::int64_t t : {100, 200, 300}) {
    now = t;
    log.record(consumer("a"), action("1", Level::view), granted());
  }
  CHECK(log.by_consumer(consumer("a"), 100, 300).size() == 3);
  CHECK(log.by_consumer(consumer("a"), 101, 299).size() == 1);
  CHECK(log.by_consumer(consumer("a"), 200, 200).size() == 1);
  CHECK(log.by_consumer(consumer("a"), 301, 999).empty());
}

TEST_CASE("partition and order over a randomized workload") {
  std::mt19937_64 rng(99);
  AuditLog log([] { return std::int64_t{5}; });
  std::map<std::string, std::size_t> expected_counts;
  const std::size_t checks = 500;
  for (std::size_t i = 0; i < checks; ++i) {
    std::string id = std::to_string(rng() % 7);
    ResourceName who = consumer(id.c_str());
    Decision d = rng() % 2 ? granted() : denied(Reason::no_matching_key);
    log.record(who, action("1", Level::view), d);
    ++expected_counts[who.canonical()];
  }
  CHECK(log.size() == checks);

  std::size_t total = 0;
  for (const auto& [who, count] : expected_counts) {
    auto records = log.by_consumer(ResourceName::parse(who));
    CHECK(records.size() == count);
    total += records.size();
    for (std::size_t i = 1; i < records.size(); ++i) CHECK(records[i - 1].seq < records[i].seq);
    for (const auto& rec : records) CHECK(rec.consumer == who);
  }
  CHECK(total == checks);
}

TEST_CASE("audit lines round-trip through the file format") {
  AuditRecord rec{12, 1723456789123, "rn:user:a:acct", "rn:door:7:open:view:integer:30", Outcome::unauthorized,
                  Reason::condition_exceeded};
  CHECK(rec.to_line() ==
        "12 1723456789123 rn:user:a:acct rn:door:7:open:view:integer:30 UNAUTHORIZED condition-exceeded");
  AuditRecord parsed = AuditRecord::parse_line(rec.to_line());
  CHECK(parsed.seq == rec.seq);
  CHECK(parsed.unix_millis == rec.unix_millis);
  CHECK(parsed.consumer == rec.consumer);
  CHECK(parsed.request == rec.request);
  CHECK(parsed.outcome == rec.outcome);
  CHECK(parsed.reason == rec.reason);

  CHECK_THROWS_AS(AuditRecord::parse_line("1 2 rn:a rn:b MAYBE granted"), Error);
  CHECK_THROWS_AS(AuditRecord::parse_line("1 2 rn:a rn:b GRANTED because"), Error);
}

TEST_CASE("file sink appends every record") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("pms_audit_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::path path = dir / "audit.log";

  {
    AuditLog log(path, [] { return std::int64_t{42}; });
    log.record(consumer("a"), action("1", Level::view), granted());
    log.record(consumer("a"), action("1", Level::admin), denied(Reason::insufficient_level));
    CHECK(log.sink_failures() == 0);
  }
  auto records = read_audit_log(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].outcome == Outcome::granted);
  CHECK(records[1].reason == Reason::insufficient_level);

  SUBCASE("a reopened log resumes the sequence") {
    AuditLog log(path, [] { return std::int64_t{99}; });
    log.record(consumer("b"), action("3", Level::view), granted());
    auto all = read_audit_log(path);
    REQUIRE(all.size() == 3);
    CHECK(all[2].seq == 3);
    CHECK(log.by_consumer(consumer("a")).size() == 2);  // history is queryable again
  }

  SUBCASE("an unwritable sink counts a failure but still records") {
    AuditLog log(dir, [] { return std::int64_t{1}; });  // a directory is not writable as a file
    log.record(consumer("a"), action("1", Level::view), granted());
    CHECK(log.size() == 1);
    CHECK(log.sink_failures() == 1);
  }

  fs::remove_all(dir);
}
