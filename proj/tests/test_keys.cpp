#include <doctest.h>

#include <random>
#include <set>

#include "pms/keys.hpp"

using namespace pms;

TEST_CASE("issued grants expire exactly at the TTL boundary") {
  std::int64_t now = 1'000'000;
  KeyIssuer issuer(300, [&] { return now; }, 1);

  KeyGrant grant = issuer.issue("ap-1", "rn:user:a:acct");
  CHECK(grant.expires_at_ms == grant.issued_at_ms + 300'000);
  CHECK(grant.action_point == "ap-1");
  CHECK(grant.consumer == "rn:user:a:acct");
  CHECK_FALSE(grant.public_key.empty());

  CHECK(issuer.verify(grant.id) == KeyStatus::valid);
  now = grant.expires_at_ms - 1;
  CHECK(issuer.verify(grant.id) == KeyStatus::valid);  // strictly before TTL
  now = grant.expires_at_ms;
  CHECK(issuer.verify(grant.id) == KeyStatus::expired);  // at TTL
  now = grant.expires_at_ms + 50'000;
  CHECK(issuer.verify(grant.id) == KeyStatus::expired);  // never expired -> valid again

  CHECK(issuer.verify("deadbeef") == KeyStatus::unknown);
}

TEST_CASE("issuances are unique and supersede prior grants for the same pair") {
  std::int64_t now = 0;
  KeyIssuer issuer(60, [&] { return now; }, 7);

  KeyGrant first = issuer.issue("ap-1", "rn:user:a:acct");
  KeyGrant second = issuer.issue("ap-1", "rn:user:a:acct");
  CHECK(first.id != second.id);
  CHECK(issuer.verify(second.id) == KeyStatus::valid);
  CHECK(issuer.verify(first.id) == KeyStatus::expired);  // superseded

  // A different pair does not supersede.
  KeyGrant other = issuer.issue("ap-2", "rn:user:a:acct");
  CHECK(issuer.verify(second.id) == KeyStatus::valid);
  CHECK(issuer.verify(other.id) == KeyStatus::valid);

  std::set<std::string> ids;
  for (int i = 0; i < 200; ++i) ids.insert(issuer.issue("ap", std::to_string(i)).id);
  CHECK(ids.size() == 200);
}

TEST_CASE("randomized TTLs: valid strictly before, expired at or after") {
  std::mt19937_64 rng(2026);
  for (int i = 0; i < 100; ++i) {
    std::int64_t ttl_seconds = 1 + static_cast<std::int64_t>(rng() % 86'400);
    std::int64_t now = static_cast<std::int64_t>(rng() % 1'000'000'000);
    KeyIssuer issuer(ttl_seconds, [&] { return now; }, rng());
    KeyGrant grant = issuer.issue("ap", "c");

    std::int64_t before = grant.issued_at_ms + static_cast<std::int64_t>(rng() % (ttl_seconds * 1000));
    now = before;
    CHECK(issuer.verify(grant.id) == KeyStatus::valid);

    now = grant.expires_at_ms + static_cast<std::int64_t>(rng() % 1000);
    CHECK(issuer.verify(grant.id) == KeyStatus::expired);

    CHECK(issuer.verify("not-a-key") == KeyStatus::unknown);
  }
}

TEST_CASE("find returns the stored grant") {
  KeyIssuer issuer(10, [] { return std::int64_t{0}; }, 3);
  KeyGrant grant = issuer.issue("ap", "c");
  const KeyGrant* found = issuer.find(grant.id);
  REQUIRE(found != nullptr);
  CHECK(found->public_key == grant.public_key);
  CHECK(issuer.find("nope") == nullptr);
}
