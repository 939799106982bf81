#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "pms/store.hpp"

namespace pms {

/// A short-lived key grant issued to an action point on behalf of a consumer.
/// The key material is opaque stub bytes — only issuance, lookup and expiry
/// are contractual.
struct KeyGrant {
  std::string id;
  std::string public_key;  // opaque, hex-encoded
  std::int64_t issued_at_ms = 0;
  std::int64_t expires_at_ms = 0;  // issued_at + TTL
  std::string action_point;
  std::string consumer;  // canonical item name
};

enum class KeyStatus { valid, expired, unknown };

inline std::string_view key_status_name(KeyStatus s) {
  switch (s) {
    case KeyStatus::valid: return "valid";
    case KeyStatus::expired: return "expired";
    case KeyStatus::unknown: return "unknown";
  }
  return "?";
}

/// Issues and verifies short-lived key grants. A fresh issuance for the same
/// (action point, consumer) pair supersedes the previous grant. The clock is
/// injectable so expiry is testable.
class KeyIssuer {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit KeyIssuer(std::int64_t ttl_seconds = 300, Clock clock = unix_millis_now,
                     std::uint64_t seed = std::random_device{}())
      : ttl_ms_(ttl_seconds * 1000), clock_(std::move(clock)), rng_(seed) {}

  std::int64_t ttl_seconds() const { return ttl_ms_ / 1000; }

  KeyGrant issue(const std::string& action_point, const std::string& consumer) {
    std::lock_guard<std::mutex> lock(mu_);
    KeyGrant grant;
    grant.id = random_hex(16);
    grant.public_key = random_hex(32);
    grant.issued_at_ms = clock_();
    grant.expires_at_ms = grant.issued_at_ms + ttl_ms_;
    grant.action_point = action_point;
    grant.consumer = consumer;

    auto pair_key = std::make_pair(action_point, consumer);
    auto prior = latest_.find(pair_key);
    if (prior != latest_.end()) superseded_.insert(prior->second);
    latest_[pair_key] = grant.id;
    grants_[grant.id] = grant;
    return grant;
  }

  KeyStatus verify(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = grants_.find(id);
    if (it == grants_.end()) return KeyStatus::unknown;
    if (superseded_.count(id)) return KeyStatus::expired;
    return clock_() < it->second.expires_at_ms ? KeyStatus::valid : KeyStatus::expired;
  }

  const KeyGrant* find(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = grants_.find(id);
    return it == grants_.end() ? nullptr : &it->second;
  }

 private:
  std::string random_hex(std::size_t bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes * 2);
    for (std::size_t i = 0; i < bytes; ++i) {
      unsigned byte = static_cast<unsigned>(rng_() & 0xff);
      out += digits[byte >> 4];
      out += digits[byte & 0xf];
    }
    return out;
  }

  std::int64_t ttl_ms_;
  Clock clock_;
  std::mt19937_64 rng_;
  mutable std::mutex mu_;
  std::map<std::string, KeyGrant> grants_;
  std::map<std::pair<std::string, std::string>, std::string> latest_;
  std::set<std::string> superseded_;
};

}  // namespace pms
