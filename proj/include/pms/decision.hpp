#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pms/graph.hpp"
#include "pms/resource_name.hpp"

namespace pms {

enum class Outcome { granted, unauthorized };

inline std::string_view outcome_name(Outcome o) {
  return o == Outcome::granted ? "GRANTED" : "UNAUTHORIZED";
}

enum class Reason { granted, no_matching_key, insufficient_level, condition_exceeded, value_kind_mismatch };

inline std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::granted: return "granted";
    case Reason::no_matching_key: return "no-matching-key";
    case Reason::insufficient_level: return "insufficient-level";
    case Reason::condition_exceeded: return "condition-exceeded";
    case Reason::value_kind_mismatch: return "value-kind-mismatch";
  }
  return "?";
}

inline std::optional<Reason> reason_from_name(std::string_view word) {
  for (Reason r : {Reason::granted, Reason::no_matching_key, Reason::insufficient_level,
                   Reason::condition_exceeded, Reason::value_kind_mismatch})
    if (reason_name(r) == word) return r;
  return std::nullopt;
}

/// A request by a consumer to act on (base, identifier, scope) at a privilege
/// level, optionally at a condition magnitude.
struct AccessRequest {
  ResourceName consumer;  // item name of the requesting consumer node
  std::string base;
  std::string identifier;
  std::string scope;
  Level level = Level::view;
  std::optional<CondValue> value;

  /// The requested action as a permission or conditional resource name.
  ResourceName requested_name() const {
    if (value) return ResourceName::conditional(base, identifier, scope, level, *value);
    return ResourceName::permission(base, identifier, scope, level);
  }
};

struct Decision {
  Outcome outcome = Outcome::unauthorized;
  Reason reason = Reason::no_matching_key;
  std::optional<ResourceName> matched;  // present iff granted
};

/// Evaluates a request against the consumer's effective set. The request is
/// granted when a same-key entry exists whose level ranks at least the
/// requested level and whose condition dominates the requested one (an
/// unconditional grant dominates everything). Failing stages are reported in
/// order: key, level, value kind, value.
inline Decision check(const PermissionGraph& graph, const AccessRequest& req) {
  if (!graph.has_node(req.consumer)) raise(Errc::unknown_consumer, req.consumer.canonical());
  if (!graph.is_consumer(req.consumer))
    raise(Errc::not_a_consumer, req.consumer.canonical() + " has incoming edges");

  const PermissionSet effective = graph.effective_set(req.consumer);
  const ResourceName* entry = effective.find(req.base, req.identifier, req.scope);
  if (!entry) return {Outcome::unauthorized, Reason::no_matching_key, std::nullopt};
  if (graph.level_order().compare(*entry->level(), req.level) < 0)
    return {Outcome::unauthorized, Reason::insufficient_level, std::nullopt};
  if (req.value && entry->value()) {
    if (entry->value()->kind() != req.value->kind())
      return {Outcome::unauthorized, Reason::value_kind_mismatch, std::nullopt};
    if (CondValue::compare(*entry->value(), *req.value) < 0)
      return {Outcome::unauthorized, Reason::condition_exceeded, std::nullopt};
  }
  return {Outcome::granted, Reason::granted, *entry};
}

}  // namespace pms
