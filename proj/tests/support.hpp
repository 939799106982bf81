#pragma once

// Shared generators and reference oracles for the test suites. Everything
// here stays independent of the merge implementations it is used to check:
// expected values are produced by explicit per-key resolution, never by
// calling unite/overwrite/normalize.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pms/algebra.hpp"
#include "pms/graph.hpp"
#include "pms/resource_name.hpp"
#include "pms/store.hpp"

namespace pms::test {

// ---------------------------------------------------------------------------
// Entry generator over a bounded key pool.
//
// Key i uses one fixed value kind and two levels, so same-key pairs are
// always comparable and all four relations occur at a healthy rate. Each key
// offers four variants: (lo,m1) (lo,unconditional) (hi,m1) (hi,m2).
// ---------------------------------------------------------------------------

inline ValueKind kind_for_key(std::size_t key) { return static_cast<ValueKind>(key % 3); }

inline std::pair<Level, Level> levels_for_key(std::size_t key) {
  switch (key % 3) {
    case 0: return {Level::view, Level::edit};
    case 1: return {Level::edit, Level::admin};
    default: return {Level::view, Level::admin};
  }
}

inline CondValue magnitude_for_key(std::size_t key, bool second) {
  std::int64_t raw = static_cast<std::int64_t>(10 + key + (second ? 17 : 0));
  switch (kind_for_key(key)) {
    case ValueKind::integer: return CondValue::integer(raw);
    case ValueKind::decimal: return CondValue::decimal(static_cast<double>(raw) / 4.0);
    default: return CondValue::timestamp(1700000000 + raw);
  }
}

inline ResourceName entry_variant(std::size_t key, std::size_t variant) {
  auto [lo, hi] = levels_for_key(key);
  std::string id = std::to_string(key);
  switch (variant % 4) {
    case 0: return ResourceName::conditional("res", id, "scope", lo, magnitude_for_key(key, false));
    case 1: return ResourceName::permission("res", id, "scope", lo);
    case 2: return ResourceName::conditional("res", id, "scope", hi, magnitude_for_key(key, false));
    default: return ResourceName::conditional("res", id, "scope", hi, magnitude_for_key(key, true));
  }
}

struct SetGen {
  std::mt19937_64 rng;
  std::size_t pool = 5;
  double include_prob = 0.7;

  explicit SetGen(std::uint64_t seed) : rng(seed) {}

  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng) >= 1 - p; }

  PermissionSet next(const LevelOrder& order) {
    std::vector<ResourceName> entries;
    for (std::size_t key = 0; key < pool; ++key)
      if (chance(include_prob)) entries.push_back(entry_variant(key, rng() % 4));
    return normalize(std::move(entries), order);
  }
};

// Tallies the relation of every aligned key slot of two sets; keys present
// in exactly one operand count as Disjoint slots.
struct RelationCounts {
  std::array<std::uint64_t, 4> counts{};  // indexed by Relation

  void observe(const PermissionSet& a, const PermissionSet& b) {
    for (const auto& e : a) {
      const ResourceName* other = b.find_key_of(e);
      if (!other) {
        ++counts[static_cast<int>(Relation::disjoint)];
      } else {
        ++counts[static_cast<int>(classify(e, *other))];
      }
    }
    for (const auto& e : b)
      if (!a.find_key_of(e)) ++counts[static_cast<int>(Relation::disjoint)];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  double share(Relation r) const {
    return total() == 0 ? 0.0 : static_cast<double>(counts[static_cast<int>(r)]) / static_cast<double>(total());
  }
};

// ---------------------------------------------------------------------------
// Reference (oracle) resolution: independent of the algebra implementation.
// ---------------------------------------------------------------------------

inline const ResourceName& ref_winner(const ResourceName& a, const ResourceName& b, const LevelOrder& order) {
  if (*a.level() != *b.level()) return order.compare(*a.level(), *b.level()) > 0 ? a : b;
  if (!a.value()) return a;
  if (!b.value()) return b;
  return CondValue::compare(*a.value(), *b.value()) >= 0 ? a : b;
}

/// Brute-force unite: per-key pairing plus explicit winner selection,
/// returned as a canonically sorted entry list.
inline std::vector<ResourceName> ref_unite(const PermissionSet& a, const PermissionSet& b,
                                           const LevelOrder& order) {
  std::vector<ResourceName> out;
  for (const auto& e : a) {
    const ResourceName* other = b.find_key_of(e);
    out.push_back(other ? ref_winner(e, *other, order) : e);
  }
  for (const auto& e : b)
    if (!a.find_key_of(e)) out.push_back(e);
  std::sort(out.begin(), out.end(),
            [](const ResourceName& x, const ResourceName& y) { return x.canonical() < y.canonical(); });
  return out;
}

/// Brute-force overwrite: left entry wherever its key occurs, the rest of
/// the right operand passed through.
inline std::vector<ResourceName> ref_overwrite(const PermissionSet& a, const PermissionSet& b) {
  std::vector<ResourceName> out(a.entries());
  for (const auto& e : b)
    if (!a.find_key_of(e)) out.push_back(e);
  std::sort(out.begin(), out.end(),
            [](const ResourceName& x, const ResourceName& y) { return x.canonical() < y.canonical(); });
  return out;
}

// ---------------------------------------------------------------------------
// Random resource names for round-trip checks.
// ---------------------------------------------------------------------------

struct NameGen {
  std::mt19937_64 rng;

  explicit NameGen(std::uint64_t seed) : rng(seed) {}

  std::string token() {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-";
    std::size_t len = 1 + rng() % 8;
    std::string out;
    for (std::size_t i = 0; i < len; ++i) out += alphabet[rng() % (sizeof alphabet - 1)];
    return out;
  }

  CondValue value() {
    switch (static_cast<ValueKind>(rng() % 3)) {
      case ValueKind::integer:
        return CondValue::integer(static_cast<std::int64_t>(rng() % 2000000) - 1000000);
      case ValueKind::decimal: {
        // Exactly representable doubles round-trip bit-for-bit.
        double mantissa = static_cast<double>(rng() % (1u << 30));
        int shift = static_cast<int>(rng() % 40) - 20;
        return CondValue::decimal(std::ldexp(mantissa, shift) * (rng() % 2 ? 1.0 : -1.0));
      }
      default:
        return CondValue::timestamp(static_cast<std::int64_t>(rng() % 4000000000));
    }
  }

  ResourceName name() {
    std::string b = token(), i = token(), s = token();
    switch (rng() % 3) {
      case 0: return ResourceName::item(b, i, s);
      case 1: return ResourceName::permission(b, i, s, kAllLevels[rng() % 3]);
      default: return ResourceName::conditional(b, i, s, kAllLevels[rng() % 3], value());
    }
  }
};

// ---------------------------------------------------------------------------
// Random layered DAGs. Layering keeps the brute-force oracle affordable:
// edges only go to strictly higher layers, so path counts stay bounded.
// ---------------------------------------------------------------------------

struct GraphGen {
  std::mt19937_64 rng;
  std::size_t max_nodes = 64;
  std::size_t layers = 5;
  std::size_t max_fan_out = 4;
  std::size_t key_pool = 8;
  double entry_prob = 0.5;

  explicit GraphGen(std::uint64_t seed) : rng(seed) {}

  PermissionGraph next(const LevelOrder& order) {
    std::size_t n = 1 + rng() % max_nodes;
    PermissionGraph graph(order);
    std::vector<std::vector<ResourceName>> by_layer(layers);
    for (std::size_t i = 0; i < n; ++i) {
      ResourceName key = ResourceName::item("node", std::to_string(i), "test");
      std::vector<ResourceName> entries;
      for (std::size_t k = 0; k < key_pool; ++k)
        if (std::uniform_real_distribution<double>(0, 1)(rng) < entry_prob)
          entries.push_back(entry_variant(k, rng() % 4));
      graph.add_node(key, normalize(std::move(entries), order));
      by_layer[rng() % layers].push_back(key);
    }
    for (std::size_t li = 0; li + 1 < layers; ++li) {
      for (const auto& child : by_layer[li]) {
        std::size_t fan = rng() % (max_fan_out + 1);
        for (std::size_t e = 0; e < fan; ++e) {
          std::size_t target_layer = li + 1 + rng() % (layers - li - 1);
          const auto& uppers = by_layer[target_layer];
          if (uppers.empty()) continue;
          const ResourceName& parent = uppers[rng() % uppers.size()];
          if (!graph.has_edge(child, parent)) graph.add_edge(child, parent);
        }
      }
    }
    return graph;
  }
};

/// Random mutation driver that mirrors every accepted mutation into a
/// journal record, for persistence round-trip checks.
struct MutationDriver {
  std::mt19937_64 rng;
  PermissionGraph graph;
  std::vector<JournalRecord> journal;
  std::size_t next_id = 0;

  explicit MutationDriver(std::uint64_t seed) : rng(seed) {}

  void log(JournalOp op, std::string a, std::optional<std::string> b = std::nullopt) {
    journal.push_back(JournalRecord{graph.version(), 1000 + static_cast<std::int64_t>(graph.version()), op,
                                    std::move(a), std::move(b)});
  }

  void step() {
    auto keys = graph.node_keys();
    switch (rng() % 6) {
      case 0: {
        ResourceName key = ResourceName::item("group", std::to_string(next_id++), "org");
        graph.add_node(key, {});
        log(JournalOp::add_node, key.canonical());
        break;
      }
      case 1: {
        if (keys.size() < 2) break;
        ResourceName child = ResourceName::parse(keys[rng() % keys.size()]);
        ResourceName parent = ResourceName::parse(keys[rng() % keys.size()]);
        try {
          graph.add_edge(child, parent);
          log(JournalOp::add_edge, child.canonical(), parent.canonical());
        } catch (const Error&) {
        }
        break;
      }
      case 2: {
        if (keys.empty()) break;
        ResourceName target = ResourceName::parse(keys[rng() % keys.size()]);
        ResourceName entry = entry_variant(rng() % 6, rng() % 4);
        graph.grant(target, entry);
        log(JournalOp::grant, target.canonical(), entry.canonical());
        break;
      }
      case 3: {
        if (keys.empty()) break;
        ResourceName target = ResourceName::parse(keys[rng() % keys.size()]);
        const auto& own = graph.own_set(target);
        if (own.empty()) break;
        ResourceName key = own.entries()[rng() % own.size()].key_name();
        graph.revoke(target, key);
        log(JournalOp::revoke, target.canonical(), key.canonical());
        break;
      }
      case 4: {
        auto edges = graph.edge_list();
        if (edges.empty()) break;
        auto [child, parent] = edges[rng() % edges.size()];
        graph.remove_edge(ResourceName::parse(child), ResourceName::parse(parent));
        log(JournalOp::remove_edge, child, parent);
        break;
      }
      default: {
        for (const auto& key : keys) {
          ResourceName rn = ResourceName::parse(key);
          try {
            graph.remove_node(rn);
            log(JournalOp::remove_node, key);
            break;
          } catch (const Error&) {
          }
        }
        break;
      }
    }
  }
};

inline bool same_content(const PermissionGraph& a, const PermissionGraph& b) {
  return a.version() == b.version() && a.node_keys() == b.node_keys() && a.edge_list() == b.edge_list() &&
         [&] {
           for (const auto& key : a.node_keys()) {
             ResourceName rn = ResourceName::parse(key);
             if (!(a.own_set(rn) == b.own_set(rn))) return false;
           }
           return true;
         }();
}

}  // namespace pms::test
