#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pms/resource_name.hpp"

namespace pms {

/// Counts conflicting same-key resolutions performed by the set operations;
/// feeds the n(C) figure in GraphStats.
struct ConflictTally {
  std::uint64_t conflicts = 0;
};

namespace detail {

using EntryKey = std::tuple<const std::string&, const std::string&, const std::string&>;

inline EntryKey entry_key(const ResourceName& rn) {
  return {rn.base(), rn.identifier(), rn.scope()};
}

// Level and value equality without any ordering comparison; never throws.
inline bool same_grant(const ResourceName& a, const ResourceName& b) {
  return a.level() == b.level() && a.value() == b.value();
}

}  // namespace detail

/// A normalized set of permission and conditional entries: at most one entry
/// per (base, identifier, scope) key, no item entries. Iteration and
/// serialization follow the lexicographic order of canonical strings.
class PermissionSet {
 public:
  PermissionSet() = default;

  const std::vector<ResourceName>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Entry with the given (base, identifier, scope) key, or nullptr.
  const ResourceName* find(std::string_view base, std::string_view identifier, std::string_view scope) const {
    for (const auto& e : entries_)
      if (e.base() == base && e.identifier() == identifier && e.scope() == scope) return &e;
    return nullptr;
  }

  const ResourceName* find_key_of(const ResourceName& like) const {
    return find(like.base(), like.identifier(), like.scope());
  }

  bool operator==(const PermissionSet& other) const { return entries_ == other.entries_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  // Adopts entries that are already normalized, sorting them canonically.
  // Sort keys are rendered once per entry, not per comparison.
  static PermissionSet adopt(std::vector<ResourceName> entries) {
    std::vector<std::pair<std::string, std::size_t>> keys;
    keys.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) keys.emplace_back(entries[i].canonical(), i);
    std::sort(keys.begin(), keys.end());
    std::vector<ResourceName> sorted;
    sorted.reserve(entries.size());
    for (auto& [text, index] : keys) sorted.push_back(std::move(entries[index]));
    PermissionSet s;
    s.entries_ = std::move(sorted);
    return s;
  }

  friend PermissionSet normalize(std::vector<ResourceName>, const LevelOrder&, ConflictTally*);
  friend PermissionSet unite(const PermissionSet&, const PermissionSet&, const LevelOrder&, ConflictTally*);
  friend PermissionSet overwrite(const PermissionSet&, const PermissionSet&, ConflictTally*);

  std::vector<ResourceName> entries_;
};

/// Resolves two entries of the same key: on a level conflict the entry whose
/// level ranks higher wins whole (its value rides along); on a value conflict
/// the greater value wins, an absent value counting as unconditional and
/// therefore greatest; non-conflicting entries yield alpha.
inline ResourceName max_entry(const ResourceName& alpha, const ResourceName& beta, const LevelOrder& order) {
  switch (classify(alpha, beta)) {
    case Relation::disjoint:
      raise(Errc::disjoint_operands, alpha.canonical() + " vs " + beta.canonical());
    case Relation::non_conflict:
      return alpha;
    case Relation::level_conflict:
      return order.compare(*alpha.level(), *beta.level()) > 0 ? alpha : beta;
    case Relation::value_conflict:
      if (!alpha.value()) return alpha;
      if (!beta.value()) return beta;
      return CondValue::compare(*alpha.value(), *beta.value()) >= 0 ? alpha : beta;
  }
  raise(Errc::disjoint_operands, "unreachable");
}

/// Builds a normalized set from arbitrary leveled entries: groups by key and
/// collapses each group with max_entry. Item entries are rejected.
inline PermissionSet normalize(std::vector<ResourceName> entries, const LevelOrder& order,
                               ConflictTally* tally = nullptr) {
  std::map<std::tuple<std::string, std::string, std::string>, ResourceName> by_key;
  for (auto& e : entries) {
    if (e.kind() == NameKind::item) raise(Errc::item_entry, e.canonical());
    auto key = std::make_tuple(e.base(), e.identifier(), e.scope());
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      by_key.emplace(std::move(key), std::move(e));
    } else {
      if (tally && !detail::same_grant(it->second, e)) ++tally->conflicts;
      it->second = max_entry(it->second, e, order);
    }
  }
  std::vector<ResourceName> out;
  out.reserve(by_key.size());
  for (auto& [key, entry] : by_key) out.push_back(std::move(entry));
  return PermissionSet::adopt(std::move(out));
}

/// Unite: entries whose key appears in only one operand pass through; keys
/// present in both resolve by max_entry. Commutative and associative.
inline PermissionSet unite(const PermissionSet& a, const PermissionSet& b, const LevelOrder& order,
                           ConflictTally* tally = nullptr) {
  std::map<detail::EntryKey, std::pair<const ResourceName*, const ResourceName*>> slots;
  for (const auto& e : a.entries()) slots[detail::entry_key(e)].first = &e;
  for (const auto& e : b.entries()) slots[detail::entry_key(e)].second = &e;

  std::vector<ResourceName> out;
  out.reserve(slots.size());
  for (auto& [key, pair] : slots) {
    if (pair.first && pair.second) {
      if (tally && !detail::same_grant(*pair.first, *pair.second)) ++tally->conflicts;
      out.push_back(max_entry(*pair.first, *pair.second, order));
    } else {
      out.push_back(pair.first ? *pair.first : *pair.second);
    }
  }
  return PermissionSet::adopt(std::move(out));
}

/// Overwrite: keys in only one operand pass through; on any same-key
/// difference the left operand's entry is kept verbatim. Left-biased, never
/// compares levels or values.
inline PermissionSet overwrite(const PermissionSet& a, const PermissionSet& b, ConflictTally* tally = nullptr) {
  std::map<detail::EntryKey, std::pair<const ResourceName*, const ResourceName*>> slots;
  for (const auto& e : a.entries()) slots[detail::entry_key(e)].first = &e;
  for (const auto& e : b.entries()) slots[detail::entry_key(e)].second = &e;

  std::vector<ResourceName> out;
  out.reserve(slots.size());
  for (auto& [key, pair] : slots) {
    if (tally && pair.first && pair.second && !detail::same_grant(*pair.first, *pair.second))
      ++tally->conflicts;
    out.push_back(pair.first ? *pair.first : *pair.second);
  }
  return PermissionSet::adopt(std::move(out));
}

/// Fold of unite; empty input yields the empty set. Result is independent of
/// list order and grouping.
inline PermissionSet unite_all(std::span<const PermissionSet> sets, const LevelOrder& order,
                               ConflictTally* tally = nullptr) {
  PermissionSet acc;
  for (const auto& s : sets) acc = unite(acc, s, order, tally);
  return acc;
}

/// Plain set union followed by normalization, used where the algebra laws
/// mix the merge operations with ordinary union.
inline PermissionSet normalized_union(const PermissionSet& a, const PermissionSet& b, const LevelOrder& order,
                                      ConflictTally* tally = nullptr) {
  std::vector<ResourceName> all(a.entries());
  all.insert(all.end(), b.entries().begin(), b.entries().end());
  return normalize(std::move(all), order, tally);
}

/// The aggregate step for one node: own entries overwrite the unite of the
/// inherited sets. With a non-empty inherited list this equals the unite of
/// the pairwise overwrites.
inline PermissionSet aggregate_node(const PermissionSet& own, std::span<const PermissionSet> inherited,
                                    const LevelOrder& order, ConflictTally* tally = nullptr) {
  return overwrite(own, unite_all(inherited, order, tally), tally);
}

}  // namespace pms
