#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pms/algebra.hpp"
#include "pms/resource_name.hpp"

namespace pms {

struct GraphStats {
  std::size_t node_count = 0;
  double avg_entries = 0.0;        // mean own-entry count per node
  std::uint64_t conflict_count = 0;  // conflicts seen by the most recent effective_all
};

/// The acyclic directed permission graph. Nodes are keyed by item resource
/// names and hold a normalized own set; an edge (child, parent) makes the
/// child inherit the parent's effective entries, with the child's own entries
/// taking overwrite precedence. Consumers are the nodes no edge points to.
///
/// Concurrency contract: single writer, multiple readers. Mutations must be
/// serialized by the caller; reads may run concurrently with each other (the
/// internal memo cache carries its own lock) but not with a mutation.
class PermissionGraph {
 public:
  explicit PermissionGraph(LevelOrder order = {})
      : order_(order), memo_mutex_(std::make_unique<std::mutex>()) {}

  PermissionGraph(PermissionGraph&&) = default;
  PermissionGraph& operator=(PermissionGraph&&) = default;
  PermissionGraph(const PermissionGraph&) = delete;
  PermissionGraph& operator=(const PermissionGraph&) = delete;

  const LevelOrder& level_order() const { return order_; }
  std::uint64_t version() const { return version_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  // -- mutations ------------------------------------------------------------

  void add_node(const ResourceName& key, PermissionSet own) {
    const std::string k = node_key(key);
    if (nodes_.count(k)) raise(Errc::duplicate_node, k);
    nodes_.emplace(k, Node{key, std::move(own), {}, {}});
    ++version_;
  }

  /// Removal requires the node to be isolated.
  void remove_node(const ResourceName& key) {
    auto it = find_node(key);
    if (!it->second.parents.empty() || !it->second.children.empty())
      raise(Errc::node_has_edges, it->first);
    nodes_.erase(it);
    ++version_;
  }

  /// Inserts the edge child -> parent iff the graph stays acyclic. On
  /// rejection the graph is unchanged and the version does not move.
  void add_edge(const ResourceName& child, const ResourceName& parent) {
    auto cit = find_node(child);
    auto pit = find_node(parent);
    if (cit == pit) raise(Errc::self_loop, cit->first);
    if (cit->second.parents.count(pit->first)) raise(Errc::duplicate_edge, cit->first + " -> " + pit->first);
    if (reaches(pit->first, cit->first))
      raise(Errc::cycle_rejected, "edge " + cit->first + " -> " + pit->first + " would close a cycle");
    cit->second.parents.insert(pit->first);
    pit->second.children.insert(cit->first);
    ++edge_count_;
    ++version_;
  }

  void remove_edge(const ResourceName& child, const ResourceName& parent) {
    auto cit = find_node(child);
    auto pit = find_node(parent);
    if (!cit->second.parents.erase(pit->first))
      raise(Errc::unknown_edge, cit->first + " -> " + pit->first);
    pit->second.children.erase(cit->first);
    --edge_count_;
    ++version_;
  }

  /// Inserts an entry into the node's own set; a same-key collision resolves
  /// by max_entry.
  void grant(const ResourceName& key, const ResourceName& entry) {
    auto it = find_node(key);
    if (entry.kind() == NameKind::item) raise(Errc::item_entry, entry.canonical());
    std::vector<ResourceName> entries(it->second.own.entries());
    entries.push_back(entry);
    it->second.own = normalize(std::move(entries), order_);
    ++version_;
  }

  /// Deletes the (base, identifier, scope)-keyed entry from the node's own
  /// set. Inherited entries are unaffected.
  void revoke(const ResourceName& key, const ResourceName& entry_key) {
    auto it = find_node(key);
    std::vector<ResourceName> kept;
    kept.reserve(it->second.own.size());
    bool found = false;
    for (const auto& e : it->second.own) {
      if (e.same_key(entry_key)) {
        found = true;
      } else {
        kept.push_back(e);
      }
    }
    if (!found) raise(Errc::unknown_entry, entry_key.key_name().canonical() + " at " + it->first);
    it->second.own = normalize(std::move(kept), order_);
    ++version_;
  }

  // -- queries ----------------------------------------------------------------

  bool has_node(const ResourceName& key) const { return nodes_.count(node_key(key)) != 0; }

  const PermissionSet& own_set(const ResourceName& key) const { return find_node(key)->second.own; }

  bool has_edge(const ResourceName& child, const ResourceName& parent) const {
    auto it = nodes_.find(node_key(child));
    return it != nodes_.end() && it->second.parents.count(node_key(parent)) != 0;
  }

  /// Node keys in canonical order.
  std::vector<std::string> node_keys() const {
    std::vector<std::string> keys;
    keys.reserve(nodes_.size());
    for (const auto& [k, node] : nodes_) keys.push_back(k);
    return keys;
  }

  /// Edges as (child, parent) canonical pairs, sorted pairwise.
  std::vector<std::pair<std::string, std::string>> edge_list() const {
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(edge_count_);
    for (const auto& [k, node] : nodes_)
      for (const auto& p : node.parents) edges.emplace_back(k, p);
    return edges;  // nodes_ and parents are both sorted
  }

  /// In-degree-zero nodes: the consumer population.
  std::vector<ResourceName> consumers() const {
    std::vector<ResourceName> out;
    for (const auto& [k, node] : nodes_)
      if (node.children.empty()) out.push_back(node.key);
    return out;
  }

  bool is_consumer(const ResourceName& key) const { return find_node(key)->second.children.empty(); }

  /// Effective permission set of one node: its own entries overwriting the
  /// unite of its parents' effective sets. Memoized per graph version; a
  /// repeated call at the same version performs no recomputation.
  PermissionSet effective_set(const ResourceName& key) const {
    const std::string k = node_key(key);
    if (!nodes_.count(k)) raise(Errc::unknown_node, k);
    std::lock_guard<std::mutex> lock(*memo_mutex_);
    refresh_memo_locked();
    return evaluate_locked(k, nullptr);
  }

  /// Evaluates every node in one pass over the reverse-topological order and
  /// returns the full map. Refreshes the conflict figure reported by stats().
  std::map<std::string, PermissionSet> effective_all() const {
    std::lock_guard<std::mutex> lock(*memo_mutex_);
    memo_.clear();
    memo_version_ = version_;
    ConflictTally tally;

    // Kahn sweep: a node is ready once all of its parents are final.
    std::map<std::string, std::size_t> pending;
    std::deque<const std::string*> ready;
    for (const auto& [k, node] : nodes_) {
      pending[k] = node.parents.size();
      if (node.parents.empty()) ready.push_back(&k);
    }
    while (!ready.empty()) {
      const std::string& k = *ready.front();
      ready.pop_front();
      const Node& node = nodes_.at(k);
      std::vector<PermissionSet> inherited;
      inherited.reserve(node.parents.size());
      for (const auto& p : node.parents) inherited.push_back(memo_.at(p));
      // n(C) counts own entries overriding an inherited one, so it is
      // bounded by the total own-entry count N*mbar.
      memo_.emplace(k, overwrite(node.own, unite_all(inherited, order_), &tally));
      for (const auto& c : node.children)
        if (--pending.at(c) == 0) ready.push_back(&c);
    }
    last_conflicts_ = tally.conflicts;
    return memo_;
  }

  GraphStats stats() const {
    GraphStats s;
    s.node_count = nodes_.size();
    std::size_t total = 0;
    for (const auto& [k, node] : nodes_) total += node.own.size();
    s.avg_entries = nodes_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(nodes_.size());
    std::lock_guard<std::mutex> lock(*memo_mutex_);
    s.conflict_count = last_conflicts_;
    return s;
  }

  /// Restores a persisted version counter; meant for the snapshot loader.
  void restore_version(std::uint64_t version) { version_ = version; }

 private:
  struct Node {
    ResourceName key;
    PermissionSet own;
    std::set<std::string> parents;   // outgoing edges (this node inherits from them)
    std::set<std::string> children;  // incoming edges
  };

  static std::string node_key(const ResourceName& key) {
    if (key.kind() != NameKind::item)
      raise(Errc::malformed_name, "node key must be an item name, got '" + key.canonical() + "'");
    return key.canonical();
  }

  std::map<std::string, Node>::iterator find_node(const ResourceName& key) {
    auto it = nodes_.find(node_key(key));
    if (it == nodes_.end()) raise(Errc::unknown_node, node_key(key));
    return it;
  }

  std::map<std::string, Node>::const_iterator find_node(const ResourceName& key) const {
    auto it = nodes_.find(node_key(key));
    if (it == nodes_.end()) raise(Errc::unknown_node, node_key(key));
    return it;
  }

  // True when `to` is reachable from `from` along child->parent edges.
  bool reaches(const std::string& from, const std::string& to) const {
    std::vector<const std::string*> stack{&from};
    std::set<std::string> seen;
    while (!stack.empty()) {
      const std::string& cur = *stack.back();
      stack.pop_back();
      if (cur == to) return true;
      if (!seen.insert(cur).second) continue;
      for (const auto& p : nodes_.at(cur).parents) stack.push_back(&p);
    }
    return false;
  }

  void refresh_memo_locked() const {
    if (memo_version_ != version_) {
      memo_.clear();
      memo_version_ = version_;
    }
  }

  // Fills memo_ for `key` (and any unresolved ancestors) without recursion.
  PermissionSet evaluate_locked(const std::string& key, ConflictTally* tally) const {
    struct Frame {
      const std::string* key;
      bool expanded;
    };
    std::vector<Frame> stack{{&key, false}};
    while (!stack.empty()) {
      Frame frame = stack.back();
      stack.pop_back();
      if (memo_.count(*frame.key)) continue;
      const Node& node = nodes_.at(*frame.key);
      if (!frame.expanded) {
        stack.push_back({frame.key, true});
        for (const auto& p : node.parents)
          if (!memo_.count(p)) stack.push_back({&p, false});
      } else {
        std::vector<PermissionSet> inherited;
        inherited.reserve(node.parents.size());
        for (const auto& p : node.parents) inherited.push_back(memo_.at(p));
        memo_.emplace(*frame.key, aggregate_node(node.own, inherited, order_, tally));
      }
    }
    return memo_.at(key);
  }

  LevelOrder order_;
  std::map<std::string, Node> nodes_;
  std::uint64_t version_ = 0;
  std::size_t edge_count_ = 0;

  mutable std::unique_ptr<std::mutex> memo_mutex_;
  mutable std::map<std::string, PermissionSet> memo_;
  mutable std::uint64_t memo_version_ = 0;
  mutable std::uint64_t last_conflicts_ = 0;
};

/// Brute-force evaluation of one node's effective set: literal recursion on
/// the aggregate definition with no memoization, recomputing shared
/// subgraphs. Exponential on dense graphs; intended as a test oracle.
inline PermissionSet oracle_effective(const PermissionGraph& graph, const ResourceName& key) {
  if (!graph.has_node(key)) raise(Errc::unknown_node, key.canonical());
  const LevelOrder& order = graph.level_order();
  std::map<std::string, std::vector<std::string>> parents_of;
  for (const auto& [child, parent] : graph.edge_list()) parents_of[child].push_back(parent);

  struct Eval {
    const PermissionGraph& graph;
    const LevelOrder& order;
    const std::map<std::string, std::vector<std::string>>& parents_of;

    PermissionSet run(const ResourceName& node) const {
      PermissionSet merged;
      auto it = parents_of.find(node.canonical());
      if (it != parents_of.end())
        for (const auto& p : it->second) merged = unite(merged, run(ResourceName::parse(p)), order);
      return overwrite(graph.own_set(node), merged);
    }
  };
  return Eval{graph, order, parents_of}.run(key);
}

}  // namespace pms
