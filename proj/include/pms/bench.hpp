#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pms/graph.hpp"

namespace pms {

/// Deterministic layered DAG for scaling measurements: a consumer layer at
/// the bottom, role layers above it, roots on top. Every non-root node gets
/// `fan_out` edges into the next layer (capped by that layer's size), and
/// every node draws `entries_per_node` distinct entries from a bounded key
/// universe so same-key conflicts occur at a controllable rate.
inline PermissionGraph make_layered_graph(std::size_t nodes, std::size_t entries_per_node, std::size_t fan_out,
                                          std::uint64_t seed, LevelOrder order = {}) {
  PermissionGraph graph(order);
  if (nodes == 0) return graph;
  std::mt19937_64 rng(seed);

  // Four layers, bottom-heavy; tiny graphs collapse to fewer layers.
  const double shares[4] = {0.4, 0.3, 0.2, 0.1};
  std::vector<std::size_t> layer_size;
  std::size_t assigned = 0;
  for (double share : shares) {
    std::size_t n = static_cast<std::size_t>(static_cast<double>(nodes) * share);
    layer_size.push_back(n);
    assigned += n;
  }
  layer_size[0] += nodes - assigned;  // remainder to the consumer layer
  while (layer_size.size() > 1 && layer_size.back() == 0) layer_size.pop_back();

  // Bounded key universe: twice the per-node entry count, at least 4 keys.
  const std::size_t universe = std::max<std::size_t>(4, entries_per_node * 2);

  std::vector<std::vector<ResourceName>> layers;
  std::size_t serial = 0;
  for (std::size_t li = 0; li < layer_size.size(); ++li) {
    layers.emplace_back();
    for (std::size_t i = 0; i < layer_size[li]; ++i) {
      ResourceName key = ResourceName::item("node", std::to_string(serial++), "bench");
      std::vector<ResourceName> entries;
      std::vector<std::size_t> pool(universe);
      for (std::size_t p = 0; p < universe; ++p) pool[p] = p;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t e = 0; e < std::min(entries_per_node, universe); ++e) {
        std::size_t k = pool[e];
        Level level = kAllLevels[rng() % kAllLevels.size()];
        // Half the keys are conditional; one value kind per key keeps every
        // same-key pair comparable.
        if (k % 2 == 0) {
          auto kind = static_cast<ValueKind>((k / 2) % 3);
          std::int64_t magnitude = static_cast<std::int64_t>(rng() % 100);
          CondValue value = kind == ValueKind::integer   ? CondValue::integer(magnitude)
                            : kind == ValueKind::decimal ? CondValue::decimal(static_cast<double>(magnitude) / 4.0)
                                                         : CondValue::timestamp(1700000000 + magnitude);
          entries.push_back(ResourceName::conditional("res", std::to_string(k), "scope", level, value));
        } else {
          entries.push_back(ResourceName::permission("res", std::to_string(k), "scope", level));
        }
      }
      graph.add_node(key, normalize(std::move(entries), order));
      layers.back().push_back(key);
    }
  }

  for (std::size_t li = 0; li + 1 < layers.size(); ++li) {
    const auto& upper = layers[li + 1];
    for (const auto& child : layers[li]) {
      std::vector<std::size_t> pick(upper.size());
      for (std::size_t p = 0; p < upper.size(); ++p) pick[p] = p;
      std::shuffle(pick.begin(), pick.end(), rng);
      for (std::size_t e = 0; e < std::min(fan_out, upper.size()); ++e)
        graph.add_edge(child, upper[pick[e]]);
    }
  }
  return graph;
}

struct BenchRow {
  std::size_t nodes = 0;
  double avg_entries = 0.0;
  std::uint64_t conflicts = 0;
  double millis = 0.0;  // median over the configured repetitions
};

struct BenchSpec {
  std::vector<std::size_t> sizes;
  std::size_t entries_per_node = 8;
  std::size_t fan_out = 3;
  std::uint64_t seed = 42;
  std::size_t repetitions = 5;
};

/// Times effective_all over freshly generated graphs of each requested size.
inline std::vector<BenchRow> run_bench(const BenchSpec& spec, LevelOrder order = {}) {
  std::vector<BenchRow> rows;
  for (std::size_t n : spec.sizes) {
    PermissionGraph graph = make_layered_graph(n, spec.entries_per_node, spec.fan_out, spec.seed, order);
    std::vector<double> samples;
    for (std::size_t rep = 0; rep < std::max<std::size_t>(1, spec.repetitions); ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      auto all = graph.effective_all();
      auto t1 = std::chrono::steady_clock::now();
      (void)all;
      samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    GraphStats stats = graph.stats();
    BenchRow row;
    row.nodes = stats.node_count;
    row.avg_entries = stats.avg_entries;
    row.conflicts = stats.conflict_count;
    row.millis = samples[samples.size() / 2];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pms
