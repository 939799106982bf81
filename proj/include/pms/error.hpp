#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pms {

/// Domain error codes surfaced by the engine and its adapters.
enum class Errc {
  malformed_name,
  item_not_classifiable,
  incomparable_values,
  disjoint_operands,
  item_entry,
  duplicate_node,
  unknown_node,
  self_loop,
  duplicate_edge,
  cycle_rejected,
  node_has_edges,
  unknown_edge,
  unknown_entry,
  unknown_consumer,
  not_a_consumer,
  io_failure,
  corrupt_snapshot,
  corrupt_journal,
  sequence_gap,
  unauthorized,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_name: return "MalformedName";
    case Errc::item_not_classifiable: return "ItemNotClassifiable";
    case Errc::incomparable_values: return "IncomparableValues";
    case Errc::disjoint_operands: return "DisjointOperands";
    case Errc::item_entry: return "ItemEntry";
    case Errc::duplicate_node: return "DuplicateNode";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::self_loop: return "SelfLoop";
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::cycle_rejected: return "CycleRejected";
    case Errc::node_has_edges: return "NodeHasEdges";
    case Errc::unknown_edge: return "UnknownEdge";
    case Errc::unknown_entry: return "UnknownEntry";
    case Errc::unknown_consumer: return "UnknownConsumer";
    case Errc::not_a_consumer: return "NotAConsumer";
    case Errc::io_failure: return "IoFailure";
    case Errc::corrupt_snapshot: return "CorruptSnapshot";
    case Errc::corrupt_journal: return "CorruptJournal";
    case Errc::sequence_gap: return "SequenceGap";
    case Errc::unauthorized: return "Unauthorized";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace pms
