#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pms/graph.hpp"

namespace pms {

// ---------------------------------------------------------------------------
// Snapshot: a deterministic text image of the whole graph.
//
//   pmsnap 1 <graph_version> <node_count> <edge_count>
//   N <node-rn> <entry-rn>*        (sorted by node key)
//   E <child-rn> <parent-rn>       (sorted pairwise)
// ---------------------------------------------------------------------------

inline void save_snapshot(const PermissionGraph& graph, std::ostream& out) {
  out << "pmsnap 1 " << graph.version() << ' ' << graph.node_count() << ' ' << graph.edge_count() << '\n';
  for (const auto& key : graph.node_keys()) {
    out << "N " << key;
    for (const auto& entry : graph.own_set(ResourceName::parse(key))) out << ' ' << entry.canonical();
    out << '\n';
  }
  for (const auto& [child, parent] : graph.edge_list()) out << "E " << child << ' ' << parent << '\n';
  if (!out) raise(Errc::io_failure, "snapshot write failed");
}

/// Writes the snapshot atomically: temp file in the destination directory,
/// then rename.
inline void save_snapshot(const PermissionGraph& graph, const std::filesystem::path& destination) {
  std::filesystem::path tmp = destination;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) raise(Errc::io_failure, "cannot open " + tmp.string());
    save_snapshot(graph, out);
    if (!out.flush()) raise(Errc::io_failure, "flush failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, destination, ec);
  if (ec) raise(Errc::io_failure, "rename to " + destination.string() + ": " + ec.message());
}

inline PermissionGraph load_snapshot(std::istream& in, LevelOrder order = {}) {
  std::string line;
  if (!std::getline(in, line)) raise(Errc::corrupt_snapshot, "missing header");
  std::istringstream header(line);
  std::string magic;
  unsigned format_version = 0;
  std::uint64_t graph_version = 0;
  std::size_t node_count = 0, edge_count = 0;
  if (!(header >> magic >> format_version >> graph_version >> node_count >> edge_count) || magic != "pmsnap" ||
      format_version != 1)
    raise(Errc::corrupt_snapshot, "bad header: '" + line + "'");

  PermissionGraph graph(order);
  std::size_t nodes_seen = 0, edges_seen = 0;
  bool in_edges = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) raise(Errc::corrupt_snapshot, "blank record line");
      std::istringstream rec(line);
      std::string tag;
      rec >> tag;
      if (tag == "N") {
        if (in_edges) raise(Errc::corrupt_snapshot, "node record after edge records");
        std::string key;
        if (!(rec >> key)) raise(Errc::corrupt_snapshot, "node record without key");
        std::vector<ResourceName> entries;
        std::string word;
        while (rec >> word) entries.push_back(ResourceName::parse(word));
        graph.add_node(ResourceName::parse(key), normalize(std::move(entries), order));
        ++nodes_seen;
      } else if (tag == "E") {
        in_edges = true;
        std::string child, parent, extra;
        if (!(rec >> child >> parent) || (rec >> extra))
          raise(Errc::corrupt_snapshot, "bad edge record: '" + line + "'");
        graph.add_edge(ResourceName::parse(child), ResourceName::parse(parent));
        ++edges_seen;
      } else {
        raise(Errc::corrupt_snapshot, "unknown record tag '" + tag + "'");
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::corrupt_snapshot) throw;
    raise(Errc::corrupt_snapshot, e.what());  // malformed names, cycles, duplicates
  }
  if (nodes_seen != node_count || edges_seen != edge_count)
    raise(Errc::corrupt_snapshot, "record counts do not match header");
  graph.restore_version(graph_version);
  return graph;
}

inline PermissionGraph load_snapshot(const std::filesystem::path& source, LevelOrder order = {}) {
  std::ifstream in(source);
  if (!in) raise(Errc::io_failure, "cannot open " + source.string());
  return load_snapshot(in, order);
}

// ---------------------------------------------------------------------------
// Journal: append-only log of accepted mutations.
//
//   <seq> <unix-millis> <op> <operand-rn>( <operand-rn>)?
// ---------------------------------------------------------------------------

enum class JournalOp { add_node, remove_node, add_edge, remove_edge, grant, revoke };

inline std::string_view journal_op_name(JournalOp op) {
  switch (op) {
    case JournalOp::add_node: return "add_node";
    case JournalOp::remove_node: return "remove_node";
    case JournalOp::add_edge: return "add_edge";
    case JournalOp::remove_edge: return "remove_edge";
    case JournalOp::grant: return "grant";
    case JournalOp::revoke: return "revoke";
  }
  return "?";
}

inline std::optional<JournalOp> journal_op_from_name(std::string_view word) {
  for (JournalOp op : {JournalOp::add_node, JournalOp::remove_node, JournalOp::add_edge,
                       JournalOp::remove_edge, JournalOp::grant, JournalOp::revoke})
    if (journal_op_name(op) == word) return op;
  return std::nullopt;
}

inline bool journal_op_is_binary(JournalOp op) {
  return op != JournalOp::add_node && op != JournalOp::remove_node;
}

struct JournalRecord {
  std::uint64_t seq = 0;
  std::int64_t unix_millis = 0;
  JournalOp op = JournalOp::add_node;
  std::string operand_a;                 // canonical resource name
  std::optional<std::string> operand_b;  // second operand for binary ops

  std::string to_line() const {
    std::string line = std::to_string(seq) + ' ' + std::to_string(unix_millis) + ' ' +
                       std::string(journal_op_name(op)) + ' ' + operand_a;
    if (operand_b) line += ' ' + *operand_b;
    return line;
  }

  static JournalRecord parse_line(const std::string& line) {
    std::istringstream rec(line);
    JournalRecord out;
    std::string op_word, extra;
    if (!(rec >> out.seq >> out.unix_millis >> op_word >> out.operand_a))
      raise(Errc::corrupt_journal, "bad record: '" + line + "'");
    auto op = journal_op_from_name(op_word);
    if (!op) raise(Errc::corrupt_journal, "unknown op '" + op_word + "'");
    out.op = *op;
    if (journal_op_is_binary(*op)) {
      std::string b;
      if (!(rec >> b)) raise(Errc::corrupt_journal, "op " + op_word + " needs two operands");
      out.operand_b = b;
    }
    if (rec >> extra) raise(Errc::corrupt_journal, "trailing content: '" + line + "'");
    return out;
  }
};

inline std::int64_t unix_millis_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Applies one accepted-mutation record. The sequence must continue directly
/// from the graph's version; a record the engine rejects is corrupt, since
/// only accepted mutations are journaled.
inline void apply_record(PermissionGraph& graph, const JournalRecord& rec) {
  if (rec.seq != graph.version() + 1)
    raise(Errc::sequence_gap, "expected seq " + std::to_string(graph.version() + 1) + ", got " +
                                  std::to_string(rec.seq));
  try {
    switch (rec.op) {
      case JournalOp::add_node:
        graph.add_node(ResourceName::parse(rec.operand_a), {});
        break;
      case JournalOp::remove_node:
        graph.remove_node(ResourceName::parse(rec.operand_a));
        break;
      case JournalOp::add_edge:
        graph.add_edge(ResourceName::parse(rec.operand_a), ResourceName::parse(*rec.operand_b));
        break;
      case JournalOp::remove_edge:
        graph.remove_edge(ResourceName::parse(rec.operand_a), ResourceName::parse(*rec.operand_b));
        break;
      case JournalOp::grant:
        graph.grant(ResourceName::parse(rec.operand_a), ResourceName::parse(*rec.operand_b));
        break;
      case JournalOp::revoke:
        graph.revoke(ResourceName::parse(rec.operand_a), ResourceName::parse(*rec.operand_b));
        break;
    }
  } catch (const Error& e) {
    raise(Errc::corrupt_journal, "record " + std::to_string(rec.seq) + " rejected: " + e.what());
  }
}

inline std::vector<JournalRecord> read_journal(std::istream& in) {
  std::vector<JournalRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(JournalRecord::parse_line(line));
  }
  return records;
}

inline std::vector<JournalRecord> read_journal(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) raise(Errc::io_failure, "cannot open " + source.string());
  return read_journal(in);
}

inline PermissionGraph replay(std::istream& base_snapshot, const std::vector<JournalRecord>& records,
                              LevelOrder order = {}) {
  PermissionGraph graph = load_snapshot(base_snapshot, order);
  for (const auto& rec : records) apply_record(graph, rec);
  return graph;
}

/// Appends accepted-mutation records to a journal file, one line each, with
/// the record sequence tied to the graph version.
class JournalWriter {
 public:
  using Clock = std::int64_t (*)();

  JournalWriter(std::filesystem::path path, Clock clock = unix_millis_now)
      : out_(path, std::ios::app), clock_(clock) {
    if (!out_) raise(Errc::io_failure, "cannot open " + path.string());
  }

  void append(std::uint64_t seq, JournalOp op, std::string operand_a,
              std::optional<std::string> operand_b = std::nullopt) {
    JournalRecord rec{seq, clock_(), op, std::move(operand_a), std::move(operand_b)};
    out_ << rec.to_line() << '\n';
    if (!out_.flush()) raise(Errc::io_failure, "journal append failed");
  }

 private:
  std::ofstream out_;
  Clock clock_;
};

}  // namespace pms
