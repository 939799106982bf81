#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pms/decision.hpp"
#include "pms/store.hpp"

namespace pms {

/// One decision event, indexed by consumer. File form:
///   <seq> <unix-millis> <consumer-rn> <request-canonical> <GRANTED|UNAUTHORIZED> <reason>
struct AuditRecord {
  std::uint64_t seq = 0;
  std::int64_t unix_millis = 0;
  std::string consumer;  // canonical item name
  std::string request;   // canonical permission/conditional name
  Outcome outcome = Outcome::unauthorized;
  Reason reason = Reason::no_matching_key;

  std::string to_line() const {
    std::string line = std::to_string(seq) + ' ' + std::to_string(unix_millis) + ' ' + consumer + ' ' +
                       request + ' ';
    line += outcome_name(outcome);
    line += ' ';
    line += reason_name(reason);
    return line;
  }

  static AuditRecord parse_line(const std::string& line) {
    std::istringstream rec(line);
    AuditRecord out;
    std::string outcome_word, reason_word, extra;
    if (!(rec >> out.seq >> out.unix_millis >> out.consumer >> out.request >> outcome_word >> reason_word) ||
        (rec >> extra))
      raise(Errc::io_failure, "bad audit record: '" + line + "'");
    if (outcome_word == "GRANTED") {
      out.outcome = Outcome::granted;
    } else if (outcome_word == "UNAUTHORIZED") {
      out.outcome = Outcome::unauthorized;
    } else {
      raise(Errc::io_failure, "bad outcome word: '" + outcome_word + "'");
    }
    auto reason = reason_from_name(reason_word);
    if (!reason) raise(Errc::io_failure, "bad reason word: '" + reason_word + "'");
    out.reason = *reason;
    return out;
  }
};

inline std::vector<AuditRecord> read_audit_log(std::istream& in) {
  std::vector<AuditRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(AuditRecord::parse_line(line));
  }
  return records;
}

inline std::vector<AuditRecord> read_audit_log(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) raise(Errc::io_failure, "cannot open " + source.string());
  return read_audit_log(in);
}

/// Append-only decision log with a per-consumer index. Appends are
/// serialized; queries observe a consistent prefix. A failing file sink never
/// blocks the decision path — failures are counted and surfaced through
/// service health.
class AuditLog {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit AuditLog(Clock clock = unix_millis_now) : clock_(std::move(clock)) {}

  /// File-backed log: appends to sink_path and resumes the sequence (and the
  /// consumer index) from any records already present.
  AuditLog(std::filesystem::path sink_path, Clock clock = unix_millis_now) : clock_(std::move(clock)) {
    if (std::filesystem::exists(sink_path)) {
      try {
        std::ifstream in(sink_path);
        for (const auto& rec : read_audit_log(in)) {
          by_consumer_[rec.consumer].push_back(records_.size());
          records_.push_back(rec);
          next_seq_ = rec.seq + 1;
        }
      } catch (const Error&) {
        ++sink_failures_;  // unusable history; decisions still proceed
        return;
      }
    }
    sink_.emplace(sink_path, std::ios::app);
    if (!*sink_) {
      sink_.reset();
      ++sink_failures_;
    }
  }

  /// Records one completed check. Returns the record's sequence number.
  std::uint64_t record(const ResourceName& consumer, const ResourceName& request, const Decision& decision) {
    std::lock_guard<std::mutex> lock(mu_);
    AuditRecord rec;
    rec.seq = next_seq_++;
    rec.unix_millis = clock_();
    rec.consumer = consumer.canonical();
    rec.request = request.canonical();
    rec.outcome = decision.outcome;
    rec.reason = decision.reason;
    by_consumer_[rec.consumer].push_back(records_.size());
    records_.push_back(rec);
    if (sink_) {
      *sink_ << rec.to_line() << '\n';
      if (!sink_->flush()) {
        sink_.reset();
        ++sink_failures_;
      }
    }
    return rec.seq;
  }

  /// All and only the consumer's records with timestamp in [from, to], in
  /// sequence order. Unknown consumers yield an empty list.
  std::vector<AuditRecord> by_consumer(const ResourceName& consumer,
                                       std::int64_t from = std::numeric_limits<std::int64_t>::min(),
                                       std::int64_t to = std::numeric_limits<std::int64_t>::max()) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<AuditRecord> out;
    auto it = by_consumer_.find(consumer.canonical());
    if (it == by_consumer_.end()) return out;
    for (std::size_t idx : it->second) {
      const AuditRecord& rec = records_[idx];
      if (rec.unix_millis >= from && rec.unix_millis <= to) out.push_back(rec);
    }
    return out;
  }

  std::vector<AuditRecord> all() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
  }

  /// Number of file-sink append failures since startup.
  std::uint64_t sink_failures() const {
    std::lock_guard<std::mutex> lock(mu_);
    return sink_failures_;
  }

 private:
  mutable std::mutex mu_;
  Clock clock_;
  std::uint64_t next_seq_ = 1;
  std::vector<AuditRecord> records_;
  std::map<std::string, std::vector<std::size_t>> by_consumer_;
  std::optional<std::ofstream> sink_;
  std::uint64_t sink_failures_ = 0;
};

}  // namespace pms
