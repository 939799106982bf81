#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pms/error.hpp"

namespace pms {

// ---------------------------------------------------------------------------
// Permission levels
// ---------------------------------------------------------------------------

enum class Level : int { view = 0, edit = 1, admin = 2 };

inline constexpr std::array<Level, 3> kAllLevels = {Level::view, Level::edit, Level::admin};

inline std::string_view level_name(Level l) {
  switch (l) {
    case Level::view: return "view";
    case Level::edit: return "edit";
    case Level::admin: return "admin";
  }
  return "?";
}

inline std::optional<Level> level_from_name(std::string_view word) {
  if (word == "view") return Level::view;
  if (word == "edit") return Level::edit;
  if (word == "admin") return Level::admin;
  return std::nullopt;
}

/// Privilege ranking of the three levels. Loaded from configuration at
/// startup and fixed for the lifetime of a graph; defaults to
/// view < edit < admin.
class LevelOrder {
 public:
  LevelOrder() : rank_{0, 1, 2} {}

  /// Parses an order spec of the form "view<edit<admin". All three level
  /// words must appear exactly once.
  static LevelOrder parse(std::string_view text) {
    std::array<int, 3> rank = {-1, -1, -1};
    int next = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t sep = text.find('<', pos);
      std::string_view word = text.substr(pos, sep == std::string_view::npos ? sep : sep - pos);
      auto level = level_from_name(word);
      if (!level) raise(Errc::malformed_name, "bad level word in order spec: '" + std::string(word) + "'");
      int& slot = rank[static_cast<int>(*level)];
      if (slot != -1) raise(Errc::malformed_name, "level repeated in order spec");
      slot = next++;
      if (sep == std::string_view::npos) break;
      pos = sep + 1;
    }
    if (next != 3) raise(Errc::malformed_name, "order spec must rank all three levels");
    LevelOrder order;
    order.rank_ = rank;
    return order;
  }

  int rank(Level l) const { return rank_[static_cast<int>(l)]; }

  /// Three-way comparison under this order: negative, zero or positive.
  int compare(Level a, Level b) const { return rank(a) - rank(b); }

  std::string to_string() const {
    std::array<Level, 3> by_rank{};
    for (Level l : kAllLevels) by_rank[rank(l)] = l;
    std::string out;
    for (std::size_t i = 0; i < by_rank.size(); ++i) {
      if (i) out += '<';
      out += level_name(by_rank[i]);
    }
    return out;
  }

  bool operator==(const LevelOrder&) const = default;

 private:
  std::array<int, 3> rank_;  // indexed by Level
};

// ---------------------------------------------------------------------------
// Condition values
// ---------------------------------------------------------------------------

enum class ValueKind : int { integer = 0, decimal = 1, timestamp = 2 };

inline std::string_view value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::integer: return "integer";
    case ValueKind::decimal: return "decimal";
    case ValueKind::timestamp: return "timestamp";
  }
  return "?";
}

inline std::optional<ValueKind> value_kind_from_name(std::string_view word) {
  if (word == "integer") return ValueKind::integer;
  if (word == "decimal") return ValueKind::decimal;
  if (word == "timestamp") return ValueKind::timestamp;
  return std::nullopt;
}

/// A condition magnitude. Values of the same kind are totally ordered;
/// comparing across kinds is an error, never a coercion. Timestamps are
/// seconds since the Unix epoch, UTC.
class CondValue {
 public:
  static CondValue integer(std::int64_t magnitude) { return CondValue(ValueKind::integer, magnitude, 0.0); }
  static CondValue decimal(double magnitude) { return CondValue(ValueKind::decimal, 0, magnitude); }
  static CondValue timestamp(std::int64_t epoch_seconds) { return CondValue(ValueKind::timestamp, epoch_seconds, 0.0); }

  /// Parses a magnitude in the canonical grammar for the given kind.
  static CondValue parse(ValueKind kind, std::string_view magnitude) {
    if (magnitude.empty()) raise(Errc::malformed_name, "empty value magnitude");
    const char* first = magnitude.data();
    const char* last = first + magnitude.size();
    if (kind == ValueKind::decimal) {
      double d = 0;
      auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || ptr != last || !std::isfinite(d))
        raise(Errc::malformed_name, "bad decimal magnitude: '" + std::string(magnitude) + "'");
      return decimal(d);
    }
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc() || ptr != last)
      raise(Errc::malformed_name, "bad integer magnitude: '" + std::string(magnitude) + "'");
    return kind == ValueKind::integer ? integer(n) : timestamp(n);
  }

  ValueKind kind() const { return kind_; }
  std::int64_t whole() const { return whole_; }
  double real() const { return real_; }

  /// Canonical rendering: integers and timestamps as plain decimal digits,
  /// decimals in shortest round-trip form (no trailing zeros).
  std::string magnitude_string() const {
    char buf[32];
    if (kind_ == ValueKind::decimal) {
      auto res = std::to_chars(buf, buf + sizeof buf, real_);
      return std::string(buf, res.ptr);
    }
    auto res = std::to_chars(buf, buf + sizeof buf, whole_);
    return std::string(buf, res.ptr);
  }

  bool operator==(const CondValue& other) const {
    if (kind_ != other.kind_) return false;
    return kind_ == ValueKind::decimal ? real_ == other.real_ : whole_ == other.whole_;
  }

  /// Three-way comparison within one kind; raises IncomparableValues when
  /// the kinds differ.
  static int compare(const CondValue& a, const CondValue& b) {
    if (a.kind_ != b.kind_)
      raise(Errc::incomparable_values, std::string(value_kind_name(a.kind_)) + " vs " +
                                           std::string(value_kind_name(b.kind_)));
    if (a.kind_ == ValueKind::decimal)
      return a.real_ < b.real_ ? -1 : (a.real_ > b.real_ ? 1 : 0);
    return a.whole_ < b.whole_ ? -1 : (a.whole_ > b.whole_ ? 1 : 0);
  }

 private:
  CondValue(ValueKind kind, std::int64_t whole, double real) : kind_(kind), whole_(whole), real_(real) {}

  ValueKind kind_;
  std::int64_t whole_;  // integer and timestamp magnitudes
  double real_;         // decimal magnitude
};

// ---------------------------------------------------------------------------
// Resource names
// ---------------------------------------------------------------------------

enum class NameKind { item, permission, conditional };

inline bool is_token_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '.' || c == '-';
}

inline bool is_valid_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token)
    if (!is_token_char(c)) return false;
  return true;
}

/// A resource name: the (base, identifier, scope[, level[, value]]) tuple.
/// Item names carry no level, permission names a level, conditional names a
/// level and a value. Immutable after construction.
class ResourceName {
 public:
  static ResourceName item(std::string base, std::string identifier, std::string scope) {
    return ResourceName(std::move(base), std::move(identifier), std::move(scope), std::nullopt, std::nullopt);
  }

  static ResourceName permission(std::string base, std::string identifier, std::string scope, Level level) {
    return ResourceName(std::move(base), std::move(identifier), std::move(scope), level, std::nullopt);
  }

  static ResourceName conditional(std::string base, std::string identifier, std::string scope, Level level,
                                  CondValue value) {
    return ResourceName(std::move(base), std::move(identifier), std::move(scope), level, value);
  }

  /// Parses the canonical grammar
  ///   rn:<base>:<identifier>:<scope>[:<level>[:<vkind>:<vmagnitude>]]
  static ResourceName parse(std::string_view text) {
    std::vector<std::string_view> seg;
    std::size_t pos = 0;
    while (true) {
      std::size_t sep = text.find(':', pos);
      if (sep == std::string_view::npos) {
        seg.push_back(text.substr(pos));
        break;
      }
      seg.push_back(text.substr(pos, sep - pos));
      pos = sep + 1;
    }
    if (seg.size() != 4 && seg.size() != 5 && seg.size() != 7)
      raise(Errc::malformed_name, "expected 4, 5 or 7 segments, got " + std::to_string(seg.size()) +
                                      " in '" + std::string(text) + "'");
    if (seg[0] != "rn") raise(Errc::malformed_name, "missing 'rn:' prefix in '" + std::string(text) + "'");

    std::optional<Level> level;
    std::optional<CondValue> value;
    if (seg.size() >= 5) {
      level = level_from_name(seg[4]);
      if (!level) raise(Errc::malformed_name, "unknown level word '" + std::string(seg[4]) + "'");
    }
    if (seg.size() == 7) {
      auto kind = value_kind_from_name(seg[5]);
      if (!kind) raise(Errc::malformed_name, "unknown value kind '" + std::string(seg[5]) + "'");
      value = CondValue::parse(*kind, seg[6]);
    }
    return ResourceName(std::string(seg[1]), std::string(seg[2]), std::string(seg[3]), level, value);
  }

  const std::string& base() const { return base_; }
  const std::string& identifier() const { return identifier_; }
  const std::string& scope() const { return scope_; }
  const std::optional<Level>& level() const { return level_; }
  const std::optional<CondValue>& value() const { return value_; }

  NameKind kind() const {
    if (!level_) return NameKind::item;
    return value_ ? NameKind::conditional : NameKind::permission;
  }

  bool same_key(const ResourceName& other) const {
    return base_ == other.base_ && identifier_ == other.identifier_ && scope_ == other.scope_;
  }

  /// The (base, identifier, scope) key as an item name.
  ResourceName key_name() const { return item(base_, identifier_, scope_); }

  /// Canonical string form. Parse of the result reproduces this name.
  std::string canonical() const {
    std::string out = "rn:" + base_ + ':' + identifier_ + ':' + scope_;
    if (level_) {
      out += ':';
      out += level_name(*level_);
      if (value_) {
        out += ':';
        out += value_kind_name(value_->kind());
        out += ':';
        out += value_->magnitude_string();
      }
    }
    return out;
  }

  bool operator==(const ResourceName& other) const {
    return base_ == other.base_ && identifier_ == other.identifier_ && scope_ == other.scope_ &&
           level_ == other.level_ && value_ == other.value_;
  }

 private:
  ResourceName(std::string base, std::string identifier, std::string scope, std::optional<Level> level,
               std::optional<CondValue> value)
      : base_(std::move(base)),
        identifier_(std::move(identifier)),
        scope_(std::move(scope)),
        level_(level),
        value_(value) {
    for (const std::string* tok : {&base_, &identifier_, &scope_})
      if (!is_valid_token(*tok))
        raise(Errc::malformed_name, "bad token '" + *tok + "' (need non-empty [A-Za-z0-9_.-])");
  }

  std::string base_;
  std::string identifier_;
  std::string scope_;
  std::optional<Level> level_;
  std::optional<CondValue> value_;
};

inline std::string format(const ResourceName& rn) { return rn.canonical(); }

// ---------------------------------------------------------------------------
// Conflict classification
// ---------------------------------------------------------------------------

/// Relation of two leveled entries: exactly one of these holds per pair.
enum class Relation { disjoint, non_conflict, level_conflict, value_conflict };

inline std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::disjoint: return "Disjoint";
    case Relation::non_conflict: return "NonConflict";
    case Relation::level_conflict: return "LevelConflict";
    case Relation::value_conflict: return "ValueConflict";
  }
  return "?";
}

/// Classifies a pair of permission- or conditional-kind entries. Item names
/// are rejected. Same key with both values present but of different kinds is
/// an IncomparableValues error.
inline Relation classify(const ResourceName& alpha, const ResourceName& beta) {
  if (!alpha.level() || !beta.level())
    raise(Errc::item_not_classifiable,
          "classify needs leveled entries, got '" + (alpha.level() ? beta : alpha).canonical() + "'");
  if (!alpha.same_key(beta)) return Relation::disjoint;
  if (*alpha.level() != *beta.level()) return Relation::level_conflict;
  const auto& va = alpha.value();
  const auto& vb = beta.value();
  if (!va && !vb) return Relation::non_conflict;
  if (va && vb) {
    if (va->kind() != vb->kind())
      raise(Errc::incomparable_values,
            "same key and level but mixed value kinds: " + alpha.canonical() + " vs " + beta.canonical());
    return *va == *vb ? Relation::non_conflict : Relation::value_conflict;
  }
  return Relation::value_conflict;  // present vs absent
}

}  // namespace pms
