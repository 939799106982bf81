#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pms/audit.hpp"
#include "pms/decision.hpp"
#include "pms/graph.hpp"
#include "pms/keys.hpp"
#include "pms/store.hpp"

namespace pms {

using json = nlohmann::json;

struct ServiceConfig {
  std::string bind = "127.0.0.1";  // loopback unless explicitly exposed
  int port = 8080;                 // 0 picks an ephemeral port
  std::string admin_token;         // empty disables the admin surface
  std::int64_t ttl_seconds = 300;
  std::optional<std::filesystem::path> snapshot_path;
  std::optional<std::filesystem::path> journal_path;
  std::optional<std::filesystem::path> audit_path;
  LevelOrder level_order;
  std::function<std::int64_t()> clock = unix_millis_now;
  std::uint64_t key_seed = std::random_device{}();
};

namespace detail {

inline int status_for(Errc code) {
  switch (code) {
    case Errc::malformed_name:
    case Errc::item_entry:
    case Errc::item_not_classifiable:
    case Errc::not_a_consumer:
      return 400;
    case Errc::unknown_node:
    case Errc::unknown_edge:
    case Errc::unknown_entry:
    case Errc::unknown_consumer:
      return 404;
    case Errc::duplicate_node:
    case Errc::duplicate_edge:
    case Errc::self_loop:
    case Errc::cycle_rejected:
    case Errc::node_has_edges:
      return 409;
    case Errc::unauthorized:
      return 403;
    default:
      return 500;
  }
}

inline void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, json{{"error", message}});
}

}  // namespace detail

/// The permission management service: decision endpoint for enforcement
/// points, admin mutations, key issuance for the encrypted flow, effective
/// set and audit visibility, health.
///
/// The PMS decides only — on GRANTED it is the caller (the PEP) that invokes
/// the action point.
class Service {
 public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        graph_(config_.level_order),
        audit_(make_audit(config_)),
        keys_(config_.ttl_seconds, config_.clock, config_.key_seed) {
    if (config_.snapshot_path && std::filesystem::exists(*config_.snapshot_path))
      graph_ = load_snapshot(*config_.snapshot_path, config_.level_order);
    if (config_.journal_path && std::filesystem::exists(*config_.journal_path))
      for (const auto& rec : read_journal(*config_.journal_path)) apply_record(graph_, rec);
    if (config_.journal_path) journal_.emplace(*config_.journal_path);
    setup_routes();
  }

  /// Blocking listen on the configured bind address and port.
  bool listen() {
    if (config_.port == 0) return start() && (worker_.join(), true);
    return server_.listen(config_.bind, config_.port);
  }

  /// Starts the listener on a background thread; with port 0 an ephemeral
  /// port is chosen and reported by port().
  bool start() {
    if (config_.port == 0) {
      bound_port_ = server_.bind_to_any_port(config_.bind);
      if (bound_port_ < 0) return false;
    } else {
      if (!server_.bind_to_port(config_.bind, config_.port)) return false;
      bound_port_ = config_.port;
    }
    worker_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return true;
  }

  void stop() {
    server_.stop();
    if (worker_.joinable()) worker_.join();
  }

  ~Service() { stop(); }

  int port() const { return bound_port_; }
  const std::string& bind_address() const { return config_.bind; }

  PermissionGraph& graph() { return graph_; }
  AuditLog& audit() { return audit_; }
  KeyIssuer& keys() { return keys_; }

 private:
  static AuditLog make_audit(const ServiceConfig& config) {
    if (config.audit_path) return AuditLog(*config.audit_path, config.clock);
    return AuditLog(config.clock);
  }

  bool admin_authorized(const httplib::Request& req) const {
    if (config_.admin_token.empty()) return false;
    return req.get_header_value("Authorization") == "Bearer " + config_.admin_token;
  }

  // Parses the {consumer, base, identifier, scope, level, value?} document
  // shared by the check and key-issue endpoints.
  static AccessRequest parse_access_request(const json& body) {
    AccessRequest req{ResourceName::parse(body.at("consumer").get<std::string>()),
                      body.at("base").get<std::string>(),
                      body.at("identifier").get<std::string>(),
                      body.at("scope").get<std::string>(),
                      Level::view,
                      std::nullopt};
    if (req.consumer.kind() != NameKind::item)
      raise(Errc::malformed_name, "consumer must be an item name");
    auto level = level_from_name(body.at("level").get<std::string>());
    if (!level) raise(Errc::malformed_name, "unknown level word");
    req.level = *level;
    if (body.contains("value") && !body.at("value").is_null()) {
      const json& value = body.at("value");
      auto kind = value_kind_from_name(value.at("kind").get<std::string>());
      if (!kind) raise(Errc::malformed_name, "unknown value kind");
      std::string magnitude = value.at("magnitude").is_string()
                                  ? value.at("magnitude").get<std::string>()
                                  : value.at("magnitude").dump();
      req.value = CondValue::parse(*kind, magnitude);
    }
    // Token validity of base/identifier/scope is enforced here.
    (void)req.requested_name();
    return req;
  }

  void journal(JournalOp op, std::string a, std::optional<std::string> b = std::nullopt) {
    if (journal_) journal_->append(graph_.version(), op, std::move(a), std::move(b));
  }

  template <typename Fn>
  void handle(const httplib::Request&, httplib::Response& res, Fn&& fn) {
    try {
      fn(res);
    } catch (const Error& e) {
      detail::reply_error(res, detail::status_for(e.code()), e.what());
    } catch (const json::exception& e) {
      detail::reply_error(res, 400, std::string("bad request body: ") + e.what());
    } catch (const std::exception& e) {
      detail::reply_error(res, 500, e.what());
    }
  }

  void setup_routes() {
    server_.Post("/v1/check", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        AccessRequest access = parse_access_request(json::parse(req.body));
        Decision decision;
        {
          std::shared_lock lock(state_mu_);
          decision = check(graph_, access);
        }
        audit_.record(access.consumer, access.requested_name(), decision);
        json body{{"outcome", outcome_name(decision.outcome)}, {"reason", reason_name(decision.reason)}};
        if (decision.matched) body["matched"] = decision.matched->canonical();
        detail::reply_json(out, 200, body);
      });
    });

    server_.Post("/v1/admin/nodes", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        json body = json::parse(req.body);
        ResourceName key = ResourceName::parse(body.at("rn").get<std::string>());
        std::vector<ResourceName> entries;
        for (const auto& text : body.value("entries", std::vector<std::string>{}))
          entries.push_back(ResourceName::parse(text));
        for (const auto& e : entries)
          if (e.kind() == NameKind::item) raise(Errc::item_entry, e.canonical());
        std::unique_lock lock(state_mu_);
        graph_.add_node(key, {});
        journal(JournalOp::add_node, key.canonical());
        for (const auto& e : entries) {
          graph_.grant(key, e);
          journal(JournalOp::grant, key.canonical(), e.canonical());
        }
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Delete(R"(/v1/admin/nodes/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        ResourceName key = ResourceName::parse(req.matches[1].str());
        std::unique_lock lock(state_mu_);
        graph_.remove_node(key);
        journal(JournalOp::remove_node, key.canonical());
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Post("/v1/admin/edges", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        json body = json::parse(req.body);
        ResourceName child = ResourceName::parse(body.at("child").get<std::string>());
        ResourceName parent = ResourceName::parse(body.at("parent").get<std::string>());
        std::unique_lock lock(state_mu_);
        graph_.add_edge(child, parent);
        journal(JournalOp::add_edge, child.canonical(), parent.canonical());
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Delete("/v1/admin/edges", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        json body = json::parse(req.body);
        ResourceName child = ResourceName::parse(body.at("child").get<std::string>());
        ResourceName parent = ResourceName::parse(body.at("parent").get<std::string>());
        std::unique_lock lock(state_mu_);
        graph_.remove_edge(child, parent);
        journal(JournalOp::remove_edge, child.canonical(), parent.canonical());
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Post("/v1/admin/grant", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        json body = json::parse(req.body);
        ResourceName node = ResourceName::parse(body.at("node").get<std::string>());
        ResourceName entry = ResourceName::parse(body.at("entry").get<std::string>());
        std::unique_lock lock(state_mu_);
        graph_.grant(node, entry);
        journal(JournalOp::grant, node.canonical(), entry.canonical());
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Post("/v1/admin/revoke", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        if (!admin_authorized(req)) return detail::reply_error(out, 401, "admin token required");
        json body = json::parse(req.body);
        ResourceName node = ResourceName::parse(body.at("node").get<std::string>());
        ResourceName key = ResourceName::parse(body.at("key").get<std::string>()).key_name();
        std::unique_lock lock(state_mu_);
        graph_.revoke(node, key);
        journal(JournalOp::revoke, node.canonical(), key.canonical());
        detail::reply_json(out, 200, json{{"version", graph_.version()}});
      });
    });

    server_.Get(R"(/v1/effective/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        ResourceName consumer = ResourceName::parse(req.matches[1].str());
        std::shared_lock lock(state_mu_);
        if (!graph_.has_node(consumer)) raise(Errc::unknown_consumer, consumer.canonical());
        PermissionSet effective = graph_.effective_set(consumer);
        json entries = json::array();
        for (const auto& e : effective) entries.push_back(e.canonical());
        detail::reply_json(out, 200, json{{"consumer", consumer.canonical()}, {"entries", entries}});
      });
    });

    server_.Post("/v1/keys/issue", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        json body = json::parse(req.body);
        std::string action_point = body.at("action_point").get<std::string>();
        AccessRequest access = parse_access_request(body);
        Decision decision;
        {
          std::shared_lock lock(state_mu_);
          decision = check(graph_, access);
        }
        audit_.record(access.consumer, access.requested_name(), decision);
        if (decision.outcome != Outcome::granted)
          raise(Errc::unauthorized, "underlying check failed: " + std::string(reason_name(decision.reason)));
        KeyGrant grant = keys_.issue(action_point, access.consumer.canonical());
        detail::reply_json(out, 200,
                           json{{"key_id", grant.id},
                                {"public_key", grant.public_key},
                                {"issued_at", grant.issued_at_ms},
                                {"expires_at", grant.expires_at_ms},
                                {"action_point", grant.action_point},
                                {"consumer", grant.consumer}});
      });
    });

    server_.Get(R"(/v1/keys/([0-9a-f]+)/verify)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        KeyStatus status = keys_.verify(req.matches[1].str());
        detail::reply_json(out, 200, json{{"status", key_status_name(status)}});
      });
    });

    server_.Get(R"(/v1/audit/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        ResourceName consumer = ResourceName::parse(req.matches[1].str());
        {
          std::shared_lock lock(state_mu_);
          if (!graph_.has_node(consumer)) raise(Errc::unknown_consumer, consumer.canonical());
        }
        std::int64_t from = std::numeric_limits<std::int64_t>::min();
        std::int64_t to = std::numeric_limits<std::int64_t>::max();
        if (req.has_param("from")) from = std::stoll(req.get_param_value("from"));
        if (req.has_param("to")) to = std::stoll(req.get_param_value("to"));
        json records = json::array();
        for (const auto& rec : audit_.by_consumer(consumer, from, to))
          records.push_back(json{{"seq", rec.seq},
                                 {"time", rec.unix_millis},
                                 {"consumer", rec.consumer},
                                 {"request", rec.request},
                                 {"outcome", outcome_name(rec.outcome)},
                                 {"reason", reason_name(rec.reason)}});
        detail::reply_json(out, 200, json{{"records", records}});
      });
    });

    server_.Get("/v1/healthz", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](httplib::Response& out) {
        std::shared_lock lock(state_mu_);
        detail::reply_json(out, 200,
                           json{{"status", "ok"},
                                {"version", graph_.version()},
                                {"audit_failures", audit_.sink_failures()}});
      });
    });
  }

  ServiceConfig config_;
  PermissionGraph graph_;
  AuditLog audit_;
  KeyIssuer keys_;
  std::optional<JournalWriter> journal_;
  std::shared_mutex state_mu_;
  httplib::Server server_;
  std::thread worker_;
  int bound_port_ = -1;
};

}  // namespace pms
