#pragma once

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pms/audit.hpp"
#include "pms/bench.hpp"
#include "pms/decision.hpp"
#include "pms/service.hpp"
#include "pms/store.hpp"

namespace pms::cli {

/// Exit codes: 0 success, 1 domain error (including an UNAUTHORIZED check),
/// 2 usage error.
constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Resource-name arguments that fail to parse are usage errors, not domain
// errors.
inline ResourceName parse_rn_arg(const std::string& text) {
  try {
    return ResourceName::parse(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

inline ResourceName parse_item_arg(const std::string& text) {
  ResourceName rn = parse_rn_arg(text);
  if (rn.kind() != NameKind::item) throw UsageError("expected an item name, got '" + text + "'");
  return rn;
}

inline ResourceName parse_entry_arg(const std::string& text) {
  ResourceName rn = parse_rn_arg(text);
  if (rn.kind() == NameKind::item) throw UsageError("expected a permission or conditional name, got '" + text + "'");
  return rn;
}

struct LocalPaths {
  std::filesystem::path snapshot;
  std::filesystem::path journal;
  std::filesystem::path audit;
};

inline PermissionGraph load_local(const LocalPaths& paths, const LevelOrder& order) {
  PermissionGraph graph(order);
  if (std::filesystem::exists(paths.snapshot)) graph = load_snapshot(paths.snapshot, order);
  if (std::filesystem::exists(paths.journal))
    for (const auto& rec : read_journal(paths.journal)) apply_record(graph, rec);
  return graph;
}

class RemoteClient {
 public:
  RemoteClient(const std::string& server, const std::string& admin_token)
      : client_(server), admin_token_(admin_token) {}

  json check(const json& body) { return post("/v1/check", body, false); }

  json get(const std::string& path) {
    auto res = client_.Get(path);
    return unwrap(res);
  }

  json post(const std::string& path, const json& body, bool admin) {
    auto res = client_.Post(path, headers(admin), body.dump(), "application/json");
    return unwrap(res);
  }

  json del(const std::string& path, const std::optional<json>& body) {
    auto res = body ? client_.Delete(path, headers(true), body->dump(), "application/json")
                    : client_.Delete(path, headers(true));
    return unwrap(res);
  }

 private:
  httplib::Headers headers(bool admin) const {
    httplib::Headers h;
    if (admin) h.emplace("Authorization", "Bearer " + admin_token_);
    return h;
  }

  json unwrap(const httplib::Result& res) {
    if (!res) raise(Errc::io_failure, "request failed: " + httplib::to_string(res.error()));
    json body = res->body.empty() ? json::object() : json::parse(res->body, nullptr, false);
    if (body.is_discarded()) body = json{{"error", res->body}};
    if (res->status >= 400) {
      std::string message = body.contains("error") ? body["error"].get<std::string>() : res->body;
      raise(Errc::io_failure, "HTTP " + std::to_string(res->status) + ": " + message);
    }
    return body;
  }

  httplib::Client client_;
  std::string admin_token_;
};

}  // namespace detail

/// Runs the operator CLI. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"permission management system"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  detail::LocalPaths paths{"pms.snap", "pms.journal", "pms.audit"};
  std::string server;
  std::string admin_token;
  std::string level_order_spec;
  std::string output_mode = "plain";
  app.add_option("--snapshot", paths.snapshot, "snapshot file (local mode)")->envname("PMS_SNAPSHOT");
  app.add_option("--journal", paths.journal, "journal file (local mode)")->envname("PMS_JOURNAL");
  app.add_option("--audit", paths.audit, "audit log file (local mode)")->envname("PMS_AUDIT");
  app.add_option("--server", server, "service base URL; switches to remote mode")->envname("PMS_SERVER");
  app.add_option("--admin-token", admin_token, "bearer token for admin operations")->envname("PMS_ADMIN_TOKEN");
  app.add_option("--level-order", level_order_spec, "privilege order, e.g. view<edit<admin")
      ->envname("PMS_LEVEL_ORDER");
  app.add_option("--output", output_mode, "output mode: plain or table")
      ->check(CLI::IsMember({"plain", "table"}));

  auto* cmd_load = app.add_subcommand("load", "load the graph and print a summary");
  auto* cmd_save = app.add_subcommand("save", "compact journal into the snapshot");

  std::string arg_node, arg_child, arg_parent, arg_entry_key, arg_consumer, arg_action;
  std::vector<std::string> arg_entries;
  auto* cmd_add_node = app.add_subcommand("add-node", "add a node");
  cmd_add_node->add_option("node", arg_node, "item resource name")->required();
  cmd_add_node->add_option("--entry", arg_entries, "initial permission entries");
  auto* cmd_rm_node = app.add_subcommand("rm-node", "remove an isolated node");
  cmd_rm_node->add_option("node", arg_node)->required();
  auto* cmd_add_edge = app.add_subcommand("add-edge", "add an inheritance edge child -> parent");
  cmd_add_edge->add_option("child", arg_child)->required();
  cmd_add_edge->add_option("parent", arg_parent)->required();
  auto* cmd_rm_edge = app.add_subcommand("rm-edge", "remove an edge");
  cmd_rm_edge->add_option("child", arg_child)->required();
  cmd_rm_edge->add_option("parent", arg_parent)->required();
  auto* cmd_grant = app.add_subcommand("grant", "grant an entry on a node");
  cmd_grant->add_option("node", arg_node)->required();
  cmd_grant->add_option("entry", arg_action)->required();
  auto* cmd_revoke = app.add_subcommand("revoke", "revoke the entry with the given key from a node");
  cmd_revoke->add_option("node", arg_node)->required();
  cmd_revoke->add_option("key", arg_entry_key)->required();
  auto* cmd_effective = app.add_subcommand("effective", "print a node's effective permission set");
  cmd_effective->add_option("consumer", arg_consumer)->required();
  auto* cmd_check = app.add_subcommand("check", "decide an access request");
  cmd_check->add_option("consumer", arg_consumer)->required();
  cmd_check->add_option("action", arg_action, "requested permission or conditional name")->required();
  auto* cmd_consumers = app.add_subcommand("consumers", "list consumer nodes");
  std::int64_t audit_from = std::numeric_limits<std::int64_t>::min();
  std::int64_t audit_to = std::numeric_limits<std::int64_t>::max();
  auto* cmd_audit = app.add_subcommand("audit", "print a consumer's audit records");
  cmd_audit->add_option("consumer", arg_consumer)->required();
  cmd_audit->add_option("--from", audit_from, "unix millis, inclusive");
  cmd_audit->add_option("--to", audit_to, "unix millis, inclusive");

  BenchSpec bench_spec;
  bench_spec.sizes = {1000, 2000, 4000, 8000};
  auto* cmd_bench = app.add_subcommand("bench", "time effective_all over generated graphs");
  cmd_bench->add_option("--sizes", bench_spec.sizes, "node counts")->delimiter(',');
  cmd_bench->add_option("--entries", bench_spec.entries_per_node, "own entries per node");
  cmd_bench->add_option("--fan-out", bench_spec.fan_out, "edges per node into the next layer");
  cmd_bench->add_option("--seed", bench_spec.seed, "generator seed");
  cmd_bench->add_option("--reps", bench_spec.repetitions, "repetitions per size (median reported)");

  ServiceConfig service_config;
  auto* cmd_serve = app.add_subcommand("serve", "run the permission management service");
  cmd_serve->add_option("--bind", service_config.bind, "bind address")->envname("PMS_BIND");
  cmd_serve->add_option("--port", service_config.port, "port (0 = ephemeral)")->envname("PMS_PORT");
  std::int64_t ttl_seconds = 300;
  cmd_serve->add_option("--ttl", ttl_seconds, "key grant TTL in seconds")->envname("PMS_TTL_SECONDS");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("pms");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  const bool remote = !server.empty();
  try {
    LevelOrder order = level_order_spec.empty() ? LevelOrder{} : LevelOrder::parse(level_order_spec);
    const bool table = output_mode == "table";

    if (remote && (cmd_load->parsed() || cmd_save->parsed() || cmd_consumers->parsed() ||
                   cmd_bench->parsed() || cmd_serve->parsed()))
      throw UsageError("this subcommand is local-only; drop --server");

    // Applies one engine mutation locally and journals it.
    auto mutate_local = [&](auto&& fn) {
      PermissionGraph graph = detail::load_local(paths, order);
      JournalWriter journal(paths.journal);
      fn(graph, journal);
      out << "version " << graph.version() << '\n';
    };
    detail::RemoteClient remote_client(server, admin_token);

    if (cmd_load->parsed()) {
      PermissionGraph graph = detail::load_local(paths, order);
      out << "nodes " << graph.node_count() << " edges " << graph.edge_count() << " version "
          << graph.version() << '\n';
    } else if (cmd_save->parsed()) {
      PermissionGraph graph = detail::load_local(paths, order);
      save_snapshot(graph, paths.snapshot);
      std::filesystem::remove(paths.journal);
      out << "saved " << paths.snapshot.string() << " at version " << graph.version() << '\n';
    } else if (cmd_add_node->parsed()) {
      ResourceName node = detail::parse_item_arg(arg_node);
      std::vector<ResourceName> entries;
      for (const auto& text : arg_entries) entries.push_back(detail::parse_entry_arg(text));
      if (remote) {
        json body{{"rn", node.canonical()}, {"entries", arg_entries}};
        out << "version " << remote_client.post("/v1/admin/nodes", body, true).at("version") << '\n';
      } else {
        mutate_local([&](PermissionGraph& graph, JournalWriter& journal) {
          graph.add_node(node, {});
          journal.append(graph.version(), JournalOp::add_node, node.canonical());
          for (const auto& e : entries) {
            graph.grant(node, e);
            journal.append(graph.version(), JournalOp::grant, node.canonical(), e.canonical());
          }
        });
      }
    } else if (cmd_rm_node->parsed()) {
      ResourceName node = detail::parse_item_arg(arg_node);
      if (remote) {
        out << "version " << remote_client.del("/v1/admin/nodes/" + node.canonical(), std::nullopt).at("version")
            << '\n';
      } else {
        mutate_local([&](PermissionGraph& graph, JournalWriter& journal) {
          graph.remove_node(node);
          journal.append(graph.version(), JournalOp::remove_node, node.canonical());
        });
      }
    } else if (cmd_add_edge->parsed() || cmd_rm_edge->parsed()) {
      const bool adding = cmd_add_edge->parsed();
      ResourceName child = detail::parse_item_arg(arg_child);
      ResourceName parent = detail::parse_item_arg(arg_parent);
      if (remote) {
        json body{{"child", child.canonical()}, {"parent", parent.canonical()}};
        json res = adding ? remote_client.post("/v1/admin/edges", body, true)
                          : remote_client.del("/v1/admin/edges", body);
        out << "version " << res.at("version") << '\n';
      } else {
        mutate_local([&](PermissionGraph& graph, JournalWriter& journal) {
          if (adding) {
            graph.add_edge(child, parent);
            journal.append(graph.version(), JournalOp::add_edge, child.canonical(), parent.canonical());
          } else {
            graph.remove_edge(child, parent);
            journal.append(graph.version(), JournalOp::remove_edge, child.canonical(), parent.canonical());
          }
        });
      }
    } else if (cmd_grant->parsed()) {
      ResourceName node = detail::parse_item_arg(arg_node);
      ResourceName entry = detail::parse_entry_arg(arg_action);
      if (remote) {
        json body{{"node", node.canonical()}, {"entry", entry.canonical()}};
        out << "version " << remote_client.post("/v1/admin/grant", body, true).at("version") << '\n';
      } else {
        mutate_local([&](PermissionGraph& graph, JournalWriter& journal) {
          graph.grant(node, entry);
          journal.append(graph.version(), JournalOp::grant, node.canonical(), entry.canonical());
        });
      }
    } else if (cmd_revoke->parsed()) {
      ResourceName node = detail::parse_item_arg(arg_node);
      ResourceName key = detail::parse_rn_arg(arg_entry_key).key_name();
      if (remote) {
        json body{{"node", node.canonical()}, {"key", key.canonical()}};
        out << "version " << remote_client.post("/v1/admin/revoke", body, true).at("version") << '\n';
      } else {
        mutate_local([&](PermissionGraph& graph, JournalWriter& journal) {
          graph.revoke(node, key);
          journal.append(graph.version(), JournalOp::revoke, node.canonical(), key.canonical());
        });
      }
    } else if (cmd_effective->parsed()) {
      ResourceName consumer = detail::parse_item_arg(arg_consumer);
      std::vector<std::string> entries;
      if (remote) {
        json res = remote_client.get("/v1/effective/" + consumer.canonical());
        for (const auto& e : res.at("entries")) entries.push_back(e.get<std::string>());
      } else {
        PermissionGraph graph = detail::load_local(paths, order);
        for (const auto& e : graph.effective_set(consumer)) entries.push_back(e.canonical());
      }
      if (table) out << "entry\n";
      for (const auto& e : entries) out << e << '\n';
    } else if (cmd_check->parsed()) {
      ResourceName consumer = detail::parse_item_arg(arg_consumer);
      ResourceName action = detail::parse_entry_arg(arg_action);
      std::string outcome, reason, matched;
      if (remote) {
        json body{{"consumer", consumer.canonical()}, {"base", action.base()},
                  {"identifier", action.identifier()}, {"scope", action.scope()},
                  {"level", std::string(level_name(*action.level()))}};
        if (action.value())
          body["value"] = json{{"kind", std::string(value_kind_name(action.value()->kind()))},
                               {"magnitude", action.value()->magnitude_string()}};
        json res = remote_client.check(body);
        outcome = res.at("outcome").get<std::string>();
        reason = res.at("reason").get<std::string>();
        if (res.contains("matched")) matched = res["matched"].get<std::string>();
      } else {
        PermissionGraph graph = detail::load_local(paths, order);
        AccessRequest request{consumer,        action.base(), action.identifier(),
                              action.scope(),  *action.level(), action.value()};
        Decision decision = check(graph, request);
        AuditLog audit(paths.audit);
        audit.record(consumer, action, decision);
        outcome = outcome_name(decision.outcome);
        reason = reason_name(decision.reason);
        if (decision.matched) matched = decision.matched->canonical();
      }
      out << outcome << '\n' << "reason: " << reason << '\n';
      if (!matched.empty()) out << "matched: " << matched << '\n';
      return outcome == "GRANTED" ? kOk : kDomainError;
    } else if (cmd_consumers->parsed()) {
      PermissionGraph graph = detail::load_local(paths, order);
      if (table) out << "consumer\n";
      for (const auto& c : graph.consumers()) out << c.canonical() << '\n';
    } else if (cmd_audit->parsed()) {
      ResourceName consumer = detail::parse_item_arg(arg_consumer);
      if (remote) {
        std::string path = "/v1/audit/" + consumer.canonical();
        char sep = '?';
        if (audit_from != std::numeric_limits<std::int64_t>::min()) {
          path += sep + std::string("from=") + std::to_string(audit_from);
          sep = '&';
        }
        if (audit_to != std::numeric_limits<std::int64_t>::max())
          path += sep + std::string("to=") + std::to_string(audit_to);
        json res = remote_client.get(path);
        if (table) out << "seq time consumer request outcome reason\n";
        for (const auto& r : res.at("records"))
          out << r.at("seq") << ' ' << r.at("time") << ' ' << r.at("consumer").get<std::string>() << ' '
              << r.at("request").get<std::string>() << ' ' << r.at("outcome").get<std::string>() << ' '
              << r.at("reason").get<std::string>() << '\n';
      } else {
        std::vector<AuditRecord> records;
        if (std::filesystem::exists(paths.audit)) records = read_audit_log(paths.audit);
        if (table) out << "seq time consumer request outcome reason\n";
        for (const auto& r : records) {
          if (r.consumer != consumer.canonical()) continue;
          if (r.unix_millis < audit_from || r.unix_millis > audit_to) continue;
          out << r.to_line() << '\n';
        }
      }
    } else if (cmd_bench->parsed()) {
      if (bench_spec.sizes.empty() || bench_spec.entries_per_node == 0 || bench_spec.fan_out == 0)
        throw UsageError("bench needs positive sizes, entries and fan-out");
      std::vector<BenchRow> rows = run_bench(bench_spec, order);
      if (table) out << "N mbar conflicts ms ratio\n";
      out << std::fixed;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const BenchRow& row = rows[i];
        out << "N=" << row.nodes << " mbar=" << std::setprecision(2) << row.avg_entries
            << " conflicts=" << row.conflicts << " ms=" << std::setprecision(3) << row.millis;
        if (i > 0 && rows[i - 1].millis > 0.0)
          out << " ratio=" << std::setprecision(2) << row.millis / rows[i - 1].millis;
        out << '\n';
      }
    } else if (cmd_serve->parsed()) {
      service_config.ttl_seconds = ttl_seconds;
      service_config.snapshot_path = paths.snapshot;
      service_config.journal_path = paths.journal;
      service_config.audit_path = paths.audit;
      service_config.admin_token = admin_token;
      service_config.level_order = order;
      Service service(service_config);
      out << "listening on " << service_config.bind << ':' << service_config.port << '\n';
      if (!service.listen()) {
        err << "failed to bind " << service_config.bind << ':' << service_config.port << '\n';
        return kDomainError;
      }
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
}

}  // namespace pms::cli
