#pragma once

// Request/response core of the service: routing, bearer-token auth,
// idempotent writes and file-backed stores. The HTTP adapter in http.hpp is a
// thin shell around Service::handle.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dca/config.hpp"
#include "dca/feedback.hpp"
#include "dca/report.hpp"
#include "dca/rollup.hpp"
#include "dca/storage.hpp"

namespace dca {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::optional<std::string> engine_config_path;
  std::optional<std::string> embeddings_path;
  std::optional<int> embedding_dimension;
  std::map<std::string, std::string> tokens;  // bearer secret -> user id
  std::map<std::string, Role> roles;          // user id -> role
};

inline void validate_service_config(const ServiceConfig& c) {
  for (const auto& [token, user] : c.tokens) {
    if (token.empty()) throw ValidationError("empty bearer token");
    if (!c.roles.count(user)) throw ValidationError("user '" + user + "' has a token but no role");
  }
  if (c.port < 0 || c.port > 65535) throw ValidationError("port out of range");
}

inline ServiceConfig service_config_from_json(const json& j) {
  detail::ObjectReader o(j, "");
  o.allow_only({"host", "port", "data_dir", "engine_config", "embeddings", "embedding_dimension", "tokens", "roles"});
  ServiceConfig c;
  c.host = o.string_or("host", c.host);
  if (o.has("port")) c.port = static_cast<int>(o.integer("port"));
  c.data_dir = o.string_or("data_dir", c.data_dir.string());
  c.engine_config_path = o.optional_string("engine_config");
  c.embeddings_path = o.optional_string("embeddings");
  if (o.has("embedding_dimension")) c.embedding_dimension = static_cast<int>(o.integer("embedding_dimension"));
  if (o.has("tokens")) {
    const auto t = o.object("tokens");
    for (const auto& [token, user] : o.at("tokens").items()) c.tokens[token] = t.string(token);
  }
  if (o.has("roles")) {
    for (const auto& [user, role] : o.at("roles").items()) {
      if (!role.is_string()) throw SchemaError("/roles/" + user, "expected a string");
      c.roles[user] = detail::enum_from_string<Role>(kRoleNames, role.get<std::string>(), "/roles/" + user);
    }
  }
  validate_service_config(c);
  return c;
}

inline ServiceConfig load_service_config(const std::string& path) {
  return service_config_from_json(detail::parse_json_text(storage::read_file(path)));
}

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // keys lowercased
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

namespace detail {

inline std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) out.push_back(url_decode(path.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::int64_t parse_version(const std::string& s) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw NotFoundError("bad version '" + s + "'");
  return v;
}

}  // namespace detail

/// Builds a Request from "METHOD" and a target like "/labels?doc_id=x".
inline Request make_request(std::string method, std::string_view target, std::string body = {},
                            std::map<std::string, std::string> headers = {}) {
  Request r;
  r.method = std::move(method);
  const auto q = target.find('?');
  r.path = std::string(target.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const auto pair = rest.substr(0, amp);
      const auto eq = pair.find('=');
      if (eq == std::string_view::npos)
        r.query[detail::url_decode(pair)] = "";
      else
        r.query[detail::url_decode(pair.substr(0, eq))] = detail::url_decode(pair.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  for (auto& [k, v] : headers) r.headers[detail::lower(k)] = v;
  r.body = std::move(body);
  return r;
}

inline Response error_response(int status, std::string_view code, const std::string& message, json extra = {}) {
  json err{{"code", code}, {"message", message}};
  if (extra.is_object())
    for (auto& [k, v] : extra.items()) err[k] = v;
  return Response{status, json{{"error", std::move(err)}}.dump() + "\n", "application/json"};
}

inline Response json_response(int status, const json& body) { return Response{status, body.dump() + "\n"}; }

class Service {
 public:
  struct Caller {
    std::string user_id;
    Role role = Role::student;
  };

  Service(ServiceConfig config, AnalysisContext context, Clock clock = utc_timestamp_now)
      : config_(std::move(config)),
        ctx_(std::move(context)),
        config_hash_(dca::config_hash(ctx_.config)),
        contests_(config_.data_dir / "contests", clock),
        annotations_(config_.data_dir / "annotations", clock) {
    validate_service_config(config_);
    std::filesystem::create_directories(config_.data_dir / "objects");
    std::filesystem::create_directories(config_.data_dir / "refs");
    std::filesystem::create_directories(config_.data_dir / "reports");
    std::filesystem::create_directories(config_.data_dir / "idempotency");
  }

  /// Loads engine config and embeddings named by `config`.
  static std::unique_ptr<Service> from_config(ServiceConfig config, Clock clock = utc_timestamp_now) {
    EngineConfig engine = config.engine_config_path ? load_config(*config.engine_config_path) : EngineConfig{};
    std::shared_ptr<const EmbeddingTable> table;
    if (config.embeddings_path)
      table = std::make_shared<EmbeddingTable>(load_embeddings(*config.embeddings_path, config.embedding_dimension));
    auto ctx = AnalysisContext::make(std::move(engine), std::move(table));
    return std::make_unique<Service>(std::move(config), std::move(ctx), std::move(clock));
  }

  const AnalysisContext& context() const { return ctx_; }

  Response handle(const Request& req) {
    try {
      if (req.method == "GET" && req.path == "/health") return json_response(200, json{{"status", "ok"}});
      const Caller caller = authenticate(req);
      if (req.method == "POST") return idempotent(req, caller);
      return route(req, caller);
    } catch (const ParseError& e) {
      return error_response(400, "parse_error", e.what(), json{{"line", e.line()}, {"column", e.column()}});
    } catch (const SchemaError& e) {
      return error_response(422, "schema_error", e.what(), json{{"path", e.path()}});
    } catch (const ValidationError& e) {
      return error_response(422, "validation_error", e.what());
    } catch (const NotFoundError& e) {
      return error_response(404, "not_found", e.what());
    } catch (const ConflictError& e) {
      return error_response(409, "conflict", e.what());
    } catch (const StaleReferenceError& e) {
      return error_response(410, "stale_reference", e.what());
    } catch (const AuthorizationError& e) {
      return error_response(e.unauthenticated() ? 401 : 403, e.unauthenticated() ? "unauthenticated" : "forbidden",
                            e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

  // -- typed operations, also used by the router -----------------------------

  json put_document(const std::string& body) {
    const DesignDocument doc = parse_document(body);
    const std::string canonical = serialize_document(doc);
    const std::string hash = document_hash(doc);
    std::lock_guard lock(write_mu_);
    const auto ref = ref_path(doc.doc_id, doc.version);
    if (std::filesystem::exists(ref))
      throw ConflictError("version " + std::to_string(doc.version) + " of '" + doc.doc_id + "' is already stored");
    const auto object = config_.data_dir / "objects" / (hash + ".json");
    if (!std::filesystem::exists(object)) storage::atomic_write(object, canonical);
    storage::atomic_write(ref, hash + "\n");
    return json{{"doc_id", doc.doc_id}, {"version", doc.version}, {"document_hash", hash}};
  }

  DesignDocument get_document(const std::string& doc_id, std::int64_t version) const {
    const auto ref = ref_path(doc_id, version);
    if (!std::filesystem::exists(ref))
      throw NotFoundError("no version " + std::to_string(version) + " of '" + doc_id + "'");
    std::string hash = storage::read_file(ref);
    while (!hash.empty() && (hash.back() == '\n' || hash.back() == '\r')) hash.pop_back();
    return parse_document(storage::read_file(config_.data_dir / "objects" / (hash + ".json")));
  }

  std::vector<std::int64_t> versions(const std::string& doc_id) const {
    std::vector<std::int64_t> out;
    const auto dir = config_.data_dir / "refs" / storage::safe_name(doc_id);
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.size() > 1 && name[0] == 'v') out.push_back(std::stoll(name.substr(1)));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> doc_ids() const {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(config_.data_dir / "refs")) {
      const auto name = e.path().filename().string();
      out.push_back(detail::url_decode(name));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  VersionChain chain(const std::string& doc_id) const {
    std::vector<DesignDocument> docs;
    for (auto v : versions(doc_id)) docs.push_back(get_document(doc_id, v));
    if (docs.empty()) throw NotFoundError("unknown document '" + doc_id + "'");
    return validate_version_chain(std::move(docs));
  }

  /// Canonical report bytes, computed on first request and cached by content.
  std::string report_bytes(const std::string& doc_id, std::int64_t version) {
    const DesignDocument doc = get_document(doc_id, version);
    const auto path = config_.data_dir / "reports" / (cache_key(doc) + ".json");
    {
      std::shared_lock lock(cache_mu_);
      if (auto it = cache_.find(path.string()); it != cache_.end()) return it->second;
    }
    std::string bytes;
    if (std::filesystem::exists(path)) {
      bytes = storage::read_file(path);
    } else {
      bytes = serialize_report(analyze(doc, ctx_));
      storage::atomic_write(path, bytes);
    }
    std::unique_lock lock(cache_mu_);
    return cache_.emplace(path.string(), std::move(bytes)).first->second;
  }

  AnalyticReport report(const std::string& doc_id, std::int64_t version) {
    return parse_report(report_bytes(doc_id, version));
  }

  /// Annotations of one document with statuses replayed from the chain and logged actions.
  StatusUpdate annotation_state(const std::string& doc_id) const {
    const auto c = chain(doc_id);
    return update_statuses(c, annotations_.annotations(doc_id), chain_diffs(c), annotations_.actions(doc_id));
  }

  ContestStore& contests() { return contests_; }
  AnnotationStore& annotation_store() { return annotations_; }

 private:
  // -- auth and idempotency ----------------------------------------------------

  Caller authenticate(const Request& req) const {
    auto it = req.headers.find("authorization");
    if (it == req.headers.end() || it->second.rfind("Bearer ", 0) != 0)
      throw AuthorizationError("missing bearer token", true);
    const auto tok = config_.tokens.find(it->second.substr(7));
    if (tok == config_.tokens.end()) throw AuthorizationError("unknown bearer token", true);
    return Caller{tok->second, config_.roles.at(tok->second)};
  }

  Response idempotent(const Request& req, const Caller& caller) {
    auto key = req.headers.find("idempotency-key");
    if (key == req.headers.end()) return route(req, caller);
    const std::string fingerprint = sha256_hex(req.method + "\n" + req.path + "\n" + req.body);
    const auto path = config_.data_dir / "idempotency" / (sha256_hex(caller.user_id + "\n" + key->second) + ".json");
    std::lock_guard lock(idempotency_mu_);
    if (std::filesystem::exists(path)) {
      const json saved = json::parse(storage::read_file(path));
      if (saved.at("fingerprint") != fingerprint)
        throw ConflictError("idempotency key reused for a different request");
      return Response{saved.at("status").get<int>(), saved.at("body").get<std::string>(),
                      saved.at("content_type").get<std::string>()};
    }
    Response resp = route(req, caller);
    if (resp.status >= 200 && resp.status < 300)
      storage::atomic_write(path, json{{"fingerprint", fingerprint},
                                       {"status", resp.status},
                                       {"body", resp.body},
                                       {"content_type", resp.content_type}}
                                      .dump());
    return resp;
  }

  // -- routing ---------------------------------------------------------------

  Response route(const Request& req, const Caller& caller) {
    const auto seg = detail::split_path(req.path);
    const auto& m = req.method;
    auto is = [&](std::initializer_list<std::string_view> pattern) {
      if (seg.size() != pattern.size()) return false;
      std::size_t i = 0;
      for (auto p : pattern) {
        if (p != "*" && seg[i] != p) return false;
        ++i;
      }
      return true;
    };
    auto method = [&](std::string_view expected) {
      if (m != expected) throw MethodNotAllowed();
    };
    try {
      if (is({"documents"})) {
        method("POST");
        return json_response(201, put_document(req.body));
      }
      if (is({"documents", "*", "versions"})) {
        method("GET");
        const auto vs = versions(seg[1]);
        if (vs.empty()) throw NotFoundError("unknown document '" + seg[1] + "'");
        return json_response(200, json{{"doc_id", seg[1]}, {"versions", vs}});
      }
      if (is({"documents", "*", "versions", "*"})) {
        method("GET");
        return Response{200, serialize_document(get_document(seg[1], detail::parse_version(seg[3])))};
      }
      if (is({"documents", "*", "versions", "*", "report"})) {
        method("GET");
        return get_report(seg[1], detail::parse_version(seg[3]), caller);
      }
      if (is({"documents", "*", "versions", "*", "explanations", "*"})) {
        method("GET");
        auto ref = req.query.find("item_ref");
        if (ref == req.query.end()) throw ValidationError("item_ref query parameter is required");
        const auto v = detail::parse_version(seg[3]);
        return json_response(200, get_explanation(report(seg[1], v), get_document(seg[1], v),
                                                  analytic_kind_from_string(seg[5]), ref->second));
      }
      if (is({"documents", "*", "diff"})) {
        method("GET");
        const auto from = detail::parse_version(query_or_throw(req, "from"));
        const auto to = detail::parse_version(query_or_throw(req, "to"));
        return json_response(200, diff_to_json(diff(get_document(seg[1], from), get_document(seg[1], to))));
      }
      if (is({"documents", "*", "feedback-graph"})) {
        method("GET");
        return json_response(200, feedback_graph_for(seg[1]));
      }
      if (is({"documents", "*", "annotations"})) {
        if (m == "GET") return json_response(200, annotations_json(seg[1]));
        method("POST");
        return json_response(201, post_annotation(seg[1], req.body, caller));
      }
      if (is({"annotations", "*", "actions"})) {
        method("POST");
        return json_response(200, post_action(seg[1], req.body, caller));
      }
      if (is({"contests"})) {
        method("POST");
        return json_response(201, post_contest(req.body, caller));
      }
      if (is({"labels"})) {
        method("GET");
        return Response{200, contests_.export_labels(label_filter(req)), "application/x-ndjson"};
      }
      if (is({"rollup"})) {
        method("GET");
        return json_response(200, rollup_for(caller));
      }
      if (is({"notifications"})) {
        method("GET");
        return json_response(200, notifications_for(req, caller));
      }
    } catch (const MethodNotAllowed&) {
      return error_response(405, "method_not_allowed", m + " not allowed on " + req.path);
    }
    return error_response(404, "not_found", "no route for " + req.path);
  }

  struct MethodNotAllowed {};

  static const std::string& query_or_throw(const Request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) throw ValidationError(key + " query parameter is required");
    return it->second;
  }

  // -- handlers ----------------------------------------------------------------

  Response get_report(const std::string& doc_id, std::int64_t version, const Caller& caller) {
    std::string bytes = report_bytes(doc_id, version);
    if (caller.role == Role::instructor) return Response{200, std::move(bytes)};
    // Students see only their own member breakdown.
    AnalyticReport r = parse_report(bytes);
    for (auto it = r.member_breakdown.begin(); it != r.member_breakdown.end();)
      it = it->first == caller.user_id ? std::next(it) : r.member_breakdown.erase(it);
    return Response{200, serialize_report(r)};
  }

  json annotations_json(const std::string& doc_id) const {
    json out = json::array();
    for (const auto& a : annotation_state(doc_id).annotations) out.push_back(annotation_to_json(a));
    return json{{"doc_id", doc_id}, {"annotations", std::move(out)}};
  }

  json post_annotation(const std::string& doc_id, const std::string& body, const Caller& caller) {
    json j = detail::parse_json_text(body);
    if (!j.is_object()) throw SchemaError("", "expected an object");
    j["doc_id"] = doc_id;
    for (const char* k : {"id", "status", "touched_version", "resolved_version", "addressed_by"}) j.erase(k);
    Annotation a = annotation_from_json(j);
    a.author_id = caller.user_id;
    std::lock_guard lock(write_mu_);
    const auto c = chain(doc_id);
    const auto* created = c.find(a.created_version);
    if (!created) throw NotFoundError("no version " + std::to_string(a.created_version) + " of '" + doc_id + "'");
    for (const auto& id : a.target_element_ids)
      if (!created->find(id)) throw ValidationError("annotation targets unknown element '" + id + "'");
    validate_annotation(a);
    return annotation_to_json(annotations_.create(std::move(a)));
  }

  json post_action(const std::string& annotation_id, const std::string& body, const Caller& caller) {
    const json j = detail::parse_json_text(body);
    detail::ObjectReader o(j, "");
    o.allow_only({"action", "version"});
    const auto doc_id = annotations_.doc_of(annotation_id);
    if (!doc_id) throw NotFoundError("unknown annotation '" + annotation_id + "'");
    StatusAction s;
    s.annotation_id = annotation_id;
    s.action = detail::enum_from_string<StatusActionKind>(kStatusActionNames, o.string("action"), o.path("action"));
    check_action_allowed(to_string(s.action), caller.role, ctx_.config.instructor_only_actions);
    s.actor_id = caller.user_id;
    s.actor_role = caller.role;
    std::lock_guard lock(write_mu_);
    const auto c = chain(*doc_id);
    s.version = o.has("version") ? o.integer("version") : c.versions.back().version;
    if (!c.find(s.version)) throw NotFoundError("no version " + std::to_string(s.version) + " of '" + *doc_id + "'");
    auto actions = annotations_.actions(*doc_id);
    actions.push_back(s);
    // Replays with the new action first so illegal transitions are rejected before logging.
    update_statuses(c, annotations_.annotations(*doc_id), chain_diffs(c), actions);
    s = annotations_.append_action(*doc_id, s);
    const auto state = annotation_state(*doc_id);
    json out;
    for (const auto& a : state.annotations)
      if (a.id == annotation_id) out["annotation"] = annotation_to_json(a);
    for (const auto& n : state.notifications)
      if (n.annotation_id == annotation_id && n.actor_id == s.actor_id && n.timestamp == s.timestamp)
        out["notification"] = notification_to_json(n);
    return out;
  }

  json post_contest(const std::string& body, const Caller& caller) {
    check_action_allowed("contest", caller.role, ctx_.config.instructor_only_actions);
    json j = detail::parse_json_text(body);
    if (!j.is_object()) throw SchemaError("", "expected an object");
    for (const char* k : {"id", "timestamp", "author_id", "computed_value", "config_hash", "config_snapshot", "schema"})
      j.erase(k);
    ContestRecord r = contest_from_json(j);
    r.author_id = caller.user_id;
    validate_contest(r);
    bind_contest_to_report(r, report(r.doc_id, r.version));
    return contest_to_json(contests_.record(std::move(r)));
  }

  static LabelFilter label_filter(const Request& req) {
    LabelFilter f;
    if (auto it = req.query.find("doc_id"); it != req.query.end()) f.doc_id = it->second;
    if (auto it = req.query.find("analytic"); it != req.query.end()) f.analytic = analytic_kind_from_string(it->second);
    if (auto it = req.query.find("verdict"); it != req.query.end())
      f.verdict = detail::enum_from_string<Verdict>(kVerdictNames, it->second, "verdict");
    return f;
  }

  json feedback_graph_for(const std::string& doc_id) {
    const auto c = chain(doc_id);
    std::vector<AnalyticReport> reports;
    for (const auto& v : c.versions) reports.push_back(report(doc_id, v.version));
    return feedback_graph(c, annotation_state(doc_id).annotations, reports);
  }

  json rollup_for(const Caller& caller) {
    std::vector<AnalyticReport> reports;
    std::map<std::string, std::vector<Annotation>> annotations;
    for (const auto& d : doc_ids()) {
      for (auto v : versions(d)) reports.push_back(report(d, v));
      annotations[d] = annotation_state(d).annotations;
    }
    CourseRollup r = rollup(reports, annotations, ctx_.config.recurrent_threshold);
    if (caller.role == Role::student) {
      std::set<std::string> my_teams;
      for (const auto& rep : reports) {
        const auto s = report_students(rep);
        if (std::find(s.begin(), s.end(), caller.user_id) != s.end()) my_teams.insert(report_team(rep));
      }
      std::erase_if(r.students, [&](const auto& kv) { return kv.first != caller.user_id; });
      std::erase_if(r.teams, [&](const auto& kv) { return !my_teams.count(kv.first); });
    }
    return rollup_to_json(r);
  }

  json notifications_for(const Request& req, const Caller& caller) {
    std::string recipient = caller.user_id;
    if (auto it = req.query.find("recipient"); it != req.query.end()) {
      if (caller.role != Role::instructor && it->second != caller.user_id)
        throw AuthorizationError("students may only read their own notifications");
      recipient = it->second;
    }
    std::vector<Notification> all;
    for (const auto& d : annotations_.doc_ids())
      for (auto& n : annotation_state(d).notifications)
        if (n.recipient_id == recipient) all.push_back(std::move(n));
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return std::tie(a.timestamp, a.annotation_id) < std::tie(b.timestamp, b.annotation_id);
    });
    json out = json::array();
    for (const auto& n : all) out.push_back(notification_to_json(n));
    return json{{"recipient_id", recipient}, {"notifications", std::move(out)}};
  }

  // -- storage layout ------------------------------------------------------------

  std::filesystem::path ref_path(const std::string& doc_id, std::int64_t version) const {
    return config_.data_dir / "refs" / storage::safe_name(doc_id) / ("v" + std::to_string(version));
  }

  std::string cache_key(const DesignDocument& doc) const {
    std::string embeddings = "none";
    if (ctx_.embeddings)
      embeddings = ctx_.embeddings->source_label() + "/" + std::to_string(ctx_.embeddings->dimension()) + "/" +
                   std::to_string(ctx_.embeddings->size());
    return sha256_hex(document_hash(doc) + "\n" + config_hash_ + "\n" + embeddings);
  }

  ServiceConfig config_;
  AnalysisContext ctx_;
  std::string config_hash_;
  ContestStore contests_;
  AnnotationStore annotations_;
  std::mutex write_mu_;
  std::mutex idempotency_mu_;
  std::shared_mutex cache_mu_;
  std::map<std::string, std::string> cache_;
};

}  // namespace dca
