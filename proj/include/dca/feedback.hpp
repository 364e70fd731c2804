#pragma once

// Feedback tracking: version diffs, element-anchored annotations with a
// status machine driven by diffs and explicit human actions, contest records
// (human verdicts on analytic outputs) and the labeled-data export.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dca/config.hpp"
#include "dca/model.hpp"
#include "dca/report.hpp"
#include "dca/storage.hpp"

namespace dca {

inline constexpr std::string_view kLabelSchema = "dca.labels/v1";

enum class Role { instructor, student };
inline constexpr std::array<std::string_view, 2> kRoleNames{"instructor", "student"};
inline std::string_view to_string(Role r) { return kRoleNames[static_cast<int>(r)]; }

/// Throws AuthorizationError when `action` is instructor-only and `role` is not instructor.
inline void check_action_allowed(std::string_view action, Role role, const std::vector<std::string>& instructor_only) {
  if (role == Role::instructor) return;
  if (std::find(instructor_only.begin(), instructor_only.end(), action) != instructor_only.end())
    throw AuthorizationError("action '" + std::string(action) + "' requires the instructor role");
}

inline std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

using Clock = std::function<std::string()>;

// ---------------------------------------------------------------------------
// Version diffs

struct AttributeDelta {
  std::string field;  // dotted path, e.g. "bbox.x" or "style.fill"
  json old_value;     // null when absent
  json new_value;

  bool operator==(const AttributeDelta&) const = default;
};

struct ElementChange {
  std::string element_id;
  std::vector<AttributeDelta> deltas;  // sorted by field

  bool operator==(const ElementChange&) const = default;
};

struct VersionDiff {
  std::string doc_id;
  std::int64_t from_version = 0;
  std::int64_t to_version = 0;
  std::vector<std::string> added;
  std::vector<std::string> removed;
  std::vector<ElementChange> modified;

  bool empty() const { return added.empty() && removed.empty() && modified.empty(); }
  bool operator==(const VersionDiff&) const = default;
};

/// Element fields flattened one level: {"bbox.x": 10, "style.fill": [..], "kind": "text", ...}.
inline std::map<std::string, json> flatten_element(const Element& e) {
  std::map<std::string, json> out;
  const json j = element_to_json(e);
  for (const auto& [key, value] : j.items()) {
    if (key == "id") continue;
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) out[key + "." + sub] = v;
    } else {
      out[key] = value;
    }
  }
  return out;
}

/// Identity-based diff on element ids. `from.version == to.version` is allowed (content comparison).
inline VersionDiff diff(const DesignDocument& from, const DesignDocument& to) {
  if (from.doc_id != to.doc_id)
    throw ValidationError("cannot diff '" + from.doc_id + "' against '" + to.doc_id + "'");
  if (from.version > to.version)
    throw ValidationError("diff runs forward: version " + std::to_string(from.version) + " is after " +
                          std::to_string(to.version));
  VersionDiff d{from.doc_id, from.version, to.version, {}, {}, {}};
  std::map<std::string, const Element*> before, after;
  for (const auto& e : from.elements) before[e.id] = &e;
  for (const auto& e : to.elements) after[e.id] = &e;
  for (const auto& [id, e] : after)
    if (!before.count(id)) d.added.push_back(id);
  for (const auto& [id, e] : before) {
    auto it = after.find(id);
    if (it == after.end()) {
      d.removed.push_back(id);
      continue;
    }
    const auto a = flatten_element(*e);
    const auto b = flatten_element(*it->second);
    std::set<std::string> fields;
    for (const auto& [k, v] : a) fields.insert(k);
    for (const auto& [k, v] : b) fields.insert(k);
    ElementChange change{id, {}};
    for (const auto& f : fields) {
      const json ov = a.count(f) ? a.at(f) : json(nullptr);
      const json nv = b.count(f) ? b.at(f) : json(nullptr);
      if (ov != nv) change.deltas.push_back({f, ov, nv});
    }
    if (!change.deltas.empty()) d.modified.push_back(std::move(change));
  }
  return d;
}

inline std::set<std::string> apply_diff(std::set<std::string> ids, const VersionDiff& d) {
  for (const auto& id : d.removed) ids.erase(id);
  for (const auto& id : d.added) ids.insert(id);
  return ids;
}

/// Applies one element's deltas to its flattened fields.
inline std::map<std::string, json> apply_deltas(std::map<std::string, json> fields, const ElementChange& c) {
  for (const auto& delta : c.deltas) {
    if (delta.new_value.is_null())
      fields.erase(delta.field);
    else
      fields[delta.field] = delta.new_value;
  }
  return fields;
}

inline json diff_to_json(const VersionDiff& d) {
  json modified = json::array();
  for (const auto& m : d.modified) {
    json deltas = json::array();
    for (const auto& delta : m.deltas)
      deltas.push_back(json{{"field", delta.field}, {"old", delta.old_value}, {"new", delta.new_value}});
    modified.push_back(json{{"element_id", m.element_id}, {"deltas", std::move(deltas)}});
  }
  return json{{"doc_id", d.doc_id},   {"from_version", d.from_version}, {"to_version", d.to_version},
              {"added", d.added},     {"removed", d.removed},           {"modified", std::move(modified)}};
}

// ---------------------------------------------------------------------------
// Annotations

enum class AnnotationKind { redline, digitized_verbal, analytic_generated };
inline constexpr std::array<std::string_view, 3> kAnnotationKindNames{"redline", "digitized_verbal",
                                                                      "analytic_generated"};
inline std::string_view to_string(AnnotationKind k) { return kAnnotationKindNames[static_cast<int>(k)]; }

enum class AnnotationStatus { open, touched, addressed, validated };
inline constexpr std::array<std::string_view, 4> kAnnotationStatusNames{"open", "touched", "addressed", "validated"};
inline std::string_view to_string(AnnotationStatus s) { return kAnnotationStatusNames[static_cast<int>(s)]; }

struct Annotation {
  std::string id;
  std::string doc_id;
  std::int64_t created_version = 0;
  std::string author_id;
  AnnotationKind kind = AnnotationKind::redline;
  std::vector<std::string> target_element_ids;
  std::optional<Rect> target_region;
  std::string body;
  AnnotationStatus status = AnnotationStatus::open;
  std::optional<std::int64_t> touched_version;
  std::optional<std::int64_t> resolved_version;
  std::optional<std::string> addressed_by;
  std::optional<std::string> category;
  std::optional<std::string> source_item_ref;  // analytic item that generated it
  bool flag = false;

  bool operator==(const Annotation&) const = default;
};

inline void validate_annotation(const Annotation& a) {
  if (a.target_element_ids.empty() && !a.target_region)
    throw ValidationError("annotation needs target_element_ids or target_region");
  if (a.target_region && !(a.target_region->w > 0 && a.target_region->h > 0))
    throw ValidationError("annotation target_region must have positive area");
  if (a.resolved_version && *a.resolved_version < a.created_version)
    throw ValidationError("resolved_version precedes created_version");
  if ((a.status == AnnotationStatus::addressed || a.status == AnnotationStatus::validated) && !a.resolved_version)
    throw ValidationError("addressed or validated annotation lacks resolved_version");
  if (a.author_id.empty()) throw ValidationError("annotation author_id is empty");
}

inline json annotation_to_json(const Annotation& a) {
  json j{{"id", a.id},
         {"doc_id", a.doc_id},
         {"created_version", a.created_version},
         {"author_id", a.author_id},
         {"kind", to_string(a.kind)},
         {"target_element_ids", a.target_element_ids},
         {"body", a.body},
         {"status", to_string(a.status)},
         {"flag", a.flag}};
  j["target_region"] = a.target_region ? rect_to_json(*a.target_region) : json(nullptr);
  j["touched_version"] = a.touched_version ? json(*a.touched_version) : json(nullptr);
  j["resolved_version"] = a.resolved_version ? json(*a.resolved_version) : json(nullptr);
  j["addressed_by"] = a.addressed_by ? json(*a.addressed_by) : json(nullptr);
  j["category"] = a.category ? json(*a.category) : json(nullptr);
  j["source_item_ref"] = a.source_item_ref ? json(*a.source_item_ref) : json(nullptr);
  return j;
}

inline Annotation annotation_from_json(const json& j, const std::string& path = "") {
  detail::ObjectReader o(j, path);
  o.allow_only({"id", "doc_id", "created_version", "author_id", "kind", "target_element_ids", "target_region", "body",
                "status", "touched_version", "resolved_version", "addressed_by", "category", "source_item_ref",
                "flag"});
  Annotation a;
  a.id = o.string_or("id", "");
  a.doc_id = o.string("doc_id");
  a.created_version = o.integer("created_version");
  a.author_id = o.string_or("author_id", "");
  a.kind = detail::enum_from_string<AnnotationKind>(kAnnotationKindNames, o.string_or("kind", "redline"),
                                                    o.path("kind"));
  a.target_element_ids = o.string_list_or_empty("target_element_ids");
  if (o.has("target_region") && !o.at("target_region").is_null())
    a.target_region = rect_from_json(o.object("target_region"));
  a.body = o.string_or("body", "");
  a.status = detail::enum_from_string<AnnotationStatus>(kAnnotationStatusNames, o.string_or("status", "open"),
                                                        o.path("status"));
  auto opt_int = [&](std::string_view key) -> std::optional<std::int64_t> {
    if (!o.has(key) || o.at(key).is_null()) return std::nullopt;
    return o.integer(key);
  };
  a.touched_version = opt_int("touched_version");
  a.resolved_version = opt_int("resolved_version");
  a.addressed_by = o.optional_string("addressed_by");
  a.category = o.optional_string("category");
  a.source_item_ref = o.optional_string("source_item_ref");
  a.flag = o.has("flag") ? o.boolean("flag") : false;
  return a;
}

/// Element ids an annotation points at in `doc`: explicit ids first, else
/// every element whose box lies at least half inside the target region.
inline std::vector<std::string> anchored_elements(const Annotation& a, const DesignDocument& doc) {
  if (!a.target_element_ids.empty()) return a.target_element_ids;
  std::vector<std::string> out;
  if (!a.target_region) return out;
  for (const auto& e : doc.elements) {
    const double area = e.bbox.area();
    if (area > 0 && a.target_region->intersection_area(e.bbox) >= 0.5 * area) out.push_back(e.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

enum class StatusActionKind { mark_addressed, validate };
inline constexpr std::array<std::string_view, 2> kStatusActionNames{"mark_addressed", "validate"};
inline std::string_view to_string(StatusActionKind k) { return kStatusActionNames[static_cast<int>(k)]; }

struct StatusAction {
  std::string annotation_id;
  StatusActionKind action = StatusActionKind::mark_addressed;
  std::string actor_id;
  Role actor_role = Role::student;
  std::int64_t version = 0;  // document version the action refers to
  std::string timestamp;

  bool operator==(const StatusAction&) const = default;
};

inline json status_action_to_json(const StatusAction& s) {
  return json{{"annotation_id", s.annotation_id}, {"action", to_string(s.action)},
              {"actor_id", s.actor_id},           {"actor_role", to_string(s.actor_role)},
              {"version", s.version},             {"timestamp", s.timestamp}};
}

inline StatusAction status_action_from_json(const json& j, const std::string& path = "") {
  detail::ObjectReader o(j, path);
  o.allow_only({"annotation_id", "action", "actor_id", "actor_role", "version", "timestamp"});
  StatusAction s;
  s.annotation_id = o.string_or("annotation_id", "");
  s.action = detail::enum_from_string<StatusActionKind>(kStatusActionNames, o.string("action"), o.path("action"));
  s.actor_id = o.string_or("actor_id", "");
  s.actor_role = detail::enum_from_string<Role>(kRoleNames, o.string_or("actor_role", "student"), o.path("actor_role"));
  s.version = o.integer("version");
  s.timestamp = o.string_or("timestamp", "");
  return s;
}

struct Notification {
  std::string annotation_id;
  std::string doc_id;
  AnnotationStatus from = AnnotationStatus::open;
  AnnotationStatus to = AnnotationStatus::open;
  std::int64_t version = 0;
  std::string recipient_id;
  std::string actor_id;  // "system" for diff-driven transitions
  std::string timestamp;

  bool operator==(const Notification&) const = default;
};

inline json notification_to_json(const Notification& n) {
  return json{{"annotation_id", n.annotation_id}, {"doc_id", n.doc_id},       {"from", to_string(n.from)},
              {"to", to_string(n.to)},            {"version", n.version},     {"recipient_id", n.recipient_id},
              {"actor_id", n.actor_id},           {"timestamp", n.timestamp}};
}

/// One explicit transition. Throws ConflictError when the status machine forbids it.
inline Notification apply_action(Annotation& a, const StatusAction& s) {
  if (s.version < a.created_version)
    throw ValidationError("action on '" + a.id + "' refers to version " + std::to_string(s.version) +
                          ", before the annotation existed");
  const AnnotationStatus from = a.status;
  Notification n{a.id, a.doc_id, from, from, s.version, a.author_id, s.actor_id, s.timestamp};
  switch (s.action) {
    case StatusActionKind::mark_addressed:
      if (from != AnnotationStatus::open && from != AnnotationStatus::touched)
        throw ConflictError("cannot mark '" + a.id + "' addressed while it is " + std::string(to_string(from)));
      a.status = AnnotationStatus::addressed;
      a.resolved_version = s.version;
      a.addressed_by = s.actor_id;
      break;
    case StatusActionKind::validate:
      if (from != AnnotationStatus::addressed)
        throw ConflictError("cannot validate '" + a.id + "' while it is " + std::string(to_string(from)));
      a.status = AnnotationStatus::validated;
      n.recipient_id = a.addressed_by.value_or(a.author_id);
      break;
  }
  n.to = a.status;
  return n;
}

struct StatusUpdate {
  std::vector<Annotation> annotations;
  std::vector<Notification> notifications;
};

/// Replays the version chain and explicit actions over the annotations.
/// Diffs touch open annotations whose anchored elements were modified or
/// removed; only explicit actions address or validate. At equal versions the
/// diff is applied before actions.
inline StatusUpdate update_statuses(const VersionChain& chain, std::vector<Annotation> annotations,
                                    const std::vector<VersionDiff>& diffs, const std::vector<StatusAction>& actions) {
  if (chain.versions.size() >= 2 && diffs.size() != chain.versions.size() - 1)
    throw ValidationError("diffs must cover every consecutive chain step");
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (i + 1 >= chain.versions.size() || diffs[i].from_version != chain.versions[i].version ||
        diffs[i].to_version != chain.versions[i + 1].version)
      throw ValidationError("diff " + std::to_string(i) + " does not match the chain step");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    validate_annotation(a);
    if (!chain.doc_id.empty() && a.doc_id != chain.doc_id)
      throw ValidationError("annotation '" + a.id + "' belongs to '" + a.doc_id + "'");
    if (const auto* created = chain.find(a.created_version)) {
      for (const auto& id : a.target_element_ids)
        if (!created->find(id))
          throw ValidationError("annotation '" + a.id + "' targets unknown element '" + id + "'");
    }
    if (!index.emplace(a.id, i).second) throw ValidationError("duplicate annotation id '" + a.id + "'");
  }
  for (const auto& s : actions)
    if (!index.count(s.annotation_id)) throw NotFoundError("unknown annotation '" + s.annotation_id + "'");

  StatusUpdate out;
  std::vector<std::size_t> order(actions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return actions[l].version < actions[r].version; });
  std::size_t next_action = 0;
  auto run_actions_until = [&](std::optional<std::int64_t> version) {
    while (next_action < order.size() && (!version || actions[order[next_action]].version < *version)) {
      const auto& s = actions[order[next_action++]];
      out.notifications.push_back(apply_action(annotations[index.at(s.annotation_id)], s));
    }
  };
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    const auto& d = diffs[i];
    run_actions_until(d.to_version);
    std::set<std::string> hit(d.removed.begin(), d.removed.end());
    for (const auto& m : d.modified) hit.insert(m.element_id);
    for (auto& a : annotations) {
      if (a.status != AnnotationStatus::open || d.from_version < a.created_version) continue;
      const auto anchored = anchored_elements(a, chain.versions[i]);
      if (std::none_of(anchored.begin(), anchored.end(), [&](const auto& id) { return hit.count(id) > 0; }))
        continue;
      a.status = AnnotationStatus::touched;
      a.touched_version = d.to_version;
      out.notifications.push_back({a.id, a.doc_id, AnnotationStatus::open, AnnotationStatus::touched, d.to_version,
                                   a.author_id, "system", chain.versions[i + 1].created_at});
    }
  }
  run_actions_until(std::nullopt);
  out.annotations = std::move(annotations);
  return out;
}

inline std::vector<VersionDiff> chain_diffs(const VersionChain& chain) {
  std::vector<VersionDiff> out;
  for (std::size_t i = 1; i < chain.versions.size(); ++i) out.push_back(diff(chain.versions[i - 1], chain.versions[i]));
  return out;
}

struct StatusCounts {
  int total = 0;
  int touched = 0;    // touched or beyond
  int addressed = 0;  // addressed or beyond
  int validated = 0;
};

inline StatusCounts status_counts(const std::vector<Annotation>& annotations) {
  StatusCounts c;
  for (const auto& a : annotations) {
    ++c.total;
    if (a.status != AnnotationStatus::open) ++c.touched;
    if (a.status == AnnotationStatus::addressed || a.status == AnnotationStatus::validated) ++c.addressed;
    if (a.status == AnnotationStatus::validated) ++c.validated;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Contest records and label export

enum class Verdict { valid, invalid };
inline constexpr std::array<std::string_view, 2> kVerdictNames{"valid", "invalid"};
inline std::string_view to_string(Verdict v) { return kVerdictNames[static_cast<int>(v)]; }

struct ContestRecord {
  std::string id;
  std::string doc_id;
  std::int64_t version = 0;
  AnalyticKind analytic = AnalyticKind::fluency;
  std::optional<std::string> item_ref;
  json computed_value;
  Verdict verdict = Verdict::valid;
  std::optional<json> user_value;
  std::string rationale;
  std::string author_id;
  std::string timestamp;
  std::string config_hash;  // binds the verdict to the exact parameters
  json config_snapshot;

  bool operator==(const ContestRecord&) const = default;
};

inline void validate_contest(const ContestRecord& r) {
  const bool blank = std::all_of(r.rationale.begin(), r.rationale.end(), [](unsigned char c) { return std::isspace(c); });
  if (r.verdict == Verdict::invalid && blank) throw ValidationError("an invalid verdict requires a rationale");
  if (r.verdict == Verdict::valid && r.user_value) throw ValidationError("user_value is only allowed with an invalid verdict");
  if (r.doc_id.empty()) throw ValidationError("contest lacks doc_id");
  if (r.author_id.empty()) throw ValidationError("contest lacks author_id");
}

/// Fills the computed value and config binding from the report the verdict refers to.
inline void bind_contest_to_report(ContestRecord& r, const AnalyticReport& report) {
  if (r.doc_id != report.doc_id || r.version != report.version)
    throw ValidationError("contest does not refer to this report");
  auto it = report.results.find(r.analytic);
  if (it == report.results.end())
    throw NotFoundError("report has no '" + std::string(to_string(r.analytic)) + "' result");
  r.computed_value = it->second.score;
  if (r.item_ref) {
    const json* found = nullptr;
    for (const auto& item : it->second.payload["items"])
      if (item["ref"] == *r.item_ref) found = &item;
    if (!found) {
      if (r.item_ref->substr(0, 12) != item_ref_prefix(report.config_hash))
        throw StaleReferenceError("item reference '" + *r.item_ref + "' was issued under a different configuration");
      throw NotFoundError("no item '" + *r.item_ref + "' in " + std::string(to_string(r.analytic)));
    }
    r.computed_value = *found;
  }
  r.config_hash = report.config_hash;
  r.config_snapshot = it->second.config;
}

inline json contest_to_json(const ContestRecord& r) {
  json j{{"schema", kLabelSchema},
         {"id", r.id},
         {"doc_id", r.doc_id},
         {"version", r.version},
         {"analytic", to_string(r.analytic)},
         {"computed_value", r.computed_value},
         {"verdict", to_string(r.verdict)},
         {"rationale", r.rationale},
         {"author_id", r.author_id},
         {"timestamp", r.timestamp},
         {"config_hash", r.config_hash},
         {"config_snapshot", r.config_snapshot}};
  j["item_ref"] = r.item_ref ? json(*r.item_ref) : json(nullptr);
  j["user_value"] = r.user_value ? *r.user_value : json(nullptr);
  return j;
}

inline ContestRecord contest_from_json(const json& j, const std::string& path = "") {
  detail::ObjectReader o(j, path);
  o.allow_only({"schema", "id", "doc_id", "version", "analytic", "item_ref", "computed_value", "verdict", "user_value",
                "rationale", "author_id", "timestamp", "config_hash", "config_snapshot"});
  if (o.has("schema") && o.string("schema") != kLabelSchema) throw SchemaError(o.path("schema"), "unsupported schema");
  ContestRecord r;
  r.id = o.string_or("id", "");
  r.doc_id = o.string("doc_id");
  r.version = o.integer("version");
  r.analytic = detail::enum_from_string<AnalyticKind>(kAnalyticKindNames, o.string("analytic"), o.path("analytic"));
  r.item_ref = o.optional_string("item_ref");
  r.computed_value = o.has("computed_value") ? o.at("computed_value") : json(nullptr);
  r.verdict = detail::enum_from_string<Verdict>(kVerdictNames, o.string("verdict"), o.path("verdict"));
  if (o.has("user_value") && !o.at("user_value").is_null()) r.user_value = o.at("user_value");
  r.rationale = o.string_or("rationale", "");
  r.author_id = o.string_or("author_id", "");
  r.timestamp = o.string_or("timestamp", "");
  r.config_hash = o.string_or("config_hash", "");
  r.config_snapshot = o.has("config_snapshot") ? o.at("config_snapshot") : json(nullptr);
  return r;
}

struct LabelFilter {
  std::optional<std::string> doc_id;
  std::optional<AnalyticKind> analytic;
  std::optional<Verdict> verdict;

  bool matches(const ContestRecord& r) const {
    return (!doc_id || r.doc_id == *doc_id) && (!analytic || r.analytic == *analytic) &&
           (!verdict || r.verdict == *verdict);
  }
};

/// NDJSON, one record per line, ordered by timestamp then id.
inline std::string export_labels(std::vector<ContestRecord> records, const LabelFilter& filter = {}) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
  });
  std::string out;
  for (const auto& r : records)
    if (filter.matches(r)) out += contest_to_json(r).dump() + "\n";
  return out;
}

inline std::vector<ContestRecord> import_labels(std::string_view text) {
  std::vector<ContestRecord> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(start, end - start);
    if (!line.empty()) {
      const json j = detail::parse_json_text(line);
      out.push_back(contest_from_json(j, "/" + std::to_string(line_no - 1)));
    }
    start = end + 1;
  }
  return out;
}

namespace detail {

inline std::string sequence_id(char prefix, std::uint64_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%08llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

inline std::uint64_t sequence_of(const std::string& id) {
  return id.size() > 1 ? std::stoull(id.substr(1)) : 0;
}

}  // namespace detail

/// Append-only contest log, one NDJSON file per doc_id. Ids and timestamps
/// are assigned on insert and never decrease, so every export is a prefix of
/// the next one.
class ContestStore {
 public:
  explicit ContestStore(std::filesystem::path dir, Clock clock = utc_timestamp_now)
      : dir_(std::move(dir)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.path().extension() != ".ndjson") continue;
      for (const auto& j : storage::read_log(entry.path())) {
        auto r = contest_from_json(j);
        next_ = std::max(next_, detail::sequence_of(r.id) + 1);
        last_timestamp_ = std::max(last_timestamp_, r.timestamp);
        records_.push_back(std::move(r));
      }
    }
  }

  /// Validates, stamps and persists `r`; returns the stored record.
  ContestRecord record(ContestRecord r) {
    validate_contest(r);
    std::lock_guard lock(mu_);
    r.id = detail::sequence_id('c', next_);
    r.timestamp = std::max(clock_(), last_timestamp_);
    storage::append_line(dir_ / (storage::safe_name(r.doc_id) + ".ndjson"), contest_to_json(r).dump());
    ++next_;
    last_timestamp_ = r.timestamp;
    records_.push_back(r);
    return r;
  }

  std::vector<ContestRecord> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  std::string export_labels(const LabelFilter& filter = {}) const { return dca::export_labels(records(), filter); }

 private:
  std::filesystem::path dir_;
  Clock clock_;
  mutable std::mutex mu_;
  std::vector<ContestRecord> records_;
  std::uint64_t next_ = 1;
  std::string last_timestamp_;
};

/// Append-only annotation event log, one NDJSON file per doc_id. Statuses are
/// not stored; they are derived by replaying the chain and the logged actions.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path dir, Clock clock = utc_timestamp_now)
      : dir_(std::move(dir)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.path().extension() != ".ndjson") continue;
      for (const auto& j : storage::read_log(entry.path())) load_event(j);
    }
  }

  Annotation create(Annotation a) {
    a.status = AnnotationStatus::open;
    a.touched_version.reset();
    a.resolved_version.reset();
    a.addressed_by.reset();
    validate_annotation(a);
    std::lock_guard lock(mu_);
    a.id = detail::sequence_id('a', next_);
    storage::append_line(path_for(a.doc_id), json{{"event", "annotation"}, {"annotation", annotation_to_json(a)}}.dump());
    ++next_;
    owner_[a.id] = a.doc_id;
    docs_[a.doc_id].annotations.push_back(a);
    return a;
  }

  /// Persists an action already checked against the replayed state.
  StatusAction append_action(const std::string& doc_id, StatusAction s) {
    std::lock_guard lock(mu_);
    if (s.timestamp.empty()) s.timestamp = clock_();
    storage::append_line(path_for(doc_id), json{{"event", "action"}, {"action", status_action_to_json(s)}}.dump());
    docs_[doc_id].actions.push_back(s);
    return s;
  }

  std::vector<Annotation> annotations(const std::string& doc_id) const {
    std::lock_guard lock(mu_);
    auto it = docs_.find(doc_id);
    return it == docs_.end() ? std::vector<Annotation>{} : it->second.annotations;
  }

  std::vector<StatusAction> actions(const std::string& doc_id) const {
    std::lock_guard lock(mu_);
    auto it = docs_.find(doc_id);
    return it == docs_.end() ? std::vector<StatusAction>{} : it->second.actions;
  }

  std::optional<std::string> doc_of(const std::string& annotation_id) const {
    std::lock_guard lock(mu_);
    auto it = owner_.find(annotation_id);
    if (it == owner_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> doc_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, d] : docs_) out.push_back(id);
    return out;
  }

 private:
  struct DocLog {
    std::vector<Annotation> annotations;
    std::vector<StatusAction> actions;
  };

  std::filesystem::path path_for(const std::string& doc_id) const {
    return dir_ / (storage::safe_name(doc_id) + ".ndjson");
  }

  void load_event(const json& j) {
    const std::string kind = j.at("event").get<std::string>();
    if (kind == "annotation") {
      auto a = annotation_from_json(j.at("annotation"), "/annotation");
      next_ = std::max(next_, detail::sequence_of(a.id) + 1);
      owner_[a.id] = a.doc_id;
      docs_[a.doc_id].annotations.push_back(std::move(a));
    } else if (kind == "action") {
      auto s = status_action_from_json(j.at("action"), "/action");
      docs_[owner_.at(s.annotation_id)].actions.push_back(std::move(s));
    } else {
      throw SchemaError("/event", "unknown event '" + kind + "'");
    }
  }

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, DocLog> docs_;
  std::map<std::string, std::string> owner_;
  std::uint64_t next_ = 1;
};

// ---------------------------------------------------------------------------
// Feedback graph

/// Node-link view of one document's versions, elements, findings and
/// annotations. References that do not resolve are listed under "dangling".
inline json feedback_graph(const VersionChain& chain, const std::vector<Annotation>& annotations,
                           const std::vector<AnalyticReport>& reports) {
  json nodes = json::array();
  json edges = json::array();
  json dangling = json::array();
  std::set<std::string> node_ids;
  auto add_node = [&](const std::string& id, json extra) {
    if (!node_ids.insert(id).second) return;
    extra["id"] = id;
    nodes.push_back(std::move(extra));
  };
  auto add_edge = [&](const std::string& from, const std::string& to, std::string_view type) {
    edges.push_back(json{{"from", from}, {"to", to}, {"type", type}});
  };
  auto version_node = [](std::int64_t v) { return "version:" + std::to_string(v); };
  auto element_node = [](const std::string& id) { return "element:" + id; };

  for (std::size_t i = 0; i < chain.versions.size(); ++i) {
    const auto& v = chain.versions[i];
    add_node(version_node(v.version), json{{"type", "version"}, {"version", v.version}});
  }
  for (std::size_t i = 0; i < chain.versions.size(); ++i) {
    const auto& v = chain.versions[i];
    for (const auto& e : v.elements) {
      add_node(element_node(e.id), json{{"type", "element"}, {"element_id", e.id}});
      add_edge(version_node(v.version), element_node(e.id), "contains");
    }
    if (i > 0) add_edge(version_node(v.version), version_node(chain.versions[i - 1].version), "supersedes");
  }

  std::map<std::string, std::string> finding_nodes;  // item ref -> node id
  for (const auto& r : reports) {
    if (!chain.find(r.version)) {
      dangling.push_back(json{{"from", "report"}, {"to", version_node(r.version)}, {"reason", "unknown version"}});
      continue;
    }
    for (const auto& [kind, res] : r.results)
      for (const auto& item : res.payload["items"]) {
        if (!item.contains("category")) continue;
        const std::string ref = item["ref"].get<std::string>();
        const std::string id = "finding:" + std::to_string(r.version) + "/" + ref;
        add_node(id, json{{"type", "finding"},
                          {"analytic", to_string(kind)},
                          {"category", item["category"]},
                          {"item_ref", ref},
                          {"version", r.version}});
        finding_nodes[ref] = id;
        add_edge(id, version_node(r.version), "found_in");
        for (const auto& el : item["element_ids"]) add_edge(id, element_node(el.get<std::string>()), "flags");
      }
  }

  for (const auto& a : annotations) {
    const std::string id = "annotation:" + a.id;
    add_node(id, json{{"type", "annotation"},
                      {"annotation_id", a.id},
                      {"status", to_string(a.status)},
                      {"kind", to_string(a.kind)},
                      {"flag", a.flag}});
    const auto* created = chain.find(a.created_version);
    if (!created) {
      dangling.push_back(json{{"from", id}, {"to", version_node(a.created_version)}, {"reason", "unknown version"}});
    } else {
      for (const auto& target : anchored_elements(a, *created)) {
        if (node_ids.count(element_node(target)))
          add_edge(id, element_node(target), "targets");
        else
          dangling.push_back(json{{"from", id}, {"to", element_node(target)}, {"reason", "unknown element"}});
      }
    }
    if (a.source_item_ref) {
      auto it = finding_nodes.find(*a.source_item_ref);
      if (it != finding_nodes.end())
        add_edge(id, it->second, "generated_by");
      else
        dangling.push_back(json{{"from", id}, {"to", *a.source_item_ref}, {"reason", "unknown finding"}});
    }
    if (a.resolved_version) {
      if (node_ids.count(version_node(*a.resolved_version)))
        add_edge(id, version_node(*a.resolved_version), "resolved_at");
      else
        dangling.push_back(
            json{{"from", id}, {"to", version_node(*a.resolved_version)}, {"reason", "unknown version"}});
    }
  }
  return json{{"doc_id", chain.doc_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)},
              {"dangling", std::move(dangling)}};
}

}  // namespace dca
