#pragma once

// Analytic reports: runs the enabled analytics over one document version and
// packages each result with its explanation items (the elements, clusters and
// cell regions that produced it). Reports never combine analytics into one
// number; each analytic stands on its own.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dca/config.hpp"
#include "dca/consistency.hpp"
#include "dca/contrast.hpp"
#include "dca/hash.hpp"
#include "dca/ideas.hpp"
#include "dca/model.hpp"
#include "dca/semantics.hpp"
#include "dca/spatial.hpp"

namespace dca {

inline constexpr std::string_view kReportSchema = "dca.report/v1";
inline constexpr std::string_view kUnattributed = "unattributed";

struct AnalyticResult {
  AnalyticKind kind = AnalyticKind::fluency;
  double score = 0;
  json payload;                           // analytic-specific; always carries an "items" array
  std::vector<std::string> element_refs;  // union of item element ids, sorted
  json config;                            // config snapshot the result was computed with

  bool operator==(const AnalyticResult&) const = default;
};

using ResultMap = std::map<AnalyticKind, AnalyticResult>;

struct MemberBreakdown {
  double element_share = 0;
  double idea_share = 0;
  int element_count = 0;
  int idea_count = 0;
  ResultMap results;

  bool operator==(const MemberBreakdown&) const = default;
};

struct AnalyticReport {
  std::string doc_id;
  std::int64_t version = 0;
  std::string document_hash;
  std::string config_hash;
  std::string team_id;
  std::vector<std::string> author_ids;
  ResultMap results;
  std::map<std::string, MemberBreakdown> member_breakdown;
  std::vector<std::string> warnings;

  bool operator==(const AnalyticReport&) const = default;
};

/// Everything analyze() needs besides the document. Built once, shared read-only.
struct AnalysisContext {
  EngineConfig config;
  IdeaConfig ideas;
  std::shared_ptr<const EmbeddingTable> embeddings;

  static AnalysisContext make(EngineConfig config, std::shared_ptr<const EmbeddingTable> embeddings = nullptr) {
    AnalysisContext ctx;
    ctx.ideas = make_idea_config(config);
    ctx.config = std::move(config);
    ctx.embeddings = std::move(embeddings);
    return ctx;
  }
};

inline std::string document_hash(const DesignDocument& doc) { return sha256_hex(document_to_json(doc).dump()); }

/// Item references carry the first 12 hex digits of the config hash they were minted under.
inline std::string item_ref_prefix(const std::string& config_hash) { return config_hash.substr(0, 12); }

// ---------------------------------------------------------------------------
// Per-analytic packaging

namespace detail {

inline std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void finalize_refs(AnalyticResult& r) {
  std::vector<std::string> refs;
  for (const auto& item : r.payload["items"])
    for (const auto& id : item["element_ids"]) refs.push_back(id.get<std::string>());
  r.element_refs = sorted_unique(std::move(refs));
}

inline json element_counts_json(const std::map<ElementKind, int>& counts) {
  json j = json::object();
  for (const auto& [k, n] : counts) j[std::string(to_string(k))] = n;
  return j;
}

inline json cluster_items(const ClusterNode& node, const std::string& path, const std::string& prefix) {
  json items = json::array();
  json item{{"ref", prefix + "/cluster/" + path},
            {"type", "cluster"},
            {"level", node.level},
            {"bounding_box", rect_to_json(node.bounding_box)},
            {"element_ids", node.element_ids},
            {"child_count", node.children.size()}};
  item["mean_edge_length"] = node.mean_edge_length ? json(*node.mean_edge_length) : json(nullptr);
  items.push_back(std::move(item));
  for (std::size_t i = 0; i < node.children.size(); ++i)
    for (auto& child : cluster_items(node.children[i], path + "." + std::to_string(i), prefix))
      items.push_back(std::move(child));
  return items;
}

}  // namespace detail

inline AnalyticResult fluency_result(const FluencyResult& f, const std::string& prefix) {
  AnalyticResult r;
  r.kind = AnalyticKind::fluency;
  r.score = f.idea_count;
  json items = json::array();
  for (const auto& idea : f.ideas)
    items.push_back(json{{"ref", prefix + "/idea/" + idea.term},
                         {"type", "idea"},
                         {"term", idea.term},
                         {"origin", to_string(idea.origin)},
                         {"element_ids", idea.source_element_ids}});
  r.payload = json{{"idea_count", f.idea_count},
                   {"element_counts", detail::element_counts_json(f.element_counts)},
                   {"items", std::move(items)}};
  detail::finalize_refs(r);
  return r;
}

inline AnalyticResult flexibility_result(const FlexibilityResult& f, const std::vector<Idea>& ideas,
                                         const EmbeddingTable& table, const std::string& prefix) {
  std::map<std::string, const Idea*> by_term;
  for (const auto& i : ideas) by_term[i.term] = &i;
  AnalyticResult r;
  r.kind = AnalyticKind::flexibility;
  r.score = f.category_count;
  json items = json::array();
  for (std::size_t c = 0; c < f.categories.size(); ++c) {
    const auto& cat = f.categories[c];
    std::vector<std::string> ids;
    for (const auto& t : cat.member_idea_terms)
      if (auto it = by_term.find(t); it != by_term.end())
        ids.insert(ids.end(), it->second->source_element_ids.begin(), it->second->source_element_ids.end());
    items.push_back(json{{"ref", prefix + "/category/" + std::to_string(c)},
                         {"type", "category"},
                         {"member_idea_terms", cat.member_idea_terms},
                         {"medoid_term", cat.medoid_term},
                         {"element_ids", detail::sorted_unique(std::move(ids))}});
  }
  json dendrogram = json::array();
  for (const auto& m : f.dendrogram)
    dendrogram.push_back(json{{"left", m.left}, {"right", m.right}, {"distance", m.distance}, {"size", m.size}});
  r.payload = json{{"category_count", f.category_count},
                   {"distance_threshold_used", f.distance_threshold_used},
                   {"oov_terms", f.oov_terms},
                   {"dendrogram", std::move(dendrogram)},
                   {"distance_matrix", {{"terms", f.matrix_terms}, {"values", f.distance_matrix}}},
                   {"embeddings", {{"source_label", table.source_label()}, {"dimension", table.dimension()}}},
                   {"items", std::move(items)}};
  detail::finalize_refs(r);
  return r;
}

inline json consistency_finding_item(const ConsistencyFinding& f, const std::string& ref, std::optional<int> scale) {
  json item{{"ref", ref},
            {"type", "finding"},
            {"category", "visual_consistency:" + std::string(to_string(f.attribute))},
            {"attribute", to_string(f.attribute)},
            {"group_key", f.group_key},
            {"modal_value", attribute_to_json(f.modal_value)},
            {"deviant_element_ids", f.deviant_element_ids},
            {"member_element_ids", f.member_element_ids},
            {"severity", f.severity},
            {"element_ids", f.deviant_element_ids}};
  if (scale) item["scale"] = *scale;
  return item;
}

inline AnalyticResult consistency_result(const ConsistencyResult& c, const std::map<int, ConsistencyResult>& per_scale,
                                         const WhitespaceResult& ws, const std::string& prefix) {
  AnalyticResult r;
  r.kind = AnalyticKind::visual_consistency;
  r.score = c.score;
  json items = json::array();
  for (std::size_t i = 0; i < c.findings.size(); ++i)
    items.push_back(consistency_finding_item(c.findings[i], prefix + "/finding/" + std::to_string(i), std::nullopt));
  json scales = json::object();
  for (const auto& [level, sub] : per_scale) {
    json refs = json::array();
    for (std::size_t i = 0; i < sub.findings.size(); ++i) {
      const std::string ref = prefix + "/scale/" + std::to_string(level) + "/finding/" + std::to_string(i);
      items.push_back(consistency_finding_item(sub.findings[i], ref, level));
      refs.push_back(ref);
    }
    scales[std::to_string(level)] = json{{"score", sub.score},
                                         {"mode_used", to_string(sub.mode_used)},
                                         {"evaluated_groups", sub.evaluated_groups},
                                         {"finding_refs", std::move(refs)}};
  }
  r.payload = json{{"score", c.score},
                   {"mode_used", to_string(c.mode_used)},
                   {"evaluated_groups", c.evaluated_groups},
                   {"unevaluated", c.unevaluated},
                   {"per_scale", std::move(scales)},
                   {"whitespace",
                    {{"cluster_count", ws.cluster_count},
                     {"whitespace_ratio", ws.whitespace_ratio},
                     {"covered_cells", ws.covered_cells},
                     {"total_cells", ws.total_cells}}},
                   {"items", std::move(items)}};
  detail::finalize_refs(r);
  return r;
}

inline AnalyticResult multiscale_result(const MultiscaleResult& m, const std::string& prefix) {
  AnalyticResult r;
  r.kind = AnalyticKind::multiscale_organization;
  r.score = m.scale_count;
  std::map<int, std::vector<std::string>> members;
  for (const auto& [id, level] : m.scale_of) members[level].push_back(id);
  json items = json::array();
  json histogram = json::object();
  for (const auto& [level, count] : m.scale_histogram) {
    histogram[std::to_string(level)] = count;
    items.push_back(json{{"ref", prefix + "/scale/" + std::to_string(level)},
                         {"type", "scale"},
                         {"level", level},
                         {"count", count},
                         {"element_ids", members[level]}});
  }
  for (std::size_t i = 0; i < m.imbalance_findings.size(); ++i) {
    const auto& f = m.imbalance_findings[i];
    items.push_back(json{{"ref", prefix + "/imbalance/" + std::to_string(i)},
                         {"type", "imbalance"},
                         {"category", "multiscale_organization:scale_imbalance"},
                         {"scale_a", f.scale_a},
                         {"scale_b", f.scale_b},
                         {"count_a", f.count_a},
                         {"count_b", f.count_b},
                         {"ratio", f.ratio},
                         {"target_scale", f.target_scale},
                         {"message", f.message},
                         {"element_ids", members[f.target_scale]}});
  }
  if (m.cluster_tree.root)
    for (auto& item : detail::cluster_items(*m.cluster_tree.root, "0", prefix)) items.push_back(std::move(item));
  r.payload = json{{"scale_count", m.scale_count},
                   {"scale_histogram", std::move(histogram)},
                   {"imbalance_count", m.imbalance_findings.size()},
                   {"tree_depth", m.cluster_tree.depth},
                   {"jittered_ids", m.cluster_tree.jittered_ids},
                   {"items", std::move(items)}};
  detail::finalize_refs(r);
  return r;
}

inline AnalyticResult contrast_result(const ContrastResult& c, const BlockGrid& grid, const DesignDocument& doc,
                                      const ContrastConfig& config, const std::string& prefix) {
  AnalyticResult r;
  r.kind = AnalyticKind::legible_contrast;
  r.score = c.score;
  json items = json::array();
  if (c.high_contrast_cells > 0) {
    // Elements owning at least one high-contrast block.
    std::set<std::string> owners;
    for (int row = 0; row < grid.rows; ++row)
      for (int col = 0; col < grid.cols; ++col) {
        const auto i = static_cast<std::size_t>(row * grid.cols + col);
        const double l = relative_luminance(grid.cells[i]);
        bool marked = false;
        const int dc[] = {1, -1, 0, 0}, dr[] = {0, 0, 1, -1};
        for (int k = 0; k < 4 && !marked; ++k) {
          const int nc = col + dc[k], nr = row + dr[k];
          if (nc < 0 || nr < 0 || nc >= grid.cols || nr >= grid.rows) continue;
          const double m = relative_luminance(grid.at(nc, nr));
          marked = (std::max(l, m) + 0.05) / (std::min(l, m) + 0.05) >= config.theta_ratio;
        }
        if (marked && grid.owner[i] >= 0) owners.insert(doc.elements[static_cast<std::size_t>(grid.owner[i])].id);
      }
    if (!owners.empty()) {
      json item{{"ref", prefix + "/high_contrast"},
                {"type", "high_contrast"},
                {"fraction", c.high_contrast_fraction},
                {"element_ids", std::vector<std::string>(owners.begin(), owners.end())}};
      if (c.high_contrast_fraction > config.theta_hc) item["category"] = "legible_contrast:excessive_high_contrast";
      items.push_back(std::move(item));
    }
  }
  for (std::size_t i = 0; i < c.line_box_findings.size(); ++i) {
    const auto& f = c.line_box_findings[i];
    items.push_back(json{
        {"ref", prefix + "/line/" + std::to_string(i)},
        {"type", "line_box"},
        {"orientation", f.orientation == RunOrientation::horizontal ? "horizontal" : "vertical"},
        {"rows", {f.row_begin, f.row_end}},
        {"cols", {f.col_begin, f.col_end}},
        {"length", f.length},
        {"thickness", f.thickness},
        {"bounds", rect_to_json(Rect{f.col_begin * c.block_size, f.row_begin * c.block_size,
                                     (f.col_end - f.col_begin + 1) * c.block_size,
                                     (f.row_end - f.row_begin + 1) * c.block_size})},
        {"element_ids", f.element_ids}});
  }
  for (std::size_t i = 0; i < c.loud_area_findings.size(); ++i) {
    const auto& f = c.loud_area_findings[i];
    json spans = json::array();
    for (const auto& s : f.region) spans.push_back({s.row, s.col_begin, s.col_end});
    items.push_back(json{{"ref", prefix + "/loud_area/" + std::to_string(i)},
                         {"type", "loud_area"},
                         {"category", "legible_contrast:loud_area"},
                         {"row_spans", std::move(spans)},
                         {"cell_count", f.cell_count},
                         {"area_fraction", f.area_fraction},
                         {"mean_saturation_value", f.mean_saturation_value},
                         {"mean_hue", f.mean_hue},
                         {"adjacent_findings", f.adjacent_regions},
                         {"bounds", rect_to_json(f.bounds)},
                         {"element_ids", f.element_ids}});
  }
  r.payload = json{{"score", c.score},
                   {"flagged", c.flagged},
                   {"high_contrast_fraction", c.high_contrast_fraction},
                   {"high_contrast_cells", c.high_contrast_cells},
                   {"total_cells", c.total_cells},
                   {"grid", {{"cols", c.cols}, {"rows", c.rows}, {"block_size", c.block_size}}},
                   {"items", std::move(items)}};
  detail::finalize_refs(r);
  return r;
}

// ---------------------------------------------------------------------------
// analyze

namespace detail {

struct SuiteOutcome {
  ResultMap results;
  std::vector<std::string> warnings;
  int idea_count = 0;
};

inline SuiteOutcome run_suite(const DesignDocument& doc, const AnalysisContext& ctx,
                              std::span<const ProcessEvent> events, const std::string& prefix) {
  SuiteOutcome out;
  const auto& cfg = ctx.config;
  auto enabled = [&](AnalyticKind k) { return cfg.enabled.count(k) > 0; };
  auto guarded = [&](AnalyticKind k, auto&& compute) {
    if (!enabled(k)) return;
    try {
      AnalyticResult r = compute();
      r.config = config_snapshot(cfg, k);
      out.results.emplace(k, std::move(r));
    } catch (const std::exception& e) {
      out.warnings.push_back(std::string(to_string(k)) + " omitted: " + e.what());
    }
  };

  std::optional<FluencyResult> fl;
  if (enabled(AnalyticKind::fluency) || enabled(AnalyticKind::flexibility)) {
    try {
      fl = fluency(doc, ctx.ideas);
      out.idea_count = fl->idea_count;
      for (const auto& w : fl->warnings) out.warnings.push_back("fluency: " + w);
    } catch (const std::exception& e) {
      out.warnings.push_back(std::string("idea extraction failed: ") + e.what());
    }
  }
  guarded(AnalyticKind::fluency, [&] {
    if (!fl) throw Error("idea extraction unavailable");
    return fluency_result(*fl, prefix + ":fluency");
  });
  guarded(AnalyticKind::flexibility, [&] {
    if (!ctx.embeddings) throw Error("no embedding table loaded");
    if (!fl) throw Error("idea extraction unavailable");
    return flexibility_result(flexibility(fl->ideas, *ctx.embeddings, cfg.tau), fl->ideas, *ctx.embeddings,
                              prefix + ":flexibility");
  });
  guarded(AnalyticKind::visual_consistency, [&] {
    const auto tree = build_cluster_tree(doc, cfg.spatial, events);
    const auto c = consistency(doc, tree, cfg.consistency);
    const auto per_scale = consistency_per_scale(doc, cfg.spatial, cfg.consistency);
    const auto ws = whitespace(doc, cfg.spatial.grid_resolution, cfg.spatial);
    for (const auto& u : c.unevaluated) out.warnings.push_back("visual_consistency: unevaluated " + u);
    return consistency_result(c, per_scale, ws, prefix + ":visual_consistency");
  });
  guarded(AnalyticKind::multiscale_organization,
          [&] { return multiscale_result(multiscale(doc, cfg.spatial, events), prefix + ":multiscale_organization"); });
  guarded(AnalyticKind::legible_contrast, [&] {
    const auto grid = rasterize_blocks(doc, cfg.contrast.block_count_per_min_axis);
    return contrast_result(legible_contrast_on_grid(doc, grid, cfg.contrast), grid, doc, cfg.contrast,
                           prefix + ":legible_contrast");
  });
  return out;
}

inline std::string author_key(const Element& e) {
  return e.author_id ? *e.author_id : std::string(kUnattributed);
}

}  // namespace detail

/// Per-author analytics over each author's element subset, with contribution shares.
inline std::map<std::string, MemberBreakdown> member_breakdown(const DesignDocument& doc, const AnalysisContext& ctx,
                                                               std::span<const ProcessEvent> events = {}) {
  std::map<std::string, MemberBreakdown> out;
  std::set<std::string> authors;
  for (const auto& e : doc.elements) authors.insert(detail::author_key(e));
  if (authors.empty()) authors.insert(std::string(kUnattributed));
  const std::string prefix = item_ref_prefix(config_hash(ctx.config));
  int idea_total = 0;
  for (const auto& a : authors) {
    const auto sub = subset_document(doc, [&](const Element& e) { return detail::author_key(e) == a; });
    auto suite = detail::run_suite(sub, ctx, events, prefix);
    MemberBreakdown m;
    m.element_count = static_cast<int>(sub.elements.size());
    m.idea_count = suite.idea_count;
    m.results = std::move(suite.results);
    idea_total += m.idea_count;
    out.emplace(a, std::move(m));
  }
  for (auto& [a, m] : out) {
    m.element_share = doc.elements.empty() ? 0.0 : static_cast<double>(m.element_count) / doc.elements.size();
    m.idea_share = idea_total == 0 ? 0.0 : static_cast<double>(m.idea_count) / idea_total;
  }
  return out;
}

inline AnalyticReport analyze(const DesignDocument& doc, const AnalysisContext& ctx,
                              std::span<const ProcessEvent> events = {}) {
  AnalyticReport report;
  report.doc_id = doc.doc_id;
  report.version = doc.version;
  report.document_hash = document_hash(doc);
  report.config_hash = config_hash(ctx.config);
  report.team_id = doc.team_id;
  report.author_ids = doc.author_ids;
  auto suite = detail::run_suite(doc, ctx, events, item_ref_prefix(report.config_hash));
  report.results = std::move(suite.results);
  report.warnings = std::move(suite.warnings);
  report.member_breakdown = member_breakdown(doc, ctx, events);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline json result_to_json(const AnalyticResult& r) {
  return json{{"score", r.score}, {"payload", r.payload}, {"element_refs", r.element_refs}, {"config", r.config}};
}

inline json results_to_json(const ResultMap& m) {
  json j = json::object();
  for (const auto& [k, r] : m) j[std::string(to_string(k))] = result_to_json(r);
  return j;
}

inline json report_to_json(const AnalyticReport& r) {
  json members = json::object();
  for (const auto& [a, m] : r.member_breakdown)
    members[a] = json{{"element_share", m.element_share},
                      {"idea_share", m.idea_share},
                      {"element_count", m.element_count},
                      {"idea_count", m.idea_count},
                      {"results", results_to_json(m.results)}};
  return json{{"schema", kReportSchema},   {"doc_id", r.doc_id},
              {"version", r.version},      {"document_hash", r.document_hash},
              {"config_hash", r.config_hash}, {"team_id", r.team_id},
              {"author_ids", r.author_ids}, {"results", results_to_json(r.results)},
              {"member_breakdown", std::move(members)}, {"warnings", r.warnings}};
}

/// Canonical bytes of a report: compact JSON with sorted keys and a trailing newline.
inline std::string serialize_report(const AnalyticReport& r) { return report_to_json(r).dump() + "\n"; }

inline ResultMap results_from_json(const json& j, const std::string& path) {
  ResultMap m;
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [name, v] : j.items()) {
    const auto kind = detail::enum_from_string<AnalyticKind>(kAnalyticKindNames, name, path + "/" + name);
    detail::ObjectReader o(v, path + "/" + name);
    AnalyticResult r;
    r.kind = kind;
    r.score = o.number("score");
    r.payload = o.at("payload");
    r.element_refs = o.string_list("element_refs");
    r.config = o.at("config");
    m.emplace(kind, std::move(r));
  }
  return m;
}

inline AnalyticReport report_from_json(const json& j) {
  detail::ObjectReader o(j, "");
  if (o.string("schema") != kReportSchema) throw SchemaError("/schema", "unsupported report schema");
  AnalyticReport r;
  r.doc_id = o.string("doc_id");
  r.version = o.integer("version");
  r.document_hash = o.string("document_hash");
  r.config_hash = o.string("config_hash");
  r.team_id = o.string_or("team_id", "");
  r.author_ids = o.string_list_or_empty("author_ids");
  r.results = results_from_json(o.at("results"), "/results");
  if (o.has("member_breakdown")) {
    for (const auto& [a, v] : o.at("member_breakdown").items()) {
      detail::ObjectReader m(v, "/member_breakdown/" + a);
      MemberBreakdown b;
      b.element_share = m.number("element_share");
      b.idea_share = m.number("idea_share");
      b.element_count = static_cast<int>(m.integer("element_count"));
      b.idea_count = static_cast<int>(m.integer("idea_count"));
      b.results = results_from_json(m.at("results"), m.path("results"));
      r.member_breakdown.emplace(a, std::move(b));
    }
  }
  r.warnings = o.string_list_or_empty("warnings");
  return r;
}

inline AnalyticReport parse_report(std::string_view text) { return report_from_json(detail::parse_json_text(text)); }

// ---------------------------------------------------------------------------
// Validation and explanations

/// Every item must name the elements behind it, and every name must resolve in `doc`.
/// Findings over bare canvas carry `bounds` instead of element names.
inline void validate_report(const AnalyticReport& r, const DesignDocument& doc) {
  auto check = [&](const ResultMap& results, const std::string& where) {
    for (const auto& [k, res] : results) {
      const std::string name = where + std::string(to_string(k));
      if (!res.payload.is_object() || !res.payload.contains("items") || !res.payload["items"].is_array())
        throw ValidationError(name + ": result lacks an explanation payload");
      for (const auto& item : res.payload["items"]) {
        if (!item.contains("element_ids") || !item["element_ids"].is_array() ||
            (item["element_ids"].empty() && !item.contains("bounds")))
          throw ValidationError(name + ": item " + item.value("ref", "?") + " has no element references");
        for (const auto& id : item["element_ids"])
          if (!doc.find(id.get<std::string>()))
            throw ValidationError(name + ": item " + item.value("ref", "?") + " references unknown element '" +
                                  id.get<std::string>() + "'");
      }
      for (const auto& id : res.element_refs)
        if (!doc.find(id)) throw ValidationError(name + ": unknown element reference '" + id + "'");
    }
  };
  if (r.doc_id != doc.doc_id || r.version != doc.version)
    throw ValidationError("report does not belong to this document version");
  check(r.results, "");
  for (const auto& [a, m] : r.member_breakdown) check(m.results, "member " + a + ": ");
}

/// The explanation item behind `item_ref`, with element geometry for overlays.
inline json get_explanation(const AnalyticReport& r, const DesignDocument& doc, AnalyticKind kind,
                            const std::string& item_ref) {
  const auto colon = item_ref.find(':');
  if (colon == std::string::npos) throw NotFoundError("malformed item reference '" + item_ref + "'");
  const std::string prefix = item_ref.substr(0, colon);
  if (prefix != item_ref_prefix(r.config_hash).substr(0, prefix.size()) || prefix.size() != 12)
    throw StaleReferenceError("item reference '" + item_ref + "' was issued under a different configuration");
  auto it = r.results.find(kind);
  if (it == r.results.end()) throw NotFoundError("analytic '" + std::string(to_string(kind)) + "' not in report");
  for (const auto& item : it->second.payload["items"]) {
    if (item["ref"] != item_ref) continue;
    json out = item;
    json geometry = json::object();
    for (const auto& id : item["element_ids"]) {
      if (const Element* e = doc.find(id.get<std::string>())) geometry[e->id] = rect_to_json(e->bbox);
    }
    out["element_geometry"] = std::move(geometry);
    out["analytic"] = to_string(kind);
    out["doc_id"] = r.doc_id;
    out["version"] = r.version;
    return out;
  }
  throw NotFoundError("no item '" + item_ref + "' in " + std::string(to_string(kind)));
}

/// Problem categories (items carrying a "category") present in a report.
inline std::set<std::string> problem_categories(const AnalyticReport& r) {
  std::set<std::string> out;
  for (const auto& [k, res] : r.results)
    for (const auto& item : res.payload["items"])
      if (item.contains("category")) out.insert(item["category"].get<std::string>());
  return out;
}

}  // namespace dca
