#pragma once

// Visual Consistency: attribute agreement within semantic-type groups, or
// across position-matched members of equal-size leaf clusters.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dca/model.hpp"
#include "dca/spatial.hpp"

namespace dca {

enum class StyleAttribute { font_family, font_size, font_weight, font_style, fill, stroke, background };
inline constexpr std::array<std::string_view, 7> kStyleAttributeNames{
    "font_family", "font_size", "font_weight", "font_style", "fill", "stroke", "background"};
inline std::string_view to_string(StyleAttribute a) { return kStyleAttributeNames[static_cast<int>(a)]; }

enum class ConsistencyMode { typed, cluster_correspondence };
inline std::string_view to_string(ConsistencyMode m) {
  return m == ConsistencyMode::typed ? "typed" : "cluster_correspondence";
}

using AttributeValue = std::variant<std::string, double, Color>;

inline std::optional<AttributeValue> attribute_of(const Style& s, StyleAttribute a) {
  switch (a) {
    case StyleAttribute::font_family:
      if (s.font_family) return AttributeValue{*s.font_family};
      break;
    case StyleAttribute::font_size:
      if (s.font_size) return AttributeValue{*s.font_size};
      break;
    case StyleAttribute::font_weight:
      if (s.font_weight) return AttributeValue{std::string(to_string(*s.font_weight))};
      break;
    case StyleAttribute::font_style:
      if (s.font_style) return AttributeValue{std::string(to_string(*s.font_style))};
      break;
    case StyleAttribute::fill:
      if (s.fill) return AttributeValue{*s.fill};
      break;
    case StyleAttribute::stroke:
      if (s.stroke) return AttributeValue{*s.stroke};
      break;
    case StyleAttribute::background:
      if (s.background) return AttributeValue{*s.background};
      break;
  }
  return std::nullopt;
}

inline void set_attribute(Style& s, StyleAttribute a, const AttributeValue& v) {
  switch (a) {
    case StyleAttribute::font_family: s.font_family = std::get<std::string>(v); break;
    case StyleAttribute::font_size: s.font_size = std::get<double>(v); break;
    case StyleAttribute::font_weight:
      s.font_weight = detail::enum_from_string<FontWeight>(kFontWeightNames, std::get<std::string>(v), "font_weight");
      break;
    case StyleAttribute::font_style:
      s.font_style = detail::enum_from_string<FontStyle>(kFontStyleNames, std::get<std::string>(v), "font_style");
      break;
    case StyleAttribute::fill: s.fill = std::get<Color>(v); break;
    case StyleAttribute::stroke: s.stroke = std::get<Color>(v); break;
    case StyleAttribute::background: s.background = std::get<Color>(v); break;
  }
}

inline json attribute_to_json(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return color_to_json(std::get<Color>(v));
}

struct ConsistencyConfig {
  double epsilon_numeric = 0.05;     // relative tolerance for sizes
  double delta_color = 8.0 / 255.0;  // per-channel tolerance on the unit scale
  double typed_mode_threshold = 0.5; // fraction of text elements that must carry semantic_type
};

inline bool attribute_equivalent(const AttributeValue& a, const AttributeValue& b, const ConsistencyConfig& c) {
  if (a.index() != b.index()) return false;
  if (const auto* s = std::get_if<std::string>(&a)) return *s == std::get<std::string>(b);
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return std::fabs(*x - y) <= c.epsilon_numeric * std::max(std::fabs(*x), std::fabs(y));
  }
  const auto& p = std::get<Color>(a);
  const auto& q = std::get<Color>(b);
  const double tol = c.delta_color + 1e-12;
  return std::abs(p.r - q.r) / 255.0 <= tol && std::abs(p.g - q.g) / 255.0 <= tol &&
         std::abs(p.b - q.b) / 255.0 <= tol && std::fabs(p.a - q.a) <= tol;
}

struct ConsistencyFinding {
  StyleAttribute attribute = StyleAttribute::font_family;
  std::string group_key;
  AttributeValue modal_value;
  std::vector<std::string> deviant_element_ids;  // sorted
  std::vector<std::string> member_element_ids;   // members carrying the attribute, sorted
  double severity = 0;                           // deviants / members carrying the attribute
};

struct ConsistencyResult {
  double score = 1.0;
  std::vector<ConsistencyFinding> findings;
  ConsistencyMode mode_used = ConsistencyMode::typed;
  int evaluated_groups = 0;  // (group, attribute) units compared
  std::vector<std::string> unevaluated;
};

namespace detail {

inline std::string attribute_sort_key(const AttributeValue& v) { return attribute_to_json(v).dump(); }

/// Compares every attribute carried by at least two members; returns per-unit severities.
inline void evaluate_group(const std::string& group_key, const std::vector<const Element*>& members,
                           const ConsistencyConfig& config, ConsistencyResult& out, std::vector<double>& severities) {
  for (std::size_t ai = 0; ai < kStyleAttributeNames.size(); ++ai) {
    const auto attr = static_cast<StyleAttribute>(ai);
    std::vector<std::pair<const Element*, AttributeValue>> present;
    for (const Element* e : members)
      if (auto v = attribute_of(e->style, attr)) present.emplace_back(e, *v);
    if (present.size() < 2) continue;

    std::map<std::string, std::pair<int, AttributeValue>> counts;
    for (const auto& [e, v] : present) {
      auto [it, inserted] = counts.try_emplace(attribute_sort_key(v), 0, v);
      ++it->second.first;
    }
    const AttributeValue* modal = nullptr;
    int best = 0;
    for (const auto& [key, entry] : counts)  // ascending keys, strict > keeps the smallest on ties
      if (entry.first > best) {
        best = entry.first;
        modal = &entry.second;
      }

    ConsistencyFinding f{attr, group_key, *modal, {}, {}, 0};
    for (const auto& [e, v] : present) {
      f.member_element_ids.push_back(e->id);
      if (!attribute_equivalent(v, *modal, config)) f.deviant_element_ids.push_back(e->id);
    }
    std::sort(f.member_element_ids.begin(), f.member_element_ids.end());
    std::sort(f.deviant_element_ids.begin(), f.deviant_element_ids.end());
    f.severity = static_cast<double>(f.deviant_element_ids.size()) / static_cast<double>(present.size());
    ++out.evaluated_groups;
    severities.push_back(f.severity);
    if (!f.deviant_element_ids.empty()) out.findings.push_back(std::move(f));
  }
}

inline void finish(ConsistencyResult& r, const std::vector<double>& severities) {
  if (severities.empty()) {
    r.score = 1.0;
    return;
  }
  double sum = 0;
  for (double s : severities) sum += s;
  r.score = 1.0 - sum / static_cast<double>(severities.size());
  if (r.findings.empty()) r.score = 1.0;
}

}  // namespace detail

inline bool uses_typed_mode(const DesignDocument& doc, const ConsistencyConfig& config) {
  int text = 0, typed = 0;
  for (const auto& e : doc.elements) {
    if (e.kind != ElementKind::text) continue;
    ++text;
    if (e.semantic_type) ++typed;
  }
  return text > 0 && typed >= config.typed_mode_threshold * text;
}

inline ConsistencyResult consistency(const DesignDocument& doc, const ClusterTree& tree,
                                     const ConsistencyConfig& config = {}) {
  ConsistencyResult r;
  std::vector<double> severities;
  if (uses_typed_mode(doc, config)) {
    r.mode_used = ConsistencyMode::typed;
    std::map<SemanticType, std::vector<const Element*>> groups;
    for (const auto& e : doc.elements)
      if (e.kind == ElementKind::text && e.semantic_type) groups[*e.semantic_type].push_back(&e);
    for (const auto& [type, members] : groups) {
      if (members.size() < 2) continue;
      detail::evaluate_group(std::string(to_string(type)), members, config, r, severities);
    }
  } else {
    r.mode_used = ConsistencyMode::cluster_correspondence;
    std::map<std::size_t, std::vector<std::vector<const Element*>>> by_size;
    tree.for_each_leaf([&](const ClusterNode& leaf) {
      if (leaf.element_ids.size() < 2) return;
      std::vector<const Element*> members;
      for (const auto& id : leaf.element_ids)
        if (const Element* e = doc.find(id)) members.push_back(e);
      std::sort(members.begin(), members.end(), [](const Element* a, const Element* b) {
        if (a->bbox.y != b->bbox.y) return a->bbox.y < b->bbox.y;
        if (a->bbox.x != b->bbox.x) return a->bbox.x < b->bbox.x;
        return a->id < b->id;
      });
      by_size[members.size()].push_back(std::move(members));
    });
    for (const auto& [size, clusters] : by_size) {
      if (clusters.size() < 2) {
        r.unevaluated.push_back("cluster of " + std::to_string(size) + " elements starting at '" +
                                clusters.front().front()->id + "' has no equal-size counterpart");
        continue;
      }
      for (std::size_t pos = 0; pos < size; ++pos) {
        std::vector<const Element*> corresponding;
        for (const auto& c : clusters) corresponding.push_back(c[pos]);
        detail::evaluate_group("clusters_of_" + std::to_string(size) + "/position_" + std::to_string(pos),
                               corresponding, config, r, severities);
      }
    }
  }
  detail::finish(r, severities);
  return r;
}

/// Consistency restricted to each scale level's elements (cluster trees rebuilt per level).
inline std::map<int, ConsistencyResult> consistency_per_scale(const DesignDocument& doc,
                                                              const SpatialConfig& spatial_config = {},
                                                              const ConsistencyConfig& config = {}) {
  std::map<int, ConsistencyResult> out;
  const auto scales = assign_scales(doc, spatial_config);
  std::set<int> levels;
  for (const auto& [id, level] : scales) levels.insert(level);
  for (int level : levels) {
    const auto sub = subset_document(doc, [&](const Element& e) { return scales.at(e.id) == level; });
    out.emplace(level, consistency(sub, build_cluster_tree(sub, spatial_config), config));
  }
  return out;
}

/// Sets every deviant element's attribute to the finding's modal value.
inline DesignDocument apply_modal_repairs(DesignDocument doc, const std::vector<ConsistencyFinding>& findings) {
  for (const auto& f : findings)
    for (auto& e : doc.elements)
      if (std::binary_search(f.deviant_element_ids.begin(), f.deviant_element_ids.end(), e.id))
        set_attribute(e.style, f.attribute, f.modal_value);
  return doc;
}

}  // namespace dca
