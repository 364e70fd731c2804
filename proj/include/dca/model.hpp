#pragma once

// Design-document data model: versioned scenes of typed, styled, positioned
// elements, plus the interchange format and process logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dca/color.hpp"
#include "dca/error.hpp"
#include "dca/json_util.hpp"

namespace dca {

inline constexpr int kDocumentSchemaVersion = 1;

enum class ElementKind { text, image, sketch, video, embed };
inline constexpr std::array<std::string_view, 5> kElementKindNames{"text", "image", "sketch",
                                                                   "video", "embed"};

enum class SemanticType { heading, subheading, body, caption, figure, label, other };
inline constexpr std::array<std::string_view, 7> kSemanticTypeNames{
    "heading", "subheading", "body", "caption", "figure", "label", "other"};

enum class FontWeight { thin, light, normal, medium, semibold, bold, black };
inline constexpr std::array<std::string_view, 7> kFontWeightNames{
    "thin", "light", "normal", "medium", "semibold", "bold", "black"};

enum class FontStyle { normal, italic, oblique };
inline constexpr std::array<std::string_view, 3> kFontStyleNames{"normal", "italic", "oblique"};

enum class ProcessAction { create, move, resize, restyle, remove, zoom, select_group };
inline constexpr std::array<std::string_view, 7> kProcessActionNames{
    "create", "move", "resize", "restyle", "delete", "zoom", "select_group"};

inline std::string_view to_string(ElementKind k) { return kElementKindNames[static_cast<int>(k)]; }
inline std::string_view to_string(SemanticType t) { return kSemanticTypeNames[static_cast<int>(t)]; }
inline std::string_view to_string(FontWeight w) { return kFontWeightNames[static_cast<int>(w)]; }
inline std::string_view to_string(FontStyle s) { return kFontStyleNames[static_cast<int>(s)]; }
inline std::string_view to_string(ProcessAction a) { return kProcessActionNames[static_cast<int>(a)]; }

inline bool is_media(ElementKind k) { return k != ElementKind::text; }

struct Rect {
  double x = 0, y = 0, w = 0, h = 0;

  bool operator==(const Rect&) const = default;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + w / 2; }
  double center_y() const { return y + h / 2; }
  double diagonal() const { return std::hypot(w, h); }

  /// Half-open containment: [x, x+w) x [y, y+h).
  bool contains(double px, double py) const { return px >= x && px < x + w && py >= y && py < y + h; }

  double intersection_area(const Rect& o) const {
    const double iw = std::min(right(), o.right()) - std::max(x, o.x);
    const double ih = std::min(bottom(), o.bottom()) - std::max(y, o.y);
    return iw > 0 && ih > 0 ? iw * ih : 0.0;
  }

  static Rect bounding(const Rect& a, const Rect& b) {
    const double l = std::min(a.x, b.x), t = std::min(a.y, b.y);
    return Rect{l, t, std::max(a.right(), b.right()) - l, std::max(a.bottom(), b.bottom()) - t};
  }
};

struct Style {
  std::optional<std::string> font_family;
  std::optional<double> font_size;
  std::optional<FontWeight> font_weight;
  std::optional<FontStyle> font_style;
  std::optional<Color> fill;
  std::optional<Color> stroke;
  std::optional<Color> background;

  bool operator==(const Style&) const = default;
};

/// Text elements carry `text`; media elements carry `descriptors` (supplied captions/labels).
struct Content {
  std::string text;
  std::vector<std::string> descriptors;

  bool operator==(const Content&) const = default;
};

struct Element {
  std::string id;
  ElementKind kind = ElementKind::text;
  Rect bbox;
  std::optional<double> zoom_level;
  std::optional<SemanticType> semantic_type;
  Style style;
  Content content;
  std::optional<std::string> author_id;

  bool operator==(const Element&) const = default;
};

struct Canvas {
  double width = 0;
  double height = 0;

  bool operator==(const Canvas&) const = default;
  double diagonal() const { return std::hypot(width, height); }
};

struct DesignDocument {
  std::string doc_id;
  std::int64_t version = 1;
  Canvas canvas;
  Color background = kWhite;
  std::vector<Element> elements;  // paint order; last is topmost
  std::string team_id;
  std::vector<std::string> author_ids;
  std::string created_at;

  bool operator==(const DesignDocument&) const = default;

  const Element* find(std::string_view id) const {
    for (const auto& e : elements)
      if (e.id == id) return &e;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// JSON mapping

inline json color_to_json(const Color& c) {
  if (c.a == 1.0) return json::array({c.r, c.g, c.b});
  return json::array({c.r, c.g, c.b, c.a});
}

inline Color color_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 4))
    throw SchemaError(path, "expected a color as [r,g,b] or [r,g,b,a]");
  Color c;
  int* channels[] = {&c.r, &c.g, &c.b};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer())
      throw SchemaError(detail::child_path(path, i), "expected an integer channel");
    const auto v = j[i].get<std::int64_t>();
    if (v < 0 || v > 255) throw SchemaError(detail::child_path(path, i), "channel out of range 0-255");
    *channels[i] = static_cast<int>(v);
  }
  if (j.size() == 4) {
    if (!j[3].is_number()) throw SchemaError(detail::child_path(path, 3), "expected a number");
    c.a = j[3].get<double>();
    if (!(c.a >= 0.0 && c.a <= 1.0)) throw SchemaError(detail::child_path(path, 3), "alpha out of range 0-1");
  }
  return c;
}

inline json rect_to_json(const Rect& r) { return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

inline Rect rect_from_json(const detail::ObjectReader& o) {
  o.allow_only({"x", "y", "w", "h"});
  Rect r{o.number("x"), o.number("y"), o.number("w"), o.number("h")};
  for (double v : {r.x, r.y, r.w, r.h})
    if (!std::isfinite(v)) throw SchemaError(o.path(), "non-finite coordinate");
  return r;
}

inline json style_to_json(const Style& s) {
  json j = json::object();
  if (s.font_family) j["font_family"] = *s.font_family;
  if (s.font_size) j["font_size"] = *s.font_size;
  if (s.font_weight) j["font_weight"] = to_string(*s.font_weight);
  if (s.font_style) j["font_style"] = to_string(*s.font_style);
  if (s.fill) j["fill"] = color_to_json(*s.fill);
  if (s.stroke) j["stroke"] = color_to_json(*s.stroke);
  if (s.background) j["background"] = color_to_json(*s.background);
  return j;
}

inline Style style_from_json(const detail::ObjectReader& o) {
  o.allow_only({"font_family", "font_size", "font_weight", "font_style", "fill", "stroke", "background"});
  Style s;
  s.font_family = o.optional_string("font_family");
  s.font_size = o.optional_number("font_size");
  if (s.font_size && !(*s.font_size > 0 && std::isfinite(*s.font_size)))
    throw SchemaError(o.path("font_size"), "font_size must be positive");
  if (o.has("font_weight"))
    s.font_weight = detail::enum_from_string<FontWeight>(kFontWeightNames, o.string("font_weight"),
                                                         o.path("font_weight"));
  if (o.has("font_style"))
    s.font_style = detail::enum_from_string<FontStyle>(kFontStyleNames, o.string("font_style"),
                                                       o.path("font_style"));
  for (auto [key, slot] : {std::pair{"fill", &s.fill}, std::pair{"stroke", &s.stroke},
                           std::pair{"background", &s.background}}) {
    if (o.has(key)) *slot = color_from_json(o.at(key), o.path(key));
  }
  return s;
}

inline json element_to_json(const Element& e) {
  json j{{"id", e.id}, {"kind", to_string(e.kind)}, {"bbox", rect_to_json(e.bbox)},
         {"style", style_to_json(e.style)}};
  if (e.zoom_level) j["zoom_level"] = *e.zoom_level;
  if (e.semantic_type) j["semantic_type"] = to_string(*e.semantic_type);
  if (e.author_id) j["author_id"] = *e.author_id;
  if (e.kind == ElementKind::text)
    j["content"] = json{{"text", e.content.text}};
  else
    j["content"] = json{{"descriptors", e.content.descriptors}};
  return j;
}

inline Element element_from_json(const detail::ObjectReader& o) {
  o.allow_only({"id", "kind", "bbox", "zoom_level", "semantic_type", "style", "content", "author_id"});
  Element e;
  e.id = o.string("id");
  if (e.id.empty()) throw SchemaError(o.path("id"), "element id must be non-empty");
  e.kind = detail::enum_from_string<ElementKind>(kElementKindNames, o.string("kind"), o.path("kind"));
  e.bbox = rect_from_json(o.object("bbox"));
  e.zoom_level = o.optional_number("zoom_level");
  if (e.zoom_level && !(*e.zoom_level >= 0 && std::isfinite(*e.zoom_level)))
    throw SchemaError(o.path("zoom_level"), "zoom_level must be non-negative");
  if (o.has("semantic_type"))
    e.semantic_type = detail::enum_from_string<SemanticType>(kSemanticTypeNames, o.string("semantic_type"),
                                                             o.path("semantic_type"));
  if (o.has("style")) e.style = style_from_json(o.object("style"));
  e.author_id = o.optional_string("author_id");
  auto content = o.object("content");
  if (e.kind == ElementKind::text) {
    content.allow_only({"text"});
    e.content.text = content.string("text");
  } else {
    content.allow_only({"descriptors"});
    e.content.descriptors = content.string_list("descriptors");
  }
  return e;
}

inline json document_to_json(const DesignDocument& d) {
  json elements = json::array();
  for (const auto& e : d.elements) elements.push_back(element_to_json(e));
  return json{{"schema_version", kDocumentSchemaVersion},
              {"doc_id", d.doc_id},
              {"version", d.version},
              {"canvas", {{"width", d.canvas.width}, {"height", d.canvas.height}}},
              {"background", color_to_json(d.background)},
              {"elements", std::move(elements)},
              {"team_id", d.team_id},
              {"author_ids", d.author_ids},
              {"created_at", d.created_at}};
}

/// Checks the invariants that schema parsing alone cannot: id uniqueness and positive extents.
inline void validate_document(const DesignDocument& d) {
  if (d.doc_id.empty()) throw ValidationError("doc_id must be non-empty");
  if (d.version < 1) throw ValidationError("version must be >= 1");
  if (!(d.canvas.width > 0 && d.canvas.height > 0))
    throw ValidationError("canvas width and height must be positive");
  if (!d.background.valid()) throw ValidationError("background color out of range");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < d.elements.size(); ++i) {
    const auto& e = d.elements[i];
    if (!seen.insert(e.id).second) throw ValidationError("duplicate element id '" + e.id + "'");
    if (!(e.bbox.w > 0 && e.bbox.h > 0))
      throw ValidationError("element '" + e.id + "' has a zero-area bbox (/elements/" +
                            std::to_string(i) + "/bbox)");
    if (e.style.font_size && !(*e.style.font_size > 0))
      throw ValidationError("element '" + e.id + "' has a non-positive font_size");
  }
}

inline DesignDocument document_from_json(const json& j) {
  detail::ObjectReader o(j, "");
  o.allow_only({"schema_version", "doc_id", "version", "canvas", "background", "elements", "team_id",
                "author_ids", "created_at"});
  if (o.has("schema_version") && o.integer("schema_version") != kDocumentSchemaVersion)
    throw SchemaError(o.path("schema_version"), "unsupported schema version");
  DesignDocument d;
  d.doc_id = o.string("doc_id");
  d.version = o.integer("version");
  if (d.version < 1) throw SchemaError(o.path("version"), "version must be >= 1");
  auto canvas = o.object("canvas");
  canvas.allow_only({"width", "height"});
  d.canvas.width = canvas.number("width");
  d.canvas.height = canvas.number("height");
  if (!(d.canvas.width > 0 && std::isfinite(d.canvas.width)))
    throw SchemaError(canvas.path("width"), "canvas width must be positive");
  if (!(d.canvas.height > 0 && std::isfinite(d.canvas.height)))
    throw SchemaError(canvas.path("height"), "canvas height must be positive");
  if (o.has("background")) d.background = color_from_json(o.at("background"), o.path("background"));
  const auto& elements = o.at("elements");
  if (!elements.is_array()) throw SchemaError(o.path("elements"), "expected an array");
  for (std::size_t i = 0; i < elements.size(); ++i)
    d.elements.push_back(element_from_json(detail::ObjectReader(elements[i], detail::child_path(o.path("elements"), i))));
  d.team_id = o.string_or("team_id", "");
  d.author_ids = o.string_list_or_empty("author_ids");
  d.created_at = o.string_or("created_at", "");
  validate_document(d);
  return d;
}

/// Parses and validates a document from its UTF-8 JSON text.
inline DesignDocument parse_document(std::string_view text) {
  return document_from_json(detail::parse_json_text(text));
}

inline std::string serialize_document(const DesignDocument& d) { return document_to_json(d).dump(2) + "\n"; }

/// Copy of `d` keeping only the elements accepted by `keep`, in their original order.
template <typename Pred>
DesignDocument subset_document(const DesignDocument& d, Pred keep) {
  DesignDocument out = d;
  out.elements.clear();
  for (const auto& e : d.elements)
    if (keep(e)) out.elements.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Version chains

struct VersionGap {
  std::int64_t from = 0;
  std::int64_t to = 0;
  bool operator==(const VersionGap&) const = default;
};

struct VersionChain {
  std::string doc_id;
  std::vector<DesignDocument> versions;  // ascending by version
  std::vector<VersionGap> gaps;

  const DesignDocument* find(std::int64_t version) const {
    for (const auto& v : versions)
      if (v.version == version) return &v;
    return nullptr;
  }
};

inline VersionChain validate_version_chain(std::vector<DesignDocument> versions) {
  VersionChain chain;
  if (versions.empty()) return chain;
  chain.doc_id = versions.front().doc_id;
  for (const auto& v : versions)
    if (v.doc_id != chain.doc_id)
      throw ValidationError("mixed doc_ids in version chain: '" + chain.doc_id + "' and '" + v.doc_id + "'");
  std::stable_sort(versions.begin(), versions.end(),
                   [](const auto& a, const auto& b) { return a.version < b.version; });
  for (std::size_t i = 1; i < versions.size(); ++i) {
    if (versions[i].version == versions[i - 1].version)
      throw ValidationError("duplicate version " + std::to_string(versions[i].version) + " in chain");
    if (versions[i].version != versions[i - 1].version + 1)
      chain.gaps.push_back({versions[i - 1].version, versions[i].version});
  }
  chain.versions = std::move(versions);
  return chain;
}

// ---------------------------------------------------------------------------
// Process logs (newline-delimited JSON, one event per line)

struct ProcessEvent {
  std::string timestamp;
  std::string actor_id;
  ProcessAction action = ProcessAction::move;
  std::vector<std::string> element_ids;
  std::optional<double> viewport_zoom;

  bool operator==(const ProcessEvent&) const = default;
};

inline json process_event_to_json(const ProcessEvent& e) {
  json j{{"timestamp", e.timestamp},
         {"actor_id", e.actor_id},
         {"action", to_string(e.action)},
         {"element_ids", e.element_ids}};
  if (e.viewport_zoom) j["viewport_zoom"] = *e.viewport_zoom;
  return j;
}

inline ProcessEvent process_event_from_json(const json& j, const std::string& path) {
  detail::ObjectReader o(j, path);
  o.allow_only({"timestamp", "actor_id", "action", "element_ids", "viewport_zoom"});
  ProcessEvent e;
  e.timestamp = o.string("timestamp");
  e.actor_id = o.string_or("actor_id", "");
  e.action = detail::enum_from_string<ProcessAction>(kProcessActionNames, o.string("action"), o.path("action"));
  e.element_ids = o.string_list_or_empty("element_ids");
  e.viewport_zoom = o.optional_number("viewport_zoom");
  return e;
}

inline std::vector<ProcessEvent> parse_process_log(std::string_view text) {
  std::vector<ProcessEvent> events;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("invalid JSON in process log: " + std::string(e.what()), lineno, e.byte);
    }
    events.push_back(process_event_from_json(j, "/" + std::to_string(lineno)));
  }
  return events;
}

/// Replays the log against the document: every non-zoom event must reference an element that
/// exists at event time. The state before the first event is inferred from the final document.
inline void validate_process_log(const std::vector<ProcessEvent>& events, const DesignDocument& doc) {
  std::set<std::string> alive;
  for (const auto& e : doc.elements) alive.insert(e.id);
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    const auto& ev = *it;
    for (const auto& id : ev.element_ids) {
      if (ev.action == ProcessAction::create) alive.erase(id);
      if (ev.action == ProcessAction::remove) alive.insert(id);
    }
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (ev.action == ProcessAction::zoom) continue;
    for (const auto& id : ev.element_ids) {
      if (ev.action == ProcessAction::create) {
        if (!alive.insert(id).second)
          throw ValidationError("process event " + std::to_string(i) + " creates existing element '" + id + "'");
        continue;
      }
      if (!alive.count(id))
        throw ValidationError("process event " + std::to_string(i) + " references missing element '" + id + "'");
      if (ev.action == ProcessAction::remove) alive.erase(id);
    }
  }
}

}  // namespace dca
