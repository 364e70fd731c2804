#pragma once

// Engine configuration: one flat JSON object whose keys tune every analytic.
// Each analytic result embeds the slice of this config it was computed with.

#include <array>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dca/consistency.hpp"
#include "dca/contrast.hpp"
#include "dca/hash.hpp"
#include "dca/ideas.hpp"
#include "dca/json_util.hpp"
#include "dca/spatial.hpp"

namespace dca {

enum class AnalyticKind { fluency, flexibility, visual_consistency, multiscale_organization, legible_contrast };
inline constexpr std::array<std::string_view, 5> kAnalyticKindNames{
    "fluency", "flexibility", "visual_consistency", "multiscale_organization", "legible_contrast"};
inline constexpr std::array<AnalyticKind, 5> kAllAnalytics{
    AnalyticKind::fluency, AnalyticKind::flexibility, AnalyticKind::visual_consistency,
    AnalyticKind::multiscale_organization, AnalyticKind::legible_contrast};

inline std::string_view to_string(AnalyticKind k) { return kAnalyticKindNames[static_cast<int>(k)]; }

inline AnalyticKind analytic_kind_from_string(const std::string& s) {
  return detail::enum_from_string<AnalyticKind>(kAnalyticKindNames, s, "analytic");
}

struct EngineConfig {
  std::set<AnalyticKind> enabled{kAllAnalytics.begin(), kAllAnalytics.end()};

  // ideas
  std::optional<std::string> stopwords_path;  // default English list when unset
  std::vector<std::string> recognizer_command;
  int recognizer_timeout_ms = 5000;

  // semantics
  double tau = 0.6;
  std::string oov_policy = "singleton";  // fully-OOV ideas form their own category

  SpatialConfig spatial;
  ConsistencyConfig consistency;
  ContrastConfig contrast;

  // course rollups
  int recurrent_threshold = 2;

  // service policy
  std::vector<std::string> instructor_only_actions{"validate"};
};

inline json config_to_json(const EngineConfig& c) {
  json enabled = json::array();
  for (auto k : c.enabled) enabled.push_back(to_string(k));
  json j{{"enabled_analytics", enabled},
         {"recognizer_command", c.recognizer_command},
         {"recognizer_timeout_ms", c.recognizer_timeout_ms},
         {"tau", c.tau},
         {"oov_policy", c.oov_policy},
         {"amoeba_k", c.spatial.amoeba_k},
         {"min_split_size", c.spatial.min_split_size},
         {"max_depth", c.spatial.max_depth},
         {"beta", c.spatial.beta},
         {"scale_ratio_rho", c.spatial.scale_ratio_rho},
         {"grid_resolution", c.spatial.grid_resolution},
         {"scale_log_base", c.spatial.scale_log_base},
         {"epsilon_numeric", c.consistency.epsilon_numeric},
         {"delta_color", c.consistency.delta_color},
         {"typed_mode_threshold", c.consistency.typed_mode_threshold},
         {"contrast_blocks_per_min_axis", c.contrast.block_count_per_min_axis},
         {"contrast_theta_ratio", c.contrast.theta_ratio},
         {"contrast_line_min_length", c.contrast.line_min_length},
         {"contrast_loud_sv_threshold", c.contrast.loud_sv_threshold},
         {"contrast_loud_area_min", c.contrast.loud_area_min},
         {"contrast_loud_hue_difference", c.contrast.loud_hue_difference},
         {"contrast_theta_hc", c.contrast.theta_hc},
         {"contrast_hc_norm", c.contrast.hc_norm},
         {"contrast_high_contrast_weight", c.contrast.high_contrast_weight},
         {"recurrent_threshold", c.recurrent_threshold},
         {"instructor_only_actions", c.instructor_only_actions}};
  j["stopwords_path"] = c.stopwords_path ? json(*c.stopwords_path) : json(nullptr);
  return j;
}

inline EngineConfig config_from_json(const json& j) {
  detail::ObjectReader o(j, "");
  o.allow_only({"enabled_analytics", "stopwords_path", "recognizer_command", "recognizer_timeout_ms", "tau",
                "oov_policy", "amoeba_k", "min_split_size", "max_depth", "beta", "scale_ratio_rho",
                "grid_resolution", "scale_log_base", "epsilon_numeric", "delta_color", "typed_mode_threshold",
                "contrast_blocks_per_min_axis", "contrast_theta_ratio", "contrast_line_min_length",
                "contrast_loud_sv_threshold", "contrast_loud_area_min", "contrast_loud_hue_difference",
                "contrast_theta_hc", "contrast_hc_norm", "contrast_high_contrast_weight", "recurrent_threshold",
                "instructor_only_actions"});
  EngineConfig c;
  if (o.has("enabled_analytics")) {
    c.enabled.clear();
    const auto names = o.string_list("enabled_analytics");
    for (std::size_t i = 0; i < names.size(); ++i)
      c.enabled.insert(detail::enum_from_string<AnalyticKind>(kAnalyticKindNames, names[i],
                                                              detail::child_path(o.path("enabled_analytics"), i)));
  }
  c.stopwords_path = o.optional_string("stopwords_path");
  c.recognizer_command = o.string_list_or_empty("recognizer_command");
  auto number = [&](std::string_view key, double& slot) {
    if (o.has(key)) slot = o.number(key);
  };
  auto integer = [&](std::string_view key, int& slot) {
    if (o.has(key)) slot = static_cast<int>(o.integer(key));
  };
  integer("recognizer_timeout_ms", c.recognizer_timeout_ms);
  number("tau", c.tau);
  if (o.has("oov_policy")) c.oov_policy = o.string("oov_policy");
  number("amoeba_k", c.spatial.amoeba_k);
  integer("min_split_size", c.spatial.min_split_size);
  integer("max_depth", c.spatial.max_depth);
  number("beta", c.spatial.beta);
  number("scale_ratio_rho", c.spatial.scale_ratio_rho);
  integer("grid_resolution", c.spatial.grid_resolution);
  number("scale_log_base", c.spatial.scale_log_base);
  number("epsilon_numeric", c.consistency.epsilon_numeric);
  number("delta_color", c.consistency.delta_color);
  number("typed_mode_threshold", c.consistency.typed_mode_threshold);
  integer("contrast_blocks_per_min_axis", c.contrast.block_count_per_min_axis);
  number("contrast_theta_ratio", c.contrast.theta_ratio);
  integer("contrast_line_min_length", c.contrast.line_min_length);
  number("contrast_loud_sv_threshold", c.contrast.loud_sv_threshold);
  number("contrast_loud_area_min", c.contrast.loud_area_min);
  number("contrast_loud_hue_difference", c.contrast.loud_hue_difference);
  number("contrast_theta_hc", c.contrast.theta_hc);
  number("contrast_hc_norm", c.contrast.hc_norm);
  number("contrast_high_contrast_weight", c.contrast.high_contrast_weight);
  integer("recurrent_threshold", c.recurrent_threshold);
  if (o.has("instructor_only_actions")) c.instructor_only_actions = o.string_list("instructor_only_actions");

  if (!(c.tau > 0 && c.tau < 2)) throw SchemaError(o.path("tau"), "tau must lie in (0, 2)");
  if (c.oov_policy != "singleton") throw SchemaError(o.path("oov_policy"), "only 'singleton' is supported");
  if (c.spatial.amoeba_k < 0) throw SchemaError(o.path("amoeba_k"), "must be non-negative");
  if (c.spatial.min_split_size < 3) throw SchemaError(o.path("min_split_size"), "must be >= 3");
  if (c.spatial.max_depth < 1) throw SchemaError(o.path("max_depth"), "must be >= 1");
  if (!(c.spatial.beta > 0)) throw SchemaError(o.path("beta"), "must be positive");
  if (!(c.spatial.scale_ratio_rho >= 1)) throw SchemaError(o.path("scale_ratio_rho"), "must be >= 1");
  if (c.spatial.grid_resolution < 16) throw SchemaError(o.path("grid_resolution"), "must be >= 16");
  if (!(c.spatial.scale_log_base > 1)) throw SchemaError(o.path("scale_log_base"), "must be > 1");
  if (c.contrast.block_count_per_min_axis < 16)
    throw SchemaError(o.path("contrast_blocks_per_min_axis"), "must be >= 16");
  if (c.contrast.line_min_length < 1) throw SchemaError(o.path("contrast_line_min_length"), "must be >= 1");
  if (!(c.contrast.hc_norm > 0)) throw SchemaError(o.path("contrast_hc_norm"), "must be positive");
  if (!(c.contrast.high_contrast_weight >= 0 && c.contrast.high_contrast_weight <= 1))
    throw SchemaError(o.path("contrast_high_contrast_weight"), "must lie in [0, 1]");
  if (c.recurrent_threshold < 1) throw SchemaError(o.path("recurrent_threshold"), "must be >= 1");
  return c;
}

inline EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(detail::parse_json_text(ss.str()));
}

/// Content hash of the full configuration; item references and caches key on it.
inline std::string config_hash(const EngineConfig& c) { return sha256_hex(config_to_json(c).dump()); }

/// The keys that influence one analytic.
inline json config_snapshot(const EngineConfig& c, AnalyticKind kind) {
  const json all = config_to_json(c);
  std::vector<std::string> keys;
  switch (kind) {
    case AnalyticKind::fluency:
      keys = {"stopwords_path", "recognizer_command", "recognizer_timeout_ms"};
      break;
    case AnalyticKind::flexibility:
      keys = {"stopwords_path", "recognizer_command", "recognizer_timeout_ms", "tau", "oov_policy"};
      break;
    case AnalyticKind::visual_consistency:
      keys = {"epsilon_numeric", "delta_color", "typed_mode_threshold", "amoeba_k", "min_split_size", "max_depth",
              "scale_log_base"};
      break;
    case AnalyticKind::multiscale_organization:
      keys = {"amoeba_k", "min_split_size", "max_depth", "beta", "scale_ratio_rho", "grid_resolution",
              "scale_log_base"};
      break;
    case AnalyticKind::legible_contrast:
      keys = {"contrast_blocks_per_min_axis", "contrast_theta_ratio", "contrast_line_min_length",
              "contrast_loud_sv_threshold", "contrast_loud_area_min", "contrast_loud_hue_difference",
              "contrast_theta_hc", "contrast_hc_norm", "contrast_high_contrast_weight"};
      break;
  }
  json out = json::object();
  for (const auto& k : keys) out[k] = all.at(k);
  return out;
}

/// Builds the idea-extraction settings, loading the stopword list and wiring the recognizer.
inline IdeaConfig make_idea_config(const EngineConfig& c) {
  IdeaConfig ic;
  if (c.stopwords_path) ic.stopwords = load_stopwords(*c.stopwords_path);
  if (!c.recognizer_command.empty())
    ic.recognizer = std::make_shared<SubprocessRecognizer>(c.recognizer_command,
                                                           std::chrono::milliseconds(c.recognizer_timeout_ms));
  return ic;
}

}  // namespace dca
