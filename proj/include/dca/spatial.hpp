#pragma once

// Spatial organization: AMOEBA clustering over Delaunay edges, recursive
// cluster trees, scale assignment, whitespace, and the Multiscale Organization
// analytic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dca/delaunay.hpp"
#include "dca/error.hpp"
#include "dca/hash.hpp"
#include "dca/model.hpp"

namespace dca {

struct SpatialConfig {
  double amoeba_k = 1.0;
  int min_split_size = 3;
  int max_depth = 6;
  double beta = 0.5;             // distance multiplier for co-manipulated element pairs
  double scale_ratio_rho = 4.0;  // imbalance threshold between scale populations
  int grid_resolution = 64;      // cells per axis for whitespace
  double scale_log_base = 4.0;   // size binning when no zoom metadata exists
};

struct SpatialPoint {
  std::string id;
  Point2 centroid;
  double size = 0;  // bbox diagonal
};

/// Unordered element-id pair -> multiplicative distance factor.
using AffinityMap = std::map<std::pair<std::string, std::string>, double>;

inline std::pair<std::string, std::string> id_pair(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

struct AmoebaResult {
  std::vector<std::vector<std::string>> clusters;  // members in input order; clusters by first member
  std::vector<std::string> jittered_ids;
  std::size_t edge_count = 0;
  double mean_edge_length = 0;
  double stddev_edge_length = 0;
  double threshold = 0;
};

namespace detail {

inline constexpr double kEdgeTolerance = 1e-9;

/// Moves every point that coincides with a lexicographically smaller id by `magnitude`
/// in a direction derived from its id hash.
inline std::vector<Point2> jitter_coincident(std::span<const SpatialPoint> pts, double magnitude,
                                             std::vector<std::string>& jittered) {
  std::vector<Point2> out;
  for (const auto& p : pts) out.push_back(p.centroid);
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pts.size(); ++i) groups[{pts[i].centroid.x, pts[i].centroid.y}].push_back(i);
  for (auto& [pos, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end(), [&](auto a, auto b) { return pts[a].id < pts[b].id; });
    for (std::size_t k = 1; k < members.size(); ++k) {
      const auto i = members[k];
      const double angle = static_cast<double>(fnv1a64(pts[i].id) >> 11) * 0x1.0p-53 * 2 * std::numbers::pi;
      out[i].x += magnitude * std::cos(angle);
      out[i].y += magnitude * std::sin(angle);
      jittered.push_back(pts[i].id);
    }
  }
  std::sort(jittered.begin(), jittered.end());
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

/// Delaunay-edge clustering: edges longer than mean + k * stddev (over all edges) are cut and the
/// connected components returned. `jitter_magnitude` <= 0 derives it from the points' extent.
inline AmoebaResult amoeba_cluster(std::span<const SpatialPoint> points, double k,
                                   const AffinityMap* affinity = nullptr, double jitter_magnitude = 0) {
  if (!(k >= 0)) throw ValidationError("amoeba k must be non-negative");
  AmoebaResult r;
  const std::size_t n = points.size();
  if (n == 0) return r;

  if (jitter_magnitude <= 0) {
    double minx = points[0].centroid.x, maxx = minx, miny = points[0].centroid.y, maxy = miny;
    for (const auto& p : points) {
      minx = std::min(minx, p.centroid.x);
      maxx = std::max(maxx, p.centroid.x);
      miny = std::min(miny, p.centroid.y);
      maxy = std::max(maxy, p.centroid.y);
    }
    const double extent = std::hypot(maxx - minx, maxy - miny);
    jitter_magnitude = 1e-6 * (extent > 0 ? extent : 1.0);
  }
  const auto pos = detail::jitter_coincident(points, jitter_magnitude, r.jittered_ids);
  const auto edges = delaunay_edges(pos);
  r.edge_count = edges.size();

  std::vector<double> lengths;
  for (const auto& [a, b] : edges) {
    double len = std::hypot(pos[a].x - pos[b].x, pos[a].y - pos[b].y);
    if (affinity) {
      auto it = affinity->find(id_pair(points[a].id, points[b].id));
      if (it != affinity->end()) len *= it->second;
    }
    lengths.push_back(len);
  }
  if (!lengths.empty()) {
    double sum = 0;
    for (double l : lengths) sum += l;
    r.mean_edge_length = sum / static_cast<double>(lengths.size());
    double var = 0;
    for (double l : lengths) var += (l - r.mean_edge_length) * (l - r.mean_edge_length);
    r.stddev_edge_length = std::sqrt(var / static_cast<double>(lengths.size()));
  }
  r.threshold = r.mean_edge_length + k * r.stddev_edge_length;

  detail::UnionFind uf(n);
  const double cut = r.threshold * (1 + detail::kEdgeTolerance);
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (!(lengths[i] > cut)) uf.unite(edges[i].first, edges[i].second);

  std::map<std::size_t, std::size_t> slot;  // root -> cluster index, in input order
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = uf.find(i);
    auto [it, inserted] = slot.try_emplace(root, r.clusters.size());
    if (inserted) r.clusters.emplace_back();
    r.clusters[it->second].push_back(points[i].id);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cluster trees

struct ClusterNode {
  std::vector<std::string> element_ids;  // document order
  Rect bounding_box;
  int level = 0;
  std::vector<ClusterNode> children;
  std::optional<double> mean_edge_length;
};

struct ClusterTree {
  std::optional<ClusterNode> root;  // empty for documents without elements
  int depth = 0;
  std::map<int, int> scale_histogram;
  std::vector<std::string> jittered_ids;

  template <typename F>
  void for_each_leaf(F&& f) const {
    if (root) visit_leaves(*root, f);
  }

 private:
  template <typename F>
  static void visit_leaves(const ClusterNode& n, F& f) {
    if (n.children.empty()) {
      f(n);
      return;
    }
    for (const auto& c : n.children) visit_leaves(c, f);
  }
};

/// Pairs of elements selected, moved, resized or restyled together get distance factor `beta`.
inline AffinityMap co_manipulation_affinity(std::span<const ProcessEvent> events, double beta) {
  AffinityMap m;
  for (const auto& ev : events) {
    if (ev.action == ProcessAction::zoom || ev.action == ProcessAction::create ||
        ev.action == ProcessAction::remove)
      continue;
    for (std::size_t i = 0; i < ev.element_ids.size(); ++i)
      for (std::size_t j = i + 1; j < ev.element_ids.size(); ++j)
        if (ev.element_ids[i] != ev.element_ids[j]) m[id_pair(ev.element_ids[i], ev.element_ids[j])] = beta;
  }
  return m;
}

inline std::map<std::string, int> assign_scales(const DesignDocument& doc, const SpatialConfig& config = {});

namespace detail {

inline std::vector<SpatialPoint> spatial_points(const DesignDocument& doc, const std::vector<std::string>& ids) {
  std::vector<SpatialPoint> pts;
  for (const auto& id : ids) {
    const Element* e = doc.find(id);
    pts.push_back(SpatialPoint{id, Point2{e->bbox.center_x(), e->bbox.center_y()}, e->bbox.diagonal()});
  }
  return pts;
}

inline Rect bounding_of(const DesignDocument& doc, const std::vector<std::string>& ids) {
  Rect box = doc.find(ids.front())->bbox;
  for (const auto& id : ids) box = Rect::bounding(box, doc.find(id)->bbox);
  return box;
}

inline int split_node(const DesignDocument& doc, ClusterNode& node, const SpatialConfig& config,
                      const AffinityMap* affinity, double jitter, std::set<std::string>& jittered) {
  const int size = static_cast<int>(node.element_ids.size());
  if (size < 2 || size < config.min_split_size || node.level + 1 >= config.max_depth) return 1;
  const auto pts = spatial_points(doc, node.element_ids);
  const auto split = amoeba_cluster(pts, config.amoeba_k, affinity, jitter);
  jittered.insert(split.jittered_ids.begin(), split.jittered_ids.end());
  node.mean_edge_length = split.mean_edge_length;
  if (split.clusters.size() < 2) return 1;
  int deepest = 0;
  for (const auto& members : split.clusters) {
    ClusterNode child;
    child.element_ids = members;
    child.bounding_box = bounding_of(doc, members);
    child.level = node.level + 1;
    deepest = std::max(deepest, split_node(doc, child, config, affinity, jitter, jittered));
    node.children.push_back(std::move(child));
  }
  return deepest + 1;
}

}  // namespace detail

/// Recursively nests AMOEBA clusters. `events` (optional) shrink distances between co-manipulated
/// elements by config.beta.
inline ClusterTree build_cluster_tree(const DesignDocument& doc, const SpatialConfig& config = {},
                                      std::span<const ProcessEvent> events = {}) {
  if (config.min_split_size < 3) throw ValidationError("min_split_size must be >= 3");
  if (config.max_depth < 1) throw ValidationError("max_depth must be >= 1");
  ClusterTree tree;
  for (const auto& [id, level] : assign_scales(doc, config)) ++tree.scale_histogram[level];
  if (doc.elements.empty()) return tree;
  const AffinityMap affinity = co_manipulation_affinity(events, config.beta);
  const double jitter = 1e-6 * doc.canvas.diagonal();

  ClusterNode root;
  for (const auto& e : doc.elements) root.element_ids.push_back(e.id);
  root.bounding_box = detail::bounding_of(doc, root.element_ids);
  std::set<std::string> jittered;
  tree.depth = detail::split_node(doc, root, config, affinity.empty() ? nullptr : &affinity, jitter, jittered);
  tree.jittered_ids.assign(jittered.begin(), jittered.end());
  tree.root = std::move(root);
  return tree;
}

// ---------------------------------------------------------------------------
// Scales

namespace detail {

inline double round_significant(double v, int digits) {
  if (v == 0) return 0;
  const double magnitude = std::floor(std::log10(std::fabs(v)));
  const double factor = std::pow(10.0, digits - 1 - magnitude);
  return std::round(v * factor) / factor;
}

}  // namespace detail

/// Scale level per element. With zoom metadata on at least half the elements, levels are the
/// ranks of distinct zoom values (3 significant figures); elements lacking metadata join level 0.
/// Otherwise levels come from rounding log_base(diagonal / median diagonal), shifted to start at 0.
inline std::map<std::string, int> assign_scales(const DesignDocument& doc, const SpatialConfig& config) {
  std::map<std::string, int> out;
  if (doc.elements.empty()) return out;
  std::size_t with_zoom = 0;
  for (const auto& e : doc.elements)
    if (e.zoom_level) ++with_zoom;

  if (2 * with_zoom >= doc.elements.size()) {
    std::set<double> buckets;
    for (const auto& e : doc.elements)
      if (e.zoom_level) buckets.insert(detail::round_significant(*e.zoom_level, 3));
    for (const auto& e : doc.elements) {
      if (!e.zoom_level) {
        out[e.id] = 0;
        continue;
      }
      const double z = detail::round_significant(*e.zoom_level, 3);
      out[e.id] = static_cast<int>(std::distance(buckets.begin(), buckets.find(z)));
    }
    return out;
  }

  std::vector<double> diags;
  for (const auto& e : doc.elements) diags.push_back(e.bbox.diagonal());
  std::vector<double> sorted = diags;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2;
  const double log_base = std::log(config.scale_log_base);
  std::vector<int> raw;
  for (double d : diags) raw.push_back(static_cast<int>(std::floor(std::log(d / median) / log_base + 0.5)));
  const int lowest = *std::min_element(raw.begin(), raw.end());
  for (std::size_t i = 0; i < doc.elements.size(); ++i) out[doc.elements[i].id] = raw[i] - lowest;
  return out;
}

struct ImbalanceFinding {
  int scale_a = 0;
  int scale_b = 0;
  int count_a = 0;
  int count_b = 0;
  double ratio = 0;      // max / min
  int target_scale = 0;  // the under-populated scale
  std::string message;
};

struct MultiscaleResult {
  int scale_count = 0;
  std::map<int, int> scale_histogram;
  std::vector<ImbalanceFinding> imbalance_findings;
  std::map<std::string, int> scale_of;
  ClusterTree cluster_tree;
};

/// Imbalance findings for every scale pair whose population ratio reaches rho.
inline std::vector<ImbalanceFinding> scale_imbalances(const std::map<int, int>& histogram, double rho) {
  std::vector<ImbalanceFinding> out;
  for (auto a = histogram.begin(); a != histogram.end(); ++a) {
    for (auto b = std::next(a); b != histogram.end(); ++b) {
      if (a->second <= 0 || b->second <= 0) continue;
      const int hi = std::max(a->second, b->second), lo = std::min(a->second, b->second);
      const double ratio = static_cast<double>(hi) / lo;
      if (ratio < rho) continue;
      ImbalanceFinding f{a->first, b->first, a->second, b->second, ratio, 0, ""};
      f.target_scale = a->second < b->second ? a->first : b->first;
      const int other = f.target_scale == a->first ? b->first : a->first;
      f.message = "scale " + std::to_string(f.target_scale) + " has only " + std::to_string(lo) +
                  " elements where scale " + std::to_string(other) + " has " + std::to_string(hi) +
                  "; develop scale " + std::to_string(f.target_scale) + " further";
      out.push_back(std::move(f));
    }
  }
  return out;
}

inline MultiscaleResult multiscale(const DesignDocument& doc, const SpatialConfig& config = {},
                                   std::span<const ProcessEvent> events = {}) {
  MultiscaleResult r;
  r.scale_of = assign_scales(doc, config);
  for (const auto& [id, level] : r.scale_of) ++r.scale_histogram[level];
  r.scale_count = static_cast<int>(r.scale_histogram.size());
  r.imbalance_findings = scale_imbalances(r.scale_histogram, config.scale_ratio_rho);
  r.cluster_tree = build_cluster_tree(doc, config, events);
  return r;
}

// ---------------------------------------------------------------------------
// Whitespace

struct WhitespaceResult {
  int cluster_count = 0;
  double whitespace_ratio = 1.0;
  int covered_cells = 0;
  int total_cells = 0;
};

/// Center of grid cell `i` along an axis of length `extent` split into `cells` cells.
inline double grid_cell_center(int i, double extent, int cells) { return (i + 0.5) * extent / cells; }

inline WhitespaceResult whitespace(const DesignDocument& doc, int grid_resolution, const SpatialConfig& config = {}) {
  if (grid_resolution < 16) throw ValidationError("grid_resolution must be >= 16");
  const int res = grid_resolution;
  WhitespaceResult r;
  r.total_cells = res * res;
  std::vector<char> covered(static_cast<std::size_t>(r.total_cells), 0);
  const double W = doc.canvas.width, H = doc.canvas.height;

  // Index range of cell centers inside [lo, hi).
  auto range = [res](double lo, double hi, double extent) {
    int first = std::max(0, static_cast<int>(std::floor(lo / extent * res - 0.5)) - 1);
    while (first < res && grid_cell_center(first, extent, res) < lo) ++first;
    int last = std::min(res - 1, static_cast<int>(std::ceil(hi / extent * res - 0.5)) + 1);
    while (last >= 0 && !(grid_cell_center(last, extent, res) < hi)) --last;
    return std::pair{first, last};
  };
  for (const auto& e : doc.elements) {
    const auto [c0, c1] = range(e.bbox.x, e.bbox.right(), W);
    const auto [r0, r1] = range(e.bbox.y, e.bbox.bottom(), H);
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col) covered[static_cast<std::size_t>(row * res + col)] = 1;
  }
  r.covered_cells = static_cast<int>(std::count(covered.begin(), covered.end(), 1));
  r.whitespace_ratio = static_cast<double>(r.total_cells - r.covered_cells) / r.total_cells;

  if (!doc.elements.empty()) {
    std::vector<std::string> ids;
    for (const auto& e : doc.elements) ids.push_back(e.id);
    const auto pts = detail::spatial_points(doc, ids);
    r.cluster_count = static_cast<int>(amoeba_cluster(pts, config.amoeba_k, nullptr, 1e-6 * doc.canvas.diagonal()).clusters.size());
  }
  return r;
}

}  // namespace dca
