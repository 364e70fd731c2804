#pragma once

// Legible Contrast: block rasterization, high-contrast block detection,
// thick line/box detection and loud-area (Imhof) findings.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dca/color.hpp"
#include "dca/model.hpp"
#include "dca/spatial.hpp"

namespace dca {

struct ContrastConfig {
  int block_count_per_min_axis = 64;
  double theta_ratio = 4.5;           // neighbour contrast ratio that marks a block
  int line_min_length = 10;           // cells
  double loud_sv_threshold = 0.7;     // saturation * value
  double loud_area_min = 0.15;        // fraction of the grid
  double loud_hue_difference = 60.0;  // degrees
  double theta_hc = 0.2;              // high-contrast fraction above which the design is flagged
  double hc_norm = 0.4;               // fraction at which the contrast component bottoms out
  double high_contrast_weight = 0.5;  // blend: weight * contrast component + (1 - weight) * loud component
};

struct BlockGrid {
  int cols = 0;
  int rows = 0;
  double block_size = 0;
  std::vector<Color> cells;  // row-major
  std::vector<int> owner;    // index of the painting element, -1 for canvas

  const Color& at(int col, int row) const { return cells[static_cast<std::size_t>(row * cols + col)]; }
  int owner_at(int col, int row) const { return owner[static_cast<std::size_t>(row * cols + col)]; }
  double cell_center_x(int col) const { return (col + 0.5) * block_size; }
  double cell_center_y(int row) const { return (row + 0.5) * block_size; }
};

/// Area color of an element: fill, else background. Strokes paint only the outline.
inline std::optional<Color> paint_color(const Element& e) {
  if (e.style.fill) return e.style.fill;
  if (e.style.background) return e.style.background;
  return std::nullopt;
}

inline Color opaque_canvas_color(const DesignDocument& doc) {
  return doc.background.a < 1.0 ? composite_over(doc.background, kWhite) : Color{doc.background.r, doc.background.g, doc.background.b, 1.0};
}

inline BlockGrid rasterize_blocks(const DesignDocument& doc, int block_count_per_min_axis) {
  if (block_count_per_min_axis < 16) throw ValidationError("block_count_per_min_axis must be >= 16");
  BlockGrid g;
  g.block_size = std::min(doc.canvas.width, doc.canvas.height) / block_count_per_min_axis;
  g.cols = std::max(1, static_cast<int>(std::ceil(doc.canvas.width / g.block_size - 1e-9)));
  g.rows = std::max(1, static_cast<int>(std::ceil(doc.canvas.height / g.block_size - 1e-9)));
  const Color canvas = opaque_canvas_color(doc);
  g.cells.assign(static_cast<std::size_t>(g.cols * g.rows), canvas);
  g.owner.assign(g.cells.size(), -1);

  auto span = [&](double lo, double hi, int count, auto center) {
    int first = std::max(0, static_cast<int>(std::floor(lo / g.block_size - 0.5)) - 1);
    while (first < count && center(first) < lo) ++first;
    int last = std::min(count - 1, static_cast<int>(std::ceil(hi / g.block_size - 0.5)) + 1);
    while (last >= 0 && !(center(last) < hi)) --last;
    return std::pair{first, last};
  };
  // Painter's order: later (higher) elements overwrite earlier ones.
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    const auto area = paint_color(e);
    if (!area && !e.style.stroke) continue;
    const auto [c0, c1] = span(e.bbox.x, e.bbox.right(), g.cols, [&](int c) { return g.cell_center_x(c); });
    const auto [r0, r1] = span(e.bbox.y, e.bbox.bottom(), g.rows, [&](int r) { return g.cell_center_y(r); });
    const Color fill = area ? composite_over(*area, canvas) : canvas;
    const Color stroke = e.style.stroke ? composite_over(*e.style.stroke, canvas) : fill;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const bool edge = r == r0 || r == r1 || c == c0 || c == c1;
        if (!area && !edge) continue;
        const auto k = static_cast<std::size_t>(r * g.cols + c);
        g.cells[k] = edge && e.style.stroke ? stroke : fill;
        g.owner[k] = static_cast<int>(i);
      }
  }
  return g;
}

/// Binary PPM (P6) dump of the grid, one pixel per block.
inline void write_ppm(const BlockGrid& g, std::ostream& out) {
  out << "P6\n" << g.cols << " " << g.rows << "\n255\n";
  for (const auto& c : g.cells) {
    out.put(static_cast<char>(c.r));
    out.put(static_cast<char>(c.g));
    out.put(static_cast<char>(c.b));
  }
}

enum class RunOrientation { horizontal, vertical };

struct LineBoxFinding {
  RunOrientation orientation = RunOrientation::horizontal;
  int row_begin = 0, row_end = 0;  // inclusive cell range covered by the band
  int col_begin = 0, col_end = 0;
  int length = 0;     // longest run in the band, in cells
  int thickness = 0;  // number of parallel runs merged into the band
  std::vector<std::string> element_ids;
};

struct CellSpan {
  int row = 0;
  int col_begin = 0;
  int col_end = 0;  // inclusive
  bool operator==(const CellSpan&) const = default;
};

struct LoudAreaFinding {
  std::vector<CellSpan> region;  // row-major spans of the region's cells
  int cell_count = 0;
  double area_fraction = 0;
  double mean_saturation_value = 0;
  double mean_hue = 0;
  std::vector<std::string> element_ids;
  std::vector<int> adjacent_regions;  // indices of qualifying contrasting neighbours
  Rect bounds;                        // canvas units
};

struct ContrastResult {
  double high_contrast_fraction = 0;
  int high_contrast_cells = 0;
  int total_cells = 0;
  std::vector<LineBoxFinding> line_box_findings;
  std::vector<LoudAreaFinding> loud_area_findings;
  double score = 1.0;
  bool flagged = false;
  int cols = 0, rows = 0;
  double block_size = 0;
};

namespace detail {

inline std::vector<std::string> owners_of(const BlockGrid& g, const DesignDocument& doc,
                                          const std::vector<std::size_t>& cells) {
  std::set<std::string> ids;
  for (auto c : cells)
    if (g.owner[c] >= 0) ids.insert(doc.elements[static_cast<std::size_t>(g.owner[c])].id);
  return {ids.begin(), ids.end()};
}

/// Maximal runs of marked cells along one orientation, merged into bands of adjacent parallel runs.
inline std::vector<LineBoxFinding> find_bands(const BlockGrid& g, const DesignDocument& doc,
                                              const std::vector<char>& marked, RunOrientation orientation,
                                              int min_length) {
  const bool horizontal = orientation == RunOrientation::horizontal;
  const int lines = horizontal ? g.rows : g.cols;
  const int along = horizontal ? g.cols : g.rows;
  auto cell = [&](int line, int pos) {
    return static_cast<std::size_t>(horizontal ? line * g.cols + pos : pos * g.cols + line);
  };
  struct Run {
    int line, begin, end;
  };
  std::vector<Run> runs;
  for (int line = 0; line < lines; ++line) {
    int pos = 0;
    while (pos < along) {
      if (!marked[cell(line, pos)]) {
        ++pos;
        continue;
      }
      int end = pos;
      while (end + 1 < along && marked[cell(line, end + 1)]) ++end;
      if (end - pos + 1 >= min_length) runs.push_back({line, pos, end});
      pos = end + 1;
    }
  }
  UnionFind uf(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = i + 1; j < runs.size() && runs[j].line <= runs[i].line + 1; ++j)
      if (runs[j].line == runs[i].line + 1 && runs[j].begin <= runs[i].end && runs[i].begin <= runs[j].end)
        uf.unite(i, j);

  std::map<std::size_t, LineBoxFinding> bands;
  std::map<std::size_t, std::vector<std::size_t>> band_cells;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto root = uf.find(i);
    auto [it, inserted] = bands.try_emplace(root);
    auto& b = it->second;
    const auto& r = runs[i];
    if (inserted) {
      b.orientation = orientation;
      b.row_begin = b.row_end = horizontal ? r.line : r.begin;
      b.col_begin = b.col_end = horizontal ? r.begin : r.line;
    }
    const int rb = horizontal ? r.line : r.begin, re = horizontal ? r.line : r.end;
    const int cb = horizontal ? r.begin : r.line, ce = horizontal ? r.end : r.line;
    b.row_begin = std::min(b.row_begin, rb);
    b.row_end = std::max(b.row_end, re);
    b.col_begin = std::min(b.col_begin, cb);
    b.col_end = std::max(b.col_end, ce);
    b.length = std::max(b.length, r.end - r.begin + 1);
    ++b.thickness;
    for (int p = r.begin; p <= r.end; ++p) band_cells[root].push_back(cell(r.line, p));
  }
  std::vector<LineBoxFinding> out;
  for (auto& [root, b] : bands) {
    b.element_ids = owners_of(g, doc, band_cells[root]);
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.row_begin, a.col_begin) < std::tie(b.row_begin, b.col_begin);
  });
  return out;
}

}  // namespace detail

inline ContrastResult legible_contrast_on_grid(const DesignDocument& doc, const BlockGrid& g,
                                               const ContrastConfig& config) {
  ContrastResult r;
  r.cols = g.cols;
  r.rows = g.rows;
  r.block_size = g.block_size;
  const std::size_t total = g.cells.size();
  r.total_cells = static_cast<int>(total);

  // (1) High-contrast blocks: each right/down neighbour pair is tested once and marks both cells.
  std::vector<double> lum(total);
  for (std::size_t i = 0; i < total; ++i) lum[i] = relative_luminance(g.cells[i]);
  auto ratio = [&](std::size_t a, std::size_t b) {
    return (std::max(lum[a], lum[b]) + 0.05) / (std::min(lum[a], lum[b]) + 0.05);
  };
  std::vector<char> marked(total, 0);
  for (int row = 0; row < g.rows; ++row)
    for (int col = 0; col < g.cols; ++col) {
      const auto i = static_cast<std::size_t>(row * g.cols + col);
      if (col + 1 < g.cols && ratio(i, i + 1) >= config.theta_ratio) marked[i] = marked[i + 1] = 1;
      if (row + 1 < g.rows && ratio(i, i + static_cast<std::size_t>(g.cols)) >= config.theta_ratio)
        marked[i] = marked[i + static_cast<std::size_t>(g.cols)] = 1;
    }
  r.high_contrast_cells = static_cast<int>(std::count(marked.begin(), marked.end(), 1));
  r.high_contrast_fraction = static_cast<double>(r.high_contrast_cells) / static_cast<double>(total);

  // (2) Thick lines and boxes.
  for (auto o : {RunOrientation::horizontal, RunOrientation::vertical}) {
    auto bands = detail::find_bands(g, doc, marked, o, config.line_min_length);
    r.line_box_findings.insert(r.line_box_findings.end(), bands.begin(), bands.end());
  }

  // (3) Loud areas: hue-coherent regions of pure, bright blocks.
  std::vector<Hsv> hsv(total);
  std::vector<char> loud(total, 0);
  for (std::size_t i = 0; i < total; ++i) {
    hsv[i] = to_hsv(g.cells[i]);
    loud[i] = hsv[i].saturation * hsv[i].value >= config.loud_sv_threshold;
  }
  detail::UnionFind uf(total);
  auto joinable = [&](std::size_t a, std::size_t b) {
    return loud[a] && loud[b] && hue_distance(hsv[a].hue, hsv[b].hue) < config.loud_hue_difference;
  };
  for (int row = 0; row < g.rows; ++row)
    for (int col = 0; col < g.cols; ++col) {
      const auto i = static_cast<std::size_t>(row * g.cols + col);
      if (col + 1 < g.cols && joinable(i, i + 1)) uf.unite(i, i + 1);
      if (row + 1 < g.rows && joinable(i, i + static_cast<std::size_t>(g.cols)))
        uf.unite(i, i + static_cast<std::size_t>(g.cols));
    }
  std::map<std::size_t, std::vector<std::size_t>> regions;  // root -> cells (row-major)
  for (std::size_t i = 0; i < total; ++i)
    if (loud[i]) regions[uf.find(i)].push_back(i);

  struct RegionStats {
    std::vector<std::size_t> cells;
    double area = 0, mean_sv = 0, mean_hue = 0;
  };
  std::vector<RegionStats> stats;
  std::map<std::size_t, std::size_t> region_index;
  for (auto& [root, cells] : regions) {
    RegionStats s;
    double sv = 0, hx = 0, hy = 0;
    for (auto c : cells) {
      sv += hsv[c].saturation * hsv[c].value;
      hx += std::cos(hsv[c].hue * std::numbers::pi / 180.0);
      hy += std::sin(hsv[c].hue * std::numbers::pi / 180.0);
    }
    s.area = static_cast<double>(cells.size()) / static_cast<double>(total);
    s.mean_sv = sv / static_cast<double>(cells.size());
    double h = std::atan2(hy, hx) * 180.0 / std::numbers::pi;
    if (h < 0) h += 360.0;
    s.mean_hue = h;
    s.cells = std::move(cells);
    region_index[root] = stats.size();
    stats.push_back(std::move(s));
  }
  std::vector<std::set<std::size_t>> neighbours(stats.size());
  for (int row = 0; row < g.rows; ++row)
    for (int col = 0; col < g.cols; ++col) {
      const auto i = static_cast<std::size_t>(row * g.cols + col);
      if (!loud[i]) continue;
      const auto ri = region_index[uf.find(i)];
      for (std::size_t j : {i + 1, i + static_cast<std::size_t>(g.cols)}) {
        if (j >= total || !loud[j]) continue;
        if (j == i + 1 && col + 1 >= g.cols) continue;
        const auto rj = region_index[uf.find(j)];
        if (ri != rj) {
          neighbours[ri].insert(rj);
          neighbours[rj].insert(ri);
        }
      }
    }
  std::vector<int> finding_of(stats.size(), -1);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& s = stats[k];
    if (s.area < config.loud_area_min) continue;
    std::vector<int> contrasting;
    for (auto q : neighbours[k])
      if (stats[q].area >= config.loud_area_min &&
          hue_distance(stats[q].mean_hue, s.mean_hue) >= config.loud_hue_difference)
        contrasting.push_back(static_cast<int>(q));
    if (contrasting.empty() && s.area < 2 * config.loud_area_min) continue;
    LoudAreaFinding f;
    f.cell_count = static_cast<int>(s.cells.size());
    f.area_fraction = s.area;
    f.mean_saturation_value = s.mean_sv;
    f.mean_hue = s.mean_hue;
    f.element_ids = detail::owners_of(g, doc, s.cells);
    f.adjacent_regions = contrasting;
    int min_r = g.rows, max_r = -1, min_c = g.cols, max_c = -1;
    for (auto c : s.cells) {
      const int row = static_cast<int>(c) / g.cols, col = static_cast<int>(c) % g.cols;
      min_r = std::min(min_r, row);
      max_r = std::max(max_r, row);
      min_c = std::min(min_c, col);
      max_c = std::max(max_c, col);
      if (!f.region.empty() && f.region.back().row == row && f.region.back().col_end + 1 == col)
        f.region.back().col_end = col;
      else
        f.region.push_back({row, col, col});
    }
    f.bounds = Rect{min_c * g.block_size, min_r * g.block_size, (max_c - min_c + 1) * g.block_size,
                    (max_r - min_r + 1) * g.block_size};
    finding_of[k] = static_cast<int>(r.loud_area_findings.size());
    r.loud_area_findings.push_back(std::move(f));
  }
  // Re-express neighbour references as finding indices.
  for (auto& f : r.loud_area_findings) {
    std::vector<int> mapped;
    for (int q : f.adjacent_regions)
      if (finding_of[static_cast<std::size_t>(q)] >= 0) mapped.push_back(finding_of[static_cast<std::size_t>(q)]);
    f.adjacent_regions = std::move(mapped);
  }

  double loud_total = 0;
  for (const auto& f : r.loud_area_findings) loud_total += f.area_fraction;
  const double contrast_component = 1.0 - std::min(1.0, r.high_contrast_fraction / config.hc_norm);
  const double loud_component = 1.0 - std::min(1.0, loud_total);
  r.score = config.high_contrast_weight * contrast_component + (1.0 - config.high_contrast_weight) * loud_component;
  r.flagged = r.high_contrast_fraction > config.theta_hc || !r.loud_area_findings.empty();
  return r;
}

inline ContrastResult legible_contrast(const DesignDocument& doc, const ContrastConfig& config = {}) {
  return legible_contrast_on_grid(doc, rasterize_blocks(doc, config.block_count_per_min_axis), config);
}

}  // namespace dca
