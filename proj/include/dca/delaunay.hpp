#pragma once

// Delaunay triangulation for small planar point sets.
//
// Points are inserted in lexicographic order, each new point being outside the
// hull of the previous ones, so the initial triangulation only ever fans onto
// visible hull edges. Lawson edge flips then make every interior edge locally
// Delaunay. No super-triangle is used, so hull edges are always exact.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace dca {

struct Point2 {
  double x = 0;
  double y = 0;
  bool operator==(const Point2&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;  // first < second

namespace geom {

/// > 0 when c lies to the left of a->b.
inline long double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (static_cast<long double>(b.x) - a.x) * (static_cast<long double>(c.y) - a.y) -
         (static_cast<long double>(b.y) - a.y) * (static_cast<long double>(c.x) - a.x);
}

/// > 0 when d lies strictly inside the circumcircle of the counter-clockwise triangle abc.
inline long double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const long double adx = static_cast<long double>(a.x) - d.x, ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x, bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x, cdy = static_cast<long double>(c.y) - d.y;
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace geom

/// Undirected Delaunay edges of `pts` (indices into pts), sorted. Points must be pairwise
/// distinct. Fully collinear inputs yield the chain of consecutive neighbours.
inline std::vector<Edge> delaunay_edges(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  std::vector<Edge> result;
  if (n < 2) return result;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x != pts[b].x ? pts[a].x < pts[b].x : pts[a].y < pts[b].y;
  });
  auto P = [&](std::size_t i) -> const Point2& { return pts[i]; };
  auto key = [](std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; };

  std::size_t first_off = 2;
  while (first_off < n && geom::orient(P(order[0]), P(order[1]), P(order[first_off])) == 0) ++first_off;
  if (first_off == n) {
    for (std::size_t i = 0; i + 1 < n; ++i) result.push_back(key(order[i], order[i + 1]));
    std::sort(result.begin(), result.end());
    return result;
  }

  std::vector<std::array<std::size_t, 3>> tris;
  std::vector<bool> alive;
  std::map<Edge, std::vector<std::size_t>> edge_tris;

  auto add_tri = [&](std::size_t a, std::size_t b, std::size_t c) {
    if (geom::orient(P(a), P(b), P(c)) < 0) std::swap(b, c);
    const std::size_t t = tris.size();
    tris.push_back({a, b, c});
    alive.push_back(true);
    edge_tris[key(a, b)].push_back(t);
    edge_tris[key(b, c)].push_back(t);
    edge_tris[key(c, a)].push_back(t);
    return t;
  };
  auto remove_tri = [&](std::size_t t) {
    alive[t] = false;
    const auto& v = tris[t];
    for (int e = 0; e < 3; ++e) {
      auto& list = edge_tris[key(v[e], v[(e + 1) % 3])];
      list.erase(std::remove(list.begin(), list.end(), t), list.end());
    }
  };

  // Seed: fan the collinear prefix onto the first off-line point.
  const std::size_t apex = order[first_off];
  for (std::size_t i = 0; i + 1 < first_off; ++i) add_tri(order[i], order[i + 1], apex);
  std::vector<std::size_t> hull;  // counter-clockwise
  if (geom::orient(P(order[0]), P(order[1]), P(apex)) > 0) {
    for (std::size_t i = 0; i < first_off; ++i) hull.push_back(order[i]);
    hull.push_back(apex);
  } else {
    hull.push_back(apex);
    for (std::size_t i = first_off; i-- > 0;) hull.push_back(order[i]);
  }

  for (std::size_t m = first_off + 1; m < n; ++m) {
    const std::size_t p = order[m];
    const std::size_t h = hull.size();
    std::vector<bool> visible(h);
    for (std::size_t i = 0; i < h; ++i) visible[i] = geom::orient(P(hull[i]), P(hull[(i + 1) % h]), P(p)) < 0;
    std::size_t start = h;
    for (std::size_t i = 0; i < h; ++i)
      if (visible[i] && !visible[(i + h - 1) % h]) {
        start = i;
        break;
      }
    if (start == h) continue;  // unreachable for distinct, lexicographically sorted input
    std::size_t end = start;
    while (visible[end % h]) {
      add_tri(hull[end % h], hull[(end + 1) % h], p);
      ++end;
    }
    std::vector<std::size_t> next;
    for (std::size_t i = end % h;; i = (i + 1) % h) {
      next.push_back(hull[i]);
      if (i == start) break;
    }
    next.push_back(p);
    hull = std::move(next);
  }

  // Lawson flips.
  std::vector<Edge> stack;
  for (const auto& [e, list] : edge_tris) stack.push_back(e);
  std::size_t budget = 20 * n * n + 100;
  while (!stack.empty() && budget-- > 0) {
    const Edge e = stack.back();
    stack.pop_back();
    auto it = edge_tris.find(e);
    if (it == edge_tris.end() || it->second.size() != 2) continue;
    const std::size_t t1 = it->second[0], t2 = it->second[1];
    auto opposite = [&](std::size_t t) {
      for (auto v : tris[t])
        if (v != e.first && v != e.second) return v;
      return tris[t][0];
    };
    const std::size_t a = opposite(t1), b = opposite(t2);
    const auto& v1 = tris[t1];
    if (geom::incircle(P(v1[0]), P(v1[1]), P(v1[2]), P(b)) <= 0) continue;
    remove_tri(t1);
    remove_tri(t2);
    edge_tris.erase(e);
    add_tri(a, b, e.first);
    add_tri(a, b, e.second);
    stack.push_back(key(a, e.first));
    stack.push_back(key(e.first, b));
    stack.push_back(key(b, e.second));
    stack.push_back(key(e.second, a));
  }

  for (const auto& [e, list] : edge_tris)
    if (!list.empty()) result.push_back(e);
  return result;  // std::map iteration is already sorted
}

}  // namespace dca
