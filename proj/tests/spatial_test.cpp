#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "dca/spatial.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace dca;

namespace {

std::vector<SpatialPoint> spatial(const std::vector<Point2>& p) {
  std::vector<SpatialPoint> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back({"p" + std::to_string(i), p[i], 1.0});
  return out;
}

oracle::Partition partition(const AmoebaResult& r) {
  oracle::Partition out;
  for (const auto& c : r.clusters) out.insert(std::set<std::string>(c.begin(), c.end()));
  return out;
}

Element box(const std::string& id, double cx, double cy, double w, double h) {
  Element e;
  e.id = id;
  e.kind = ElementKind::sketch;
  e.bbox = Rect{cx - w / 2, cy - h / 2, w, h};
  return e;
}

DesignDocument doc_of(std::vector<Element> els, double w = 100, double h = 100) {
  DesignDocument d;
  d.doc_id = "s";
  d.canvas = {w, h};
  d.elements = std::move(els);
  return d;
}

/// Nested element-id sets describing the tree's shape.
std::string topology(const ClusterNode& n) {
  std::string s = "(";
  for (const auto& id : n.element_ids) s += id + " ";
  for (const auto& c : n.children) s += topology(c);
  return s + ")";
}

}  // namespace

TEST(Amoeba, SinglePoint) {
  const auto r = amoeba_cluster(spatial({{5, 5}}), 1.0);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0], (std::vector<std::string>{"p0"}));
}

TEST(Amoeba, TwoPointsOneCluster) { EXPECT_EQ(amoeba_cluster(spatial({{0, 0}, {50, 0}}), 0.0).clusters.size(), 1u); }

TEST(Amoeba, EquallySpacedCollinearIsOneCluster) {
  const auto r = amoeba_cluster(spatial({{0, 0}, {1, 0}, {2, 0}}), 1.0);
  EXPECT_EQ(r.clusters.size(), 1u);
  EXPECT_DOUBLE_EQ(r.stddev_edge_length, 0.0);
}

TEST(Amoeba, TwoTightPairs) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {101, 0}, {102, 0}};
  const auto r = amoeba_cluster(spatial(p), 1.0);
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.clusters[0], (std::vector<std::string>{"p0", "p1"}));
  EXPECT_EQ(r.clusters[1], (std::vector<std::string>{"p2", "p3"}));
  EXPECT_EQ(partition(r), oracle::amoeba({{"p0", p[0]}, {"p1", p[1]}, {"p2", p[2]}, {"p3", p[3]}}, 1.0));
}

TEST(Amoeba, TwoTightPairsSideBySideStayJoined) {
  // In a quadrilateral three of the five edges are long, so the mean absorbs them.
  const std::vector<Point2> p{{0, 0}, {0, 1}, {100, 0.2}, {100, 1.2}};
  EXPECT_EQ(amoeba_cluster(spatial(p), 1.0).clusters.size(), 1u);
}

TEST(Amoeba, HugeKGivesOneCluster) {
  gen::Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const auto p = gen::points(rng, rng.integer(1, 15));
    EXPECT_EQ(amoeba_cluster(spatial(p), 1e9).clusters.size(), 1u);
  }
}

TEST(Amoeba, ZeroKWithEqualEdges) {
  // Equilateral triangle: all three edges equal.
  const std::vector<Point2> p{{0, 0}, {2, 0}, {1, std::sqrt(3.0)}};
  EXPECT_EQ(amoeba_cluster(spatial(p), 0.0).clusters.size(), 1u);
}

TEST(Amoeba, CoincidentPointsAreJitteredDeterministically) {
  const std::vector<Point2> p{{1, 1}, {1, 1}, {1, 1}, {9, 9}};
  const auto a = amoeba_cluster(spatial(p), 1.0);
  const auto b = amoeba_cluster(spatial(p), 1.0);
  EXPECT_EQ(a.jittered_ids, (std::vector<std::string>{"p1", "p2"}));
  EXPECT_EQ(a.clusters, b.clusters);
}

TEST(Amoeba, NegativeKRejected) { EXPECT_THROW(amoeba_cluster(spatial({{0, 0}}), -1), ValidationError); }

TEST(Amoeba, MatchesOracleOnRandomSets) {
  gen::Rng rng(42);
  for (int i = 0; i < 500; ++i) {
    const auto p = gen::points(rng, rng.integer(1, 12));
    const double k = rng.pick(std::vector<double>{0.0, 0.5, 1.0, 2.0});
    std::vector<std::pair<std::string, Point2>> named;
    for (std::size_t j = 0; j < p.size(); ++j) named.push_back({"p" + std::to_string(j), p[j]});
    ASSERT_EQ(partition(amoeba_cluster(spatial(p), k)), oracle::amoeba(named, k)) << "case " << i;
  }
}

TEST(ClusterTree, TwoElementsDepthOne) {
  const auto t = build_cluster_tree(doc_of({box("a", 10, 10, 2, 2), box("b", 90, 90, 2, 2)}));
  ASSERT_TRUE(t.root);
  EXPECT_EQ(t.depth, 1);
  EXPECT_TRUE(t.root->children.empty());
  EXPECT_EQ(t.root->element_ids, (std::vector<std::string>{"a", "b"}));
}

TEST(ClusterTree, EmptyDocument) {
  const auto t = build_cluster_tree(doc_of({}));
  EXPECT_FALSE(t.root);
  EXPECT_EQ(t.depth, 0);
}

TEST(ClusterTree, TwoFarTriads) {
  const auto d = doc_of({box("a1", 10, 10, 2, 2), box("a2", 13, 10, 2, 2), box("a3", 11, 13, 2, 2),
                         box("b1", 80, 80, 2, 2), box("b2", 84, 81, 2, 2), box("b3", 81, 84, 2, 2)});
  const auto t = build_cluster_tree(d);
  ASSERT_TRUE(t.root);
  EXPECT_GE(t.depth, 2);
  ASSERT_EQ(t.root->children.size(), 2u);
  EXPECT_EQ(t.root->children[0].element_ids, (std::vector<std::string>{"a1", "a2", "a3"}));
  EXPECT_EQ(t.root->children[1].element_ids, (std::vector<std::string>{"b1", "b2", "b3"}));
  for (const auto& c : t.root->children) EXPECT_TRUE(c.children.empty());
  EXPECT_EQ(t.root->children[0].bounding_box, (Rect{9, 9, 5, 5}));
}

TEST(ClusterTree, CoManipulationMergesDistantElements) {
  const auto d = doc_of({box("a1", 0, 0, 0.2, 0.2), box("a2", 1, 0, 0.2, 0.2), box("a3", 0.5, 0.9, 0.2, 0.2),
                         box("b1", 10, 0, 0.2, 0.2), box("b2", 11, 0, 0.2, 0.2), box("b3", 10.7, 0.9, 0.2, 0.2)},
                        20, 20);
  SpatialConfig cfg;
  const auto plain = build_cluster_tree(d, cfg);
  ASSERT_EQ(plain.root->children.size(), 2u);
  const std::vector<ProcessEvent> events{{"t", "u", ProcessAction::select_group, {"a2", "b1"}, {}}};
  const auto merged = build_cluster_tree(d, cfg, events);
  EXPECT_TRUE(merged.root->children.empty());
  EXPECT_EQ(merged.depth, 1);
}

TEST(ClusterTree, ConfigValidation) {
  SpatialConfig cfg;
  cfg.min_split_size = 2;
  EXPECT_THROW(build_cluster_tree(doc_of({}), cfg), ValidationError);
}

TEST(ClusterTree, LeafPartitionOnRandomDocuments) {
  gen::Rng rng(43);
  for (int i = 0; i < 250; ++i) {
    const auto d = gen::document(rng, 30);
    const auto t = build_cluster_tree(d);
    if (d.elements.empty()) {
      EXPECT_FALSE(t.root);
      continue;
    }
    std::multiset<std::string> leaves;
    t.for_each_leaf([&](const ClusterNode& n) {
      EXPECT_FALSE(n.element_ids.empty());
      leaves.insert(n.element_ids.begin(), n.element_ids.end());
    });
    std::multiset<std::string> all;
    for (const auto& e : d.elements) all.insert(e.id);
    ASSERT_EQ(leaves, all);
    // Children partition their parent and boxes are minimal.
    std::function<int(const ClusterNode&)> check = [&](const ClusterNode& n) -> int {
      Rect box = d.find(n.element_ids.front())->bbox;
      for (const auto& id : n.element_ids) box = Rect::bounding(box, d.find(id)->bbox);
      EXPECT_EQ(n.bounding_box, box);
      if (n.children.empty()) return 1;
      std::multiset<std::string> kids;
      int deepest = 0;
      for (const auto& c : n.children) {
        EXPECT_EQ(c.level, n.level + 1);
        kids.insert(c.element_ids.begin(), c.element_ids.end());
        deepest = std::max(deepest, check(c));
      }
      EXPECT_EQ(kids, std::multiset<std::string>(n.element_ids.begin(), n.element_ids.end()));
      return deepest + 1;
    };
    EXPECT_EQ(check(*t.root), t.depth);
  }
}

TEST(ClusterTree, SimilarityInvariance) {
  gen::Rng rng(44);
  for (int i = 0; i < 250; ++i) {
    const auto d = gen::document(rng, 25);
    const double s = rng.real(0.3, 5.0), tx = rng.real(-500, 500), ty = rng.real(-500, 500);
    DesignDocument moved = d;
    moved.canvas = {d.canvas.width * s, d.canvas.height * s};
    for (auto& e : moved.elements) e.bbox = Rect{e.bbox.x * s + tx, e.bbox.y * s + ty, e.bbox.w * s, e.bbox.h * s};
    const auto a = build_cluster_tree(d), b = build_cluster_tree(moved);
    ASSERT_EQ(a.root.has_value(), b.root.has_value());
    if (a.root) EXPECT_EQ(topology(*a.root), topology(*b.root)) << "case " << i;
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(assign_scales(d), assign_scales(moved));
    EXPECT_EQ(multiscale(d).scale_count, multiscale(moved).scale_count);
  }
}

TEST(ClusterTree, Deterministic) {
  gen::Rng rng(45);
  for (int i = 0; i < 50; ++i) {
    const auto d = gen::document(rng, 25);
    const auto a = build_cluster_tree(d), b = build_cluster_tree(d);
    if (a.root) EXPECT_EQ(topology(*a.root), topology(*b.root));
  }
}

TEST(Scales, SameSizeNoZoom) {
  const auto s = assign_scales(doc_of({box("a", 10, 10, 5, 5), box("b", 50, 50, 5, 5), box("c", 80, 20, 5, 5)}));
  for (const auto& [id, level] : s) EXPECT_EQ(level, 0);
}

TEST(Scales, ZoomBuckets) {
  auto d = doc_of({box("a", 10, 10, 5, 5), box("b", 50, 50, 5, 5), box("c", 80, 20, 5, 5)});
  d.elements[0].zoom_level = 1.0;
  d.elements[1].zoom_level = 1.0;
  d.elements[2].zoom_level = 4.0;
  const auto r = multiscale(d);
  EXPECT_EQ(r.scale_count, 2);
  EXPECT_EQ(r.scale_histogram, (std::map<int, int>{{0, 2}, {1, 1}}));
}

TEST(Scales, ZoomRoundedToThreeFigures) {
  auto d = doc_of({box("a", 10, 10, 5, 5), box("b", 50, 50, 5, 5)});
  d.elements[0].zoom_level = 2.0001;
  d.elements[1].zoom_level = 2.0;
  EXPECT_EQ(multiscale(d).scale_count, 1);
}

TEST(Scales, DiagonalBinning) {
  // Squares whose diagonals are 10, 10, 12 and 160.
  const double r2 = std::sqrt(2.0);
  const auto s = assign_scales(doc_of({box("a", 10, 10, 10 / r2, 10 / r2), box("b", 30, 30, 10 / r2, 10 / r2),
                                       box("c", 50, 50, 12 / r2, 12 / r2), box("d", 50, 50, 160 / r2, 160 / r2)},
                                      200, 200));
  EXPECT_EQ(s, (std::map<std::string, int>{{"a", 0}, {"b", 0}, {"c", 0}, {"d", 2}}));
}

TEST(Multiscale, D6Imbalance) {
  const auto r = multiscale(gen::load_fixture("d6_scales.json"));
  EXPECT_EQ(r.scale_count, 2);
  EXPECT_EQ(r.scale_histogram, (std::map<int, int>{{0, 2}, {1, 35}}));
  ASSERT_EQ(r.imbalance_findings.size(), 1u);
  const auto& f = r.imbalance_findings[0];
  EXPECT_DOUBLE_EQ(f.ratio, 17.5);
  EXPECT_EQ(f.target_scale, 0);
  EXPECT_EQ(f.count_a, 2);
  EXPECT_EQ(f.count_b, 35);
  EXPECT_NE(f.message.find("scale 0"), std::string::npos);
}

TEST(Multiscale, SingleScaleNoFindings) {
  const auto r = multiscale(doc_of({box("a", 10, 10, 5, 5), box("b", 50, 50, 5, 5)}));
  EXPECT_EQ(r.scale_count, 1);
  EXPECT_TRUE(r.imbalance_findings.empty());
}

TEST(Multiscale, BalancedHistogram) { EXPECT_TRUE(scale_imbalances({{0, 10}, {1, 10}}, 4.0).empty()); }

TEST(Multiscale, FindingsRespectThreshold) {
  gen::Rng rng(46);
  for (int i = 0; i < 200; ++i) {
    std::map<int, int> h;
    const int n = rng.integer(1, 5);
    for (int l = 0; l < n; ++l) h[l] = rng.integer(1, 40);
    const double rho = rng.real(1.0, 8.0);
    for (const auto& f : scale_imbalances(h, rho)) {
      EXPECT_GE(f.ratio, rho);
      EXPECT_DOUBLE_EQ(f.ratio, static_cast<double>(std::max(f.count_a, f.count_b)) / std::min(f.count_a, f.count_b));
    }
  }
}

TEST(Whitespace, EmptyDocument) {
  const auto w = whitespace(doc_of({}), 64);
  EXPECT_DOUBLE_EQ(w.whitespace_ratio, 1.0);
  EXPECT_EQ(w.cluster_count, 0);
}

TEST(Whitespace, FullCover) {
  const auto w = whitespace(doc_of({box("a", 50, 50, 100, 100)}), 64);
  EXPECT_DOUBLE_EQ(w.whitespace_ratio, 0.0);
  EXPECT_EQ(w.cluster_count, 1);
}

TEST(Whitespace, ResolutionFloor) { EXPECT_THROW(whitespace(doc_of({}), 8), ValidationError); }

TEST(Whitespace, PosterMatchesOracle) {
  const auto d = gen::load_fixture("poster_v1.json");
  EXPECT_DOUBLE_EQ(whitespace(d, 64).whitespace_ratio, oracle::whitespace_ratio(d, 64));
}

TEST(Whitespace, RandomDocumentsMatchOracle) {
  gen::Rng rng(47);
  for (int i = 0; i < 200; ++i) {
    const auto d = gen::document(rng);
    const int res = rng.integer(16, 48);
    ASSERT_DOUBLE_EQ(whitespace(d, res).whitespace_ratio, oracle::whitespace_ratio(d, res)) << "case " << i;
  }
}
