#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradtopo/geometry.hpp"

using namespace gradtopo;

namespace {

// Independent per-element marching: length of the iso-segment inside each triangle.
double brute_contour_length(const Mesh& m, const Vector& f, double t) {
  double total = 0.0;
  for (const auto& el : m.elements) {
    std::vector<Vec2> pts;
    for (int k = 0; k < 3; ++k) {
      const int a = el[k], b = el[(k + 1) % 3];
      const double fa = f[a] - t, fb = f[b] - t;
      if ((fa < 0) != (fb < 0)) {
        const double s = fa / (fa - fb);
        pts.push_back({m.nodes[a].x + s * (m.nodes[b].x - m.nodes[a].x),
                       m.nodes[a].y + s * (m.nodes[b].y - m.nodes[a].y)});
      }
    }
    if (pts.size() == 2) total += std::hypot(pts[1].x - pts[0].x, pts[1].y - pts[0].y);
  }
  return total;
}

double contour_length(const ContourPolygonSet& set, const Mesh& m) {
  return 0.5 * (region_perimeter(set.above) + region_perimeter(set.below) -
                2.0 * (m.width + m.height));
}

Polygon square(double x0, double y0, double s) {
  return {{{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}}, {}};
}

Vector random_field(const Mesh& m, unsigned seed, double t) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vector f(m.node_count());
  for (auto& v : f) {
    do v = U(rng);
    while (std::abs(v - t) < 0.01);
  }
  return f;
}

}  // namespace

TEST(Geometry, ShoelaceAndPerimeter) {
  const Polygon p = square(1.0, 2.0, 3.0);
  EXPECT_DOUBLE_EQ(signed_area(p.outer), 9.0);
  EXPECT_DOUBLE_EQ(p.perimeter(), 12.0);
  Ring cw = p.outer;
  std::reverse(cw.begin(), cw.end());
  EXPECT_DOUBLE_EQ(signed_area(cw), -9.0);
}

TEST(Geometry, ConstantFieldGivesWholeDomain) {
  const Mesh m = build_rect_mesh(200.0, 100.0, 10, 5);
  const Vector one = Vector::Ones(m.node_count());
  const auto set = threshold_contour(one, m, 0.5);
  ASSERT_EQ(set.above.size(), 1u);
  EXPECT_TRUE(set.below.empty());
  EXPECT_TRUE(set.above[0].holes.empty());
  EXPECT_EQ(set.above[0].outer.size(), 4u);  // collinear vertices removed
  EXPECT_NEAR(set.above[0].area(), 20000.0, 1e-9);
  EXPECT_GT(signed_area(set.above[0].outer), 0.0);
}

TEST(Geometry, LinearFieldCutsAtHalfWidth) {
  const Mesh m = build_rect_mesh(1.0, 1.0, 3, 3);
  Vector f(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) f[i] = m.nodes[i].x / 1.0;
  const auto set = threshold_contour(f, m, 0.5);
  ASSERT_EQ(set.above.size(), 1u);
  ASSERT_EQ(set.below.size(), 1u);
  EXPECT_NEAR(set.above[0].area(), 0.5, 1e-12);
  EXPECT_NEAR(set.below[0].area(), 0.5, 1e-12);
  ASSERT_EQ(set.above[0].outer.size(), 4u);
  ASSERT_EQ(set.below[0].outer.size(), 4u);
  for (const auto& p : set.above[0].outer) EXPECT_TRUE(std::abs(p.x - 0.5) < 1e-12 || p.x == 1.0);
  for (const auto& p : set.below[0].outer) EXPECT_TRUE(std::abs(p.x - 0.5) < 1e-12 || p.x == 0.0);
}

TEST(Geometry, CheckerboardContourLength) {
  const Mesh m = build_rect_mesh(8.0, 6.0, 8, 6);
  Vector f(m.node_count());
  for (int j = 0; j <= 6; ++j) {
    for (int i = 0; i <= 8; ++i) f[m.node_index(i, j)] = (i + j) % 2 ? 0.8 : 0.2;
  }
  const auto set = threshold_contour(f, m, 0.5);
  EXPECT_NEAR(contour_length(set, m), brute_contour_length(m, f, 0.5), 1e-9);
  EXPECT_NEAR(region_area(set.above) + region_area(set.below), 48.0, 48.0 * 1e-6);
  for (const auto& p : set.above) require_simple({p});
}

TEST(Geometry, RandomFieldContourLengthAndPartition) {
  const Mesh m = build_rect_mesh(20.0, 10.0, 20, 10);
  for (unsigned seed : {1u, 2u, 3u}) {
    const Vector f = random_field(m, seed, 0.5);
    const auto set = threshold_contour(f, m, 0.5);
    EXPECT_NEAR(contour_length(set, m), brute_contour_length(m, f, 0.5),
                1e-9 * brute_contour_length(m, f, 0.5));
    EXPECT_NEAR(region_area(set.above) + region_area(set.below), 200.0, 200.0 * 1e-6);
    for (const auto& p : set.above) {
      EXPECT_GT(signed_area(p.outer), 0.0);
      for (const auto& h : p.holes) EXPECT_LT(signed_area(h), 0.0);
    }
    require_simple(set.above);
    require_simple(set.below);
  }
}

TEST(Geometry, BelowAreaGrowsWithThreshold) {
  const Mesh m = build_rect_mesh(20.0, 10.0, 20, 10);
  const Vector f = random_field(m, 9, -1.0);
  double prev = -1.0;
  for (double t = 0.0; t <= 1.0001; t += 0.05) {
    const double below = region_area(threshold_contour(f, m, t).below);
    EXPECT_GE(below, prev - 1e-9);
    prev = below;
  }
  EXPECT_NEAR(prev, 200.0, 1e-6);
}

TEST(Geometry, IndependentOfElementOrder) {
  Mesh m = build_rect_mesh(10.0, 5.0, 10, 5);
  const Vector f = random_field(m, 4, 0.5);
  const auto a = threshold_contour(f, m, 0.5);
  std::mt19937 rng(1);
  std::vector<std::size_t> perm(m.elements.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mesh shuffled = m;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    shuffled.elements[k] = m.elements[perm[k]];
    shuffled.element_areas[k] = m.element_areas[perm[k]];
    // rotate local node order as well
    auto& el = shuffled.elements[k];
    std::rotate(el.begin(), el.begin() + (k % 3), el.end());
  }
  const auto b = threshold_contour(f, shuffled, 0.5);
  ASSERT_EQ(a.above.size(), b.above.size());
  ASSERT_EQ(a.below.size(), b.below.size());
  for (std::size_t i = 0; i < a.above.size(); ++i) {
    EXPECT_EQ(a.above[i].outer, b.above[i].outer);
    EXPECT_EQ(a.above[i].holes, b.above[i].holes);
  }
  for (std::size_t i = 0; i < a.below.size(); ++i) EXPECT_EQ(a.below[i].outer, b.below[i].outer);
}

TEST(Geometry, DesignPartsExcludeVoid) {
  const Mesh m = build_rect_mesh(4.0, 2.0, 4, 2);
  Vector phi(m.node_count()), chi(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) {
    phi[i] = m.nodes[i].x <= 2.0 ? 1.0 : 0.0;  // solid on the left half, ramp on x in [2, 3]
    chi[i] = m.nodes[i].y >= 1.0 ? phi[i] : 0.2 * phi[i];
  }
  const auto parts = design_parts(m, phi, chi, 0.5);
  const double total = region_area(parts.above) + region_area(parts.below);
  EXPECT_NEAR(total, 2.5 * 2.0, 1e-12);  // phi >= 0.5 up to x = 2.5
}

TEST(Geometry, TriangulateSquareWithHole) {
  Polygon p = square(0.0, 0.0, 4.0);
  Ring hole = square(1.0, 1.0, 2.0).outer;
  std::reverse(hole.begin(), hole.end());
  p.holes.push_back(hole);
  const auto tris = triangulate(p);
  double area = 0;
  for (const auto& t : tris) {
    const double a = signed_area({t[0], t[1], t[2]});
    EXPECT_GT(a, 0.0);
    area += a;
  }
  EXPECT_NEAR(area, 12.0, 1e-12);
  EXPECT_EQ(tris.size(), 8u);  // n + 2h - 2 for 8 vertices, 1 hole
}

TEST(Geometry, TriangulateConcave) {
  const Polygon p{{{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}}, {}};
  const auto tris = triangulate(p);
  double area = 0;
  for (const auto& t : tris) area += signed_area({t[0], t[1], t[2]});
  EXPECT_NEAR(area, p.area(), 1e-12);
  EXPECT_EQ(tris.size(), 3u);
}

TEST(Geometry, UnitCubePrism) {
  const TriangleSoup3D soup = extrude({square(0.0, 0.0, 1.0)}, 1.0);
  EXPECT_GE(soup.triangles.size(), 12u);
  EXPECT_NEAR(signed_volume(soup), 1.0, 1e-12);
  const auto w = check_watertight(soup);
  EXPECT_TRUE(w.watertight);
  EXPECT_TRUE(w.consistently_oriented);
  const auto comps = component_topology(soup);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].euler(), 2);
  for (const auto& t : soup.triangles) {
    const Vec3 n = t.normal();
    const Vec3 c{(t.v[0].x + t.v[1].x + t.v[2].x) / 3 - 0.5, (t.v[0].y + t.v[1].y + t.v[2].y) / 3 - 0.5,
                 (t.v[0].z + t.v[1].z + t.v[2].z) / 3 - 0.5};
    EXPECT_GT(n.x * c.x + n.y * c.y + n.z * c.z, 0.0);  // outward
  }
}

TEST(Geometry, SquareWithHolePrism) {
  Polygon p = square(0.0, 0.0, 5.0);
  Ring hole = square(1.5, 1.5, 2.0).outer;
  std::reverse(hole.begin(), hole.end());
  p.holes.push_back(hole);
  const TriangleSoup3D soup = extrude({p}, 2.0);
  EXPECT_NEAR(signed_volume(soup), (25.0 - 4.0) * 2.0, 1e-12 * 42.0);
  EXPECT_TRUE(check_watertight(soup).watertight);
  EXPECT_TRUE(check_watertight(soup).consistently_oriented);
  const auto comps = component_topology(soup);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].euler(), 0);  // genus one
}

TEST(Geometry, ExtrudedContourIsWatertight) {
  const Mesh m = build_rect_mesh(20.0, 10.0, 20, 10);
  for (unsigned seed : {5u, 6u}) {
    const Vector f = random_field(m, seed, 0.5);
    const auto set = threshold_contour(f, m, 0.5);
    for (const Region* r : {&set.above, &set.below}) {
      const TriangleSoup3D soup = extrude(*r, 3.0);
      const auto w = check_watertight(soup);
      EXPECT_TRUE(w.watertight);
      EXPECT_TRUE(w.consistently_oriented);
      EXPECT_NEAR(signed_volume(soup), 3.0 * region_area(*r), 1e-9 * region_area(*r));
      int euler = 0;
      std::size_t holes = 0;
      for (const auto& c : component_topology(soup)) euler += c.euler();
      for (const auto& p : *r) holes += p.holes.size();
      EXPECT_EQ(euler, 2 * static_cast<int>(r->size()) - 2 * static_cast<int>(holes));
    }
  }
}

TEST(Geometry, CornerTouchingSquaresExtrudeManifold) {
  const Region region{square(0.0, 0.0, 1.0), square(1.0, 1.0, 1.0)};
  const Region split = separate_touching_vertices(region);
  ASSERT_EQ(split.size(), 2u);
  const auto near = [](const Ring& r) {
    return std::any_of(r.begin(), r.end(), [](const Vec2& p) {
      return std::hypot(p.x - 1.0, p.y - 1.0) < 1e-2;
    });
  };
  EXPECT_TRUE(near(split[0].outer));
  EXPECT_TRUE(near(split[1].outer));
  for (const auto& poly : split)
    for (const Vec2& p : poly.outer) EXPECT_FALSE(p.x == 1.0 && p.y == 1.0);

  const TriangleSoup3D soup = extrude(region, 1.0);
  const WatertightReport w = check_watertight(soup);
  EXPECT_TRUE(w.watertight);
  EXPECT_TRUE(w.consistently_oriented);
  EXPECT_NEAR(signed_volume(soup), 2.0, 2e-3);
  EXPECT_EQ(component_topology(soup).size(), 2u);
}

TEST(Geometry, SeparationLeavesFreeVerticesAlone) {
  const Region region{square(0.0, 0.0, 1.0), square(2.0, 0.0, 1.0)};
  const Region split = separate_touching_vertices(region);
  for (std::size_t i = 0; i < region.size(); ++i) {
    ASSERT_EQ(split[i].outer.size(), region[i].outer.size());
    EXPECT_NEAR(split[i].area(), region[i].area(), 1e-15);
  }
}

TEST(Geometry, SelfIntersectionIsRejected) {
  const Polygon bowtie{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}, {}};
  EXPECT_THROW(require_simple({bowtie}), GeometryError);
  Polygon touching = square(0.0, 0.0, 4.0);
  touching.holes.push_back({{0, 1}, {1, 2}, {1, 1}});  // hole vertex on the outer edge
  EXPECT_THROW(require_simple({touching}), GeometryError);
  EXPECT_NO_THROW(require_simple({square(0, 0, 1), square(2, 0, 1)}));
  EXPECT_THROW(require_simple({square(0, 0, 2), square(1, 1, 2)}), GeometryError);
}

TEST(Geometry, ExtrudeRejectsBadHeight) {
  EXPECT_THROW(extrude({square(0, 0, 1)}, 0.0), GeometryError);
  EXPECT_THROW(extrude({square(0, 0, 1)}, -1.0), GeometryError);
}
