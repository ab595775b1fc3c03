#pragma once

#include <array>
#include <vector>

#include "gradtopo/config.hpp"
#include "gradtopo/fem.hpp"
#include "gradtopo/mesh.hpp"

namespace gradtopo {

class GeometryError : public Error {
 public:
  using Error::Error;
};

using Ring = std::vector<Vec2>;  // closed implicitly, last point != first

/// Signed shoelace area, positive for counter-clockwise rings.
double signed_area(const Ring& ring);
double perimeter(const Ring& ring);

/// Outer boundary counter-clockwise, holes clockwise.
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
  double area() const;
  double perimeter() const;
};

using Region = std::vector<Polygon>;
double region_area(const Region& region);
double region_perimeter(const Region& region);

/// Split of the domain by an iso-value of a P1 field.
struct ContourPolygonSet {
  double threshold = 0.0;
  Region above;  // field >= threshold
  Region below;  // field < threshold
};

/// Half-plane test on a nodal P1 field: keep field >= threshold, or field < threshold.
struct LevelConstraint {
  const Vector* field = nullptr;
  double threshold = 0.0;
  bool keep_above = true;
};

/// Region of the mesh where every constraint holds, as polygons with holes.
/// Crossing points on shared mesh edges are computed from the edge's nodes only,
/// so the output does not depend on element order.
Region extract_region(const Mesh& mesh, const std::vector<LevelConstraint>& constraints);

/// Marching-triangles split of the domain at field = threshold.
ContourPolygonSet threshold_contour(const Vector& field, const Mesh& mesh, double threshold);

/// Printable parts of a design: phi >= phi_threshold, split by chi at chi_threshold.
ContourPolygonSet design_parts(const Mesh& mesh, const Vector& phi, const Vector& chi,
                               double chi_threshold, double phi_threshold = 0.5);

/// Throws GeometryError if any two edges of the polygon set cross or touch away
/// from a shared vertex.
void require_simple(const Region& region);

/// Copies of a vertex shared by several rings, or repeated within one ring, are
/// moved by at most `offset` into their own corner so that the extruded solid is
/// manifold there.
Region separate_touching_vertices(Region region, double offset = 1e-3);

using Triangle2 = std::array<Vec2, 3>;
/// Ear clipping with hole bridging; output triangles are counter-clockwise and use
/// only polygon vertices.
std::vector<Triangle2> triangulate(const Polygon& polygon);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

struct Triangle3 {
  std::array<Vec3, 3> v;  // counter-clockwise seen from outside
  Vec3 normal() const;    // unit, zero for degenerate triangles
};

struct TriangleSoup3D {
  std::vector<Triangle3> triangles;
};

/// Prism over the region: bottom cap at z = 0, top cap at z = height, side walls.
/// Pinch points are separated first (see separate_touching_vertices).
TriangleSoup3D extrude(const Region& region, double height);

double signed_volume(const TriangleSoup3D& soup);

struct WatertightReport {
  bool watertight = false;          // every undirected edge used exactly twice
  bool consistently_oriented = false;  // each directed edge used once
  int boundary_edges = 0;
  int nonmanifold_edges = 0;
};
WatertightReport check_watertight(const TriangleSoup3D& soup);

struct ComponentTopology {
  int vertices = 0;
  int edges = 0;
  int faces = 0;
  int euler() const { return vertices - edges + faces; }
};
/// Connected components (triangles sharing a vertex) with V, E, F counts.
std::vector<ComponentTopology> component_topology(const TriangleSoup3D& soup);

}  // namespace gradtopo
