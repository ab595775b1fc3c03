#pragma once

#include <array>
#include <string>
#include <vector>

#include "gradtopo/config.hpp"

namespace gradtopo {

enum class BoundaryTag { Dirichlet, Neumann, Free };

struct BoundaryEdge {
  std::array<int, 2> nodes;
  int element = -1;
  BoundaryTag tag = BoundaryTag::Free;
};

/// Structured triangulation of [0,a]x[0,b]. Left edge clamped, a segment of the
/// right edge loaded.
struct Mesh {
  double width = 0.0;
  double height = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> elements;  // counter-clockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> element_areas;
  /// Loaded y-interval on the right edge x = width.
  double traction_y0 = 0.0;
  double traction_y1 = 0.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  double total_area() const;
  int node_index(int i, int j) const { return j * (nx + 1) + i; }
  /// Sorted, unique node ids touched by Dirichlet-tagged edges.
  std::vector<int> dirichlet_nodes() const;
};

Mesh build_rect_mesh(const RunConfig& config);

/// Rectangle mesh without a loaded segment (unit tests, contour work).
Mesh build_rect_mesh(double width, double height, int nx, int ny);

/// Node ids inside the closed box, ascending.
std::vector<int> locate_region_nodes(const Mesh& mesh, const Box& box);

/// Legacy-VTK unstructured grid with only the geometry.
void write_mesh_vtk(const Mesh& mesh, const std::string& path);

}  // namespace gradtopo
