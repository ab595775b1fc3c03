#include "gradtopo/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace gradtopo {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

double Mesh::total_area() const {
  return std::accumulate(element_areas.begin(), element_areas.end(), 0.0);
}

std::vector<int> Mesh::dirichlet_nodes() const {
  std::vector<int> ids;
  for (const auto& e : boundary_edges) {
    if (e.tag == BoundaryTag::Dirichlet) {
      ids.push_back(e.nodes[0]);
      ids.push_back(e.nodes[1]);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

Mesh build_rect_mesh(double width, double height, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ConfigError("mesh needs nx, ny >= 1");
  if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("mesh needs a positive domain");
  Mesh m;
  m.width = width;
  m.height = height;
  m.nx = nx;
  m.ny = ny;
  m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    // Edge coordinates are set exactly so boundary predicates stay exact.
    const double y = j == ny ? height : height * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? width : width * i / nx;
      m.nodes.push_back({x, y});
    }
  }

  m.elements.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n00 = m.node_index(i, j);
      const int n10 = m.node_index(i + 1, j);
      const int n01 = m.node_index(i, j + 1);
      const int n11 = m.node_index(i + 1, j + 1);
      // Alternate the diagonal in a checkerboard pattern.
      if ((i + j) % 2 == 0) {
        m.elements.push_back({n00, n10, n11});
        m.elements.push_back({n00, n11, n01});
      } else {
        m.elements.push_back({n00, n10, n01});
        m.elements.push_back({n10, n11, n01});
      }
    }
  }
  m.element_areas.reserve(m.elements.size());
  for (const auto& t : m.elements) {
    m.element_areas.push_back(signed_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]));
  }

  // Boundary edges, oriented counter-clockwise around the domain.
  auto element_of_cell_edge = [&](int i, int j, int side) {
    // side: 0 bottom, 1 right, 2 top, 3 left; returns the triangle owning it.
    const int base = 2 * (j * nx + i);
    const bool diag_up = (i + j) % 2 == 0;
    switch (side) {
      case 0: return base;
      case 1: return diag_up ? base : base + 1;
      case 2: return base + 1;
      default: return diag_up ? base + 1 : base;
    }
  };
  for (int i = 0; i < nx; ++i) {
    m.boundary_edges.push_back(
        {{m.node_index(i, 0), m.node_index(i + 1, 0)}, element_of_cell_edge(i, 0, 0),
         BoundaryTag::Free});
  }
  for (int j = 0; j < ny; ++j) {
    m.boundary_edges.push_back(
        {{m.node_index(nx, j), m.node_index(nx, j + 1)}, element_of_cell_edge(nx - 1, j, 1),
         BoundaryTag::Free});
  }
  for (int i = nx; i > 0; --i) {
    m.boundary_edges.push_back(
        {{m.node_index(i, ny), m.node_index(i - 1, ny)}, element_of_cell_edge(i - 1, ny - 1, 2),
         BoundaryTag::Free});
  }
  for (int j = ny; j > 0; --j) {
    m.boundary_edges.push_back(
        {{m.node_index(0, j), m.node_index(0, j - 1)}, element_of_cell_edge(0, j - 1, 3),
         BoundaryTag::Dirichlet});
  }
  return m;
}

Mesh build_rect_mesh(const RunConfig& config) {
  Mesh m = build_rect_mesh(config.width, config.height, config.nx, config.ny);
  const double len = config.traction_len();
  if (!(len > 0.0)) throw ConfigError("domain.traction_length: zero-length traction segment");
  m.traction_y0 = std::max(0.0, config.traction_mid() - 0.5 * len);
  m.traction_y1 = std::min(m.height, config.traction_mid() + 0.5 * len);
  for (auto& e : m.boundary_edges) {
    const Vec2& a = m.nodes[e.nodes[0]];
    const Vec2& b = m.nodes[e.nodes[1]];
    if (a.x != m.width || b.x != m.width) continue;
    const double lo = std::max(std::min(a.y, b.y), m.traction_y0);
    const double hi = std::min(std::max(a.y, b.y), m.traction_y1);
    if (hi > lo) e.tag = BoundaryTag::Neumann;
  }
  return m;
}

std::vector<int> locate_region_nodes(const Mesh& mesh, const Box& box) {
  std::vector<int> ids;
  for (int n = 0; n < mesh.node_count(); ++n) {
    if (box.contains(mesh.nodes[n].x, mesh.nodes[n].y)) ids.push_back(n);
  }
  return ids;
}

void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  out.precision(17);
  out << "# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes) out << p.x << " " << p.y << " 0\n";
  out << "CELLS " << mesh.element_count() << " " << 4 * mesh.element_count() << "\n";
  for (const auto& t : mesh.elements) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.element_count() << "\n";
  for (int e = 0; e < mesh.element_count(); ++e) out << "5\n";
  if (!out) throw Error("failed while writing mesh file '" + path + "'");
}

}  // namespace gradtopo
