#pragma once

#include <string>
#include <vector>

#include "gradtopo/geometry.hpp"
#include "gradtopo/optimizer.hpp"

namespace gradtopo {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Nodal and element fields of one design, as stored in a VTK snapshot.
struct FieldSnapshot {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> cells;
  Vector phi;
  Vector chi;
  Vector u_mag;
  std::vector<double> von_mises;
};

FieldSnapshot make_snapshot(const Mesh& mesh, const OptimizerState& state);

/// Legacy-VTK ASCII unstructured grid: point data phi, chi, u_mag; cell data von_mises.
void write_fields(const FieldSnapshot& snapshot, const std::string& path);
void write_fields(const OptimizerState& state, const Mesh& mesh, const std::string& path);
/// Reads files produced by write_fields.
FieldSnapshot read_fields(const std::string& path);

/// Triangulation carried by a snapshot (nodes, elements, areas only).
Mesh snapshot_mesh(const FieldSnapshot& snapshot);

std::vector<std::string> history_columns(bool with_timing);
/// Comma-separated history with a header row; values printed round-trip exact.
std::string format_history(const std::vector<IterationRecord>& history, bool with_timing);
void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path,
                       bool with_timing = false);

/// Binary STL: 80-byte header, uint32 triangle count, 50-byte little-endian records.
void write_stl(const TriangleSoup3D& soup, const std::string& path);
TriangleSoup3D read_stl(const std::string& path);

/// Checks the polygons, extrudes them by height and writes a binary STL.
TriangleSoup3D extrude_to_stl(const Region& region, double height, const std::string& path);

}  // namespace gradtopo
