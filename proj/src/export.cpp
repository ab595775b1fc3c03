#include "gradtopo/export.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gradtopo {

namespace {

void require_path(const std::string& path) {
  if (path.empty()) throw IoError("output path is empty");
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  require_path(path);
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void write_scalars(std::ostream& out, const char* name, const double* v, std::size_t n) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) out << v[i] << "\n";
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

double get_f32(const unsigned char* b) { return std::bit_cast<float>(get_u32(b)); }

}  // namespace

FieldSnapshot make_snapshot(const Mesh& mesh, const OptimizerState& state) {
  const int n = mesh.node_count();
  if (state.phi.size() != n || state.chi.size() != n) {
    throw Error("state fields do not match the mesh");
  }
  FieldSnapshot s;
  s.points = mesh.nodes;
  s.cells = mesh.elements;
  s.phi = state.phi;
  s.chi = state.chi;
  s.u_mag = Vector::Zero(n);
  if (state.u.size() == 2 * n) {
    for (int i = 0; i < n; ++i) s.u_mag[i] = std::hypot(state.u[2 * i], state.u[2 * i + 1]);
  }
  s.von_mises = state.stress.sigma_e;
  s.von_mises.resize(mesh.elements.size(), 0.0);
  return s;
}

void write_fields(const FieldSnapshot& s, const std::string& path) {
  const std::size_t np = s.points.size();
  const std::size_t nc = s.cells.size();
  if (static_cast<std::size_t>(s.phi.size()) != np || static_cast<std::size_t>(s.chi.size()) != np ||
      static_cast<std::size_t>(s.u_mag.size()) != np || s.von_mises.size() != nc) {
    throw Error("snapshot field sizes are inconsistent");
  }
  auto out = open_out(path);
  out.precision(17);
  out << "# vtk DataFile Version 3.0\ngradtopo fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (const auto& p : s.points) out << p.x << " " << p.y << " 0\n";
  out << "CELLS " << nc << " " << 4 * nc << "\n";
  for (const auto& t : s.cells) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << nc << "\n";
  for (std::size_t e = 0; e < nc; ++e) out << "5\n";
  out << "POINT_DATA " << np << "\n";
  write_scalars(out, "phi", s.phi.data(), np);
  write_scalars(out, "chi", s.chi.data(), np);
  write_scalars(out, "u_mag", s.u_mag.data(), np);
  out << "CELL_DATA " << nc << "\n";
  write_scalars(out, "von_mises", s.von_mises.data(), nc);
  if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_fields(const OptimizerState& state, const Mesh& mesh, const std::string& path) {
  write_fields(make_snapshot(mesh, state), path);
}

FieldSnapshot read_fields(const std::string& path) {
  require_path(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field snapshot '" + path + "'");
  std::string header, title, format;
  std::getline(in, header);
  std::getline(in, title);
  std::getline(in, format);
  if (header.rfind("# vtk DataFile", 0) != 0 || format.rfind("ASCII", 0) != 0) {
    throw IoError("'" + path + "' is not an ASCII legacy VTK file");
  }
  auto fail = [&](const std::string& what) { throw IoError("'" + path + "': " + what); };

  FieldSnapshot s;
  std::string word;
  std::size_t data_count = 0;
  bool point_data = true;
  while (in >> word) {
    if (word == "DATASET") {
      in >> word;
      if (word != "UNSTRUCTURED_GRID") fail("unsupported dataset " + word);
    } else if (word == "POINTS") {
      std::size_t n;
      in >> n >> word;
      s.points.resize(n);
      double z;
      for (auto& p : s.points) in >> p.x >> p.y >> z;
    } else if (word == "CELLS") {
      std::size_t n, size;
      in >> n >> size;
      s.cells.resize(n);
      for (auto& c : s.cells) {
        int k;
        in >> k;
        if (k != 3) fail("only triangle cells are supported");
        in >> c[0] >> c[1] >> c[2];
      }
    } else if (word == "CELL_TYPES") {
      std::size_t n;
      in >> n;
      for (std::size_t i = 0; i < n; ++i) in >> word;
    } else if (word == "POINT_DATA" || word == "CELL_DATA") {
      point_data = word == "POINT_DATA";
      in >> data_count;
    } else if (word == "SCALARS") {
      std::string name, type;
      in >> name >> type;
      std::string next;
      in >> next;
      if (next != "LOOKUP_TABLE") {
        in >> next;  // component count was present
        if (next != "LOOKUP_TABLE") fail("malformed SCALARS block");
      }
      in >> next;
      std::vector<double> v(data_count);
      for (auto& x : v) in >> x;
      if (!in) fail("truncated data for " + name);
      const Vector vec = Eigen::Map<const Vector>(v.data(), static_cast<long>(v.size()));
      if (point_data && name == "phi") s.phi = vec;
      else if (point_data && name == "chi") s.chi = vec;
      else if (point_data && name == "u_mag") s.u_mag = vec;
      else if (!point_data && name == "von_mises") s.von_mises = v;
    } else {
      fail("unexpected token '" + word + "'");
    }
    if (in.fail()) fail("malformed file");
  }
  if (s.points.empty() || s.cells.empty()) fail("no geometry");
  if (s.phi.size() != static_cast<long>(s.points.size()) ||
      s.chi.size() != static_cast<long>(s.points.size())) {
    fail("missing phi or chi point data");
  }
  for (const auto& c : s.cells) {
    for (int i : c) {
      if (i < 0 || static_cast<std::size_t>(i) >= s.points.size()) fail("cell index out of range");
    }
  }
  if (s.u_mag.size() == 0) s.u_mag = Vector::Zero(static_cast<long>(s.points.size()));
  s.von_mises.resize(s.cells.size(), 0.0);
  return s;
}

Mesh snapshot_mesh(const FieldSnapshot& s) {
  Mesh mesh;
  mesh.nodes = s.points;
  mesh.elements = s.cells;
  double x0 = s.points.front().x, x1 = x0, y0 = s.points.front().y, y1 = y0;
  for (const auto& p : s.points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  mesh.width = x1 - x0;
  mesh.height = y1 - y0;
  for (const auto& t : s.cells) {
    const Vec2& a = s.points[t[0]];
    const Vec2& b = s.points[t[1]];
    const Vec2& c = s.points[t[2]];
    mesh.element_areas.push_back(0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)));
  }
  return mesh;
}

std::vector<std::string> history_columns(bool with_timing) {
  std::vector<std::string> cols = {"iter",      "objective", "compliance",    "m_chi",
                                   "delta_phi", "delta_chi", "lambda",        "max_von_mises",
                                   "volume_error", "volume_drift", "tau"};
  if (with_timing) cols.push_back("wall_time");
  return cols;
}

std::string format_history(const std::vector<IterationRecord>& history, bool with_timing) {
  std::ostringstream out;
  const auto cols = history_columns(with_timing);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : history) {
    out << r.iter;
    for (double v : {r.objective, r.compliance, r.m_chi, r.delta_phi, r.delta_chi, r.lambda,
                     r.max_von_mises, r.volume_error, r.volume_drift, r.tau}) {
      out << "," << format_value(v);
    }
    if (with_timing) out << "," << format_value(r.wall_time);
    out << "\n";
  }
  return out.str();
}

void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path,
                       bool with_timing) {
  auto out = open_out(path);
  out << format_history(history, with_timing);
  if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_stl(const TriangleSoup3D& soup, const std::string& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  char header[80] = {};
  const char title[] = "gradtopo binary STL";
  std::memcpy(header, title, sizeof title - 1);
  out.write(header, 80);
  put_u32(out, static_cast<std::uint32_t>(soup.triangles.size()));
  for (const auto& t : soup.triangles) {
    const Vec3 n = t.normal();
    put_f32(out, n.x);
    put_f32(out, n.y);
    put_f32(out, n.z);
    for (const auto& v : t.v) {
      put_f32(out, v.x);
      put_f32(out, v.y);
      put_f32(out, v.z);
    }
    const char attr[2] = {0, 0};
    out.write(attr, 2);
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

TriangleSoup3D read_stl(const std::string& path) {
  require_path(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open STL '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 84) throw IoError("'" + path + "' is too short for a binary STL");
  const std::uint32_t count = get_u32(bytes.data() + 80);
  if (bytes.size() != 84 + 50ull * count) {
    throw IoError("'" + path + "': triangle count does not match file size");
  }
  TriangleSoup3D soup;
  soup.triangles.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* rec = bytes.data() + 84 + 50ull * i + 12;
    for (int k = 0; k < 3; ++k) {
      soup.triangles[i].v[k] = {get_f32(rec + 12 * k), get_f32(rec + 12 * k + 4),
                                get_f32(rec + 12 * k + 8)};
    }
  }
  return soup;
}

TriangleSoup3D extrude_to_stl(const Region& region, double height, const std::string& path) {
  require_path(path);
  if (!(height > 0.0)) throw GeometryError("extrusion height must be > 0");
  require_simple(region);
  TriangleSoup3D soup = extrude(region, height);
  write_stl(soup, path);
  return soup;
}

}  // namespace gradtopo
