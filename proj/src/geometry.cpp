#include "gradtopo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

namespace gradtopo {

namespace {

constexpr double kSnap = 1e-4;  // crossing parameters this close to a node snap onto it

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool same(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }

using Key = std::pair<double, double>;
Key key(const Vec2& p) { return {p.x, p.y}; }

// Polygon vertex during clipping. Points on mesh edges are parameterised along
// the edge (lo < hi) so both adjacent elements compute identical coordinates.
struct ClipVertex {
  enum class Kind { Node, Edge, Interior } kind = Kind::Node;
  int node = -1;
  int lo = -1;
  int hi = -1;
  double s = 0.0;
  std::array<double, 3> bary{};  // wrt the element's local nodes
};

class ElementClipper {
 public:
  ElementClipper(const Mesh& mesh, const std::array<int, 3>& el) : mesh_(mesh), el_(el) {}

  double value(const Vector& f, const ClipVertex& v) const {
    switch (v.kind) {
      case ClipVertex::Kind::Node:
        return f[v.node];
      case ClipVertex::Kind::Edge:
        return f[v.lo] + v.s * (f[v.hi] - f[v.lo]);
      case ClipVertex::Kind::Interior:
        break;
    }
    return v.bary[0] * f[el_[0]] + v.bary[1] * f[el_[1]] + v.bary[2] * f[el_[2]];
  }

  Vec2 position(const ClipVertex& v) const {
    switch (v.kind) {
      case ClipVertex::Kind::Node:
        return mesh_.nodes[v.node];
      case ClipVertex::Kind::Edge: {
        const Vec2& a = mesh_.nodes[v.lo];
        const Vec2& b = mesh_.nodes[v.hi];
        return {a.x + v.s * (b.x - a.x), a.y + v.s * (b.y - a.y)};
      }
      case ClipVertex::Kind::Interior:
        break;
    }
    Vec2 p;
    for (int k = 0; k < 3; ++k) {
      p.x += v.bary[k] * mesh_.nodes[el_[k]].x;
      p.y += v.bary[k] * mesh_.nodes[el_[k]].y;
    }
    return p;
  }

  std::vector<ClipVertex> clip(const std::vector<ClipVertex>& poly,
                               const LevelConstraint& c) const {
    std::vector<ClipVertex> out;
    const std::size_t n = poly.size();
    auto inside = [&](const ClipVertex& v) {
      const double f = value(*c.field, v);
      return c.keep_above ? f >= c.threshold : f < c.threshold;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const ClipVertex& a = poly[i];
      const ClipVertex& b = poly[(i + 1) % n];
      const bool ia = inside(a);
      const bool ib = inside(b);
      if (ia) out.push_back(a);
      if (ia != ib) out.push_back(crossing(a, b, c));
    }
    return out;
  }

 private:
  // Parameter of v along mesh edge (lo, hi), or nullopt-like -1 when v is off it.
  double edge_param(const ClipVertex& v, int lo, int hi) const {
    if (v.kind == ClipVertex::Kind::Node) {
      if (v.node == lo) return 0.0;
      if (v.node == hi) return 1.0;
      return -1.0;
    }
    if (v.kind == ClipVertex::Kind::Edge && v.lo == lo && v.hi == hi) return v.s;
    return -1.0;
  }

  bool common_edge(const ClipVertex& a, const ClipVertex& b, int& lo, int& hi) const {
    auto candidates = [](const ClipVertex& v, std::array<int, 2>& out) {
      if (v.kind == ClipVertex::Kind::Edge) {
        out = {v.lo, v.hi};
        return true;
      }
      return false;
    };
    std::array<int, 2> e{};
    if (candidates(a, e) || candidates(b, e)) {
      lo = e[0];
      hi = e[1];
      return edge_param(a, lo, hi) >= 0.0 && edge_param(b, lo, hi) >= 0.0;
    }
    if (a.kind == ClipVertex::Kind::Node && b.kind == ClipVertex::Kind::Node &&
        a.node != b.node) {
      lo = std::min(a.node, b.node);
      hi = std::max(a.node, b.node);
      return true;
    }
    return false;
  }

  std::array<double, 3> bary(const ClipVertex& v) const {
    if (v.kind == ClipVertex::Kind::Interior) return v.bary;
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
      if (v.kind == ClipVertex::Kind::Node) {
        out[k] = el_[k] == v.node ? 1.0 : 0.0;
      } else {
        out[k] = el_[k] == v.lo ? 1.0 - v.s : (el_[k] == v.hi ? v.s : 0.0);
      }
    }
    return out;
  }

  ClipVertex crossing(const ClipVertex& a, const ClipVertex& b, const LevelConstraint& c) const {
    const Vector& f = *c.field;
    int lo = -1;
    int hi = -1;
    ClipVertex v;
    if (common_edge(a, b, lo, hi)) {
      double s = (c.threshold - f[lo]) / (f[hi] - f[lo]);
      s = std::clamp(s, 0.0, 1.0);
      if (s < kSnap) {
        v.kind = ClipVertex::Kind::Node;
        v.node = lo;
      } else if (s > 1.0 - kSnap) {
        v.kind = ClipVertex::Kind::Node;
        v.node = hi;
      } else {
        v.kind = ClipVertex::Kind::Edge;
        v.lo = lo;
        v.hi = hi;
        v.s = s;
      }
      return v;
    }
    const double fa = value(f, a);
    const double fb = value(f, b);
    const double s = std::clamp((c.threshold - fa) / (fb - fa), 0.0, 1.0);
    const auto ba = bary(a);
    const auto bb = bary(b);
    v.kind = ClipVertex::Kind::Interior;
    for (int k = 0; k < 3; ++k) v.bary[k] = ba[k] + s * (bb[k] - ba[k]);
    return v;
  }

  const Mesh& mesh_;
  const std::array<int, 3>& el_;
};

Ring dedupe(Ring ring) {
  Ring out;
  for (const Vec2& p : ring) {
    if (out.empty() || !same(out.back(), p)) out.push_back(p);
  }
  while (out.size() > 1 && same(out.front(), out.back())) out.pop_back();
  return out;
}

Ring drop_collinear(Ring ring) {
  bool changed = true;
  while (changed && ring.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < ring.size() && ring.size() > 3; ++i) {
      const Vec2& p = ring[(i + ring.size() - 1) % ring.size()];
      const Vec2& v = ring[i];
      const Vec2& n = ring[(i + 1) % ring.size()];
      const double ax = v.x - p.x, ay = v.y - p.y, bx = n.x - v.x, by = n.y - v.y;
      const double c = ax * by - ay * bx;
      const double scale = std::hypot(ax, ay) * std::hypot(bx, by);
      if (std::abs(c) <= 1e-12 * scale && ax * bx + ay * by > 0.0) {
        ring.erase(ring.begin() + static_cast<long>(i));
        changed = true;
        --i;
      }
    }
  }
  return ring;
}

// Rotate so the ring starts at its lexicographically smallest (y, x) vertex.
Ring canonical_start(Ring ring) {
  auto it = std::min_element(ring.begin(), ring.end(), [](const Vec2& a, const Vec2& b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  std::rotate(ring.begin(), it, ring.end());
  return ring;
}

bool point_in_ring(const Vec2& q, const Ring& ring) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x) in = !in;
    }
  }
  return in;
}

double clockwise_angle(const Vec2& from, const Vec2& to) {
  const double a = std::atan2(from.y, from.x) - std::atan2(to.y, to.x);
  double r = std::fmod(a + 4.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  if (r <= 0.0) r += 2.0 * std::numbers::pi;
  return r;
}

std::vector<Ring> link_loops(const std::vector<std::pair<Vec2, Vec2>>& edges) {
  std::map<Key, std::vector<std::size_t>> outgoing;
  for (std::size_t i = 0; i < edges.size(); ++i) outgoing[key(edges[i].first)].push_back(i);
  std::vector<bool> used(edges.size(), false);
  std::vector<Ring> loops;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    Ring ring{edges[start].first};
    std::size_t cur = start;
    while (true) {
      const Vec2& a = edges[cur].first;
      const Vec2& b = edges[cur].second;
      const Vec2 back{a.x - b.x, a.y - b.y};
      std::size_t best = edges.size();
      double best_angle = 0.0;
      for (std::size_t cand : outgoing[key(b)]) {
        if (used[cand] && cand != start) continue;
        const Vec2& c = edges[cand].second;
        const double ang = clockwise_angle(back, {c.x - b.x, c.y - b.y});
        if (best == edges.size() || ang < best_angle) {
          best = cand;
          best_angle = ang;
        }
      }
      if (best == edges.size()) throw GeometryError("contour loop does not close");
      if (best == start) break;
      used[best] = true;
      ring.push_back(b);
      cur = best;
    }
    loops.push_back(std::move(ring));
  }
  return loops;
}

Region assemble_region(std::vector<Ring> loops) {
  Region region;
  std::vector<Ring> holes;
  for (auto& loop : loops) {
    loop = drop_collinear(dedupe(std::move(loop)));
    if (loop.size() < 3) continue;
    const double a = signed_area(loop);
    if (a > 0.0) {
      region.push_back({canonical_start(std::move(loop)), {}});
    } else if (a < 0.0) {
      holes.push_back(canonical_start(std::move(loop)));
    }
  }
  std::sort(region.begin(), region.end(), [](const Polygon& p, const Polygon& q) {
    return std::tie(p.outer[0].y, p.outer[0].x) < std::tie(q.outer[0].y, q.outer[0].x);
  });
  for (auto& hole : holes) {
    const Vec2 q{0.5 * (hole[0].x + hole[1].x), 0.5 * (hole[0].y + hole[1].y)};
    Polygon* owner = nullptr;
    double owner_area = 0.0;
    for (auto& poly : region) {
      if (!point_in_ring(q, poly.outer)) continue;
      const double a = signed_area(poly.outer);
      if (owner == nullptr || a < owner_area) {
        owner = &poly;
        owner_area = a;
      }
    }
    if (owner == nullptr) throw GeometryError("contour hole outside every outer boundary");
    owner->holes.push_back(std::move(hole));
  }
  for (auto& poly : region) {
    std::sort(poly.holes.begin(), poly.holes.end(), [](const Ring& p, const Ring& q) {
      return std::tie(p[0].y, p[0].x) < std::tie(q[0].y, q[0].x);
    });
  }
  return region;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Closed-segment intersection test.
bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = sign(cross(a, b, c));
  const int o2 = sign(cross(a, b, d));
  const int o3 = sign(cross(c, d, a));
  const int o4 = sign(cross(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

// Direction q - v lies strictly inside the interior wedge at v (interior on the left).
bool locally_inside(const Vec2& p, const Vec2& v, const Vec2& n, const Vec2& q) {
  const bool left_in = cross(p, v, q) > 0.0;
  const bool left_out = cross(v, n, q) > 0.0;
  return cross(p, v, n) >= 0.0 ? (left_in && left_out) : (left_in || left_out);
}

struct Segment {
  Vec2 a;
  Vec2 b;
};

void ring_segments(const Ring& ring, std::vector<Segment>& out) {
  for (std::size_t i = 0; i < ring.size(); ++i) out.push_back({ring[i], ring[(i + 1) % ring.size()]});
}

bool visible(const Vec2& m, const Vec2& r, const std::vector<Segment>& segs) {
  for (const auto& s : segs) {
    if (same(s.a, m) || same(s.b, m) || same(s.a, r) || same(s.b, r)) continue;
    if (segments_touch(m, r, s.a, s.b)) return false;
  }
  return true;
}

Ring bridge_holes(Ring outer, std::vector<Ring> holes) {
  auto max_x = [](const Ring& r) {
    return std::max_element(r.begin(), r.end(),
                            [](const Vec2& a, const Vec2& b) {
                              return std::tie(a.x, a.y) < std::tie(b.x, b.y);
                            }) -
           r.begin();
  };
  std::sort(holes.begin(), holes.end(), [&](const Ring& a, const Ring& b) {
    const Vec2& pa = a[max_x(a)];
    const Vec2& pb = b[max_x(b)];
    return std::tie(pa.x, pa.y) > std::tie(pb.x, pb.y);
  });
  for (std::size_t h = 0; h < holes.size(); ++h) {
    const Ring& hole = holes[h];
    const std::size_t hn = hole.size();
    const std::size_t mi = static_cast<std::size_t>(max_x(hole));
    const Vec2 m = hole[mi];
    const Vec2& hp = hole[(mi + hn - 1) % hn];
    const Vec2& hnx = hole[(mi + 1) % hn];

    std::vector<Segment> segs;
    ring_segments(outer, segs);
    for (std::size_t k = h; k < holes.size(); ++k) ring_segments(holes[k], segs);

    std::vector<std::size_t> order(outer.size());
    std::iota(order.begin(), order.end(), 0);
    auto dist2 = [&](std::size_t i) {
      const double dx = outer[i].x - m.x, dy = outer[i].y - m.y;
      return dx * dx + dy * dy;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
    std::size_t r = outer.size();
    for (std::size_t i : order) {
      const std::size_t n = outer.size();
      const Vec2& v = outer[i];
      if (same(v, m)) continue;
      if (!locally_inside(outer[(i + n - 1) % n], v, outer[(i + 1) % n], m)) continue;
      if (!locally_inside(hp, m, hnx, v)) continue;
      if (!visible(m, v, segs)) continue;
      r = i;
      break;
    }
    if (r == outer.size()) throw GeometryError("no bridge from hole to outer boundary");

    Ring merged;
    merged.reserve(outer.size() + hn + 2);
    merged.insert(merged.end(), outer.begin(), outer.begin() + static_cast<long>(r) + 1);
    for (std::size_t k = 0; k <= hn; ++k) merged.push_back(hole[(mi + k) % hn]);
    merged.insert(merged.end(), outer.begin() + static_cast<long>(r), outer.end());
    outer = std::move(merged);
  }
  return outer;
}

bool in_triangle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
}

std::vector<Triangle2> ear_clip(const Ring& ring) {
  const std::size_t n = ring.size();
  std::vector<Triangle2> tris;
  if (n < 3) return tris;
  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = (i + n - 1) % n;
    next[i] = (i + 1) % n;
  }
  std::size_t remaining = n;
  auto remove = [&](std::size_t i) {
    next[prev[i]] = next[i];
    prev[next[i]] = prev[i];
    --remaining;
  };
  auto is_ear = [&](std::size_t i) {
    const Vec2& a = ring[prev[i]];
    const Vec2& b = ring[i];
    const Vec2& c = ring[next[i]];
    if (cross(a, b, c) <= 0.0) return false;
    for (std::size_t j = next[next[i]]; j != prev[i]; j = next[j]) {
      const Vec2& p = ring[j];
      if (same(p, a) || same(p, b) || same(p, c)) continue;
      if (in_triangle(a, b, c, p)) return false;
    }
    return true;
  };

  std::size_t i = 0;
  std::size_t stall = 0;
  while (remaining > 3) {
    if (is_ear(i)) {
      tris.push_back({ring[prev[i]], ring[i], ring[next[i]]});
      const std::size_t nx = next[i];
      remove(i);
      i = nx;
      stall = 0;
      continue;
    }
    i = next[i];
    if (++stall < remaining) continue;
    // No clean ear: drop a zero-area vertex if there is one, else clip any convex vertex.
    std::size_t pick = n;
    for (std::size_t j = i, k = 0; k < remaining; j = next[j], ++k) {
      if (cross(ring[prev[j]], ring[j], ring[next[j]]) == 0.0) {
        pick = j;
        break;
      }
    }
    if (pick != n) {
      const std::size_t nx = next[pick];
      remove(pick);
      i = nx;
    } else {
      for (std::size_t j = i, k = 0; k < remaining; j = next[j], ++k) {
        if (cross(ring[prev[j]], ring[j], ring[next[j]]) > 0.0) {
          pick = j;
          break;
        }
      }
      if (pick == n) throw GeometryError("polygon triangulation failed");
      tris.push_back({ring[prev[pick]], ring[pick], ring[next[pick]]});
      const std::size_t nx = next[pick];
      remove(pick);
      i = nx;
    }
    stall = 0;
  }
  const Vec2& a = ring[prev[i]];
  const Vec2& b = ring[i];
  const Vec2& c = ring[next[i]];
  if (cross(a, b, c) > 0.0) tris.push_back({a, b, c});
  return tris;
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

using Key3 = std::tuple<double, double, double>;
Key3 key3(const Vec3& p) { return {p.x, p.y, p.z}; }

}  // namespace

double signed_area(const Ring& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % ring.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double perimeter(const Ring& ring) {
  double len = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % ring.size()];
    len += std::hypot(q.x - p.x, q.y - p.y);
  }
  return len;
}

double Polygon::area() const {
  double a = std::abs(signed_area(outer));
  for (const auto& h : holes) a -= std::abs(signed_area(h));
  return a;
}

double Polygon::perimeter() const {
  double len = gradtopo::perimeter(outer);
  for (const auto& h : holes) len += gradtopo::perimeter(h);
  return len;
}

double region_area(const Region& region) {
  double a = 0.0;
  for (const auto& p : region) a += p.area();
  return a;
}

double region_perimeter(const Region& region) {
  double len = 0.0;
  for (const auto& p : region) len += p.perimeter();
  return len;
}

Region extract_region(const Mesh& mesh, const std::vector<LevelConstraint>& constraints) {
  for (const auto& c : constraints) {
    if (c.field == nullptr || c.field->size() != mesh.node_count()) {
      throw GeometryError("level field does not match the mesh");
    }
  }
  std::map<std::pair<Key, Key>, int> directed;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements[e];
    ElementClipper clipper(mesh, el);
    std::vector<ClipVertex> poly(3);
    for (int k = 0; k < 3; ++k) poly[k].node = el[k];
    for (const auto& c : constraints) {
      poly = clipper.clip(poly, c);
      if (poly.empty()) break;
    }
    Ring ring;
    for (const auto& v : poly) ring.push_back(clipper.position(v));
    ring = dedupe(std::move(ring));
    if (ring.size() < 3 || signed_area(ring) <= 0.0) continue;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Key a = key(ring[i]);
      const Key b = key(ring[(i + 1) % ring.size()]);
      auto rev = directed.find({b, a});
      if (rev != directed.end()) {
        if (--rev->second == 0) directed.erase(rev);
      } else {
        ++directed[{a, b}];
      }
    }
  }
  std::vector<std::pair<Vec2, Vec2>> edges;
  for (const auto& [e, count] : directed) {
    for (int k = 0; k < count; ++k) {
      edges.push_back({{e.first.first, e.first.second}, {e.second.first, e.second.second}});
    }
  }
  return assemble_region(link_loops(edges));
}

ContourPolygonSet threshold_contour(const Vector& field, const Mesh& mesh, double threshold) {
  ContourPolygonSet set;
  set.threshold = threshold;
  set.above = extract_region(mesh, {{&field, threshold, true}});
  set.below = extract_region(mesh, {{&field, threshold, false}});
  return set;
}

ContourPolygonSet design_parts(const Mesh& mesh, const Vector& phi, const Vector& chi,
                               double chi_threshold, double phi_threshold) {
  ContourPolygonSet set;
  set.threshold = chi_threshold;
  const LevelConstraint solid{&phi, phi_threshold, true};
  set.above = extract_region(mesh, {solid, {&chi, chi_threshold, true}});
  set.below = extract_region(mesh, {solid, {&chi, chi_threshold, false}});
  return set;
}

void require_simple(const Region& region) {
  std::vector<Segment> segs;
  for (const auto& poly : region) {
    ring_segments(poly.outer, segs);
    for (const auto& h : poly.holes) ring_segments(h, segs);
  }
  for (const auto& s : segs) {
    if (same(s.a, s.b)) throw GeometryError("polygon has a zero-length edge");
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& p, const Segment& q) {
    return std::min(p.a.x, p.b.x) < std::min(q.a.x, q.b.x);
  });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double xmax = std::max(segs[i].a.x, segs[i].b.x);
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      if (std::min(segs[j].a.x, segs[j].b.x) > xmax) break;
      const Segment& p = segs[i];
      const Segment& q = segs[j];
      const bool share = same(p.a, q.a) || same(p.a, q.b) || same(p.b, q.a) || same(p.b, q.b);
      if (share) {
        // adjacent edges may only meet at the shared vertex
        const bool overlap = sign(cross(p.a, p.b, q.a)) == 0 && sign(cross(p.a, p.b, q.b)) == 0 &&
                             ((!same(q.a, p.a) && !same(q.a, p.b) && on_segment(p.a, p.b, q.a)) ||
                              (!same(q.b, p.a) && !same(q.b, p.b) && on_segment(p.a, p.b, q.b)) ||
                              (!same(p.a, q.a) && !same(p.a, q.b) && on_segment(q.a, q.b, p.a)) ||
                              (!same(p.b, q.a) && !same(p.b, q.b) && on_segment(q.a, q.b, p.b)));
        if (overlap) throw GeometryError("polygon edges overlap");
        continue;
      }
      if (segments_touch(p.a, p.b, q.a, q.b)) {
        throw GeometryError("self-intersecting polygon near (" + std::to_string(p.a.x) + ", " +
                            std::to_string(p.a.y) + ")");
      }
    }
  }
}

std::vector<Triangle2> triangulate(const Polygon& polygon) {
  Ring outer = dedupe(polygon.outer);
  if (outer.size() < 3) return {};
  if (signed_area(outer) < 0.0) std::reverse(outer.begin(), outer.end());
  std::vector<Ring> holes;
  for (const auto& h : polygon.holes) {
    Ring r = dedupe(h);
    if (r.size() < 3) continue;
    if (signed_area(r) > 0.0) std::reverse(r.begin(), r.end());
    holes.push_back(std::move(r));
  }
  return ear_clip(bridge_holes(std::move(outer), std::move(holes)));
}

Vec3 Triangle3::normal() const {
  const Vec3 n = cross3(sub(v[1], v[0]), sub(v[2], v[0]));
  const double len = std::sqrt(n.x * n.x + n.y * n.y + n.z * n.z);
  if (len == 0.0) return {};
  return {n.x / len, n.y / len, n.z / len};
}

Region separate_touching_vertices(Region region, double offset) {
  std::map<Key, int> uses;
  auto rings = [&](auto&& fn) {
    for (auto& poly : region) {
      fn(poly.outer, true);
      for (auto& h : poly.holes) fn(h, false);
    }
  };
  rings([&](Ring& ring, bool ccw) {
    ring = dedupe(std::move(ring));
    if ((signed_area(ring) > 0.0) != ccw) std::reverse(ring.begin(), ring.end());
    for (const Vec2& p : ring) ++uses[key(p)];
  });
  rings([&](Ring& ring, bool) {
    const Ring orig = ring;
    const std::size_t n = orig.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (uses[key(orig[i])] < 2) continue;
      const Vec2& a = orig[(i + n - 1) % n];
      const Vec2& p = orig[i];
      const Vec2& b = orig[(i + 1) % n];
      const double la = std::hypot(p.x - a.x, p.y - a.y);
      const double lb = std::hypot(b.x - p.x, b.y - p.y);
      if (la == 0.0 || lb == 0.0) continue;
      // material lies to the left of both edges
      double dx = -(p.y - a.y) / la - (b.y - p.y) / lb;
      double dy = (p.x - a.x) / la + (b.x - p.x) / lb;
      const double len = std::hypot(dx, dy);
      if (len < 1e-12) continue;
      const double step = std::min(offset, 0.1 * std::min(la, lb));
      ring[i] = {p.x + step * dx / len, p.y + step * dy / len};
    }
  });
  return region;
}

TriangleSoup3D extrude(const Region& input, double height) {
  if (!(height > 0.0)) throw GeometryError("extrusion height must be > 0");
  const Region region = separate_touching_vertices(input);
  TriangleSoup3D soup;
  auto at = [](const Vec2& p, double z) { return Vec3{p.x, p.y, z}; };
  for (const auto& poly : region) {
    for (const auto& t : triangulate(poly)) {
      soup.triangles.push_back({{at(t[0], height), at(t[1], height), at(t[2], height)}});
      soup.triangles.push_back({{at(t[0], 0.0), at(t[2], 0.0), at(t[1], 0.0)}});
    }
    auto walls = [&](Ring ring, bool ccw) {
      ring = dedupe(std::move(ring));
      if ((signed_area(ring) > 0.0) != ccw) std::reverse(ring.begin(), ring.end());
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[(i + 1) % ring.size()];
        soup.triangles.push_back({{at(a, 0.0), at(b, 0.0), at(b, height)}});
        soup.triangles.push_back({{at(a, 0.0), at(b, height), at(a, height)}});
      }
    };
    walls(poly.outer, true);
    for (const auto& h : poly.holes) walls(h, false);
  }
  return soup;
}

double signed_volume(const TriangleSoup3D& soup) {
  double v = 0.0;
  for (const auto& t : soup.triangles) {
    const Vec3 c = cross3(t.v[1], t.v[2]);
    v += t.v[0].x * c.x + t.v[0].y * c.y + t.v[0].z * c.z;
  }
  return v / 6.0;
}

WatertightReport check_watertight(const TriangleSoup3D& soup) {
  std::map<std::pair<Key3, Key3>, int> directed;
  std::map<std::pair<Key3, Key3>, int> undirected;
  for (const auto& t : soup.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Key3 a = key3(t.v[k]);
      const Key3 b = key3(t.v[(k + 1) % 3]);
      ++directed[{a, b}];
      ++undirected[{std::min(a, b), std::max(a, b)}];
    }
  }
  WatertightReport r;
  for (const auto& [e, c] : undirected) {
    if (c == 1) ++r.boundary_edges;
    if (c > 2) ++r.nonmanifold_edges;
  }
  r.watertight = !soup.triangles.empty() && r.boundary_edges == 0 && r.nonmanifold_edges == 0 &&
                 std::all_of(undirected.begin(), undirected.end(),
                             [](const auto& e) { return e.second == 2; });
  r.consistently_oriented =
      std::all_of(directed.begin(), directed.end(), [](const auto& e) { return e.second == 1; });
  return r;
}

std::vector<ComponentTopology> component_topology(const TriangleSoup3D& soup) {
  std::map<Key3, int> ids;
  std::vector<std::array<int, 3>> tris;
  for (const auto& t : soup.triangles) {
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] = ids.emplace(key3(t.v[k]), static_cast<int>(ids.size()));
      tri[k] = it->second;
    }
    tris.push_back(tri);
  }
  std::vector<int> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : tris) {
    parent[find(t[1])] = find(t[0]);
    parent[find(t[2])] = find(t[0]);
  }
  std::map<int, ComponentTopology> comps;
  std::map<int, std::map<std::pair<int, int>, int>> edges;
  for (std::size_t v = 0; v < parent.size(); ++v) ++comps[find(static_cast<int>(v))].vertices;
  for (const auto& t : tris) {
    const int root = find(t[0]);
    ++comps[root].faces;
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      edges[root][{std::min(a, b), std::max(a, b)}] = 1;
    }
  }
  std::vector<ComponentTopology> out;
  for (auto& [root, c] : comps) {
    c.edges = static_cast<int>(edges[root].size());
    out.push_back(c);
  }
  return out;
}

}  // namespace gradtopo
