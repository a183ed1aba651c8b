#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace cavedamage {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned domain bounds.
struct Box2 {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double diameter() const { return std::hypot(width(), height()); }
};

/// Axis-aligned cavity region; a region with nonpositive extent counts as
/// empty (no material removed).
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool empty() const { return !(x1 > x0) || !(y1 > y0); }
  bool contains(double px, double py) const {
    return !empty() && px > x0 && px < x1 && py > y0 && py < y1;
  }
};

/// Distance from a point to a rectangle (zero inside).
inline double distance_to_rect(double px, double py, const Rect& r) {
  const double dx = std::max({r.x0 - px, 0.0, px - r.x1});
  const double dy = std::max({r.y0 - py, 0.0, py - r.y1});
  return std::hypot(dx, dy);
}

inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

enum class BoundaryTag { Lat, Up, Down, Cav };

struct BoundaryFacet {
  int a = -1, b = -1;  // node indices
  int tri = -1;        // owning triangle
  BoundaryTag tag = BoundaryTag::Lat;
};

/// Nodal field: one scalar per node (damage) or two interleaved per node
/// (displacement, [ux0, uy0, ux1, uy1, ...]).
using Field = std::vector<double>;

/// Conforming triangle mesh of a box-with-cavity domain with tagged boundary.
struct Mesh {
  std::vector<Vec2> nodes;                 // coordinates [m]
  std::vector<std::array<int, 3>> tris;    // CCW vertex triples
  std::vector<BoundaryFacet> boundary;
  Box2 bounds;
  Rect cavity;
  double h_coarse = 0.0;
  double h_fine = 0.0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_tris() const { return static_cast<int>(tris.size()); }

  double signed_area(int t) const {
    const auto& v = tris[static_cast<std::size_t>(t)];
    const Vec2& p0 = nodes[static_cast<std::size_t>(v[0])];
    const Vec2& p1 = nodes[static_cast<std::size_t>(v[1])];
    const Vec2& p2 = nodes[static_cast<std::size_t>(v[2])];
    return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
  }
  double area(int t) const { return std::abs(signed_area(t)); }

  Vec2 centroid(int t) const {
    const auto& v = tris[static_cast<std::size_t>(t)];
    const Vec2& p0 = nodes[static_cast<std::size_t>(v[0])];
    const Vec2& p1 = nodes[static_cast<std::size_t>(v[1])];
    const Vec2& p2 = nodes[static_cast<std::size_t>(v[2])];
    return {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
  }
};

/// Outward unit normal of a boundary facet (points away from the opposite
/// vertex of the owning triangle).
inline Vec2 outward_normal(const Mesh& m, const BoundaryFacet& f) {
  const Vec2& pa = m.nodes[static_cast<std::size_t>(f.a)];
  const Vec2& pb = m.nodes[static_cast<std::size_t>(f.b)];
  const auto& v = m.tris[static_cast<std::size_t>(f.tri)];
  int c = -1;
  for (int k = 0; k < 3; ++k)
    if (v[static_cast<std::size_t>(k)] != f.a && v[static_cast<std::size_t>(k)] != f.b)
      c = v[static_cast<std::size_t>(k)];
  const Vec2& pc = m.nodes[static_cast<std::size_t>(c)];
  double nx = pb.y - pa.y, ny = pa.x - pb.x;
  const double len = std::hypot(nx, ny);
  nx /= len;
  ny /= len;
  // flip toward the outside
  if (nx * (pc.x - pa.x) + ny * (pc.y - pa.y) > 0.0) {
    nx = -nx;
    ny = -ny;
  }
  return {nx, ny};
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

// Per-axis tick generation: the interval [lo, hi] is cut at the interior
// break coordinates (cavity walls) and each piece is subdivided uniformly at
// spacing <= h, so cavity walls always land on mesh lines.
inline std::vector<double> axis_ticks(double lo, double hi, double c0, double c1,
                                      bool has_cuts, double h) {
  std::vector<double> brk{lo};
  if (has_cuts) {
    const double tol = 1e-12 * (hi - lo);
    for (double c : {c0, c1})
      if (c > lo + tol && c < hi - tol) brk.push_back(c);
  }
  brk.push_back(hi);
  std::sort(brk.begin(), brk.end());
  std::vector<double> ticks;
  for (std::size_t s = 0; s + 1 < brk.size(); ++s) {
    const double a = brk[s], b = brk[s + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int i = 0; i < n; ++i)
      ticks.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
  }
  ticks.push_back(hi);
  return ticks;
}

// Working state for longest-edge (Rivara) bisection with conforming closure.
struct Refiner {
  std::vector<Vec2>& nodes;
  std::vector<std::array<int, 3>>& tris;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge2tri;
  std::unordered_map<std::uint64_t, int> midpoint;

  Refiner(std::vector<Vec2>& n, std::vector<std::array<int, 3>>& t)
      : nodes(n), tris(t) {
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) add_edges(i);
  }

  void add_edges(int t) {
    const auto& v = tris[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t key = edge_key(v[static_cast<std::size_t>(k)],
                                         v[static_cast<std::size_t>((k + 1) % 3)]);
      auto [it, fresh] = edge2tri.emplace(key, std::array<int, 2>{t, -1});
      if (fresh) continue;
      auto& slot = it->second;
      if (slot[0] == t || slot[1] == t) continue;
      if (slot[0] == -1)
        slot[0] = t;
      else if (slot[1] == -1)
        slot[1] = t;
      else
        throw std::runtime_error("mesh refinement: nonmanifold edge");
    }
  }

  void remove_edges(int t) {
    const auto& v = tris[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      auto it = edge2tri.find(edge_key(v[static_cast<std::size_t>(k)],
                                       v[static_cast<std::size_t>((k + 1) % 3)]));
      if (it == edge2tri.end()) continue;
      if (it->second[0] == t) it->second[0] = -1;
      if (it->second[1] == t) it->second[1] = -1;
      if (it->second[0] == -1 && it->second[1] == -1) edge2tri.erase(it);
    }
  }

  double edge_len2(int a, int b) const {
    const Vec2& pa = nodes[static_cast<std::size_t>(a)];
    const Vec2& pb = nodes[static_cast<std::size_t>(b)];
    const double dx = pb.x - pa.x, dy = pb.y - pa.y;
    return dx * dx + dy * dy;
  }

  // Longest edge of a triangle; near-ties resolved by smallest vertex pair so
  // the construction stays deterministic.
  std::pair<int, int> longest_edge(int t) const {
    const auto& v = tris[static_cast<std::size_t>(t)];
    std::pair<int, int> best{-1, -1};
    double best_len = -1.0;
    std::uint64_t best_k = 0;
    for (int k = 0; k < 3; ++k) {
      const int a = v[static_cast<std::size_t>(k)];
      const int b = v[static_cast<std::size_t>((k + 1) % 3)];
      const double len = edge_len2(a, b);
      const std::uint64_t key = edge_key(a, b);
      if (len > best_len * (1.0 + 1e-12) ||
          (len > best_len * (1.0 - 1e-12) && (best.first < 0 || key < best_k))) {
        best = {a, b};
        best_len = len;
        best_k = key;
      }
    }
    return best;
  }

  int neighbor(int t, std::pair<int, int> e) const {
    auto it = edge2tri.find(edge_key(e.first, e.second));
    if (it == edge2tri.end()) return -1;
    if (it->second[0] == t) return it->second[1];
    return it->second[0];
  }

  int midpoint_node(int a, int b) {
    const std::uint64_t key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vec2& pa = nodes[static_cast<std::size_t>(a)];
    const Vec2& pb = nodes[static_cast<std::size_t>(b)];
    nodes.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    const int id = static_cast<int>(nodes.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  }

  // Split one triangle across edge e: the slot keeps one child, the sibling
  // is appended. Orientation is preserved.
  void split_one(int t, std::pair<int, int> e, int m) {
    auto v = tris[static_cast<std::size_t>(t)];
    remove_edges(t);
    // rotate so that the split edge is (v[0], v[1])
    while (!((v[0] == e.first && v[1] == e.second) ||
             (v[0] == e.second && v[1] == e.first))) {
      const int tmp = v[0];
      v[0] = v[1];
      v[1] = v[2];
      v[2] = tmp;
    }
    tris[static_cast<std::size_t>(t)] = {v[0], m, v[2]};
    tris.push_back({m, v[1], v[2]});
    add_edges(t);
    add_edges(static_cast<int>(tris.size()) - 1);
  }

  // Make the longest edge of t split, refining neighbors first where needed
  // for conformity (Rivara).
  void ensure_split(int t0) {
    std::vector<int> stack{t0};
    std::size_t guard = 0;
    const std::size_t guard_max = 64 * tris.size() + 4096;
    while (!stack.empty()) {
      if (++guard > guard_max)
        throw std::runtime_error("mesh refinement: closure did not terminate");
      const int t = stack.back();
      const auto e = longest_edge(t);
      const int n = neighbor(t, e);
      if (n >= 0) {
        const auto en = longest_edge(n);
        if (edge_key(en.first, en.second) != edge_key(e.first, e.second)) {
          stack.push_back(n);
          continue;
        }
      }
      const int m = midpoint_node(e.first, e.second);
      split_one(t, e, m);
      if (n >= 0) split_one(n, e, m);
      stack.pop_back();
    }
  }
};

}  // namespace detail

/// Quasi-uniform triangulation of `bounds` minus `cavity`: a structured grid
/// split into two triangles per cell, then longest-edge bisection until every
/// element within `band` of the cavity surface has diameter <= h_fine.
/// Boundary facets are tagged LAT/UP/DOWN/CAV by geometry.
inline Mesh build_mesh(const Box2& bounds, double h_coarse, double h_fine,
                       const Rect& cavity, double band) {
  if (!(bounds.width() > 0.0 && bounds.height() > 0.0))
    throw std::invalid_argument("build_mesh: bounds must have positive extent");
  if (!(h_fine > 0.0) || !(h_coarse > 0.0) || h_fine > h_coarse * (1.0 + 1e-12))
    throw std::invalid_argument("build_mesh: need 0 < h_fine <= h_coarse");
  if (!(band > 0.0)) throw std::invalid_argument("build_mesh: band must be positive");
  const bool cav = !cavity.empty();
  if (cav) {
    const double tol = 1e-12 * bounds.diameter();
    const bool inside_x = cavity.x0 > bounds.x0 + tol && cavity.x1 < bounds.x1 - tol;
    const bool inside_y = cavity.y0 >= bounds.y0 - tol && cavity.y1 < bounds.y1 - tol;
    if (!inside_x || !inside_y)
      throw std::invalid_argument(
          "build_mesh: cavity must lie inside bounds (touching DOWN allowed)");
  }

  Mesh m;
  m.bounds = bounds;
  m.cavity = cav ? cavity : Rect{};
  m.h_coarse = h_coarse;
  m.h_fine = h_fine;

  const std::vector<double> tx =
      detail::axis_ticks(bounds.x0, bounds.x1, cavity.x0, cavity.x1, cav, h_coarse);
  const std::vector<double> ty =
      detail::axis_ticks(bounds.y0, bounds.y1, cavity.y0, cavity.y1, cav, h_coarse);
  const int nx = static_cast<int>(tx.size());
  const int ny = static_cast<int>(ty.size());

  std::vector<Vec2> grid_nodes(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      grid_nodes[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
                 static_cast<std::size_t>(i)] = {tx[static_cast<std::size_t>(i)],
                                                 ty[static_cast<std::size_t>(j)]};

  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const double cx = 0.5 * (tx[static_cast<std::size_t>(i)] + tx[static_cast<std::size_t>(i) + 1]);
      const double cy = 0.5 * (ty[static_cast<std::size_t>(j)] + ty[static_cast<std::size_t>(j) + 1]);
      if (cav && cavity.contains(cx, cy)) continue;
      const int ll = j * nx + i;
      const int lr = ll + 1;
      const int ul = ll + nx;
      const int ur = ul + 1;
      tris.push_back({ll, lr, ur});
      tris.push_back({ll, ur, ul});
    }
  }
  if (tris.empty()) throw std::invalid_argument("build_mesh: cavity removes the whole domain");

  // graded refinement toward the cavity surface
  if (cav && h_fine < h_coarse * (1.0 - 1e-12)) {
    detail::Refiner ref(grid_nodes, tris);
    const double limit2 = h_fine * h_fine * (1.0 + 1e-9);
    bool any = true;
    while (any) {
      any = false;
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        const auto& v = tris[static_cast<std::size_t>(t)];
        double diam2 = 0.0;
        for (int k = 0; k < 3; ++k)
          diam2 = std::max(diam2, ref.edge_len2(v[static_cast<std::size_t>(k)],
                                                v[static_cast<std::size_t>((k + 1) % 3)]));
        if (diam2 <= limit2) continue;
        double dist = std::numeric_limits<double>::max();
        double sx = 0.0, sy = 0.0;
        for (int k = 0; k < 3; ++k) {
          const Vec2& p = grid_nodes[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
          sx += p.x / 3.0;
          sy += p.y / 3.0;
          dist = std::min(dist, distance_to_rect(p.x, p.y, cavity));
        }
        dist = std::min(dist, distance_to_rect(sx, sy, cavity));
        if (dist > band) continue;
        ref.ensure_split(t);
        any = true;
      }
    }
  }

  // compact nodes to those actually referenced
  std::vector<int> remap(grid_nodes.size(), -1);
  for (const auto& v : tris)
    for (int k = 0; k < 3; ++k) remap[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])] = 0;
  int next = 0;
  for (std::size_t i = 0; i < remap.size(); ++i)
    if (remap[i] == 0) remap[i] = next++;
  m.nodes.reserve(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < grid_nodes.size(); ++i)
    if (remap[i] >= 0) m.nodes.push_back(grid_nodes[i]);
  m.tris.reserve(tris.size());
  for (auto v : tris) {
    for (int k = 0; k < 3; ++k)
      v[static_cast<std::size_t>(k)] = remap[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
    m.tris.push_back(v);
  }

  // boundary extraction and tagging
  std::unordered_map<std::uint64_t, std::array<int, 2>> count;  // {incidence, owner}
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t key = detail::edge_key(v[static_cast<std::size_t>(k)],
                                                 v[static_cast<std::size_t>((k + 1) % 3)]);
      auto [it, fresh] = count.emplace(key, std::array<int, 2>{1, t});
      if (!fresh) it->second[0]++;
    }
  }
  const double tol = 1e-10 * bounds.diameter();
  std::vector<BoundaryFacet> facets;
  for (const auto& [key, slot] : count) {
    if (slot[0] != 1) continue;
    BoundaryFacet f;
    f.a = static_cast<int>(key >> 32);
    f.b = static_cast<int>(key & 0xffffffffu);
    f.tri = slot[1];
    const Vec2& pa = m.nodes[static_cast<std::size_t>(f.a)];
    const Vec2& pb = m.nodes[static_cast<std::size_t>(f.b)];
    auto on = [tol](double u, double v, double c) {
      return std::abs(u - c) <= tol && std::abs(v - c) <= tol;
    };
    if (on(pa.y, pb.y, bounds.y0))
      f.tag = BoundaryTag::Down;
    else if (on(pa.y, pb.y, bounds.y1))
      f.tag = BoundaryTag::Up;
    else if (on(pa.x, pb.x, bounds.x0) || on(pa.x, pb.x, bounds.x1))
      f.tag = BoundaryTag::Lat;
    else
      f.tag = BoundaryTag::Cav;
    facets.push_back(f);
  }
  std::sort(facets.begin(), facets.end(), [](const BoundaryFacet& l, const BoundaryFacet& r) {
    return detail::edge_key(l.a, l.b) < detail::edge_key(r.a, r.b);
  });
  m.boundary = std::move(facets);
  return m;
}

/// Checks the structural mesh invariants; throws on the first violation.
inline void validate(const Mesh& m) {
  if (m.nodes.empty() || m.tris.empty()) throw std::runtime_error("mesh: empty");
  const double amin = 1e-12 * m.h_fine * m.h_fine;
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      const int id = v[static_cast<std::size_t>(k)];
      if (id < 0 || id >= m.num_nodes())
        throw std::runtime_error("mesh: node index out of range");
    }
    if (!(m.signed_area(t) > amin))
      throw std::runtime_error("mesh: degenerate or misoriented triangle");
  }
  std::unordered_map<std::uint64_t, int> inc;
  for (const auto& v : m.tris)
    for (int k = 0; k < 3; ++k)
      inc[detail::edge_key(v[static_cast<std::size_t>(k)],
                           v[static_cast<std::size_t>((k + 1) % 3)])]++;
  std::size_t nb = 0;
  for (const auto& [key, c] : inc) {
    if (c > 2) throw std::runtime_error("mesh: nonmanifold edge");
    if (c == 1) ++nb;
  }
  if (nb != m.boundary.size())
    throw std::runtime_error("mesh: boundary facet list does not match topology");
  for (const auto& f : m.boundary) {
    auto it = inc.find(detail::edge_key(f.a, f.b));
    if (it == inc.end() || it->second != 1)
      throw std::runtime_error("mesh: tagged facet is not a boundary edge");
  }
}

inline double domain_area(const Mesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.num_tris(); ++t) a += m.area(t);
  return a;
}

/// Nested sequence of cavity regions, one per excavation step.
struct CavitySequence {
  std::vector<Rect> regions;

  int count() const { return static_cast<int>(regions.size()); }
  const Rect& region(int step) const {
    if (step < 0 || step >= count())
      throw std::out_of_range("CavitySequence: step out of range");
    return regions[static_cast<std::size_t>(step)];
  }

  void validate() const {
    if (regions.empty()) throw std::invalid_argument("CavitySequence: empty");
    for (std::size_t i = 0; i + 1 < regions.size(); ++i) {
      const Rect& s = regions[i];
      const Rect& t = regions[i + 1];
      if (s.empty()) continue;
      if (t.empty() || s.x0 < t.x0 - 1e-12 || s.x1 > t.x1 + 1e-12 ||
          s.y0 < t.y0 - 1e-12 || s.y1 > t.y1 + 1e-12)
        throw std::invalid_argument("CavitySequence: regions must be nested");
    }
  }
};

/// Schedule with footprint interval in x growing symmetrically about a center
/// and a z-range extruded upward from z_base.
inline CavitySequence make_cavity_sequence(double x_center, double width0, double dwidth,
                                           double z_base, double height0, double dheight,
                                           int steps) {
  if (steps < 1) throw std::invalid_argument("make_cavity_sequence: steps must be >= 1");
  if (dwidth < 0.0 || dheight < 0.0)
    throw std::invalid_argument("make_cavity_sequence: growth must be nonnegative");
  CavitySequence seq;
  seq.regions.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double w = width0 + dwidth * static_cast<double>(i);
    const double h = height0 + dheight * static_cast<double>(i);
    seq.regions.push_back({x_center - 0.5 * w, z_base, x_center + 0.5 * w, z_base + h});
  }
  seq.validate();
  return seq;
}

/// Fresh mesh for one excavation step: the domain is bounds minus the
/// step's cavity region.
inline Mesh excavate(const Box2& bounds, double h_coarse, double h_fine, double band,
                     const CavitySequence& seq, int step) {
  return build_mesh(bounds, h_coarse, h_fine, seq.region(step), band);
}

namespace detail {

// Uniform-grid bin index over the old mesh for point location.
struct TriLocator {
  const Mesh& mesh;
  double cell = 1.0;
  int nx = 1, ny = 1;
  Box2 bb;
  std::vector<std::vector<int>> bins;

  explicit TriLocator(const Mesh& m) : mesh(m) {
    bb = m.bounds;
    cell = std::max(m.h_coarse, 1e-12 * bb.diameter());
    nx = std::max(1, static_cast<int>(std::ceil(bb.width() / cell)));
    ny = std::max(1, static_cast<int>(std::ceil(bb.height() / cell)));
    bins.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int t = 0; t < m.num_tris(); ++t) {
      const auto& v = m.tris[static_cast<std::size_t>(t)];
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (int k = 0; k < 3; ++k) {
        const Vec2& p = m.nodes[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
      }
      for (int j = clampj(y0); j <= clampj(y1); ++j)
        for (int i = clampi(x0); i <= clampi(x1); ++i)
          bins[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(i)].push_back(t);
    }
  }

  int clampi(double x) const {
    return std::clamp(static_cast<int>((x - bb.x0) / cell), 0, nx - 1);
  }
  int clampj(double y) const {
    return std::clamp(static_cast<int>((y - bb.y0) / cell), 0, ny - 1);
  }

  // Containing triangle (lowest index wins) and its barycentric coordinates.
  int locate(Vec2 p, std::array<double, 3>& bary, double tol) const {
    std::vector<int> cand = bins[static_cast<std::size_t>(clampj(p.y)) * static_cast<std::size_t>(nx) +
                                 static_cast<std::size_t>(clampi(p.x))];
    std::sort(cand.begin(), cand.end());
    for (int t : cand) {
      const auto& v = mesh.tris[static_cast<std::size_t>(t)];
      const Vec2& p0 = mesh.nodes[static_cast<std::size_t>(v[0])];
      const Vec2& p1 = mesh.nodes[static_cast<std::size_t>(v[1])];
      const Vec2& p2 = mesh.nodes[static_cast<std::size_t>(v[2])];
      const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
      const double l1 = ((p.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p.y - p0.y)) / det;
      const double l2 = ((p1.x - p0.x) * (p.y - p0.y) - (p.x - p0.x) * (p1.y - p0.y)) / det;
      const double l0 = 1.0 - l1 - l2;
      // coordinate tolerance mapped to barycentric via the element scale
      const double bt = tol / std::sqrt(std::abs(det));
      if (l0 >= -bt && l1 >= -bt && l2 >= -bt) {
        bary = {l0, l1, l2};
        return t;
      }
    }
    return -1;
  }
};

}  // namespace detail

/// Interpolate a nodal damage field from an old mesh onto a new one.
/// Nodes inside the old domain get the P1 interpolant; nodes outside (newly
/// exposed surface, up to roundoff) inherit the nearest old node's value.
/// The result is clamped to [0, 1] and serves as the lower bound of the next
/// damage solve, so irreversibility survives remeshing.
inline Field transfer_damage(const Mesh& old_mesh, const Field& old_alpha,
                             const Mesh& new_mesh) {
  if (old_mesh.num_nodes() == 0 || old_mesh.num_tris() == 0)
    throw std::invalid_argument("transfer_damage: empty source mesh");
  if (old_alpha.size() != static_cast<std::size_t>(old_mesh.num_nodes()))
    throw std::invalid_argument("transfer_damage: field length mismatch");
  const detail::TriLocator loc(old_mesh);
  const double tol = 1e-10 * old_mesh.bounds.diameter();
  Field out(static_cast<std::size_t>(new_mesh.num_nodes()), 0.0);
  for (int i = 0; i < new_mesh.num_nodes(); ++i) {
    const Vec2 p = new_mesh.nodes[static_cast<std::size_t>(i)];
    std::array<double, 3> bary{};
    const int t = loc.locate(p, bary, tol);
    double val;
    if (t >= 0) {
      const auto& v = old_mesh.tris[static_cast<std::size_t>(t)];
      val = bary[0] * old_alpha[static_cast<std::size_t>(v[0])] +
            bary[1] * old_alpha[static_cast<std::size_t>(v[1])] +
            bary[2] * old_alpha[static_cast<std::size_t>(v[2])];
    } else {
      int best = 0;
      double bd = std::numeric_limits<double>::max();
      for (int j = 0; j < old_mesh.num_nodes(); ++j) {
        const Vec2& q = old_mesh.nodes[static_cast<std::size_t>(j)];
        const double d = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      val = old_alpha[static_cast<std::size_t>(best)];
    }
    out[static_cast<std::size_t>(i)] = std::clamp(val, 0.0, 1.0);
  }
  return out;
}

/// Field equal to `value` within `halfwidth` of segment [a, b], zero outside.
inline Field band_field(const Mesh& m, Vec2 a, Vec2 b, double halfwidth, double value) {
  Field f(static_cast<std::size_t>(m.num_nodes()), 0.0);
  for (int i = 0; i < m.num_nodes(); ++i)
    if (distance_to_segment(m.nodes[static_cast<std::size_t>(i)], a, b) <= halfwidth)
      f[static_cast<std::size_t>(i)] = value;
  return f;
}

}  // namespace cavedamage
