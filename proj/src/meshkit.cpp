#include "sgfem/meshkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <utility>

namespace sgfem::mesh {

namespace {

std::uint64_t edge_key(VertexId a, VertexId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

class Fnv1a {
 public:
  template <class T>
  void add(const T& value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= 1099511628211ull;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ull;
};

double corner_angle(const Point& at, const Point& p, const Point& q) {
  const double ux = p.x - at.x, uy = p.y - at.y;
  const double vx = q.x - at.x, vy = q.y - at.y;
  return std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
}

struct BisectionOutput {
  std::vector<Point> vertices;
  std::vector<bool> boundary;
  std::vector<VertexParents> parents;
  std::vector<Triangle> triangles;
  std::vector<TriangleId> parent_of;
  std::vector<VertexId> edge_midpoint;  // per coarse edge, kNoVertex if not bisected
};

// Propagates marks to reference edges until every triangle with a marked
// edge also has its reference edge marked.
void close_marks(const Mesh& mesh, std::vector<char>& marked) {
  std::vector<TriangleId> work;
  for (std::size_t e = 0; e < marked.size(); ++e) {
    if (!marked[e]) continue;
    const Edge& edge = mesh.edge(static_cast<EdgeId>(e));
    for (int k = 0; k < edge.count && k < 2; ++k) work.push_back(edge.triangles[static_cast<std::size_t>(k)]);
  }
  while (!work.empty()) {
    const TriangleId t = work.back();
    work.pop_back();
    const EdgeId ref = mesh.triangle_edge(t, 0);
    if (marked[static_cast<std::size_t>(ref)]) continue;
    if (marked[static_cast<std::size_t>(mesh.triangle_edge(t, 1))] ||
        marked[static_cast<std::size_t>(mesh.triangle_edge(t, 2))]) {
      marked[static_cast<std::size_t>(ref)] = 1;
      const Edge& edge = mesh.edge(ref);
      for (int k = 0; k < edge.count && k < 2; ++k) {
        if (edge.triangles[static_cast<std::size_t>(k)] != t) work.push_back(edge.triangles[static_cast<std::size_t>(k)]);
      }
    }
  }
}

// Bisects every marked edge; marks must already be closed. Each coarse
// triangle is bisected at most three times.
BisectionOutput bisect_marked(const Mesh& mesh, const std::vector<char>& marked) {
  BisectionOutput out;
  out.vertices.assign(mesh.vertices().begin(), mesh.vertices().end());
  out.boundary = mesh.boundary_flags();
  out.parents.reserve(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) out.parents.push_back(mesh.parents(static_cast<VertexId>(v)));
  out.edge_midpoint.assign(mesh.num_edges(), kNoVertex);

  auto midpoint = [&](EdgeId e) {
    VertexId& mid = out.edge_midpoint[static_cast<std::size_t>(e)];
    if (mid == kNoVertex) {
      const Edge& edge = mesh.edge(e);
      const Point& a = mesh.vertex(edge.a);
      const Point& b = mesh.vertex(edge.b);
      mid = static_cast<VertexId>(out.vertices.size());
      out.vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      out.boundary.push_back(!edge.interior());
      out.parents.push_back({edge.a, edge.b});
    }
    return mid;
  };

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto tid = static_cast<TriangleId>(t);
    const Triangle& tri = mesh.triangle(tid);
    const EdgeId ref = mesh.triangle_edge(tid, 0);
    if (!marked[static_cast<std::size_t>(ref)]) {
      out.triangles.push_back(tri);
      out.parent_of.push_back(tid);
      continue;
    }
    const VertexId m = midpoint(ref);
    const auto [p0, p1, p2] = tri.v;
    const std::uint32_t g = tri.generation + 1;
    // Children keep a parent edge as reference edge: (p2,p0) is local edge 2,
    // (p1,p2) is local edge 1.
    const std::array<std::pair<Triangle, EdgeId>, 2> children{{
        {Triangle{{p2, p0, m}, g}, mesh.triangle_edge(tid, 2)},
        {Triangle{{p1, p2, m}, g}, mesh.triangle_edge(tid, 1)},
    }};
    for (const auto& [child, child_ref] : children) {
      if (!marked[static_cast<std::size_t>(child_ref)]) {
        out.triangles.push_back(child);
        out.parent_of.push_back(tid);
        continue;
      }
      const VertexId m2 = midpoint(child_ref);
      const auto [q0, q1, q2] = child.v;
      out.triangles.push_back(Triangle{{q2, q0, m2}, g + 1});
      out.triangles.push_back(Triangle{{q1, q2, m2}, g + 1});
      out.parent_of.push_back(tid);
      out.parent_of.push_back(tid);
    }
  }
  return out;
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<bool> boundary,
           std::vector<Triangle> triangles, std::vector<VertexParents> parents)
    : vertices_(std::move(vertices)),
      boundary_(std::move(boundary)),
      triangles_(std::move(triangles)),
      parents_(std::move(parents)) {
  if (boundary_.size() != vertices_.size()) {
    throw InputDomainError("mesh: boundary flag count does not match vertex count");
  }
  if (parents_.empty()) parents_.resize(vertices_.size());
  if (parents_.size() != vertices_.size()) {
    throw InputDomainError("mesh: parent record count does not match vertex count");
  }
  const auto nv = static_cast<VertexId>(vertices_.size());
  for (const Triangle& t : triangles_) {
    for (VertexId v : t.v) {
      if (v < 0 || v >= nv) throw InputDomainError("mesh: triangle references unknown vertex");
    }
    if (t.v[0] == t.v[1] || t.v[1] == t.v[2] || t.v[0] == t.v[2]) {
      throw InputDomainError("mesh: degenerate triangle with repeated vertex");
    }
  }
  build_edges();

  Fnv1a h;
  for (const Point& p : vertices_) {
    h.add(p.x);
    h.add(p.y);
  }
  for (bool b : boundary_) h.add(static_cast<char>(b));
  for (const Triangle& t : triangles_) {
    h.add(t.v[0]);
    h.add(t.v[1]);
    h.add(t.v[2]);
  }
  fingerprint_ = h.value();
}

void Mesh::build_edges() {
  edges_.clear();
  edge_lookup_.clear();
  triangle_edges_.assign(triangles_.size(), {});
  edge_lookup_.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const VertexId a = triangles_[t].v[static_cast<std::size_t>(k)];
      const VertexId b = triangles_[t].v[static_cast<std::size_t>((k + 1) % 3)];
      const auto [it, inserted] = edge_lookup_.try_emplace(edge_key(a, b), static_cast<EdgeId>(edges_.size()));
      if (inserted) {
        Edge e;
        e.a = std::min(a, b);
        e.b = std::max(a, b);
        edges_.push_back(e);
      }
      Edge& e = edges_[static_cast<std::size_t>(it->second)];
      if (e.count < 2) e.triangles[static_cast<std::size_t>(e.count)] = static_cast<TriangleId>(t);
      ++e.count;
      triangle_edges_[t][static_cast<std::size_t>(k)] = it->second;
    }
  }
  num_interior_edges_ = static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.count == 2; }));
}

std::optional<EdgeId> Mesh::find_edge(VertexId a, VertexId b) const {
  const auto it = edge_lookup_.find(edge_key(a, b));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

double Mesh::signed_area(TriangleId t) const {
  const Triangle& tri = triangle(t);
  const Point& a = vertex(tri.v[0]);
  const Point& b = vertex(tri.v[1]);
  const Point& c = vertex(tri.v[2]);
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

double Mesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += signed_area(static_cast<TriangleId>(t));
  return s;
}

bool operator==(const Mesh& a, const Mesh& b) {
  return a.fingerprint_ == b.fingerprint_ && a.vertices_ == b.vertices_ &&
         a.boundary_ == b.boundary_ && a.triangles_ == b.triangles_;
}

Mesh initial_lshape() {
  std::vector<Point> v{{-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}, {0, -1}, {1, -1}};
  std::vector<bool> boundary(v.size(), true);
  std::vector<Triangle> t{
      {{4, 0, 1}, 0}, {{0, 4, 3}, 0},  // [-1,0]x[0,1]
      {{5, 1, 2}, 0}, {{1, 5, 4}, 0},  // [0,1]x[0,1]
      {{2, 6, 7}, 0}, {{6, 2, 1}, 0},  // [0,1]x[-1,0]
  };
  return Mesh(std::move(v), std::move(boundary), std::move(t));
}

Mesh unit_square() {
  std::vector<Point> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<bool> boundary(v.size(), true);
  std::vector<Triangle> t{{{2, 0, 1}, 0}, {{0, 2, 3}, 0}};
  return Mesh(std::move(v), std::move(boundary), std::move(t));
}

TwoLevelOverlay uniform_refine(const MeshPtr& mesh) {
  std::vector<char> marked(mesh->num_edges(), 1);
  BisectionOutput out = bisect_marked(*mesh, marked);

  TwoLevelOverlay overlay;
  overlay.coarse = mesh;
  for (std::size_t e = 0; e < mesh->num_edges(); ++e) {
    if (!mesh->edge(static_cast<EdgeId>(e)).interior()) continue;
    overlay.plus_edges.push_back(static_cast<EdgeId>(e));
    overlay.plus_vertices.push_back(out.edge_midpoint[e]);
  }
  overlay.fine_parent = std::move(out.parent_of);
  overlay.fine = std::make_shared<const Mesh>(std::move(out.vertices), std::move(out.boundary),
                                              std::move(out.triangles), std::move(out.parents));
  return overlay;
}

RefineResult refine(const TwoLevelOverlay& overlay, std::span<const std::size_t> marked) {
  const Mesh& mesh = *overlay.coarse;
  RefineResult result;
  if (marked.empty()) {
    result.mesh = overlay.coarse;
    return result;
  }
  std::vector<char> flags(mesh.num_edges(), 0);
  for (std::size_t i : marked) {
    if (i >= overlay.num_plus()) {
      throw InputDomainError("refine: marked vertex " + std::to_string(i) + " is not in N+");
    }
    flags[static_cast<std::size_t>(overlay.plus_edges[i])] = 1;
  }
  close_marks(mesh, flags);
  BisectionOutput out = bisect_marked(mesh, flags);
  for (std::size_t i = 0; i < overlay.num_plus(); ++i) {
    if (out.edge_midpoint[static_cast<std::size_t>(overlay.plus_edges[i])] != kNoVertex) {
      result.plus_included.push_back(i);
    }
  }
  result.mesh = std::make_shared<const Mesh>(std::move(out.vertices), std::move(out.boundary),
                                             std::move(out.triangles), std::move(out.parents));
  return result;
}

Mesh refine(const Mesh& mesh, std::span<const EdgeId> marked_edges) {
  std::vector<char> flags(mesh.num_edges(), 0);
  for (EdgeId e : marked_edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= mesh.num_edges()) {
      throw InputDomainError("refine: unknown edge id " + std::to_string(e));
    }
    flags[static_cast<std::size_t>(e)] = 1;
  }
  close_marks(mesh, flags);
  BisectionOutput out = bisect_marked(mesh, flags);
  return Mesh(std::move(out.vertices), std::move(out.boundary), std::move(out.triangles),
              std::move(out.parents));
}

double min_angle_deg(const Mesh& mesh) {
  double best = 180.0;
  for (const Triangle& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const Point& at = mesh.vertex(t.v[static_cast<std::size_t>(k)]);
      const Point& p = mesh.vertex(t.v[static_cast<std::size_t>((k + 1) % 3)]);
      const Point& q = mesh.vertex(t.v[static_cast<std::size_t>((k + 2) % 3)]);
      best = std::min(best, corner_angle(at, p, q) * 180.0 / std::numbers::pi);
    }
  }
  return best;
}

AuditReport mesh_audit(const Mesh& mesh) {
  AuditReport r;
  r.vertices = mesh.num_vertices();
  r.triangles = mesh.num_triangles();
  r.edges = mesh.num_edges();
  r.interior_edges = mesh.num_interior_edges();
  r.boundary_edges = r.edges - r.interior_edges;
  r.valid_reference_edges = true;  // the constructor rejects anything else
  r.min_angle_deg = min_angle_deg(mesh);

  r.positively_oriented = true;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (!(mesh.signed_area(static_cast<TriangleId>(t)) > 0.0)) {
      r.positively_oriented = false;
      r.problem = "triangle " + std::to_string(t) + " has non-positive signed area";
      break;
    }
  }

  std::map<std::pair<double, double>, VertexId> by_coord;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    by_coord.emplace(std::pair{mesh.vertices()[v].x, mesh.vertices()[v].y}, static_cast<VertexId>(v));
  }
  std::vector<char> touches_boundary_edge(mesh.num_vertices(), 0);
  r.conforming = true;
  auto fail = [&](std::string why) {
    if (r.conforming && r.problem.empty()) r.problem = std::move(why);
    r.conforming = false;
  };
  if (by_coord.size() != mesh.num_vertices()) fail("duplicate vertex coordinates");
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(static_cast<EdgeId>(e));
    if (edge.count > 2) {
      fail("edge shared by more than two triangles");
      continue;
    }
    if (edge.count == 2) continue;
    touches_boundary_edge[static_cast<std::size_t>(edge.a)] = 1;
    touches_boundary_edge[static_cast<std::size_t>(edge.b)] = 1;
    const Point& a = mesh.vertex(edge.a);
    const Point& b = mesh.vertex(edge.b);
    if (by_coord.count({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)})) {
      fail("hanging node at midpoint of edge " + std::to_string(edge.a) + "-" + std::to_string(edge.b));
    }
  }
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (static_cast<bool>(touches_boundary_edge[v]) != mesh.on_boundary(static_cast<VertexId>(v))) {
      fail("boundary flag of vertex " + std::to_string(v) + " disagrees with edge topology");
    }
  }
  return r;
}

}  // namespace sgfem::mesh
