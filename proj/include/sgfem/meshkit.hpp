#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgfem/errors.hpp"

namespace sgfem::mesh {

using VertexId = std::int32_t;
using TriangleId = std::int32_t;
using EdgeId = std::int32_t;

inline constexpr VertexId kNoVertex = -1;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Triangle with counter-clockwise vertices. The reference edge is always
/// (v[0], v[1]); v[2] is the newest vertex.
struct Triangle {
  std::array<VertexId, 3> v{};
  std::uint32_t generation = 0;
  friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct Edge {
  VertexId a = kNoVertex;  // a < b
  VertexId b = kNoVertex;
  std::array<TriangleId, 2> triangles{-1, -1};
  int count = 0;
  bool interior() const { return count == 2; }
};

/// Endpoints of the edge a vertex was created on, for vertices produced by
/// bisection. Initial vertices have none.
struct VertexParents {
  VertexId a = kNoVertex;
  VertexId b = kNoVertex;
  bool has_parents() const { return a != kNoVertex; }
};

using sgfem::InputDomainError;

/// Conforming 2D triangulation with newest-vertex-bisection state.
/// Immutable once constructed; refinement returns a new mesh whose vertex
/// list extends this one.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<bool> boundary,
       std::vector<Triangle> triangles, std::vector<VertexParents> parents = {});

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_interior_edges() const { return num_interior_edges_; }

  std::span<const Point> vertices() const { return vertices_; }
  const Point& vertex(VertexId v) const { return vertices_[static_cast<std::size_t>(v)]; }
  bool on_boundary(VertexId v) const { return boundary_[static_cast<std::size_t>(v)]; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }

  std::span<const Triangle> triangles() const { return triangles_; }
  const Triangle& triangle(TriangleId t) const { return triangles_[static_cast<std::size_t>(t)]; }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }
  /// Local edge k of triangle t is (v[k], v[(k+1)%3]); edge 0 is the reference edge.
  EdgeId triangle_edge(TriangleId t, int k) const {
    return triangle_edges_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
  }
  std::optional<EdgeId> find_edge(VertexId a, VertexId b) const;

  const VertexParents& parents(VertexId v) const { return parents_[static_cast<std::size_t>(v)]; }

  double signed_area(TriangleId t) const;
  double total_area() const;

  /// Content hash of vertices and triangles; equal meshes have equal keys.
  std::uint64_t fingerprint() const { return fingerprint_; }

  friend bool operator==(const Mesh& a, const Mesh& b);

 private:
  void build_edges();

  std::vector<Point> vertices_;
  std::vector<bool> boundary_;
  std::vector<Triangle> triangles_;
  std::vector<VertexParents> parents_;
  std::vector<Edge> edges_;
  std::vector<std::array<EdgeId, 3>> triangle_edges_;
  std::unordered_map<std::uint64_t, EdgeId> edge_lookup_;
  std::size_t num_interior_edges_ = 0;
  std::uint64_t fingerprint_ = 0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform refinement T̂ of a mesh plus the bookkeeping that ties the new
/// interior vertices N⁺ back to the coarse mesh.
struct TwoLevelOverlay {
  MeshPtr coarse;
  MeshPtr fine;
  /// One entry per interior coarse edge, in edge-id order. plus_vertices[i]
  /// is the fine-mesh vertex id of that edge's midpoint.
  std::vector<EdgeId> plus_edges;
  std::vector<VertexId> plus_vertices;
  /// Coarse parent triangle of every fine triangle.
  std::vector<TriangleId> fine_parent;

  std::size_t num_plus() const { return plus_edges.size(); }
};

struct RefineResult {
  MeshPtr mesh;
  /// Indices into the overlay's N⁺ list of the new interior vertices that
  /// ended up in the refined mesh (marked ones plus the NVB closure).
  std::vector<std::size_t> plus_included;
};

struct AuditReport {
  bool conforming = false;
  bool positively_oriented = false;
  bool valid_reference_edges = false;
  double min_angle_deg = 0.0;
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  std::size_t edges = 0;
  std::size_t boundary_edges = 0;
  std::size_t interior_edges = 0;
  std::string problem;  // first failing check, empty if none

  bool ok() const { return conforming && positively_oriented && valid_reference_edges; }
};

/// L-shaped domain (-1,1)^2 \ (-1,0]^2 as three unit squares cut along
/// their SW-NE diagonals, which serve as reference edges.
Mesh initial_lshape();

/// Unit square split along its SW-NE diagonal (2 triangles, 1 interior edge).
Mesh unit_square();

TwoLevelOverlay uniform_refine(const MeshPtr& mesh);

/// Coarsest NVB refinement of `overlay.coarse` containing the marked new
/// vertices (given as indices into overlay.plus_vertices).
RefineResult refine(const TwoLevelOverlay& overlay, std::span<const std::size_t> marked);

Mesh refine(const Mesh& mesh, std::span<const EdgeId> marked_edges);

AuditReport mesh_audit(const Mesh& mesh);

double min_angle_deg(const Mesh& mesh);

// Text format:
//   vertices N triangles M
//   x y boundary_flag        (N lines)
//   v0 v1 v2 ref_edge        (M lines; ref_edge k names edge (v_k, v_{k+1 mod 3}))
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
Mesh read_mesh_file(const std::string& path);

}  // namespace sgfem::mesh
