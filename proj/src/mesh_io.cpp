#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "sgfem/meshkit.hpp"

namespace sgfem::mesh {

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  os << std::setprecision(17);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertices()[v];
    os << p.x << ' ' << p.y << ' ' << (mesh.on_boundary(static_cast<VertexId>(v)) ? 1 : 0) << '\n';
  }
  for (const Triangle& t : mesh.triangles()) {
    os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << " 0\n";
  }
}

Mesh read_mesh(std::istream& is) {
  std::string w1, w2;
  long long nv = -1, nt = -1;
  if (!(is >> w1 >> nv >> w2 >> nt) || w1 != "vertices" || w2 != "triangles" || nv < 0 || nt < 0) {
    throw InputDomainError("mesh file: expected header 'vertices N triangles M'");
  }
  std::vector<Point> vertices(static_cast<std::size_t>(nv));
  std::vector<bool> boundary(static_cast<std::size_t>(nv));
  for (auto i = 0ll; i < nv; ++i) {
    int flag = 0;
    if (!(is >> vertices[static_cast<std::size_t>(i)].x >> vertices[static_cast<std::size_t>(i)].y >> flag) ||
        (flag != 0 && flag != 1)) {
      throw InputDomainError("mesh file: bad vertex line " + std::to_string(i));
    }
    boundary[static_cast<std::size_t>(i)] = flag == 1;
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (auto i = 0ll; i < nt; ++i) {
    std::array<VertexId, 3> v{};
    int ref = -1;
    if (!(is >> v[0] >> v[1] >> v[2] >> ref) || ref < 0 || ref > 2) {
      throw InputDomainError("mesh file: bad triangle line " + std::to_string(i));
    }
    const auto k = static_cast<std::size_t>(ref);
    triangles[static_cast<std::size_t>(i)].v = {v[k], v[(k + 1) % 3], v[(k + 2) % 3]};
  }
  Mesh mesh(std::move(vertices), std::move(boundary), std::move(triangles));
  const AuditReport report = mesh_audit(mesh);
  if (!report.ok()) throw InputDomainError("mesh file: " + report.problem);
  return mesh;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputDomainError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

}  // namespace sgfem::mesh
