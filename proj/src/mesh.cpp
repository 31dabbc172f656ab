#include "nlmg/mesh.hpp"

#include "nlmg/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace nlmg {

namespace {

bool on_unit_boundary(const Point& p, int dim) {
  constexpr double eps = 1e-12;
  for (int i = 0; i < dim; ++i)
    if (std::abs(p[i]) < eps || std::abs(p[i] - 1.0) < eps) return true;
  return false;
}

void number_dofs(MeshLevel& mesh) {
  mesh.is_boundary.assign(mesh.vertices.size(), 0);
  mesh.dof_of_vertex.assign(mesh.vertices.size(), -1);
  mesh.interior_dof.clear();
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (on_unit_boundary(mesh.vertices[v], mesh.dim)) {
      mesh.is_boundary[v] = 1;
      continue;
    }
    mesh.dof_of_vertex[v] = static_cast<int>(mesh.interior_dof.size());
    mesh.interior_dof.push_back(v);
  }
}

}  // namespace

double MeshLevel::cell_measure(int c) const {
  const Cell& t = cells[static_cast<std::size_t>(c)];
  const Point& a = vertices[t[0]];
  const Point& b = vertices[t[1]];
  if (dim == 1) return std::abs(b[0] - a[0]);
  const Point& p = vertices[t[2]];
  return 0.5 * std::abs((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]));
}

MeshLevel build_coarse_mesh(Domain domain, double H) {
  if (!(H > 0.0) || H >= 1.0)
    throw Error(ErrorKind::invalid_argument, "build_coarse_mesh: H must lie in (0,1)");
  const double inv = 1.0 / H;
  const long m = std::lround(inv);
  if (std::abs(inv - static_cast<double>(m)) > 1e-9 * inv)
    throw Error(ErrorKind::invalid_argument, "build_coarse_mesh: 1/H must be an integer");

  MeshLevel mesh;
  mesh.level = 0;
  mesh.dim = domain.dim();
  mesh.h = 1.0 / static_cast<double>(m);
  const int mi = static_cast<int>(m);
  if (mesh.dim == 1) {
    for (int i = 0; i <= mi; ++i) mesh.vertices.push_back({static_cast<double>(i) / mi, 0.0});
    for (int i = 0; i < mi; ++i) mesh.cells.push_back({i, i + 1, -1});
  } else {
    for (int j = 0; j <= mi; ++j)
      for (int i = 0; i <= mi; ++i)
        mesh.vertices.push_back({static_cast<double>(i) / mi, static_cast<double>(j) / mi});
    const auto id = [mi](int i, int j) { return j * (mi + 1) + i; };
    for (int j = 0; j < mi; ++j)
      for (int i = 0; i < mi; ++i) {
        // every square is cut along its (i,j)-(i+1,j+1) diagonal
        mesh.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        mesh.cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
  }
  number_dofs(mesh);
  return mesh;
}

MeshLevel refine_regular(const MeshLevel& mesh, int beta) {
  if (beta != 2) throw Error(ErrorKind::invalid_argument, "refine_regular: only beta = 2 is supported");

  MeshLevel fine;
  fine.level = mesh.level + 1;
  fine.dim = mesh.dim;
  fine.h = mesh.h / beta;
  fine.parent_vertex_count = mesh.n_vertices();
  fine.vertices = mesh.vertices;
  fine.parents.reserve(mesh.vertices.size() * (mesh.dim == 1 ? 2 : 4));
  fine.coarse_to_fine.resize(mesh.vertices.size());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    fine.parents.push_back({v, v});
    fine.coarse_to_fine[v] = v;
  }

  std::unordered_map<std::uint64_t, int> midpoint;
  const auto mid = [&](int a, int b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    const auto [it, inserted] = midpoint.try_emplace((lo << 32) | hi, fine.n_vertices());
    if (inserted) {
      const Point& pa = mesh.vertices[a];
      const Point& pb = mesh.vertices[b];
      fine.vertices.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
      fine.parents.push_back({static_cast<int>(lo), static_cast<int>(hi)});
    }
    return it->second;
  };

  if (mesh.dim == 1) {
    fine.cells.reserve(2 * mesh.cells.size());
    for (const Cell& c : mesh.cells) {
      const int m = mid(c[0], c[1]);
      fine.cells.push_back({c[0], m, -1});
      fine.cells.push_back({m, c[1], -1});
    }
  } else {
    fine.cells.reserve(4 * mesh.cells.size());
    for (const Cell& c : mesh.cells) {
      const int ab = mid(c[0], c[1]);
      const int bc = mid(c[1], c[2]);
      const int ca = mid(c[2], c[0]);
      fine.cells.push_back({c[0], ab, ca});
      fine.cells.push_back({ab, c[1], bc});
      fine.cells.push_back({ca, bc, c[2]});
      fine.cells.push_back({ab, bc, ca});
    }
  }
  number_dofs(fine);
  return fine;
}

CsrMatrix assemble_prolongation(const MeshLevel& coarse, const MeshLevel& fine) {
  if (fine.level != coarse.level + 1 || fine.parent_vertex_count != coarse.n_vertices() ||
      fine.dim != coarse.dim || fine.parents.size() != fine.vertices.size())
    throw Error(ErrorKind::invalid_argument, "assemble_prolongation: fine is not a refinement of coarse");
  for (int v = 0; v < coarse.n_vertices(); ++v)
    if (fine.vertices[fine.coarse_to_fine[v]] != coarse.vertices[v])
      throw Error(ErrorKind::invalid_argument, "assemble_prolongation: vertex coincidence map broken");

  std::vector<Triplet> t;
  t.reserve(2 * static_cast<std::size_t>(fine.n_dofs()));
  for (int row = 0; row < fine.n_dofs(); ++row) {
    const auto [a, b] = fine.parents[fine.interior_dof[row]];
    if (a == b) {
      const int col = coarse.dof_of_vertex[a];
      if (col >= 0) t.push_back({row, col, 1.0});
      continue;
    }
    for (int p : {a, b}) {
      const int col = coarse.dof_of_vertex[p];
      if (col >= 0) t.push_back({row, col, 0.5});
    }
  }
  return CsrMatrix::from_triplets(fine.n_dofs(), coarse.n_dofs(), std::move(t));
}

MeshHierarchy::MeshHierarchy(Domain domain, std::vector<MeshLevel> levels, int beta)
    : domain_(domain), beta_(beta), levels_(std::move(levels)) {
  if (levels_.empty()) throw Error(ErrorKind::invalid_argument, "MeshHierarchy: no levels");
  prolongations_.resize(levels_.size());
  for (std::size_t k = 1; k < levels_.size(); ++k)
    prolongations_[k] = assemble_prolongation(levels_[k - 1], levels_[k]);
}

CsrMatrix MeshHierarchy::composite_prolongation(int k) const {
  CsrMatrix p = CsrMatrix::identity(level(0).n_dofs());
  for (int j = 1; j <= k; ++j) p = multiply(prolongation(j), p);
  return p;
}

Vector MeshHierarchy::lift(std::span<const double> v, int from, int to) const {
  if (to < from) throw Error(ErrorKind::invalid_argument, "MeshHierarchy::lift: target coarser than source");
  Vector cur(v.begin(), v.end());
  for (int j = from + 1; j <= to; ++j) cur = prolongation(j) * cur;
  return cur;
}

MeshHierarchy build_hierarchy(Domain domain, double H, int n, int beta) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "build_hierarchy: need n >= 1");
  if (beta != 2) throw Error(ErrorKind::invalid_argument, "build_hierarchy: only beta = 2 is supported");
  std::vector<MeshLevel> levels;
  levels.push_back(build_coarse_mesh(domain, H));
  for (int k = 1; k <= n; ++k) levels.push_back(refine_regular(levels.back(), beta));
  return MeshHierarchy(domain, std::move(levels), beta);
}

std::string mesh_to_json(const MeshLevel& mesh) {
  nlohmann::json j;
  j["level"] = mesh.level;
  j["dim"] = mesh.dim;
  j["h"] = mesh.h;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const Point& p : mesh.vertices) {
    if (mesh.dim == 1)
      verts.push_back({p[0]});
    else
      verts.push_back({p[0], p[1]});
  }
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const Cell& c : mesh.cells) {
    if (mesh.dim == 1)
      cells.push_back({c[0], c[1]});
    else
      cells.push_back({c[0], c[1], c[2]});
  }
  auto& bnd = j["boundary"] = nlohmann::json::array();
  for (char b : mesh.is_boundary) bnd.push_back(b != 0);
  return j.dump();
}

}  // namespace nlmg
