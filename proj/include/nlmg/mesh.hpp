#pragma once

#include "nlmg/sparse.hpp"

#include <array>
#include <string>
#include <vector>

namespace nlmg {

enum class DomainKind { interval01, square01 };

/// [0,1]^d for d = 1 or 2.
struct Domain {
  DomainKind kind = DomainKind::interval01;

  static Domain interval() { return {DomainKind::interval01}; }
  static Domain square() { return {DomainKind::square01}; }
  int dim() const noexcept { return kind == DomainKind::interval01 ? 1 : 2; }
};

using Point = std::array<double, 2>;  // second coordinate is 0 in 1d
using Cell = std::array<int, 3>;      // third vertex is -1 in 1d

struct MeshLevel {
  int level = 0;
  int dim = 1;
  double h = 0.0;
  std::vector<Point> vertices;
  std::vector<Cell> cells;
  std::vector<char> is_boundary;
  std::vector<int> interior_dof;   // dof -> vertex
  std::vector<int> dof_of_vertex;  // vertex -> dof, -1 on the boundary

  // Refinement provenance (empty on level 0). parents[v] holds the two
  // parent-level vertices whose midpoint is v; both entries are equal when v
  // coincides with a parent vertex. coarse_to_fine[i] is the fine index of
  // parent vertex i.
  std::vector<std::array<int, 2>> parents;
  std::vector<int> coarse_to_fine;
  int parent_vertex_count = 0;

  int n_dofs() const noexcept { return static_cast<int>(interior_dof.size()); }
  int n_vertices() const noexcept { return static_cast<int>(vertices.size()); }
  int vertices_per_cell() const noexcept { return dim + 1; }
  /// Length (1d) or area (2d) of a cell.
  double cell_measure(int c) const;
};

MeshLevel build_coarse_mesh(Domain domain, double H);
MeshLevel refine_regular(const MeshLevel& mesh, int beta = 2);

/// Rows are fine interior dofs, columns coarse interior dofs.
CsrMatrix assemble_prolongation(const MeshLevel& coarse, const MeshLevel& fine);

/// Nested levels 0..n (level 0 = T_H) with prolongations P_k: level k-1 -> k.
/// Immutable after construction.
class MeshHierarchy {
 public:
  MeshHierarchy(Domain domain, std::vector<MeshLevel> levels, int beta);

  Domain domain() const noexcept { return domain_; }
  int beta() const noexcept { return beta_; }
  int dim() const noexcept { return domain_.dim(); }
  /// Index of the finest level (n).
  int finest() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  int size() const noexcept { return static_cast<int>(levels_.size()); }

  const MeshLevel& level(int k) const { return levels_.at(static_cast<std::size_t>(k)); }
  /// P_k for k >= 1.
  const CsrMatrix& prolongation(int k) const { return prolongations_.at(static_cast<std::size_t>(k)); }
  /// P_k ... P_1 : level 0 -> level k (identity for k = 0).
  CsrMatrix composite_prolongation(int k) const;
  /// Lift a nodal vector from level `from` to level `to >= from`.
  Vector lift(std::span<const double> v, int from, int to) const;

 private:
  Domain domain_;
  int beta_;
  std::vector<MeshLevel> levels_;
  std::vector<CsrMatrix> prolongations_;  // index 0 unused
};

MeshHierarchy build_hierarchy(Domain domain, double H, int n, int beta = 2);

/// Vertices, cells and boundary flags as JSON (debug output).
std::string mesh_to_json(const MeshLevel& mesh);

}  // namespace nlmg
