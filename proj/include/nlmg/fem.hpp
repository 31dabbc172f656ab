#pragma once

#include "nlmg/mesh.hpp"
#include "nlmg/sparse.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlmg {

/// Coefficients of a P1 function at the interior vertices of one level.
struct NodalVector {
  int level = 0;
  Vector values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Simplex quadrature in barycentric coordinates; weights sum to 1 and are
/// scaled by the cell measure at use.
struct QuadratureRule {
  int dim = 1;
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  /// 2-point Gauss (1d) / edge midpoints (2d). Used for every assembled form.
  static QuadratureRule assembly(int dim);
  /// 3-point Gauss (1d) / 6-point degree-4 rule (2d). Used for errors against
  /// analytic functions.
  static QuadratureRule accurate(int dim);
};

/// V(x): constant, or harmonic well c * sum_i (x_i - 1/2)^2.
struct Potential {
  enum class Kind { constant, harmonic };
  Kind kind = Kind::constant;
  double coefficient = 0.0;

  double operator()(std::span<const double> x) const;
};

enum class NonlinearityKind { zero, potential, cubic, gpe, custom };

/// f(x,u) with derivative f_u and, when available, the splitting f = w(x,u) u.
class Nonlinearity {
 public:
  using Fn = std::function<double(std::span<const double>, double)>;

  static Nonlinearity zero();
  static Nonlinearity potential(Potential v);
  static Nonlinearity cubic(double zeta);
  static Nonlinearity gpe(Potential v, double zeta);
  /// `linear` means f is linear in u, so a single SCF sweep is exact.
  static Nonlinearity custom(std::string name, Fn f, Fn f_u, std::optional<Fn> w, bool linear);

  double f(std::span<const double> x, double u) const;
  double f_u(std::span<const double> x, double u) const;
  double w(std::span<const double> x, double u) const;

  NonlinearityKind kind() const noexcept { return kind_; }
  const Potential& potential_term() const noexcept { return potential_; }
  double zeta() const noexcept { return zeta_; }
  bool splittable() const noexcept { return kind_ != NonlinearityKind::custom || custom_w_.has_value(); }
  bool is_linear() const noexcept;
  std::string name() const;

 private:
  NonlinearityKind kind_ = NonlinearityKind::zero;
  Potential potential_{};
  double zeta_ = 0.0;
  std::string custom_name_;
  Fn custom_f_, custom_f_u_;
  std::optional<Fn> custom_w_;
  bool custom_linear_ = false;
};

enum class DofSet { interior, all };

CsrMatrix assemble_stiffness(const MeshLevel& mesh);
CsrMatrix assemble_mass(const MeshLevel& mesh, DofSet dofs = DofSet::interior);
/// Entry j = int f(x, u_h) phi_j.
NodalVector assemble_nonlinear_load(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f);
/// Entry (i,j) = int f_u(x, u_h) phi_i phi_j.
CsrMatrix assemble_linearized_term(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f);
/// Entry (i,j) = int w(x, u_h) phi_i phi_j; throws for non-splittable f.
CsrMatrix assemble_weighted_mass(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f);

/// Nodal interpolant at interior vertices.
NodalVector interpolate(const MeshLevel& mesh, const std::function<double(std::span<const double>)>& fn);

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// ||u - u_h||_0 and |u - u_h|_1 for an analytic u with gradient grad_u,
/// integrated cellwise with QuadratureRule::accurate.
ErrorNorms analytic_errors(const MeshLevel& mesh, const NodalVector& uh,
                           const std::function<double(std::span<const double>)>& u,
                           const std::function<std::array<double, 2>(std::span<const double>)>& grad_u);

}  // namespace nlmg
