#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gradtopo/material.hpp"
#include "gradtopo/mesh.hpp"

namespace gradtopo {

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Symmetric sparse matrix, column-major compressed storage.
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

// Field layout: scalar nodal fields (phi, chi) have one entry per node. Vector
// nodal fields (u, U) interleave components, dof 2*n + c.

/// Per-element constant Voigt stress (s11, s22, s12) [MPa].
using ElementStress = std::vector<Eigen::Vector3d>;

/// Constant-strain-triangle data for one element.
struct ElementGeometry {
  double area = 0.0;
  Eigen::Matrix<double, 3, 2> grad;  // row i: gradient of shape function i
  Eigen::Matrix<double, 3, 6> B;     // strain-displacement (engineering shear)
};

std::vector<ElementGeometry> element_geometry(const Mesh& mesh);

/// Quadrature rule over a triangle in barycentric coordinates; weights sum to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};
const TriangleRule& centroid_rule();
/// Seven-point rule, exact for polynomials up to degree 5.
const TriangleRule& degree5_rule();
const TriangleRule& rule_for(Quadrature q);

/// Element-mean stiffness factor s_e = mean over the element of factor(phi_h, chi_h),
/// so that the element tensor is s_e K_A.
std::vector<double> element_stiffness_factors(const Mesh& mesh, const MaterialModel& material,
                                              const Vector& phi, const Vector& chi,
                                              Quadrature quadrature);

/// d s_e / d phi_i (wrt_phi) or d s_e / d chi_i for the three local nodes.
std::vector<std::array<double, 3>> element_factor_gradients(const Mesh& mesh,
                                                            const MaterialModel& material,
                                                            const Vector& phi, const Vector& chi,
                                                            Quadrature quadrature, bool wrt_phi);

/// Maps full displacement dofs to the unknowns left after clamping.
class DofMap {
 public:
  DofMap() = default;
  DofMap(int dof_count, const std::vector<int>& fixed_dofs);
  /// Clamps both components of every Dirichlet node.
  static DofMap clamped(const Mesh& mesh);

  int full_size() const { return static_cast<int>(to_free_.size()); }
  int free_size() const { return static_cast<int>(free_.size()); }
  int free_index(int dof) const { return to_free_[dof]; }
  Vector restrict(const Vector& full) const;
  Vector expand(const Vector& reduced) const;

 private:
  std::vector<int> to_free_;
  std::vector<int> free_;
};

/// Re-assembles K^uu for new element factors without rebuilding the sparsity pattern.
class ElasticAssembler {
 public:
  ElasticAssembler(const Mesh& mesh, const MaterialModel& material, DofMap dofs);

  SparseMatrix assemble(const std::vector<double>& element_factors) const;
  const DofMap& dofs() const { return dofs_; }
  const std::vector<ElementGeometry>& geometry() const { return geometry_; }

 private:
  std::vector<ElementGeometry> geometry_;
  std::vector<Eigen::Matrix<double, 6, 6>> base_;  // A B^T K_A B
  DofMap dofs_;
  SparseMatrix pattern_;
  std::vector<std::array<int, 36>> slots_;
};

/// Full (unconstrained) P1 elasticity stiffness, 2n x 2n.
SparseMatrix assemble_elastic_stiffness(const Mesh& mesh, const MaterialModel& material,
                                        const Vector& phi, const Vector& chi,
                                        Quadrature quadrature = Quadrature::Centroid);

/// Boundary traction g integrated over the loaded right-edge segment.
Vector assemble_traction_load(const Mesh& mesh, const Vec2& traction);
/// Body load int phi f . v with exact P1 integration.
Vector assemble_body_load(const Mesh& mesh, const Vec2& body_force, const Vector& phi);
/// Traction plus phi-weighted body load.
Vector assemble_load(const Mesh& mesh, const RunConfig& config, const Vector& phi);

SparseMatrix assemble_scalar_mass(const Mesh& mesh, double coeff);
SparseMatrix assemble_scalar_stiffness(const Mesh& mesh, double coeff);
/// Row r with r . phi = integral of the P1 field phi.
Vector assemble_volume_row(const Mesh& mesh);

/// Element strains (e11, e22, 2 e12) from a full displacement vector.
std::vector<Eigen::Vector3d> element_strains(const Mesh& mesh, const Vector& u);

ElementStress compute_element_stress(const Mesh& mesh, const MaterialModel& material,
                                     const Vector& phi, const Vector& chi, const Vector& u,
                                     Quadrature quadrature = Quadrature::Centroid);

struct SolveReport {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Throws SolverError when the
/// relative residual does not reach tol within max_iter iterations.
SolveReport solve_spd(const SparseMatrix& A, const Vector& rhs, double tol = 1e-10,
                      int max_iter = 0, const Vector* initial_guess = nullptr);

/// Factor-once, solve-many interface over SPD systems.
class SpdSolver {
 public:
  virtual ~SpdSolver() = default;
  virtual void factorize(const SparseMatrix& A) = 0;
  virtual Vector solve(const Vector& rhs) = 0;
};

std::unique_ptr<SpdSolver> make_spd_solver(LinearBackend backend, double tol = 1e-10);

struct SaddleSolution {
  Vector x;
  double lambda = 0.0;
};

/// Solves [A r^T; r 0] (x, lambda) = (rhs, target) by the Schur complement on lambda.
SaddleSolution solve_saddle(const SparseMatrix& A, const Vector& r, const Vector& rhs,
                            double target, double tol = 1e-12);

/// Same system with A factored once; r is fixed at construction.
class SaddleSolver {
 public:
  SaddleSolver(const SparseMatrix& A, Vector r, LinearBackend backend, double tol = 1e-12);
  SaddleSolution solve(const Vector& rhs, double target);

 private:
  std::unique_ptr<SpdSolver> solver_;
  Vector r_;
  Vector a_inv_r_;
  double schur_ = 0.0;
};

}  // namespace gradtopo
