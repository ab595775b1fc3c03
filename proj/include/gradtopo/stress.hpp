#pragma once

#include <vector>

#include "gradtopo/fem.hpp"

namespace gradtopo {

/// Global p-norm stress measure and the penalty F = (sigma_pn - 1)^2.
struct StressAggregate {
  double sigma_pn = 0.0;
  std::vector<double> sigma_e;  // von Mises per element [MPa]
  double F_value = 0.0;
  /// dF / d(s11, s22, s12) per element [1/MPa]. The domain integral of the
  /// penalty is |Omega| F, so the pointwise density used by the adjoint is
  /// |Omega| dF_dsigma_e / A_e.
  std::vector<Eigen::Vector3d> dF_dsigma;
  double domain_area = 0.0;
};

double von_mises(const Eigen::Vector3d& s);
std::vector<double> von_mises(const ElementStress& sigma);
/// Gradient of the von Mises stress wrt (s11, s22, s12); zero at zero stress.
Eigen::Vector3d von_mises_gradient(const Eigen::Vector3d& s);

/// sigma_pn = (sum_e A_e (sigma_e / sigma_y)^p / |Omega|)^(1/p) when normalized,
/// without the 1/|Omega| otherwise.
StressAggregate pnorm_aggregate(const ElementStress& sigma, const Mesh& mesh, double sigma_y,
                                int p, bool normalized = true);

/// kappa5 * sum_e A_e B_e^T (s_e K_A) Fsigma_e with the pointwise density Fsigma_e;
/// full-length 2n vector.
Vector adjoint_stress_load(const StressAggregate& aggregate, const Mesh& mesh,
                           const MaterialModel& material, const Vector& phi, const Vector& chi,
                           double kappa5, Quadrature quadrature = Quadrature::Centroid);

/// Pointwise derivative density |Omega| dF/dsigma_e / A_e.
std::vector<Eigen::Vector3d> stress_gradient_density(const StressAggregate& aggregate,
                                                     const Mesh& mesh);

}  // namespace gradtopo
