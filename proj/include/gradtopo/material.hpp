#pragma once

#include <Eigen/Dense>

#include "gradtopo/config.hpp"

namespace gradtopo {

/// 3x3 plane-stress matrix acting on (e11, e22, 2 e12) and returning (s11, s22, s12).
using Voigt = Eigen::Matrix3d;

/// Plane-stress isotropic elasticity matrix [MPa].
Voigt plane_stress_matrix(double youngs_modulus, double poisson);

/// Graded interpolation K(phi, chi) = K_M(chi) phi^3 + gamma^2 K_M(chi) (1 - phi)^3.
///
/// K_M(chi) = K_A (chi + beta (1 - chi)) by default, so chi = 1 is the full base
/// material and chi = 0 keeps a beta fraction of it. With literal_km the micro
/// interpolation is K_A (chi + (1 - chi) / beta). Every value is a scalar multiple
/// of K_A, which the assembly code exploits through the *_factor accessors.
/// Inputs are clamped to [0, 1] before evaluation.
class MaterialModel {
 public:
  MaterialModel(double youngs_modulus, double poisson, double beta, double gamma,
                bool literal_km = false);
  static MaterialModel from_config(const RunConfig& config);

  const Voigt& base() const { return base_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  bool literal_km() const { return literal_km_; }

  /// Micro-scale factor c(chi), K_M = c(chi) K_A.
  double micro_factor(double chi) const;
  double micro_factor_derivative() const;

  double factor(double phi, double chi) const;
  double dfactor_dphi(double phi, double chi) const;
  double dfactor_dchi(double phi, double chi) const;

  Voigt K(double phi, double chi) const { return factor(phi, chi) * base_; }
  Voigt dK_dphi(double phi, double chi) const { return dfactor_dphi(phi, chi) * base_; }
  Voigt dK_dchi(double phi, double chi) const { return dfactor_dchi(phi, chi) * base_; }

 private:
  Voigt base_;
  double beta_;
  double gamma_;
  bool literal_km_;
};

/// Double-well potential (phi - phi^2)^2 and its derivative.
inline double double_well(double phi) {
  const double s = phi - phi * phi;
  return s * s;
}
inline double double_well_derivative(double phi) {
  return 2.0 * (phi - phi * phi) * (1.0 - 2.0 * phi);
}

}  // namespace gradtopo
