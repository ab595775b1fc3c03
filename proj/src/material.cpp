#include "gradtopo/material.hpp"

#include <algorithm>

namespace gradtopo {

namespace {
double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

Voigt plane_stress_matrix(double E, double nu) {
  const double c = E / (1.0 - nu * nu);
  Voigt d;
  d << c, c * nu, 0.0,
       c * nu, c, 0.0,
       0.0, 0.0, c * 0.5 * (1.0 - nu);
  return d;
}

MaterialModel::MaterialModel(double youngs_modulus, double poisson, double beta, double gamma,
                             bool literal_km)
    : base_(plane_stress_matrix(youngs_modulus, poisson)),
      beta_(beta),
      gamma_(gamma),
      literal_km_(literal_km) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("material.beta must be in (0,1]");
  if (!(gamma > 0.0)) throw ConfigError("material.gamma_phi must be > 0");
}

MaterialModel MaterialModel::from_config(const RunConfig& c) {
  return MaterialModel(c.youngs_modulus, c.poisson, c.beta, c.gamma_phi, c.literal_km);
}

double MaterialModel::micro_factor(double chi) const {
  const double x = clamp01(chi);
  return literal_km_ ? x + (1.0 - x) / beta_ : x + beta_ * (1.0 - x);
}

double MaterialModel::micro_factor_derivative() const {
  return literal_km_ ? 1.0 - 1.0 / beta_ : 1.0 - beta_;
}

double MaterialModel::factor(double phi, double chi) const {
  const double p = clamp01(phi);
  const double q = 1.0 - p;
  return (p * p * p + gamma_ * gamma_ * q * q * q) * micro_factor(chi);
}

double MaterialModel::dfactor_dphi(double phi, double chi) const {
  const double p = clamp01(phi);
  const double q = 1.0 - p;
  return (3.0 * p * p - 3.0 * gamma_ * gamma_ * q * q) * micro_factor(chi);
}

double MaterialModel::dfactor_dchi(double phi, double /*chi*/) const {
  const double p = clamp01(phi);
  const double q = 1.0 - p;
  return (p * p * p + gamma_ * gamma_ * q * q * q) * micro_factor_derivative();
}

}  // namespace gradtopo
