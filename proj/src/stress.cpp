#include "gradtopo/stress.hpp"

#include <algorithm>
#include <cmath>

namespace gradtopo {

double von_mises(const Eigen::Vector3d& s) {
  const double v = s[0] * s[0] - s[0] * s[1] + s[1] * s[1] + 3.0 * s[2] * s[2];
  return std::sqrt(std::max(v, 0.0));
}

std::vector<double> von_mises(const ElementStress& sigma) {
  std::vector<double> out(sigma.size());
  std::transform(sigma.begin(), sigma.end(), out.begin(),
                 [](const Eigen::Vector3d& s) { return von_mises(s); });
  return out;
}

Eigen::Vector3d von_mises_gradient(const Eigen::Vector3d& s) {
  const double vm = von_mises(s);
  if (vm == 0.0) return Eigen::Vector3d::Zero();
  return Eigen::Vector3d((2.0 * s[0] - s[1]) / (2.0 * vm), (2.0 * s[1] - s[0]) / (2.0 * vm),
                         3.0 * s[2] / vm);
}

StressAggregate pnorm_aggregate(const ElementStress& sigma, const Mesh& mesh, double sigma_y,
                                int p, bool normalized) {
  if (p < 2) throw Error("p-norm exponent must be >= 2");
  if (!(sigma_y > 0.0)) throw Error("yield stress must be > 0");
  if (static_cast<int>(sigma.size()) != mesh.element_count()) {
    throw Error("stress field does not match the mesh");
  }
  StressAggregate agg;
  agg.domain_area = mesh.total_area();
  agg.sigma_e = von_mises(sigma);
  agg.dF_dsigma.assign(sigma.size(), Eigen::Vector3d::Zero());

  const double measure = normalized ? agg.domain_area : 1.0;
  double rmax = 0.0;
  for (double s : agg.sigma_e) rmax = std::max(rmax, s / sigma_y);
  if (rmax == 0.0) {
    agg.sigma_pn = 0.0;
    agg.F_value = 1.0;
    return agg;
  }
  // Scale by the largest ratio so high exponents cannot overflow.
  double sum = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    sum += mesh.element_areas[e] * std::pow(agg.sigma_e[e] / sigma_y / rmax, p);
  }
  const double scaled = sum / measure;
  agg.sigma_pn = rmax * std::pow(scaled, 1.0 / p);
  agg.F_value = (agg.sigma_pn - 1.0) * (agg.sigma_pn - 1.0);

  // d sigma_pn / d r_e = (A_e / measure) (r_e / sigma_pn)^(p-1)
  const double dF_dpn = 2.0 * (agg.sigma_pn - 1.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double r = agg.sigma_e[e] / sigma_y;
    if (r == 0.0) continue;
    const double dpn_dr = mesh.element_areas[e] / measure * std::pow(r / agg.sigma_pn, p - 1);
    agg.dF_dsigma[e] = dF_dpn * dpn_dr / sigma_y * von_mises_gradient(sigma[e]);
  }
  return agg;
}

std::vector<Eigen::Vector3d> stress_gradient_density(const StressAggregate& aggregate,
                                                     const Mesh& mesh) {
  std::vector<Eigen::Vector3d> out(aggregate.dF_dsigma.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = aggregate.domain_area / mesh.element_areas[e] * aggregate.dF_dsigma[e];
  }
  return out;
}

Vector adjoint_stress_load(const StressAggregate& aggregate, const Mesh& mesh,
                           const MaterialModel& material, const Vector& phi, const Vector& chi,
                           double kappa5, Quadrature quadrature) {
  Vector q = Vector::Zero(2 * mesh.node_count());
  if (kappa5 == 0.0) return q;
  const auto geo = element_geometry(mesh);
  const auto factors = element_stiffness_factors(mesh, material, phi, chi, quadrature);
  const auto density = stress_gradient_density(aggregate, mesh);
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (density[e].isZero(0.0)) continue;
    const Eigen::Matrix<double, 6, 1> fe =
        kappa5 * geo[e].area * geo[e].B.transpose() * (factors[e] * (material.base() * density[e]));
    for (int i = 0; i < 3; ++i) {
      q[2 * mesh.elements[e][i]] += fe[2 * i];
      q[2 * mesh.elements[e][i] + 1] += fe[2 * i + 1];
    }
  }
  return q;
}

}  // namespace gradtopo
