#include "gradtopo/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace gradtopo {

namespace {

SparseMatrix selection(int rows, const std::vector<int>& cols) {
  SparseMatrix P(rows, static_cast<int>(cols.size()));
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(cols.size());
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) t.emplace_back(cols[k], k, 1.0);
  P.setFromTriplets(t.begin(), t.end());
  return P;
}

// sum_e A_e sum_q w_q g(phi_q) lambda_k(q), scattered to nodes
template <class G>
Vector integrate_against_shape(const Mesh& mesh, const Vector& phi, G g) {
  const auto& rule = degree5_rule();
  Vector out = Vector::Zero(mesh.node_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements[e];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const double v = l[0] * phi[el[0]] + l[1] * phi[el[1]] + l[2] * phi[el[2]];
      const double w = mesh.element_areas[e] * rule.weights[q] * g(v);
      for (int k = 0; k < 3; ++k) out[el[k]] += w * l[k];
    }
  }
  return out;
}

double integrate_double_well(const Mesh& mesh, const Vector& phi) {
  const auto& rule = degree5_rule();
  double sum = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements[e];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const double v = l[0] * phi[el[0]] + l[1] * phi[el[1]] + l[2] * phi[el[2]];
      sum += mesh.element_areas[e] * rule.weights[q] * double_well(v);
    }
  }
  return sum;
}

RunConfig validated(RunConfig config) {
  require_valid(config);
  return config;
}

}  // namespace

Vector rescale(const Vector& field, const Vector& lower, const Vector& upper) {
  return field.cwiseMax(lower).cwiseMin(upper);
}

Vector rescale(const Vector& field, double lower, double upper) {
  return field.cwiseMax(lower).cwiseMin(upper);
}

Optimizer::Optimizer(RunConfig config)
    : config_(validated(std::move(config))),
      mesh_(build_rect_mesh(config_)),
      material_(MaterialModel::from_config(config_)),
      assembler_(mesh_, material_, DofMap::clamped(mesh_)),
      elastic_solver_(make_spd_solver(config_.solver, config_.solver_tol)),
      mass_(assemble_scalar_mass(mesh_, 1.0)),
      laplacian_(assemble_scalar_stiffness(mesh_, 1.0)),
      volume_row_(assemble_volume_row(mesh_)),
      traction_load_(assemble_traction_load(mesh_, config_.traction)) {
  const int n = mesh_.node_count();
  lower_phi_ = Vector::Zero(n);
  upper_phi_ = Vector::Ones(n);
  std::vector<int> state(n, -1);  // -1 free, 0 void, 1 solid
  for (const auto& box : config_.void_regions) {
    for (int i : locate_region_nodes(mesh_, box)) state[i] = 0;
  }
  for (const auto& box : config_.solid_regions) {
    for (int i : locate_region_nodes(mesh_, box)) {
      if (state[i] == 0) throw ConfigError("domain.void_regions: fixed regions overlap");
      state[i] = 1;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (state[i] < 0) {
      phi_free_.push_back(i);
    } else {
      phi_fixed_.push_back(i);
      phi_fixed_value_.push_back(state[i]);
      lower_phi_[i] = upper_phi_[i] = state[i];
    }
  }
  if (phi_free_.empty()) throw ConfigError("domain: fixed regions cover every node");
  build_phase_solvers(config_.tau);
}

Optimizer::~Optimizer() = default;

double Optimizer::volume_target() const {
  return config_.volume_fraction * mesh_.total_area();
}

double Optimizer::double_well_weight() const {
  return (config_.literal_rhs ? config_.kappa3 : config_.kappa1) / config_.gamma_phi;
}

double Optimizer::l2_norm(const Vector& nodal) const {
  return std::sqrt(std::max(nodal.dot(mass_ * nodal), 0.0));
}

void Optimizer::build_phase_solvers(double tau) {
  tau_ = tau;
  const double g = config_.gamma_phi;
  const double gc = config_.gamma_chi_value();
  phi_matrix_ = (g / tau) * mass_ + (config_.kappa1 * g) * laplacian_;
  const SparseMatrix P = selection(mesh_.node_count(), phi_free_);
  const SparseMatrix A_ff = SparseMatrix(P.transpose() * phi_matrix_ * P);
  const Vector r_f = P.transpose() * volume_row_;
  phi_solver_ = std::make_unique<SaddleSolver>(A_ff, r_f, config_.solver, 1e-12);
  if (!config_.chi_tied_to_phi()) {
    const SparseMatrix A_chi = (gc / tau) * mass_ + (config_.kappa2 * gc) * laplacian_;
    chi_solver_ = make_spd_solver(config_.solver, 1e-12);
    chi_solver_->factorize(A_chi);
  } else {
    chi_solver_.reset();
  }
}

OptimizerState Optimizer::initialize_fields() const {
  const int n = mesh_.node_count();
  OptimizerState s;
  s.phi = Vector::Constant(n, config_.volume_fraction);
  s.chi = Vector::Constant(n, config_.volume_fraction);
  if (config_.perturbation > 0.0) {
    std::mt19937_64 rng(config_.seed);
    std::uniform_real_distribution<double> dist(-config_.perturbation, config_.perturbation);
    for (int i = 0; i < n; ++i) s.phi[i] += dist(rng);
    for (int i = 0; i < n; ++i) s.chi[i] += dist(rng);
  }
  s.phi = rescale(s.phi, lower_phi_, upper_phi_);
  s.chi = config_.chi_tied_to_phi() ? s.phi : rescale(s.chi, Vector::Zero(n), s.phi);
  s.delta_phi = s.delta_chi = std::numeric_limits<double>::infinity();
  return s;
}

Vector Optimizer::solve_elastic(const Vector& load_full) {
  const DofMap& dofs = assembler_.dofs();
  return dofs.expand(elastic_solver_->solve(dofs.restrict(load_full)));
}

void Optimizer::state_solve(OptimizerState& state) {
  const auto factors =
      element_stiffness_factors(mesh_, material_, state.phi, state.chi, config_.quadrature);
  elastic_solver_->factorize(assembler_.assemble(factors));
  const Vector load = traction_load_ + assemble_body_load(mesh_, config_.body_force, state.phi);
  state.u = solve_elastic(load);
  state.sigma = compute_element_stress(mesh_, material_, state.phi, state.chi, state.u,
                                       config_.quadrature);
  state.stress = pnorm_aggregate(state.sigma, mesh_, config_.yield_stress, config_.pnorm_p,
                                 config_.pnorm_normalized);
  const Diagnostics d = diagnostics(state);
  state.compliance = d.compliance;
  state.m_chi = d.m_chi;
  state.objective = d.objective;
}

void Optimizer::adjoint_solve(OptimizerState& state) {
  Vector load = config_.kappa4 * traction_load_ +
                config_.kappa3 * assemble_body_load(mesh_, config_.body_force, state.phi);
  load += adjoint_stress_load(state.stress, mesh_, material_, state.phi, state.chi,
                              config_.kappa5, config_.quadrature);
  state.U = solve_elastic(load);
}

Optimizer::Drive Optimizer::driving_terms(const OptimizerState& state) const {
  const int n = mesh_.node_count();
  const auto dphi = element_factor_gradients(mesh_, material_, state.phi, state.chi,
                                             config_.quadrature, true);
  const auto dchi = element_factor_gradients(mesh_, material_, state.phi, state.chi,
                                             config_.quadrature, false);
  const auto eps_u = element_strains(mesh_, state.u);
  const auto eps_U = element_strains(mesh_, state.U);
  std::vector<Eigen::Vector3d> density;
  if (config_.kappa5 != 0.0) density = stress_gradient_density(state.stress, mesh_);

  Drive d;
  d.phi = Vector::Zero(n);
  d.chi = Vector::Zero(n);
  d.body = Vector::Zero(n);
  const Voigt& KA = material_.base();
  for (int e = 0; e < mesh_.element_count(); ++e) {
    Eigen::Vector3d adj = eps_U[e];
    if (!density.empty()) adj -= config_.kappa5 * density[e];
    const double w = mesh_.element_areas[e] * adj.dot(KA * eps_u[e]);
    const auto& el = mesh_.elements[e];
    for (int k = 0; k < 3; ++k) {
      d.phi[el[k]] += w * dphi[e][k];
      d.chi[el[k]] += w * dchi[e][k];
    }
  }

  // body-force coupling f . (U + kappa3 u), mass-weighted
  const Vec2 f = config_.body_force;
  if (f.x != 0.0 || f.y != 0.0) {
    Vector v(n);
    for (int j = 0; j < n; ++j) {
      v[j] = f.x * (state.U[2 * j] + config_.kappa3 * state.u[2 * j]) +
             f.y * (state.U[2 * j + 1] + config_.kappa3 * state.u[2 * j + 1]);
    }
    d.body = -(mass_ * v);
  }
  return d;
}

ReducedGradient Optimizer::reduced_gradient(const OptimizerState& state) const {
  const Drive d = driving_terms(state);
  const double g = config_.gamma_phi;
  const double gc = config_.gamma_chi_value();
  const Vector wp = integrate_against_shape(mesh_, state.phi, double_well_derivative);
  ReducedGradient grad;
  grad.phi = config_.kappa1 * g * (laplacian_ * state.phi) + double_well_weight() * wp - d.phi -
             d.body;
  grad.chi = config_.kappa2 * gc * (laplacian_ * state.chi) - d.chi;
  return grad;
}

PhaseStep Optimizer::phase_field_step(const OptimizerState& state) {
  const int n = mesh_.node_count();
  const double g = config_.gamma_phi;
  const double gc = config_.gamma_chi_value();
  Drive d = driving_terms(state);
  if (config_.flip_stress_sign) {
    d.phi = -d.phi;
    d.chi = -d.chi;
  }
  const double w_psi = double_well_weight();
  const Vector wp = integrate_against_shape(mesh_, state.phi, double_well_derivative);

  const Vector rhs = (g / tau_) * (mass_ * state.phi) + d.phi + d.body - w_psi * wp;
  Vector phi_fixed = Vector::Zero(n);
  for (std::size_t k = 0; k < phi_fixed_.size(); ++k) phi_fixed[phi_fixed_[k]] = phi_fixed_value_[k];
  const Vector rhs_lifted = rhs - phi_matrix_ * phi_fixed;
  Vector rhs_f(phi_free_.size());
  for (std::size_t k = 0; k < phi_free_.size(); ++k) rhs_f[k] = rhs_lifted[phi_free_[k]];
  const double target = volume_target() - volume_row_.dot(phi_fixed);
  const SaddleSolution sol = phi_solver_->solve(rhs_f, target);

  PhaseStep step;
  step.phi = phi_fixed;
  for (std::size_t k = 0; k < phi_free_.size(); ++k) step.phi[phi_free_[k]] = sol.x[k];
  step.lambda = sol.lambda;
  if (chi_solver_) {
    step.chi = chi_solver_->solve((gc / tau_) * (mass_ * state.chi) + d.chi);
  } else {
    step.chi = step.phi;
  }
  return step;
}

void Optimizer::project(const PhaseStep& step, Vector& phi, Vector& chi) const {
  phi = rescale(step.phi, lower_phi_, upper_phi_);
  chi = chi_solver_ ? rescale(step.chi, Vector::Zero(phi.size()), phi) : phi;
}

Diagnostics Optimizer::diagnostics(const OptimizerState& state) const {
  Diagnostics d;
  const double g = config_.gamma_phi;
  const double gc = config_.gamma_chi_value();
  const Vector body = assemble_body_load(mesh_, config_.body_force, state.phi);
  d.compliance = traction_load_.dot(state.u) + config_.kappa3 * body.dot(state.u);
  d.m_chi = volume_row_.dot(state.chi) / mesh_.total_area();
  d.interface_energy = double_well_weight() * integrate_double_well(mesh_, state.phi) +
                       0.5 * config_.kappa1 * g * state.phi.dot(laplacian_ * state.phi);
  d.chi_gradient_energy = 0.5 * config_.kappa2 * gc * state.chi.dot(laplacian_ * state.chi);
  d.load_work = config_.kappa4 * traction_load_.dot(state.u) + config_.kappa3 * body.dot(state.u);
  d.stress_penalty = config_.kappa5 * mesh_.total_area() * state.stress.F_value;
  d.objective = d.interface_energy + d.chi_gradient_energy + d.load_work + d.stress_penalty;
  return d;
}

double Optimizer::reduced_objective(const Vector& phi, const Vector& chi) {
  OptimizerState s;
  s.phi = phi;
  s.chi = chi;
  state_solve(s);
  return s.objective;
}

RunResult Optimizer::run(const IterationObserver& observer) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  RunResult result;
  OptimizerState state = initialize_fields();
  const double target = volume_target();
  int n = 0;
  while ((state.delta_phi >= config_.tol || state.delta_chi >= config_.tol) &&
         n < config_.max_iter) {
    state_solve(state);
    adjoint_solve(state);
    const double objective = state.objective;

    PhaseStep step;
    Vector phi_new, chi_new;
    for (int attempt = 0;; ++attempt) {
      step = phase_field_step(state);
      project(step, phi_new, chi_new);
      if (!config_.safeguard || attempt == 5) break;
      const double trial = reduced_objective(phi_new, chi_new);
      if (trial <= objective + 0.01 * std::abs(objective)) break;
      build_phase_solvers(tau_ / 2.0);
    }

    IterationRecord rec;
    rec.iter = n + 1;
    rec.objective = objective;
    rec.compliance = state.compliance;
    rec.m_chi = state.m_chi;
    rec.lambda = step.lambda;
    rec.tau = tau_;
    rec.max_von_mises = state.stress.sigma_e.empty()
                            ? 0.0
                            : *std::max_element(state.stress.sigma_e.begin(),
                                                state.stress.sigma_e.end());
    rec.volume_error = std::abs(volume_row_.dot(step.phi) - target) / target;
    rec.volume_drift = std::abs(volume_row_.dot(phi_new) - target) / target;
    if (tau_ != config_.tau) build_phase_solvers(config_.tau);

    state.delta_phi = l2_norm(phi_new - state.phi);
    state.delta_chi = l2_norm(chi_new - state.chi);
    state.phi = std::move(phi_new);
    state.chi = std::move(chi_new);
    state.lambda = step.lambda;
    state.iter = ++n;
    rec.delta_phi = state.delta_phi;
    rec.delta_chi = state.delta_chi;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    result.history.push_back(rec);
    if (observer) observer(state, rec, step);
  }
  result.status = (state.delta_phi < config_.tol && state.delta_chi < config_.tol)
                      ? ExitStatus::Converged
                      : ExitStatus::IterationCap;
  state_solve(state);
  adjoint_solve(state);
  result.state = std::move(state);
  return result;
}

}  // namespace gradtopo
