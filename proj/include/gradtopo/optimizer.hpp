#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gradtopo/config.hpp"
#include "gradtopo/fem.hpp"
#include "gradtopo/material.hpp"
#include "gradtopo/mesh.hpp"
#include "gradtopo/stress.hpp"

namespace gradtopo {

/// Iterate bundle of the staggered scheme.
struct OptimizerState {
  int iter = 0;
  Vector phi;  // nodal
  Vector chi;  // nodal
  double lambda = 0.0;
  Vector u;  // full displacement, 2n
  Vector U;  // full adjoint, 2n
  ElementStress sigma;
  StressAggregate stress;
  double delta_phi = 0.0;
  double delta_chi = 0.0;
  double compliance = 0.0;
  double m_chi = 0.0;
  double objective = 0.0;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double compliance = 0.0;
  double m_chi = 0.0;
  double delta_phi = 0.0;
  double delta_chi = 0.0;
  double lambda = 0.0;
  double max_von_mises = 0.0;
  /// |int phi* - m|Omega|| / (m|Omega|) of the constrained solve, before clamping.
  double volume_error = 0.0;
  /// Same measure after clamping.
  double volume_drift = 0.0;
  double tau = 0.0;
  double wall_time = 0.0;  // seconds since run start
};

enum class ExitStatus { Converged, IterationCap };

/// Unprojected output of the phase-field system.
struct PhaseStep {
  Vector phi;
  Vector chi;
  double lambda = 0.0;
};

struct Diagnostics {
  double compliance = 0.0;
  double m_chi = 0.0;
  double objective = 0.0;
  // objective split
  double interface_energy = 0.0;
  double chi_gradient_energy = 0.0;
  double load_work = 0.0;
  double stress_penalty = 0.0;
};

/// Derivatives of the reduced objective j(phi, chi) wrt the nodal values.
struct ReducedGradient {
  Vector phi;
  Vector chi;
};

struct RunResult {
  OptimizerState state;  // final fields with a fresh state/adjoint solve
  std::vector<IterationRecord> history;
  ExitStatus status = ExitStatus::IterationCap;
};

using IterationObserver =
    std::function<void(const OptimizerState&, const IterationRecord&, const PhaseStep&)>;

/// Entrywise clamp to [lower_i, upper_i].
Vector rescale(const Vector& field, const Vector& lower, const Vector& upper);
Vector rescale(const Vector& field, double lower, double upper);

/// Staggered Allen-Cahn scheme: state solve, adjoint solve, constrained
/// phase-field solve, nodal projection.
class Optimizer {
 public:
  explicit Optimizer(RunConfig config);
  ~Optimizer();
  Optimizer(const Optimizer&) = delete;
  Optimizer& operator=(const Optimizer&) = delete;

  const RunConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }
  const MaterialModel& material() const { return material_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& laplacian() const { return laplacian_; }
  const Vector& volume_row() const { return volume_row_; }
  double volume_target() const;
  /// Coefficient of the double-well integral in the objective and the flow:
  /// kappa1 / gamma, or kappa3 / gamma with literal_rhs.
  double double_well_weight() const;
  /// True L2 norm of a nodal P1 field.
  double l2_norm(const Vector& nodal) const;

  OptimizerState initialize_fields() const;

  /// Solves K^uu u = f for the current (phi, chi); refreshes sigma and the p-norm data.
  void state_solve(OptimizerState& state);
  /// Solves K U = kappa4 g + kappa3 phi f + q^sigma with the current state.
  void adjoint_solve(OptimizerState& state);
  /// One implicit gradient-flow step under the volume constraint (no clamping).
  PhaseStep phase_field_step(const OptimizerState& state);
  Diagnostics diagnostics(const OptimizerState& state) const;

  /// Needs state_solve and adjoint_solve on the same fields.
  ReducedGradient reduced_gradient(const OptimizerState& state) const;
  /// Solves the state for (phi, chi) and returns the discrete objective.
  double reduced_objective(const Vector& phi, const Vector& chi);

  RunResult run(const IterationObserver& observer = {});

 private:
  // Negative partial derivatives of the objective: mechanical parts and the
  // body-force part of the phi derivative.
  struct Drive {
    Vector phi;
    Vector chi;
    Vector body;
  };
  Drive driving_terms(const OptimizerState& state) const;
  void build_phase_solvers(double tau);
  Vector solve_elastic(const Vector& load_full);
  void project(const PhaseStep& step, Vector& phi, Vector& chi) const;

  RunConfig config_;
  Mesh mesh_;
  MaterialModel material_;
  ElasticAssembler assembler_;
  std::unique_ptr<SpdSolver> elastic_solver_;
  SparseMatrix mass_;
  SparseMatrix laplacian_;
  Vector volume_row_;
  Vector traction_load_;
  double tau_ = 0.0;

  // phi nodes fixed by void/solid regions
  std::vector<int> phi_fixed_;
  std::vector<double> phi_fixed_value_;
  std::vector<int> phi_free_;
  Vector lower_phi_;
  Vector upper_phi_;

  std::unique_ptr<SaddleSolver> phi_solver_;
  SparseMatrix phi_matrix_;  // full (gamma/tau) M + kappa1 gamma L
  std::unique_ptr<SpdSolver> chi_solver_;
};

}  // namespace gradtopo
