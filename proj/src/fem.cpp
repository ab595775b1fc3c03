#include "gradtopo/fem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gradtopo {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix scalar_matrix(const Mesh& mesh, double coeff, bool stiffness) {
  const auto geo = element_geometry(mesh);
  std::vector<Triplet> trips;
  trips.reserve(9 * geo.size());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const double area = geo[e].area;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double v;
        if (stiffness) {
          v = area * geo[e].grad.row(a).dot(geo[e].grad.row(b));
        } else {
          v = area / 12.0 * (a == b ? 2.0 : 1.0);
        }
        trips.emplace_back(t[a], t[b], coeff * v);
      }
    }
  }
  SparseMatrix m(mesh.node_count(), mesh.node_count());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

class DirectSolver final : public SpdSolver {
 public:
  void factorize(const SparseMatrix& A) override {
    if (!analyzed_ || A.rows() != rows_ || A.nonZeros() != nnz_) {
      ldlt_.analyzePattern(A);
      analyzed_ = true;
      rows_ = A.rows();
      nnz_ = A.nonZeros();
    }
    ldlt_.factorize(A);
    if (ldlt_.info() != Eigen::Success) {
      throw SolverError("sparse LDL^T factorization failed (matrix not SPD?)");
    }
  }
  Vector solve(const Vector& rhs) override {
    Vector x = ldlt_.solve(rhs);
    if (ldlt_.info() != Eigen::Success) throw SolverError("sparse LDL^T solve failed");
    return x;
  }

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;
  Eigen::Index rows_ = 0;
  Eigen::Index nnz_ = 0;
};

class PcgSolver final : public SpdSolver {
 public:
  explicit PcgSolver(double tol) : tol_(tol) {}
  void factorize(const SparseMatrix& A) override {
    A_ = A;
    if (last_.size() != A.rows()) last_.resize(0);
  }
  Vector solve(const Vector& rhs) override {
    // Warm start from the previous solution of the same size.
    auto report = solve_spd(A_, rhs, tol_, 0, last_.size() == rhs.size() ? &last_ : nullptr);
    last_ = report.x;
    return report.x;
  }

 private:
  double tol_;
  SparseMatrix A_;
  Vector last_;
};

}  // namespace

std::vector<ElementGeometry> element_geometry(const Mesh& mesh) {
  std::vector<ElementGeometry> out(mesh.elements.size());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const Vec2& p0 = mesh.nodes[t[0]];
    const Vec2& p1 = mesh.nodes[t[1]];
    const Vec2& p2 = mesh.nodes[t[2]];
    const double twice_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    ElementGeometry& g = out[e];
    g.area = 0.5 * twice_area;
    const std::array<const Vec2*, 3> p{&p0, &p1, &p2};
    for (int i = 0; i < 3; ++i) {
      const Vec2& pj = *p[(i + 1) % 3];
      const Vec2& pk = *p[(i + 2) % 3];
      g.grad(i, 0) = (pj.y - pk.y) / twice_area;
      g.grad(i, 1) = (pk.x - pj.x) / twice_area;
    }
    g.B.setZero();
    for (int i = 0; i < 3; ++i) {
      g.B(0, 2 * i) = g.grad(i, 0);
      g.B(1, 2 * i + 1) = g.grad(i, 1);
      g.B(2, 2 * i) = g.grad(i, 1);
      g.B(2, 2 * i + 1) = g.grad(i, 0);
    }
  }
  return out;
}

const TriangleRule& centroid_rule() {
  static const TriangleRule rule{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}, {1.0}};
  return rule;
}

const TriangleRule& degree5_rule() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(0.225);
    const double a1 = 0.0597158717897698, b1 = 0.4701420641051151, w1 = 0.1323941527885062;
    const double a2 = 0.7974269853530873, b2 = 0.1012865073234563, w2 = 0.1259391805448271;
    for (auto [a, b, w] : {std::array{a1, b1, w1}, std::array{a2, b2, w2}}) {
      r.points.push_back({a, b, b});
      r.points.push_back({b, a, b});
      r.points.push_back({b, b, a});
      for (int k = 0; k < 3; ++k) r.weights.push_back(w);
    }
    return r;
  }();
  return rule;
}

const TriangleRule& rule_for(Quadrature q) {
  return q == Quadrature::Centroid ? centroid_rule() : degree5_rule();
}

std::vector<double> element_stiffness_factors(const Mesh& mesh, const MaterialModel& material,
                                              const Vector& phi, const Vector& chi,
                                              Quadrature quadrature) {
  const TriangleRule& rule = rule_for(quadrature);
  std::vector<double> s(mesh.elements.size(), 0.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& l = rule.points[q];
      const double p = l[0] * phi[t[0]] + l[1] * phi[t[1]] + l[2] * phi[t[2]];
      const double c = l[0] * chi[t[0]] + l[1] * chi[t[1]] + l[2] * chi[t[2]];
      acc += rule.weights[q] * material.factor(p, c);
    }
    s[e] = acc;
  }
  return s;
}

std::vector<std::array<double, 3>> element_factor_gradients(const Mesh& mesh,
                                                            const MaterialModel& material,
                                                            const Vector& phi, const Vector& chi,
                                                            Quadrature quadrature, bool wrt_phi) {
  const TriangleRule& rule = rule_for(quadrature);
  std::vector<std::array<double, 3>> out(mesh.elements.size(), {0.0, 0.0, 0.0});
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& l = rule.points[q];
      const double p = l[0] * phi[t[0]] + l[1] * phi[t[1]] + l[2] * phi[t[2]];
      const double c = l[0] * chi[t[0]] + l[1] * chi[t[1]] + l[2] * chi[t[2]];
      const double d = wrt_phi ? material.dfactor_dphi(p, c) : material.dfactor_dchi(p, c);
      for (int i = 0; i < 3; ++i) out[e][i] += rule.weights[q] * d * l[i];
    }
  }
  return out;
}

DofMap::DofMap(int dof_count, const std::vector<int>& fixed_dofs) : to_free_(dof_count, 0) {
  for (int d : fixed_dofs) to_free_.at(d) = -1;
  for (int d = 0; d < dof_count; ++d) {
    if (to_free_[d] == -1) continue;
    to_free_[d] = static_cast<int>(free_.size());
    free_.push_back(d);
  }
}

DofMap DofMap::clamped(const Mesh& mesh) {
  std::vector<int> fixed;
  for (int n : mesh.dirichlet_nodes()) {
    fixed.push_back(2 * n);
    fixed.push_back(2 * n + 1);
  }
  return DofMap(2 * mesh.node_count(), fixed);
}

Vector DofMap::restrict(const Vector& full) const {
  Vector r(free_size());
  for (int i = 0; i < free_size(); ++i) r[i] = full[free_[i]];
  return r;
}

Vector DofMap::expand(const Vector& reduced) const {
  Vector f = Vector::Zero(full_size());
  for (int i = 0; i < free_size(); ++i) f[free_[i]] = reduced[i];
  return f;
}

ElasticAssembler::ElasticAssembler(const Mesh& mesh, const MaterialModel& material, DofMap dofs)
    : geometry_(element_geometry(mesh)), dofs_(std::move(dofs)) {
  base_.resize(geometry_.size());
  std::vector<Triplet> trips;
  trips.reserve(36 * geometry_.size());
  std::vector<std::array<int, 6>> gdofs(geometry_.size());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& g = geometry_[e];
    base_[e] = g.area * g.B.transpose() * material.base() * g.B;
    for (int i = 0; i < 3; ++i) {
      gdofs[e][2 * i] = dofs_.free_index(2 * mesh.elements[e][i]);
      gdofs[e][2 * i + 1] = dofs_.free_index(2 * mesh.elements[e][i] + 1);
    }
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        if (gdofs[e][a] >= 0 && gdofs[e][b] >= 0) trips.emplace_back(gdofs[e][a], gdofs[e][b], 0.0);
      }
    }
  }
  pattern_.resize(dofs_.free_size(), dofs_.free_size());
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  slots_.resize(geometry_.size());
  for (std::size_t e = 0; e < geometry_.size(); ++e) {
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        const int row = gdofs[e][a];
        const int col = gdofs[e][b];
        int slot = -1;
        if (row >= 0 && col >= 0) {
          const int* first = inner + outer[col];
          const int* last = inner + outer[col + 1];
          slot = static_cast<int>(std::lower_bound(first, last, row) - inner);
        }
        slots_[e][6 * a + b] = slot;
      }
    }
  }
}

SparseMatrix ElasticAssembler::assemble(const std::vector<double>& element_factors) const {
  SparseMatrix K = pattern_;
  double* values = K.valuePtr();
  std::fill(values, values + K.nonZeros(), 0.0);
  for (std::size_t e = 0; e < geometry_.size(); ++e) {
    const double s = element_factors[e];
    const auto& Ke = base_[e];
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        const int slot = slots_[e][6 * a + b];
        if (slot >= 0) values[slot] += s * Ke(a, b);
      }
    }
  }
  return K;
}

SparseMatrix assemble_elastic_stiffness(const Mesh& mesh, const MaterialModel& material,
                                        const Vector& phi, const Vector& chi,
                                        Quadrature quadrature) {
  ElasticAssembler assembler(mesh, material, DofMap(2 * mesh.node_count(), {}));
  return assembler.assemble(element_stiffness_factors(mesh, material, phi, chi, quadrature));
}

Vector assemble_traction_load(const Mesh& mesh, const Vec2& traction) {
  Vector f = Vector::Zero(2 * mesh.node_count());
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.tag != BoundaryTag::Neumann) continue;
    const int na = edge.nodes[0];
    const int nb = edge.nodes[1];
    const double ya = mesh.nodes[na].y;
    const double yb = mesh.nodes[nb].y;
    const double lo = std::max(std::min(ya, yb), mesh.traction_y0);
    const double hi = std::min(std::max(ya, yb), mesh.traction_y1);
    if (!(hi > lo)) continue;
    // Exact integral of the linear hat over [lo, hi]: length times midpoint value.
    const double mid = 0.5 * (lo + hi);
    const double wa = (hi - lo) * (yb - mid) / (yb - ya);
    const double wb = (hi - lo) * (mid - ya) / (yb - ya);
    f[2 * na] += wa * traction.x;
    f[2 * na + 1] += wa * traction.y;
    f[2 * nb] += wb * traction.x;
    f[2 * nb + 1] += wb * traction.y;
  }
  return f;
}

Vector assemble_body_load(const Mesh& mesh, const Vec2& body_force, const Vector& phi) {
  Vector f = Vector::Zero(2 * mesh.node_count());
  if (body_force.x == 0.0 && body_force.y == 0.0) return f;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const double area = mesh.element_areas[e];
    const double sum = phi[t[0]] + phi[t[1]] + phi[t[2]];
    for (int a = 0; a < 3; ++a) {
      // (A/12) * (2 phi_a + sum of the other two)
      const double w = area / 12.0 * (phi[t[a]] + sum);
      f[2 * t[a]] += w * body_force.x;
      f[2 * t[a] + 1] += w * body_force.y;
    }
  }
  return f;
}

Vector assemble_load(const Mesh& mesh, const RunConfig& config, const Vector& phi) {
  return assemble_traction_load(mesh, config.traction) +
         assemble_body_load(mesh, config.body_force, phi);
}

SparseMatrix assemble_scalar_mass(const Mesh& mesh, double coeff) {
  return scalar_matrix(mesh, coeff, false);
}

SparseMatrix assemble_scalar_stiffness(const Mesh& mesh, double coeff) {
  return scalar_matrix(mesh, coeff, true);
}

Vector assemble_volume_row(const Mesh& mesh) {
  Vector r = Vector::Zero(mesh.node_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int n : mesh.elements[e]) r[n] += mesh.element_areas[e] / 3.0;
  }
  return r;
}

std::vector<Eigen::Vector3d> element_strains(const Mesh& mesh, const Vector& u) {
  const auto geo = element_geometry(mesh);
  std::vector<Eigen::Vector3d> out(geo.size());
  for (int e = 0; e < mesh.element_count(); ++e) {
    Eigen::Matrix<double, 6, 1> ue;
    for (int i = 0; i < 3; ++i) {
      ue[2 * i] = u[2 * mesh.elements[e][i]];
      ue[2 * i + 1] = u[2 * mesh.elements[e][i] + 1];
    }
    out[e] = geo[e].B * ue;
  }
  return out;
}

ElementStress compute_element_stress(const Mesh& mesh, const MaterialModel& material,
                                     const Vector& phi, const Vector& chi, const Vector& u,
                                     Quadrature quadrature) {
  const auto strains = element_strains(mesh, u);
  const auto factors = element_stiffness_factors(mesh, material, phi, chi, quadrature);
  ElementStress sigma(strains.size());
  for (std::size_t e = 0; e < strains.size(); ++e) {
    sigma[e] = factors[e] * (material.base() * strains[e]);
  }
  return sigma;
}

SolveReport solve_spd(const SparseMatrix& A, const Vector& rhs, double tol, int max_iter,
                      const Vector* initial_guess) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || rhs.size() != n) throw SolverError("solve_spd: dimension mismatch");
  if (max_iter <= 0) max_iter = std::max<int>(1000, 20 * static_cast<int>(n));
  SolveReport rep;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    rep.x = Vector::Zero(n);
    return rep;
  }
  Vector diag = A.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) throw SolverError("solve_spd: non-positive diagonal entry");
  }
  const Vector inv_diag = diag.cwiseInverse();

  Vector x = initial_guess ? *initial_guess : Vector::Zero(n);
  Vector r = rhs - A * x;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double res = r.norm() / bnorm;
  int it = 0;
  while (res > tol && it < max_iter) {
    const Vector Ap = A * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw SolverError("solve_spd: matrix is not positive definite");
    const double alpha = rz / pAp;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    res = r.norm() / bnorm;
    ++it;
  }
  if (res > tol) {
    // The recursive residual can drift; confirm with the true one.
    res = (rhs - A * x).norm() / bnorm;
    if (res > tol) {
      std::ostringstream msg;
      msg << "conjugate gradients did not converge: relative residual " << res << " after "
          << it << " iterations (target " << tol << ")";
      throw SolverError(msg.str());
    }
  }
  rep.x = std::move(x);
  rep.iterations = it;
  rep.relative_residual = res;
  return rep;
}

std::unique_ptr<SpdSolver> make_spd_solver(LinearBackend backend, double tol) {
  if (backend == LinearBackend::Direct) return std::make_unique<DirectSolver>();
  return std::make_unique<PcgSolver>(tol);
}

SaddleSolution solve_saddle(const SparseMatrix& A, const Vector& r, const Vector& rhs,
                            double target, double tol) {
  const Vector a_inv_rhs = solve_spd(A, rhs, tol).x;
  const Vector a_inv_r = solve_spd(A, r, tol).x;
  const double schur = r.dot(a_inv_r);
  if (!(std::abs(schur) > 1e-300) || !std::isfinite(schur)) {
    throw SolverError("saddle-point breakdown: r A^-1 r^T is zero");
  }
  SaddleSolution s;
  s.lambda = (r.dot(a_inv_rhs) - target) / schur;
  s.x = a_inv_rhs - s.lambda * a_inv_r;
  return s;
}

SaddleSolver::SaddleSolver(const SparseMatrix& A, Vector r, LinearBackend backend, double tol)
    : solver_(make_spd_solver(backend, tol)), r_(std::move(r)) {
  solver_->factorize(A);
  a_inv_r_ = solver_->solve(r_);
  schur_ = r_.dot(a_inv_r_);
  if (!(std::abs(schur_) > 1e-300) || !std::isfinite(schur_)) {
    throw SolverError("saddle-point breakdown: r A^-1 r^T is zero");
  }
}

SaddleSolution SaddleSolver::solve(const Vector& rhs, double target) {
  const Vector a_inv_rhs = solver_->solve(rhs);
  SaddleSolution s;
  s.lambda = (r_.dot(a_inv_rhs) - target) / schur_;
  s.x = a_inv_rhs - s.lambda * a_inv_r_;
  return s;
}

}  // namespace gradtopo
