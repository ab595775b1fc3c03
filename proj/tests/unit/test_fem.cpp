#include <gtest/gtest.h>

#include <random>
#include <set>

#include <Eigen/Dense>

#include "gradtopo/fem.hpp"

using namespace gradtopo;

namespace {

Vector linear_field(const Mesh& m, double a, double b, double c, double d, double e, double f) {
  Vector u(2 * m.node_count());
  for (int n = 0; n < m.node_count(); ++n) {
    const auto& p = m.nodes[n];
    u[2 * n] = a + b * p.x + c * p.y;
    u[2 * n + 1] = d + e * p.x + f * p.y;
  }
  return u;
}

std::vector<int> boundary_nodes(const Mesh& m) {
  std::set<int> s;
  for (const auto& e : m.boundary_edges) s.insert(e.nodes.begin(), e.nodes.end());
  return {s.begin(), s.end()};
}

// Reference triangle integral of a monomial x^i y^j: i! j! / (i + j + 2)!.
double monomial_integral(int i, int j) {
  auto fact = [](int n) {
    double r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
  };
  return fact(i) * fact(j) / fact(i + j + 2);
}

}  // namespace

TEST(Fem, PatchTestReproducesLinearField) {
  const Mesh m = build_rect_mesh(3.0, 2.0, 6, 5);
  const MaterialModel mat(12500.0, 0.25, 1.0, 0.01);
  const Vector phi = Vector::Ones(m.node_count());
  const SparseMatrix K = assemble_elastic_stiffness(m, mat, phi, phi);
  const Vector exact = linear_field(m, 0.1, 1e-3, -2e-3, -0.05, 4e-3, 5e-4);

  std::vector<int> fixed;
  for (int n : boundary_nodes(m)) {
    fixed.push_back(2 * n);
    fixed.push_back(2 * n + 1);
  }
  const DofMap dofs(2 * m.node_count(), fixed);
  Vector prescribed = exact;
  for (int d = 0; d < dofs.full_size(); ++d) {
    if (dofs.free_index(d) >= 0) prescribed[d] = 0.0;
  }
  const Vector rhs_full = -(K * prescribed);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < K.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(K, k); it; ++it) {
      const int r = dofs.free_index(static_cast<int>(it.row()));
      const int c = dofs.free_index(static_cast<int>(it.col()));
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix Kff(dofs.free_size(), dofs.free_size());
  Kff.setFromTriplets(trip.begin(), trip.end());
  auto solver = make_spd_solver(LinearBackend::Direct);
  solver->factorize(Kff);
  const Vector u = dofs.expand(solver->solve(dofs.restrict(rhs_full))) + prescribed;
  EXPECT_LE((u - exact).cwiseAbs().maxCoeff(), 1e-10);

  const auto stress = compute_element_stress(m, mat, phi, phi, u);
  const Eigen::Vector3d eps(1e-3, 5e-4, -2e-3 + 4e-3);
  const Eigen::Vector3d sigma = mat.base() * eps;
  for (const auto& s : stress) EXPECT_LE((s - sigma).norm(), 1e-9 * sigma.norm());
}

TEST(Fem, RigidMotionsAreInTheNullSpace) {
  const Mesh m = build_rect_mesh(2.0, 1.0, 4, 3);
  const MaterialModel mat(1000.0, 0.3, 0.5, 0.1);
  Vector phi(m.node_count()), chi(m.node_count());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < m.node_count(); ++i) {
    phi[i] = U(rng);
    chi[i] = U(rng) * phi[i];
  }
  const SparseMatrix K = assemble_elastic_stiffness(m, mat, phi, chi, Quadrature::Exact);
  for (const Vector& r : {linear_field(m, 1, 0, 0, 0, 0, 0), linear_field(m, 0, 0, 0, 1, 0, 0),
                          linear_field(m, 0, 0, -1, 0, 1, 0)}) {
    EXPECT_LE((K * r).norm(), 1e-10 * K.norm());
  }
  EXPECT_LE((Eigen::MatrixXd(K) - Eigen::MatrixXd(K).transpose()).norm(), 1e-12 * K.norm());
}

TEST(Fem, QuadratureRulesIntegratePolynomials) {
  for (const TriangleRule* rule : {&degree5_rule(), &centroid_rule()}) {
    const int degree = rule == &degree5_rule() ? 5 : 1;
    double wsum = 0;
    for (double w : rule->weights) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-15);
    for (int i = 0; i <= degree; ++i) {
      for (int j = 0; i + j <= degree; ++j) {
        double q = 0;
        for (std::size_t k = 0; k < rule->points.size(); ++k) {
          const auto& b = rule->points[k];
          q += rule->weights[k] * std::pow(b[1], i) * std::pow(b[2], j);
        }
        EXPECT_NEAR(0.5 * q, monomial_integral(i, j), 1e-14) << i << "," << j;
      }
    }
  }
}

TEST(Fem, ExactFactorMatchesFineSampling) {
  const Mesh m = build_rect_mesh(1.0, 1.0, 1, 1);
  const MaterialModel mat(1.0, 0.3, 0.2, 0.1);
  Vector phi(4), chi(4);
  phi << 0.1, 0.9, 0.6, 0.3;
  chi << 0.05, 0.2, 0.6, 0.1;
  const auto s = element_stiffness_factors(m, mat, phi, chi, Quadrature::Exact);
  for (int e = 0; e < 2; ++e) {
    const auto& t = m.elements[e];
    // equal-area subdivision into N^2 triangles, one centroid sample each
    auto sample = [&](double l1, double l2) {
      const double l0 = 1 - l1 - l2;
      return mat.factor(l0 * phi[t[0]] + l1 * phi[t[1]] + l2 * phi[t[2]],
                        l0 * chi[t[0]] + l1 * chi[t[1]] + l2 * chi[t[2]]);
    };
    double sum = 0;
    int count = 0;
    const int N = 400;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; i + j < N; ++j) {
        sum += sample((i + 1.0 / 3.0) / N, (j + 1.0 / 3.0) / N);
        ++count;
        if (i + j < N - 1) {
          sum += sample((i + 2.0 / 3.0) / N, (j + 2.0 / 3.0) / N);
          ++count;
        }
      }
    }
    EXPECT_NEAR(s[e], sum / count, 1e-4 * s[e]);
  }
}

TEST(Fem, FactorGradientsMatchFiniteDifferences) {
  const Mesh m = build_rect_mesh(2.0, 1.0, 2, 1);
  const MaterialModel mat(1.0, 0.3, 0.2, 0.1);
  Vector phi(m.node_count()), chi(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) {
    phi[i] = 0.2 + 0.1 * i;
    chi[i] = 0.5 * phi[i];
  }
  for (Quadrature q : {Quadrature::Centroid, Quadrature::Exact}) {
    for (bool wrt_phi : {true, false}) {
      const auto g = element_factor_gradients(m, mat, phi, chi, q, wrt_phi);
      for (int e = 0; e < m.element_count(); ++e) {
        for (int k = 0; k < 3; ++k) {
          const int n = m.elements[e][k];
          Vector p = phi, c = chi;
          Vector& v = wrt_phi ? p : c;
          const double h = 1e-6;
          v[n] += h;
          const double up = element_stiffness_factors(m, mat, p, c, q)[e];
          v[n] -= 2 * h;
          const double dn = element_stiffness_factors(m, mat, p, c, q)[e];
          EXPECT_NEAR(g[e][k], (up - dn) / (2 * h), 1e-8);
        }
      }
    }
  }
}

TEST(Fem, ScalarMatricesIntegrateExactly) {
  const Mesh m = build_rect_mesh(3.0, 2.0, 5, 4);
  const SparseMatrix M = assemble_scalar_mass(m, 2.0);
  const SparseMatrix L = assemble_scalar_stiffness(m, 1.0);
  const Vector r = assemble_volume_row(m);
  const Vector one = Vector::Ones(m.node_count());
  Vector x(m.node_count()), y(m.node_count());
  for (int n = 0; n < m.node_count(); ++n) {
    x[n] = m.nodes[n].x;
    y[n] = m.nodes[n].y;
  }
  EXPECT_NEAR(one.dot(M * one), 2.0 * 6.0, 1e-12);
  EXPECT_NEAR(x.dot(M * x), 2.0 * 2.0 * 9.0, 1e-11);  // 2 * int x^2 = 2 * (27/3) * 2
  EXPECT_NEAR((L * one).norm(), 0.0, 1e-12);
  EXPECT_NEAR(x.dot(L * x), 6.0, 1e-12);
  EXPECT_NEAR(x.dot(L * y), 0.0, 1e-12);
  EXPECT_NEAR(r.dot(one), 6.0, 1e-12);
  EXPECT_NEAR(r.dot(x), 9.0, 1e-12);
  EXPECT_NEAR((M * one - 2.0 * r).norm(), 0.0, 1e-12);
}

TEST(Fem, TractionLoadSumsToResultant) {
  RunConfig c = RunConfig::cantilever();
  c.nx = 20;
  c.ny = 10;
  const Mesh m = build_rect_mesh(c);
  const Vector f = assemble_traction_load(m, c.traction);
  double fx = 0, fy = 0;
  for (int n = 0; n < m.node_count(); ++n) {
    fx += f[2 * n];
    fy += f[2 * n + 1];
    if (f[2 * n + 1] != 0.0) EXPECT_EQ(m.nodes[n].x, 200.0);
  }
  EXPECT_NEAR(fx, 0.0, 1e-12);
  EXPECT_NEAR(fy, -600.0 * 10.0, 1e-9);
}

TEST(Fem, BodyLoadIsPhiWeighted) {
  const Mesh m = build_rect_mesh(2.0, 1.0, 3, 2);
  Vector phi(m.node_count());
  for (int n = 0; n < m.node_count(); ++n) phi[n] = m.nodes[n].x / 2.0;
  const Vector b = assemble_body_load(m, {0.0, -3.0}, phi);
  double fy = 0;
  for (int n = 0; n < m.node_count(); ++n) fy += b[2 * n + 1];
  EXPECT_NEAR(fy, -3.0 * 1.0, 1e-12);  // -3 * int x/2 over [0,2]x[0,1]
}

TEST(Fem, PcgReachesTolerance) {
  RunConfig c = RunConfig::cantilever();
  c.nx = 40;
  c.ny = 20;
  const Mesh m = build_rect_mesh(c);
  const MaterialModel mat = MaterialModel::from_config(c);
  Vector phi = Vector::Constant(m.node_count(), 0.8);
  ElasticAssembler assembler(m, mat, DofMap::clamped(m));
  const SparseMatrix K =
      assembler.assemble(element_stiffness_factors(m, mat, phi, phi, Quadrature::Centroid));
  const Vector rhs = assembler.dofs().restrict(assemble_traction_load(m, c.traction));
  const SolveReport rep = solve_spd(K, rhs, 1e-10);
  EXPECT_LE((K * rep.x - rhs).norm() / rhs.norm(), 1e-10);
  auto direct = make_spd_solver(LinearBackend::Direct);
  direct->factorize(K);
  const Vector xd = direct->solve(rhs);
  EXPECT_LE((xd - rep.x).norm() / xd.norm(), 1e-6);
  auto pcg = make_spd_solver(LinearBackend::Pcg, 1e-12);
  pcg->factorize(K);
  EXPECT_LE((pcg->solve(rhs) - xd).norm() / xd.norm(), 1e-8);
}

TEST(Fem, PcgFailureThrows) {
  SparseMatrix A(3, 3);
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = 1e6;
  A.insert(2, 2) = 1e-6;
  A.insert(0, 2) = 0.5;
  A.insert(2, 0) = 0.5;  // indefinite
  EXPECT_THROW(solve_spd(A, Vector::Ones(3), 1e-14, 3), SolverError);
}

TEST(Fem, SaddleMatchesDenseKkt) {
  Eigen::Matrix3d A;
  A << 4, -1, 0,
      -1, 4, -1,
       0, -1, 3;
  const Eigen::Vector3d r(0.25, 0.5, 0.25), rhs(1.0, -2.0, 0.5);
  const double target = 0.3;
  Eigen::Matrix4d kkt = Eigen::Matrix4d::Zero();
  kkt.topLeftCorner<3, 3>() = A;
  kkt.block<3, 1>(0, 3) = r;
  kkt.block<1, 3>(3, 0) = r.transpose();
  Eigen::Vector4d b;
  b << rhs, target;
  const Eigen::Vector4d ref = kkt.fullPivLu().solve(b);

  const SparseMatrix As = A.sparseView();
  const SaddleSolution s = solve_saddle(As, r, rhs, target);
  EXPECT_LE((s.x - ref.head<3>()).norm(), 1e-13);
  EXPECT_NEAR(s.lambda, ref[3], 1e-13);
  EXPECT_NEAR(r.dot(s.x), target, 1e-14);

  for (LinearBackend be : {LinearBackend::Direct, LinearBackend::Pcg}) {
    SaddleSolver solver(As, r, be, 1e-14);
    const SaddleSolution t = solver.solve(rhs, target);
    EXPECT_LE((t.x - ref.head<3>()).norm(), 1e-11);
    EXPECT_NEAR(t.lambda, ref[3], 1e-11);
  }
}

TEST(Fem, DofMapRoundTrip) {
  const DofMap d(6, {0, 3});
  EXPECT_EQ(d.free_size(), 4);
  EXPECT_EQ(d.free_index(0), -1);
  EXPECT_EQ(d.free_index(1), 0);
  Vector full(6);
  full << 1, 2, 3, 4, 5, 6;
  const Vector red = d.restrict(full);
  EXPECT_EQ(red, (Vector(4) << 2, 3, 5, 6).finished());
  EXPECT_EQ(d.expand(red), (Vector(6) << 0, 2, 3, 0, 5, 6).finished());
}
