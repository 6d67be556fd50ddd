#include <doctest.h>

#include <cmath>
#include <random>

#include "consflux/flow.hpp"
#include "consflux/harness.hpp"
#include "oracles.hpp"

using namespace consflux;

namespace {

FlowProblem parabola(const Mesh& mesh) {
  FlowProblem fp;
  fp.permeability = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  fp.source = [](double, Point) { return 2.0; };
  fp.dirichlet = [](double, Point x) { return 1.0 - x.x * x.x; };
  return fp;
}

// energy error of the manufactured parabolic case at t = 0.1
double manufactured_energy(int n) {
  const Mesh mesh = build_cartesian(n, n, {}, {FaceMarker::Dirichlet, FaceMarker::Dirichlet,
                                               FaceMarker::Dirichlet, FaceMarker::Dirichlet});
  const FlowProblem fp = analytic_flow_problem(mesh);
  const double h = 1.0 / n;
  const double dt = 0.8 * h * h;
  const int steps = static_cast<int>(std::lround(0.1 / dt));
  NodalField p = interpolate(mesh, fp.initial, 0.0);
  for (int k = 1; k <= steps; ++k) p = advance_timestep(mesh, fp, DirichletMode::Strong, p, k * dt, dt);
  const auto e = compute_errors(
      mesh, p, [](double t, Point x) { return analytic_case(t, x.x, x.y).p; },
      [](double t, Point x) { return Vec2{-analytic_case(t, x.x, x.y).u.x,
                                          -analytic_case(t, x.x, x.y).u.y}; },
      fp.permeability, steps * dt);
  return e.energy;
}

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("parabola is nodally exact on Cartesian grids") {
  for (auto [nx, ny] : {std::pair{4, 1}, std::pair{7, 3}, std::pair{16, 16}}) {
    const Mesh mesh = build_cartesian(nx, ny);
    const auto fp = parabola(mesh);
    for (auto mode : {DirichletMode::Strong, DirichletMode::Recovery}) {
      const auto p = solve_stationary(mesh, fp, mode);
      for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const double x = mesh.nodes()[i].x;
        CHECK(p[i] == doctest::Approx(1.0 - x * x).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("constant Dirichlet data gives a constant field") {
  const Mesh mesh = distort(build_cartesian(6, 6, {}, {FaceMarker::Dirichlet, FaceMarker::Dirichlet,
                                                       FaceMarker::Dirichlet, FaceMarker::Dirichlet}),
                            0.3, 1);
  FlowProblem fp;
  fp.permeability = PermeabilityField::uniform(mesh.num_elements(), 2.5);
  fp.dirichlet = [](double, Point) { return 3.0; };
  for (auto mode : {DirichletMode::Strong, DirichletMode::Weak, DirichletMode::Recovery}) {
    const auto p = solve_stationary(mesh, fp, mode);
    for (double v : p) CHECK(v == doctest::Approx(3.0).epsilon(1e-10));
  }
}

TEST_CASE("weak mode approaches strong values as the penalty grows") {
  const Mesh mesh = build_cartesian(8, 8);
  auto fp = parabola(mesh);
  const auto strong = solve_stationary(mesh, fp, DirichletMode::Strong);
  double last = 1.0;
  for (double sigma : {1e2, 1e4, 1e6}) {
    fp.sigma = sigma;
    const auto weak = solve_stationary(mesh, fp, DirichletMode::Weak);
    double gap = 0.0;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      const double x = mesh.nodes()[i].x;
      if (x == 0.0 || x == 1.0) gap = std::max(gap, std::abs(weak[i] - (1.0 - x * x)));
    }
    CHECK(gap <= 10.0 / sigma);
    CHECK(gap < last);
    last = gap;
  }
}

TEST_CASE("hanging nodes carry their constrained values") {
  const Mesh mesh = refine_cells(build_cartesian(4, 4), {5, 6, 9});
  REQUIRE_FALSE(mesh.constraints().empty());
  const auto p = solve_stationary(mesh, parabola(mesh), DirichletMode::Strong);
  for (const auto& c : mesh.constraints()) {
    const double v = c.weights[0] * p[static_cast<std::size_t>(c.parents[0])] +
                     c.weights[1] * p[static_cast<std::size_t>(c.parents[1])];
    CHECK(std::abs(p[static_cast<std::size_t>(c.node)] - v) <= 1e-12);
  }
}

TEST_CASE("pure Neumann solution has zero mean") {
  const SideMarkers neumann{FaceMarker::Neumann, FaceMarker::Neumann, FaceMarker::Neumann,
                            FaceMarker::Neumann};
  const Mesh mesh = build_cartesian(8, 8, {}, neumann);
  FlowProblem fp;
  fp.permeability = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  // p = x^2 - x: -p'' = -2, outward flux -p'.n = 1 on both x faces
  fp.source = [](double, Point) { return -2.0; };
  fp.neumann = [](double, Point, Vec2 n) { return n.x != 0.0 ? -1.0 : 0.0; };
  const auto p = solve_stationary(mesh, fp, DirichletMode::Strong);
  // area mean: the L2 error against -1 squared is |Omega| + 2 int p_h + int p_h^2
  const auto k = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  const GradientFn none = [](double, Point) { return Vec2{}; };
  const double z = compute_errors(mesh, p, [](double, Point) { return 0.0; }, none, k, 0.0).l2;
  const double m = compute_errors(mesh, p, [](double, Point) { return -1.0; }, none, k, 0.0).l2;
  CHECK(std::abs(0.5 * (m * m - z * z - 1.0)) <= 1e-10);
  // nodes 0 and 4 sit at x = 0 and x = 0.5
  CHECK(p[4] - p[0] == doctest::Approx(-0.25).epsilon(1e-8));
}

TEST_CASE("backward Euler with beta = 0 matches the stationary solve") {
  const Mesh mesh = build_cartesian(6, 5);
  const auto fp = parabola(mesh);
  const NodalField prev(mesh.num_nodes(), 7.0);
  for (auto mode : {DirichletMode::Strong, DirichletMode::Weak}) {
    const auto a = advance_timestep(mesh, fp, mode, prev, 0.3, 0.1);
    const auto b = solve_stationary(mesh, fp, mode, 0.3);
    CHECK(oracle::max_abs_diff(a, b) <= 1e-10);
  }
  CHECK_THROWS_AS(advance_timestep(mesh, fp, DirichletMode::Strong, prev, 0.3, 0.0),
                  std::invalid_argument);
}

TEST_CASE("manufactured parabolic case") {
  const double e4 = manufactured_energy(4);
  const double e8 = manufactured_energy(8);
  CHECK(e4 == doctest::Approx(0.0941).epsilon(5e-3));
  CHECK(e8 == doctest::Approx(0.0470).epsilon(5e-3));
  CHECK(std::log(e4 / e8) / std::log(2.0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("compute_errors") {
  const Mesh mesh = distort(build_cartesian(5, 5), 0.3, 4);
  const SpaceTimeFn lin = [](double, Point x) { return 2.0 * x.x - 3.0 * x.y + 1.0; };
  const GradientFn grad = [](double, Point) { return Vec2{2.0, -3.0}; };
  const auto k1 = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  const auto e = compute_errors(mesh, interpolate(mesh, lin, 0.0), lin, grad, k1, 0.0);
  CHECK(e.l2 <= 1e-12);
  CHECK(e.energy <= 1e-12);

  // bilinearity of the energy form
  const SpaceTimeFn quad = [](double, Point x) { return x.x * x.x + x.y; };
  const GradientFn qgrad = [](double, Point x) { return Vec2{2.0 * x.x, 1.0}; };
  const auto ph = interpolate(mesh, quad, 0.0);
  const auto k2 = PermeabilityField::uniform(mesh.num_elements(), 2.0);
  const double a = compute_errors(mesh, ph, quad, qgrad, k1, 0.0).energy;
  const double b = compute_errors(mesh, ph, quad, qgrad, k2, 0.0).energy;
  CHECK(b * b == doctest::Approx(2.0 * a * a).epsilon(1e-12));
}

TEST_CASE("assembled systems are symmetric") {
  const Mesh mesh = refine_cells(distort(build_cartesian(5, 5), 0.3, 2), {3, 12});
  auto fp = parabola(mesh);
  std::vector<Tensor2> k;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.1, 2.0);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double a = d(rng), b = d(rng);
    k.push_back({a + 1.0, 0.3 * std::min(a, b), b + 1.0});
  }
  fp.permeability = PermeabilityField(k);
  for (auto mode : {DirichletMode::Strong, DirichletMode::Weak}) {
    const auto sys = reduce_flow_system(mesh, fp, mode, 0.0);
    CHECK(sys.matrix.asymmetry() <= 1e-12 * max_abs(sys.matrix));
  }
  const auto raw = assemble_flow(mesh, fp, DirichletMode::Weak, 0.0);
  CHECK(raw.stiffness.asymmetry() <= 1e-12 * max_abs(raw.stiffness));

  // strong-mode matrix is positive definite
  const auto m = oracle::dense(reduce_flow_system(mesh, fp, DirichletMode::Strong, 0.0).matrix);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("weak mode global balance") {
  // all-ones test vector: the weak boundary flux balances the source
  const Mesh mesh = distort(build_cartesian(7, 7), 0.25, 3);
  const auto fp = parabola(mesh);
  const auto sys = assemble_flow(mesh, fp, DirichletMode::Weak, 0.0);
  const auto p = solve_stationary(mesh, fp, DirichletMode::Weak);
  const auto ap = sys.stiffness * p;
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mesh.is_hanging(static_cast<int>(i))) continue;
    lhs += ap[i];
    rhs += sys.load[i];
  }
  CHECK(std::abs(lhs - rhs) <= 1e-9);
}

TEST_CASE("problem validation") {
  const Mesh mesh = build_cartesian(2, 2);
  FlowProblem fp;
  fp.permeability = PermeabilityField::uniform(3, 1.0);
  CHECK_THROWS_AS(fp.validate(mesh), std::invalid_argument);
  CHECK_THROWS_AS(PermeabilityField(std::vector<Tensor2>(4, Tensor2{1.0, 2.0, 1.0})),
                  std::invalid_argument);
  fp.permeability = PermeabilityField::uniform(4, 1.0);
  CHECK_NOTHROW(fp.validate(mesh));
}
