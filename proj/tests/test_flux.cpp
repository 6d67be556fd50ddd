#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "consflux/flux.hpp"
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

const VelocityFn parabola_velocity = [](double, Point x) { return Vec2{2.0 * x.x, 0.0}; };

int face_at(const Mesh& mesh, Point mid) {
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Point m = mesh.face_midpoint(static_cast<int>(f));
    if (std::abs(m.x - mid.x) < 1e-12 && std::abs(m.y - mid.y) < 1e-12) return static_cast<int>(f);
  }
  return -1;
}

// net outward boundary flux minus the integrated source
double global_imbalance(const Mesh& mesh, const FaceField& u, double q) {
  double out = 0.0;
  for (const auto& f : mesh.faces())
    if (f.is_boundary()) out += u.mean(f.id) * f.measure;
  return out - q * mesh.total_area();
}

}  // namespace

TEST_CASE("effective_face_permeability") {
  const Vec2 n{1.0, 0.0};
  const auto k = Tensor2::isotropic(2.0);
  auto r = effective_face_permeability(k, &k, n);
  CHECK(r.theta == doctest::Approx(0.5));
  CHECK(r.k_e == doctest::Approx(2.0));

  const auto k1 = Tensor2::isotropic(1.0), k3 = Tensor2::isotropic(3.0);
  r = effective_face_permeability(k1, &k3, n);
  CHECK(r.theta == doctest::Approx(0.75));
  CHECK(r.k_e == doctest::Approx(1.5));

  const auto lo = Tensor2::isotropic(1e-3);
  CHECK(effective_face_permeability(k1, &lo, n).k_e == doctest::Approx(2e-3 / 1.001).epsilon(1e-12));

  r = effective_face_permeability(k3, nullptr, n);
  CHECK(r.theta == 1.0);
  CHECK(r.k_e == 3.0);

  // only the normal component matters
  const Tensor2 aniso{5.0, 0.0, 1.0};
  CHECK(effective_face_permeability(aniso, &aniso, {0.0, 1.0}).k_e == doctest::Approx(1.0));

  CHECK_THROWS_AS(effective_face_permeability(Tensor2{-1.0, 0.0, 1.0}, &k, n),
                  std::invalid_argument);
}

TEST_CASE("strong flux on four strips") {
  const Mesh mesh = build_cartesian(4, 1);
  const auto fp = parabola(mesh);
  const auto p = solve_stationary(mesh, fp, DirichletMode::Strong);
  const auto u = extract_flux(mesh, p, fp, DirichletMode::Strong, Averaging::Central);

  const int interior = face_at(mesh, {0.25, 0.5});
  REQUIRE(interior >= 0);
  CHECK(mesh.face(interior).normal.x * u.mean(interior) == doctest::Approx(0.5).epsilon(1e-12));

  const int left = face_at(mesh, {0.0, 0.5});
  REQUIRE(left >= 0);
  CHECK(u.mean(left) == doctest::Approx(-0.25).epsilon(1e-12));

  CHECK(face_norm_error(u, mesh, parabola_velocity, 0.0) == doctest::Approx(std::sqrt(2 * 0.0625)).epsilon(1e-12));
}

TEST_CASE("neumann faces carry the prescribed flux exactly") {
  const Mesh mesh = distort(build_cartesian(6, 6), 0.3, 5);
  auto fp = parabola(mesh);
  fp.neumann = [](double, Point x, Vec2 n) { return 0.3 * x.x * n.y + 0.1; };
  const auto p = solve_stationary(mesh, fp, DirichletMode::Strong);
  for (auto mode : {DirichletMode::Strong, DirichletMode::Recovery})
    for (auto avg : {Averaging::Central, Averaging::Harmonic}) {
      const auto u = extract_flux(mesh, p, fp, mode, avg);
      for (const auto& f : mesh.faces()) {
        if (f.marker != FaceMarker::Neumann) continue;
        for (int g = 0; g < 2; ++g)
          CHECK(u[f.id][static_cast<std::size_t>(g)] ==
                fp.neumann(0.0, face_gauss_point(mesh, f.id, g), f.normal));
      }
    }
}

TEST_CASE("recovered boundary flux is exact on strip grids") {
  for (auto id : {ScenarioId::ConsistencyUniform1d, ScenarioId::ConsistencyNonuniform1d}) {
    const Mesh mesh = consistency_grid(id);
    const auto fp = parabola(mesh);
    const auto p = solve_stationary(mesh, fp, DirichletMode::Recovery);
    const auto u = extract_flux(mesh, p, fp, DirichletMode::Recovery, Averaging::Central);
    for (const auto& f : mesh.faces()) {
      if (f.marker != FaceMarker::Dirichlet) continue;
      for (int g = 0; g < 2; ++g) {
        const Point x = face_gauss_point(mesh, f.id, g);
        CHECK(std::abs(u[f.id][static_cast<std::size_t>(g)] - dot(parabola_velocity(0, x), f.normal)) <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(recover_dirichlet_flux(build_cartesian(2, 2, {}, {FaceMarker::Neumann, FaceMarker::Neumann,
                                                                    FaceMarker::Neumann, FaceMarker::Neumann}),
                                         NodalField(9, 0.0), parabola(build_cartesian(2, 2)), 0.0),
                  std::invalid_argument);
}

TEST_CASE("line integrals") {
  const Mesh mesh = build_cartesian(4, 4);
  const auto exact = sample_flux(mesh, parabola_velocity, 0.0);
  CHECK(integrate_flux_on_line(exact, mesh, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(integrate_flux_on_line(exact, mesh, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate_flux_on_line(FaceField(mesh.num_faces()), mesh, 0.25) == 0.0);
  CHECK_THROWS_AS(integrate_flux_on_line(exact, mesh, 0.3), std::invalid_argument);
}

TEST_CASE("face norms") {
  const Mesh mesh = distort(build_cartesian(5, 5), 0.2, 9);
  const auto exact = sample_flux(mesh, parabola_velocity, 0.0);
  CHECK(face_norm_error(exact, mesh, parabola_velocity, 0.0) <= 1e-14);
  CHECK(face_norm_error(exact, mesh, parabola_velocity, 0.0, FaceNorm::HWeighted, 0.2) <= 1e-14);

  // a unit offset on every counted face: sum of |F| and h |F|
  FaceField off = exact;
  double plain = 0.0;
  for (const auto& f : mesh.faces()) {
    off[f.id][0] += 1.0;
    off[f.id][1] += 1.0;
    if (f.marker != FaceMarker::Neumann) plain += f.measure;
  }
  CHECK(face_norm_error(off, mesh, parabola_velocity, 0.0) == doctest::Approx(std::sqrt(plain)));
  CHECK(face_norm_error(off, mesh, parabola_velocity, 0.0, FaceNorm::HWeighted, 0.2) ==
        doctest::Approx(std::sqrt(0.2 * plain)));
}

TEST_CASE("constant pressure gives zero interior flux") {
  const Mesh mesh = refine_cells(distort(build_cartesian(5, 5), 0.3, 6), {6, 7, 12});
  std::mt19937_64 rng(12);
  const auto kv = oracle::random_vector(mesh.num_elements(), rng, 1e-3, 10.0);
  auto fp = parabola(mesh);
  fp.permeability = PermeabilityField::from_scalar(kv);
  const NodalField p(mesh.num_nodes(), 4.2);
  // rounding scales with |p| max K
  const double tol = 1e-14 * 4.2 * *std::max_element(kv.begin(), kv.end());
  for (auto avg : {Averaging::Central, Averaging::Harmonic}) {
    const auto u = extract_flux(mesh, p, fp, DirichletMode::Strong, avg);
    for (const auto& f : mesh.faces())
      if (!f.is_boundary()) {
        CHECK(std::abs(u[f.id][0]) <= tol);
        CHECK(std::abs(u[f.id][1]) <= tol);
      }
  }
}

TEST_CASE("harmonic equals central for equal permeability") {
  const Mesh mesh = refine_cells(distort(build_cartesian(6, 6), 0.3, 2), {8, 20});
  const auto fp = parabola(mesh);
  const auto p = solve_stationary(mesh, fp, DirichletMode::Strong);
  const auto a = extract_flux(mesh, p, fp, DirichletMode::Strong, Averaging::Central);
  const auto b = extract_flux(mesh, p, fp, DirichletMode::Strong, Averaging::Harmonic);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    CHECK(std::abs(a.gauss[f][0] - b.gauss[f][0]) <= 1e-12);
    CHECK(std::abs(a.gauss[f][1] - b.gauss[f][1]) <= 1e-12);
  }
}

TEST_CASE("recovery and weak fluxes are globally conservative") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    const Mesh mesh = refine_cells(distort(build_cartesian(6, 5), 0.3, static_cast<std::uint64_t>(trial)),
                                   {static_cast<int>(rng() % 30)});
    auto fp = parabola(mesh);
    fp.permeability = PermeabilityField::from_scalar(oracle::random_vector(mesh.num_elements(), rng, 0.1, 5.0));
    const auto pr = solve_stationary(mesh, fp, DirichletMode::Recovery, 0.0, {1e-13});
    const auto ur = extract_flux(mesh, pr, fp, DirichletMode::Recovery, Averaging::Harmonic);
    CHECK(std::abs(global_imbalance(mesh, ur, 2.0)) <= 1e-9);
    const auto pw = solve_stationary(mesh, fp, DirichletMode::Weak, 0.0, {1e-13});
    const auto uw = extract_flux(mesh, pw, fp, DirichletMode::Weak, Averaging::Harmonic);
    CHECK(std::abs(global_imbalance(mesh, uw, 2.0)) <= 1e-9);
  }
}

TEST_CASE("face traces are linear along the face") {
  const Mesh mesh = distort(build_cartesian(4, 4), 0.3, 3);
  const auto u = sample_flux(mesh, [](double, Point x) { return Vec2{x.y, 2.0 * x.x}; }, 0.0);
  for (const auto& f : mesh.faces()) {
    const Point m = mesh.face_midpoint(f.id);
    CHECK(u.mean(f.id) == doctest::Approx(dot({m.y, 2.0 * m.x}, f.normal)).epsilon(1e-12));
  }
}
