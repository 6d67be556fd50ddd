#include "consflux/flux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "consflux/q1.hpp"

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

const FaceIncidence& incidence(const Mesh& mesh, int element, int face) {
  for (const auto& inc : mesh.element(element).faces)
    if (inc.face == face) return inc;
  throw std::logic_error("face not on element");
}

q1::RefPoint ref_point(const FaceIncidence& inc, int g) {
  const double s = q1::face_gauss()[ix(g)].s;
  return q1::edge_point(inc.local_edge, inc.s_begin + s * (inc.s_end - inc.s_begin));
}

// -K grad p . n at the face Gauss points, seen from one element.
std::array<double, 2> one_sided(const Mesh& mesh, const NodalField& p, const Tensor2& k,
                                int element, int face, Vec2 n) {
  const auto& inc = incidence(mesh, element, face);
  std::array<double, 2> out{};
  for (int g = 0; g < 2; ++g) {
    const auto rp = ref_point(inc, g);
    out[ix(g)] = -dot(k.apply(pressure_gradient(mesh, p, element, rp.xi, rp.eta)), n);
  }
  return out;
}

}  // namespace

FacePermeability effective_face_permeability(const Tensor2& owner, const Tensor2* neighbor,
                                             Vec2 n) {
  const double di = owner.normal(n);
  if (!(di > 0.0)) throw std::invalid_argument("face permeability: n^T K n must be positive");
  if (!neighbor) return {1.0, di};
  const double dj = neighbor->normal(n);
  if (!(dj > 0.0)) throw std::invalid_argument("face permeability: n^T K n must be positive");
  return {dj / (di + dj), 2.0 * di * dj / (di + dj)};
}

std::vector<double> face_permeabilities(const Mesh& mesh, const PermeabilityField& k) {
  std::vector<double> out(mesh.num_faces());
  for (const auto& f : mesh.faces())
    out[ix(f.id)] =
        effective_face_permeability(k[f.owner], f.is_boundary() ? nullptr : &k[f.neighbor], f.normal)
            .k_e;
  return out;
}

Point face_gauss_point(const Mesh& mesh, int face, int g) {
  const Face& f = mesh.face(face);
  const double s = q1::face_gauss()[ix(g)].s;
  return (1.0 - s) * mesh.node(f.endpoints[0]) + s * mesh.node(f.endpoints[1]);
}

FaceField recover_dirichlet_flux(const Mesh& mesh, const NodalField& p, const FlowProblem& problem,
                                 double t, const Transient* transient, const SolverConfig& cfg) {
  if (!mesh.has_dirichlet_boundary())
    throw std::invalid_argument("recover_dirichlet_flux: mesh has no Dirichlet boundary");
  const FlowSystem sys = assemble_flow(mesh, problem, DirichletMode::Recovery, t, transient);

  // Variational residual a(p, phi) - l(phi) + time term.
  std::vector<double> res = sys.stiffness * p;
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= sys.load[i];
  if (transient) {
    const auto mn = sys.mass_new * p;
    const auto mo = sys.mass_old * transient->p_prev;
    for (std::size_t i = 0; i < res.size(); ++i)
      if (!mesh.is_hanging(static_cast<int>(i))) res[i] += (mn[i] - mo[i]) / transient->dt;
  }

  std::map<int, int> local;
  for (int d : sys.dirichlet_nodes) local.emplace(d, static_cast<int>(local.size()));
  std::vector<Triplet> trip;
  for (const auto& f : mesh.faces()) {
    if (f.marker != FaceMarker::Dirichlet) continue;
    const int a = local.at(f.endpoints[0]);
    const int b = local.at(f.endpoints[1]);
    const double m = f.measure / 6.0;
    trip.push_back({a, a, 2.0 * m});
    trip.push_back({b, b, 2.0 * m});
    trip.push_back({a, b, m});
    trip.push_back({b, a, m});
  }
  const auto mass = SparseMatrix::assemble(local.size(), std::move(trip));
  std::vector<double> rhs(local.size());
  for (auto [node, li] : local) rhs[ix(li)] = -res[ix(node)];
  const auto u = cg_solve(mass, rhs, cfg).x;

  FaceField out(mesh.num_faces());
  for (const auto& f : mesh.faces()) {
    if (f.marker != FaceMarker::Dirichlet) continue;
    const double ua = u[ix(local.at(f.endpoints[0]))];
    const double ub = u[ix(local.at(f.endpoints[1]))];
    for (int g = 0; g < 2; ++g) {
      const double s = q1::face_gauss()[ix(g)].s;
      out[f.id][ix(g)] = (1.0 - s) * ua + s * ub;
    }
  }
  return out;
}

FaceField extract_flux(const Mesh& mesh, const NodalField& p, const FlowProblem& problem,
                       DirichletMode mode, Averaging avg, double t, const Transient* transient) {
  problem.validate(mesh);
  if (p.size() != mesh.num_nodes()) throw std::invalid_argument("extract_flux: size mismatch");
  FaceField out(mesh.num_faces());
  FaceField recovered;
  if (mode == DirichletMode::Recovery && mesh.has_dirichlet_boundary())
    recovered = recover_dirichlet_flux(mesh, p, problem, t, transient);

  for (const auto& f : mesh.faces()) {
    auto& u = out[f.id];
    const Tensor2& ko = problem.permeability[f.owner];
    switch (f.marker) {
      case FaceMarker::Interior: {
        const Tensor2& kn = problem.permeability[f.neighbor];
        const double theta =
            avg == Averaging::Harmonic ? effective_face_permeability(ko, &kn, f.normal).theta : 0.5;
        const auto uo = one_sided(mesh, p, ko, f.owner, f.id, f.normal);
        const auto un = one_sided(mesh, p, kn, f.neighbor, f.id, f.normal);
        for (std::size_t g = 0; g < 2; ++g) u[g] = theta * uo[g] + (1.0 - theta) * un[g];
        break;
      }
      case FaceMarker::Neumann:
        for (int g = 0; g < 2; ++g)
          u[ix(g)] = problem.neumann(t, face_gauss_point(mesh, f.id, g), f.normal);
        break;
      case FaceMarker::Dirichlet:
        if (mode == DirichletMode::Recovery) {
          u = recovered[f.id];
        } else {
          u = one_sided(mesh, p, ko, f.owner, f.id, f.normal);
          if (mode == DirichletMode::Weak) {
            const auto& inc = incidence(mesh, f.owner, f.id);
            for (int g = 0; g < 2; ++g) {
              const auto rp = ref_point(inc, g);
              const double ph = pressure_value(mesh, p, f.owner, rp.xi, rp.eta);
              const double pb = problem.dirichlet(t, face_gauss_point(mesh, f.id, g));
              u[ix(g)] += problem.sigma / f.measure * (ph - pb);
            }
          }
        }
        break;
    }
  }
  return out;
}

FaceField sample_flux(const Mesh& mesh, const VelocityFn& u, double t) {
  FaceField out(mesh.num_faces());
  for (const auto& f : mesh.faces())
    for (int g = 0; g < 2; ++g) out[f.id][ix(g)] = dot(u(t, face_gauss_point(mesh, f.id, g)), f.normal);
  return out;
}

double integrate_flux_on_faces(const FaceField& field, const Mesh& mesh,
                               const std::vector<int>& faces) {
  double total = 0.0;
  for (int id : faces) {
    const Face& f = mesh.face(id);
    const double sign = f.normal.x > 0.0 ? 1.0 : (f.normal.x < 0.0 ? -1.0 : 0.0);
    total += sign * field.mean(id) * f.measure;
  }
  return total;
}

double integrate_flux_on_line(const FaceField& field, const Mesh& mesh, double x) {
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  double xscale = 0.0;
  for (const auto& p : mesh.nodes()) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
    xscale = std::max(xscale, std::abs(p.x));
  }
  const double tol = 1e-12 * std::max(1.0, xscale);
  std::vector<int> faces;
  std::vector<std::pair<double, double>> spans;
  for (const auto& f : mesh.faces()) {
    const Point a = mesh.node(f.endpoints[0]);
    const Point b = mesh.node(f.endpoints[1]);
    if (std::abs(a.x - x) <= tol && std::abs(b.x - x) <= tol) {
      faces.push_back(f.id);
      spans.emplace_back(std::min(a.y, b.y), std::max(a.y, b.y));
    }
  }
  std::sort(spans.begin(), spans.end());
  const double htol = 1e-10 * (ymax - ymin);
  double reach = ymin;
  for (auto [lo, hi] : spans) {
    if (std::abs(lo - reach) > htol) break;
    reach = hi;
  }
  if (spans.empty() || std::abs(reach - ymax) > htol)
    throw std::invalid_argument("integrate_flux_on_line: faces at x = " + std::to_string(x) +
                                " do not span the domain");
  return integrate_flux_on_faces(field, mesh, faces);
}

double face_norm_error(const FaceField& field, const Mesh& mesh, const VelocityFn& exact, double t,
                       FaceNorm norm, double h) {
  // The trace is linear along the face; integrate against the exact flux
  // with a 5-point rule so the smooth part is resolved. Neumann faces carry
  // prescribed data and are left out.
  const auto& fg = q1::face_gauss();
  const auto& rule = q1::gauss_1d(5);
  double sum = 0.0;
  for (const auto& f : mesh.faces()) {
    if (f.marker == FaceMarker::Neumann) continue;
    const Point a = mesh.node(f.endpoints[0]);
    const Point b = mesh.node(f.endpoints[1]);
    const auto& u = field[f.id];
    double e = 0.0;
    for (const auto& q : rule) {
      const double uh = u[0] + (u[1] - u[0]) * (q.s - fg[0].s) / (fg[1].s - fg[0].s);
      const double d = dot(exact(t, (1.0 - q.s) * a + q.s * b), f.normal) - uh;
      e += q.weight * d * d;
    }
    e *= f.measure;
    if (norm == FaceNorm::HWeighted) e *= h > 0.0 ? h : f.measure;
    sum += e;
  }
  return std::sqrt(sum);
}

}  // namespace consflux
