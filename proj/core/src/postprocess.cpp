#include "consflux/postprocess.hpp"

#include <cmath>

#include "consflux/flux.hpp"
#include "consflux/q1.hpp"

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

// Net outflow int_{dE} U n_F.n_E per element.
CellField net_outflow(const FaceField& field, const Mesh& mesh) {
  if (field.size() != mesh.num_faces())
    throw std::invalid_argument("face field has " + std::to_string(field.size()) +
                                " faces, mesh has " + std::to_string(mesh.num_faces()));
  CellField out(mesh.num_elements(), 0.0);
  for (const auto& f : mesh.faces()) {
    const double flux = field.mean(f.id) * f.measure;
    out[ix(f.owner)] += flux;
    if (!f.is_boundary()) out[ix(f.neighbor)] -= flux;
  }
  return out;
}

}  // namespace

SourceSpec SourceSpec::from_integrals(CellField integrated) { return {std::move(integrated)}; }

SourceSpec SourceSpec::stationary(const Mesh& mesh, const SpaceTimeFn& q, double t, int order) {
  SourceSpec s;
  s.integrated.assign(mesh.num_elements(), 0.0);
  const auto quad = q1::cell_gauss(order);
  for (const auto& el : mesh.elements()) {
    const q1::CellGeometry geo(mesh, el.id);
    double v = 0.0;
    for (const auto& qp : quad) v += qp.weight * geo.jacobian(qp.ref).det() * q(t, geo.map(qp.ref));
    s.integrated[ix(el.id)] = v;
  }
  return s;
}

SourceSpec SourceSpec::transient(const Mesh& mesh, const SpaceTimeFn& q, const SpaceTimeFn& beta,
                                 const NodalField& p_new, const NodalField& p_old, double t,
                                 double dt, int order) {
  if (!(dt > 0.0)) throw std::invalid_argument("SourceSpec: time step must be positive");
  SourceSpec s = stationary(mesh, q, t, order);
  const auto quad = q1::cell_gauss(order);
  for (const auto& el : mesh.elements()) {
    const q1::CellGeometry geo(mesh, el.id);
    double v = 0.0;
    for (const auto& qp : quad) {
      const Point x = geo.map(qp.ref);
      const double pn = pressure_value(mesh, p_new, el.id, qp.ref.xi, qp.ref.eta);
      const double po = pressure_value(mesh, p_old, el.id, qp.ref.xi, qp.ref.eta);
      v += qp.weight * geo.jacobian(qp.ref).det() * (beta(t, x) * pn - beta(t - dt, x) * po);
    }
    s.integrated[ix(el.id)] -= v / dt;
  }
  return s;
}

CellField discrete_divergence(const FaceField& field, const Mesh& mesh) {
  CellField d = net_outflow(field, mesh);
  for (std::size_t e = 0; e < d.size(); ++e) d[e] /= mesh.area(static_cast<int>(e));
  return d;
}

CellField residual(const FaceField& field, const SourceSpec& source, const Mesh& mesh) {
  if (source.integrated.size() != mesh.num_elements())
    throw std::invalid_argument("source has the wrong number of elements");
  CellField r = net_outflow(field, mesh);
  for (std::size_t e = 0; e < r.size(); ++e)
    r[e] = (source.integrated[e] - r[e]) / mesh.area(static_cast<int>(e));
  return r;
}

double cell_norm(const CellField& density, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t e = 0; e < density.size(); ++e)
    s += mesh.area(static_cast<int>(e)) * density[e] * density[e];
  return std::sqrt(s);
}

ConservationReport conservation_report(const FaceField& field, const SourceSpec& source,
                                       const Mesh& mesh) {
  ConservationReport rep;
  rep.residual = residual(field, source, mesh);
  rep.norm = cell_norm(rep.residual, mesh);
  double total = 0.0;
  for (std::size_t e = 0; e < rep.residual.size(); ++e) {
    total += rep.residual[e] * mesh.area(static_cast<int>(e));
    rep.max_abs = std::max(rep.max_abs, std::abs(rep.residual[e]));
  }
  rep.global_imbalance = std::abs(total);
  return rep;
}

bool corrected_face(const Face& face, bool fix_dirichlet) {
  switch (face.marker) {
    case FaceMarker::Interior: return true;
    case FaceMarker::Dirichlet: return !fix_dirichlet;
    case FaceMarker::Neumann: return false;
  }
  return false;
}

std::vector<double> inverse_weights(const Mesh& mesh, WeightScheme weights,
                                    const PermeabilityField& k) {
  if (weights == WeightScheme::Uniform) return std::vector<double>(mesh.num_faces(), 1.0);
  if (k.size() != mesh.num_elements())
    throw std::invalid_argument("permeability size does not match the mesh");
  return face_permeabilities(mesh, k);
}

SparseMatrix assemble_pp_matrix(const Mesh& mesh, WeightScheme weights, const PermeabilityField& k,
                                bool fix_dirichlet) {
  const auto w = inverse_weights(mesh, weights, k);
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_faces() * 4);
  for (const auto& f : mesh.faces()) {
    if (!corrected_face(f, fix_dirichlet)) continue;
    const double a = w[ix(f.id)] * f.measure;
    trip.push_back({f.owner, f.owner, a});
    if (!f.is_boundary()) {
      trip.push_back({f.neighbor, f.neighbor, a});
      trip.push_back({f.owner, f.neighbor, -a});
      trip.push_back({f.neighbor, f.owner, -a});
    }
  }
  return SparseMatrix::assemble(mesh.num_elements(), std::move(trip));
}

FaceField correction_field(const Mesh& mesh, const CellField& y,
                           const std::vector<double>& inverse_weight, bool fix_dirichlet) {
  FaceField c(mesh.num_faces());
  for (const auto& f : mesh.faces()) {
    if (!corrected_face(f, fix_dirichlet)) continue;
    const double jump = y[ix(f.owner)] - (f.is_boundary() ? 0.0 : y[ix(f.neighbor)]);
    const double v = inverse_weight[ix(f.id)] * jump;
    c[f.id] = {v, v};
  }
  return c;
}

Postprocessor::Postprocessor(const Mesh& mesh, WeightScheme weights, const PermeabilityField& k,
                             SolverConfig cfg, bool fix_dirichlet)
    : mesh_(mesh),
      cfg_(cfg),
      fix_dirichlet_(fix_dirichlet),
      inverse_weight_(inverse_weights(mesh, weights, k)),
      matrix_(assemble_pp_matrix(mesh, weights, k, fix_dirichlet)) {
  cfg_.validate();
  singular_ = true;
  for (const auto& f : mesh.faces())
    if (f.is_boundary() && corrected_face(f, fix_dirichlet)) singular_ = false;
}

PostprocessResult Postprocessor::apply(const FaceField& field, const SourceSpec& source) const {
  const std::size_t n = mesh_.num_elements();
  CellField density = residual(field, source, mesh_);
  std::vector<double> rhs(n);
  double total = 0.0, scale = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    rhs[e] = density[e] * mesh_.area(static_cast<int>(e));
    total += rhs[e];
    scale += std::abs(source.integrated[e]);
  }
  for (const auto& f : mesh_.faces())
    if (f.is_boundary()) scale += std::abs(field.mean(f.id)) * f.measure;

  if (singular_) {
    if (std::abs(total) > 1e-8 * std::max(1.0, scale))
      throw std::invalid_argument(
          "postprocess: flux violates global balance (imbalance " + std::to_string(total) +
          "); the correction system with no corrected boundary face has no solution");
    for (double& r : rhs) r -= total / static_cast<double>(n);
  }

  PostprocessResult out;
  const auto sol = singular_ ? cg_solve(matrix_, rhs, cfg_, {}, std::vector<double>(n, 1.0))
                             : cg_solve(matrix_, rhs, cfg_);
  out.y = sol.x;
  out.iterations = sol.iterations;
  if (singular_) {
    double mean = 0.0;
    for (double v : out.y) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : out.y) v -= mean;
  }

  out.flux = field;
  const auto corr = correction_field(mesh_, out.y, inverse_weight_, fix_dirichlet_);
  for (const auto& f : mesh_.faces())
    for (std::size_t g = 0; g < 2; ++g) out.flux[f.id][g] += corr[f.id][g];
  out.report = conservation_report(out.flux, source, mesh_);
  return out;
}

PostprocessResult postprocess_flux(const FaceField& field, const SourceSpec& source,
                                   const Mesh& mesh, WeightScheme weights,
                                   const PermeabilityField& k, const SolverConfig& cfg,
                                   bool fix_dirichlet) {
  return Postprocessor(mesh, weights, k, cfg, fix_dirichlet).apply(field, source);
}

}  // namespace consflux
