#include "consflux/transport.hpp"

#include <cmath>
#include <iostream>

#include "consflux/flux.hpp"
#include "consflux/q1.hpp"

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

template <typename F>
double integrate_cell(const Mesh& mesh, int element, int order, F&& f) {
  const q1::CellGeometry geo(mesh, element);
  double v = 0.0;
  for (const auto& qp : q1::cell_gauss(order))
    v += qp.weight * geo.jacobian(qp.ref).det() * f(geo.map(qp.ref));
  return v;
}

}  // namespace

void TransportProblem::validate(const Mesh& mesh) const {
  if (porosity.size() != mesh.num_elements())
    throw std::invalid_argument("transport: porosity has the wrong number of elements");
  for (double p : porosity)
    if (!(p > 0.0)) throw std::invalid_argument("transport: porosity must be positive");
}

std::vector<BoundaryFlow> classify_boundary(const FaceField& flux, const Mesh& mesh) {
  std::vector<BoundaryFlow> out(mesh.num_faces(), BoundaryFlow::Interior);
  for (const auto& f : mesh.faces())
    if (f.is_boundary())
      out[ix(f.id)] = flux.mean(f.id) >= 0.0 ? BoundaryFlow::Outflow : BoundaryFlow::Inflow;
  return out;
}

TransportState initial_state(const Mesh& mesh, const TransportProblem& problem) {
  TransportState s;
  s.c.resize(mesh.num_elements());
  for (const auto& el : mesh.elements())
    s.c[ix(el.id)] = integrate_cell(mesh, el.id, problem.quadrature_order,
                                    [&](Point x) { return problem.initial(0.0, x); }) /
                     mesh.area(el.id);
  return s;
}

TransportState advance_transport(const TransportState& state, const FaceField& flux,
                                 const Mesh& mesh, const TransportProblem& problem, double dt,
                                 const SolverConfig& cfg) {
  problem.validate(mesh);
  if (!(dt > 0.0)) throw std::invalid_argument("transport: time step must be positive");
  if (flux.size() != mesh.num_faces())
    throw std::invalid_argument("transport: flux has the wrong number of faces");
  const double t = state.time + dt;
  const std::size_t n = mesh.num_elements();
  std::vector<Triplet> trip;
  trip.reserve(n * 5);
  std::vector<double> rhs(n, 0.0);

  for (const auto& f : mesh.faces()) {
    const double u = flux.mean(f.id);
    if (!std::isfinite(u)) throw std::invalid_argument("transport: non-finite face flux");
    const double a = f.measure * u;
    const int i = f.owner;
    if (!f.is_boundary()) {
      const int j = f.neighbor;
      if (u >= 0.0) {
        trip.push_back({i, i, a});
        trip.push_back({j, i, -a});
      } else {
        trip.push_back({i, j, a});
        trip.push_back({j, j, -a});
      }
    } else if (u >= 0.0) {
      trip.push_back({i, i, a});
    } else {
      double cb = 0.0;
      for (int g = 0; g < 2; ++g)
        cb += q1::face_gauss()[ix(g)].weight * problem.inflow(t, face_gauss_point(mesh, f.id, g));
      rhs[ix(i)] -= a * cb;
    }
  }

  const int order = problem.quadrature_order;
  for (const auto& el : mesh.elements()) {
    const int e = el.id;
    const double mass = mesh.area(e) * problem.porosity[ix(e)] / dt;
    const q1::CellGeometry geo(mesh, e);
    double sink = 0.0, inject = 0.0, forcing = 0.0;
    for (const auto& qp : q1::cell_gauss(order)) {
      const double w = qp.weight * geo.jacobian(qp.ref).det();
      const Point x = geo.map(qp.ref);
      const double q = problem.source(t, x);
      if (q < 0.0)
        sink += w * q;
      else if (q > 0.0)
        inject += w * q * problem.well(t, x);
      forcing += w * problem.forcing(t, x);
    }
    trip.push_back({e, e, mass - sink});
    rhs[ix(e)] += inject + forcing + mass * state.c[ix(e)];
  }

  const auto a = SparseMatrix::assemble(n, std::move(trip));
  return {t, bicgstab_solve(a, rhs, cfg).x};
}

double overshoot(const CellField& c, double c_bar, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t e = 0; e < c.size(); ++e) {
    const double ex = std::max(c[e] - c_bar, 0.0) + std::max(-c[e], 0.0);
    s += mesh.area(static_cast<int>(e)) * ex * ex;
  }
  return std::sqrt(s);
}

double production_rate(const CellField& c, const Mesh& mesh, const TransportProblem& problem,
                       double t) {
  double pr = 0.0;
  bool any_sink = false;
  for (const auto& el : mesh.elements()) {
    const double sink = integrate_cell(mesh, el.id, problem.quadrature_order, [&](Point x) {
      return std::min(problem.source(t, x), 0.0);
    });
    if (sink < 0.0) any_sink = true;
    pr += sink * c[ix(el.id)];
  }
  if (!any_sink) std::cerr << "warning: production_rate called without a sink region\n";
  return pr;
}

double concentration_error(const CellField& c, const Mesh& mesh, const SpaceTimeFn& exact,
                           double t, int order) {
  double s = 0.0;
  for (const auto& el : mesh.elements())
    s += integrate_cell(mesh, el.id, order, [&](Point x) {
      const double d = exact(t, x) - c[ix(el.id)];
      return d * d;
    });
  return std::sqrt(s);
}

}  // namespace consflux
