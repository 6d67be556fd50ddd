#pragma once

// Implicit upwind DG(0) for d/dt(phi c) + div(u c) = q c* + f.

#include "consflux/fields.hpp"
#include "consflux/flow.hpp"
#include "consflux/linalg.hpp"
#include "consflux/mesh.hpp"

namespace consflux {

struct TransportProblem {
  CellField porosity;                    // per element, > 0
  SpaceTimeFn inflow = zero_fn;          // c_B on inflow faces
  SpaceTimeFn well = zero_fn;            // c_w where q > 0
  SpaceTimeFn initial = zero_fn;         // c at t = 0
  SpaceTimeFn source = zero_fn;          // q, split into q+ and q-
  SpaceTimeFn forcing = zero_fn;         // f
  int quadrature_order = 3;

  void validate(const Mesh& mesh) const;
};

struct TransportState {
  double time = 0.0;
  CellField c;
};

enum class BoundaryFlow { Interior, Inflow, Outflow };

/// Sign of the face-mean flux on boundary faces; zero counts as outflow.
std::vector<BoundaryFlow> classify_boundary(const FaceField& flux, const Mesh& mesh);

/// Cell averages of the initial concentration.
TransportState initial_state(const Mesh& mesh, const TransportProblem& problem);

/// One backward Euler step of length dt driven by the face-mean flux.
TransportState advance_transport(const TransportState& state, const FaceField& flux,
                                 const Mesh& mesh, const TransportProblem& problem, double dt,
                                 const SolverConfig& cfg = {1e-12, 20000,
                                                            Preconditioner::Jacobi});

/// || max(c - c_bar, 0) + max(-c, 0) ||_{L2}.
double overshoot(const CellField& c, double c_bar, const Mesh& mesh);

/// int over {q < 0} of q c, with q evaluated at time t.
double production_rate(const CellField& c, const Mesh& mesh, const TransportProblem& problem,
                       double t);

/// ||c - c_h||_{L2} by Gauss quadrature.
double concentration_error(const CellField& c, const Mesh& mesh, const SpaceTimeFn& exact,
                           double t, int order = 3);

}  // namespace consflux
