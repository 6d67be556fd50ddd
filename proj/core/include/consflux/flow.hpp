#pragma once

// Continuous Galerkin (bilinear) discretization of
//   d/dt(beta p) - div(K grad p) = q
// with strong or weak (symmetric interior penalty) Dirichlet conditions.

#include <algorithm>
#include <functional>
#include <vector>

#include "consflux/fields.hpp"
#include "consflux/linalg.hpp"
#include "consflux/mesh.hpp"

namespace consflux {

struct Tensor2 {
  double xx = 1.0, xy = 0.0, yy = 1.0;

  static Tensor2 isotropic(double k) { return {k, 0.0, k}; }
  Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  /// n^T K n
  double normal(Vec2 n) const { return dot(n, apply(n)); }
  bool positive_definite() const { return xx > 0.0 && xx * yy - xy * xy > 0.0; }
};

/// Per-element symmetric positive definite permeability.
class PermeabilityField {
 public:
  PermeabilityField() = default;
  explicit PermeabilityField(std::vector<Tensor2> k);
  static PermeabilityField uniform(std::size_t num_elements, double k);
  static PermeabilityField from_scalar(const std::vector<double>& k);

  const Tensor2& operator[](int e) const { return k_[static_cast<std::size_t>(e)]; }
  std::size_t size() const { return k_.size(); }
  friend bool operator==(const PermeabilityField& a, const PermeabilityField& b) {
    return a.k_.size() == b.k_.size() &&
           std::equal(a.k_.begin(), a.k_.end(), b.k_.begin(), [](const Tensor2& x, const Tensor2& y) {
             return x.xx == y.xx && x.xy == y.xy && x.yy == y.yy;
           });
  }

 private:
  std::vector<Tensor2> k_;
};

using SpaceTimeFn = std::function<double(double t, Point x)>;
using GradientFn = std::function<Vec2(double t, Point x)>;
/// Prescribed normal flux u.n on a boundary point with outward normal n.
using BoundaryFluxFn = std::function<double(double t, Point x, Vec2 n)>;

inline double zero_fn(double, Point) { return 0.0; }
inline double zero_flux_fn(double, Point, Vec2) { return 0.0; }

struct FlowProblem {
  PermeabilityField permeability;
  SpaceTimeFn beta = zero_fn;
  SpaceTimeFn source = zero_fn;
  SpaceTimeFn dirichlet = zero_fn;
  BoundaryFluxFn neumann = zero_flux_fn;
  SpaceTimeFn initial = zero_fn;  // evaluated at t = 0
  double sigma = 10.0;            // weak Dirichlet penalty, same on every face
  int quadrature_order = 3;       // Gauss points per direction for data integrals

  /// Throws std::invalid_argument on size mismatch or an indefinite K.
  void validate(const Mesh& mesh) const;
};

enum class DirichletMode { Strong, Weak, Recovery };

/// Backward Euler context: the previous solution and the step length.
struct Transient {
  double dt = 0.0;
  NodalField p_prev;
};

/// Unconstrained-by-Dirichlet linear system on the node numbering. Hanging
/// nodes are condensed into their parents; their rows hold an identity.
/// Weak mode already contains the boundary terms.
struct FlowSystem {
  SparseMatrix stiffness;     // a(., .)
  std::vector<double> load;   // l(.)
  SparseMatrix mass_new;      // (beta(t) ., .)
  SparseMatrix mass_old;      // (beta(t - dt) ., .)
  std::vector<int> dirichlet_nodes;
};

FlowSystem assemble_flow(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                         double t, const Transient* transient = nullptr);

/// The system handed to the linear solver. Dirichlet rows (strong and
/// recovery modes) and hanging rows hold identities; `initial` carries the
/// Dirichlet values. `singular` marks a pure Neumann problem without mass.
struct ReducedSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;
  NodalField initial;
  bool singular = false;
};

ReducedSystem reduce_flow_system(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                                 double t, const Transient* transient = nullptr);

/// Stationary solve at time t (beta ignored). Pure-Neumann solutions have
/// zero mean.
NodalField solve_stationary(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                            double t = 0.0, const SolverConfig& cfg = {1e-12});

/// One backward Euler step to t_new.
NodalField advance_timestep(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                            const NodalField& p_prev, double t_new, double dt,
                            const SolverConfig& cfg = {1e-12});

/// Nodal interpolant with hanging nodes set to their constrained value.
NodalField interpolate(const Mesh& mesh, const SpaceTimeFn& f, double t);

/// Gradient of p_h at a reference point of an element.
Vec2 pressure_gradient(const Mesh& mesh, const NodalField& p, int element, double xi, double eta);
double pressure_value(const Mesh& mesh, const NodalField& p, int element, double xi, double eta);

struct FlowErrors {
  double l2 = 0.0;
  double energy = 0.0;
};

/// Broken L2 and energy (K-weighted gradient) errors by Gauss quadrature.
FlowErrors compute_errors(const Mesh& mesh, const NodalField& p_h, const SpaceTimeFn& exact,
                          const GradientFn& exact_gradient, const PermeabilityField& k, double t,
                          int quadrature_order = 3);

}  // namespace consflux
