#pragma once

// Face fluxes U_h = -<K grad p_h . n> from a continuous pressure.

#include <vector>

#include "consflux/fields.hpp"
#include "consflux/flow.hpp"
#include "consflux/mesh.hpp"

namespace consflux {

enum class Averaging { Central, Harmonic };

struct FacePermeability {
  double theta = 0.5;  // weight of the owner side
  double k_e = 1.0;    // harmonic mean of n^T K n
};

/// Harmonic weights across a face. Pass neighbor = nullptr on the boundary.
FacePermeability effective_face_permeability(const Tensor2& owner, const Tensor2* neighbor,
                                             Vec2 n);

/// k_e for every face of the mesh.
std::vector<double> face_permeabilities(const Mesh& mesh, const PermeabilityField& k);

/// Physical location of Gauss point g (0 or 1) on a face.
Point face_gauss_point(const Mesh& mesh, int face, int g);

/// Dirichlet boundary flux recovered from the variational residual.
/// Entries on non-Dirichlet faces are zero. Throws std::invalid_argument
/// when the mesh has no Dirichlet face.
FaceField recover_dirichlet_flux(const Mesh& mesh, const NodalField& p, const FlowProblem& problem,
                                 double t, const Transient* transient = nullptr,
                                 const SolverConfig& cfg = {1e-13});

FaceField extract_flux(const Mesh& mesh, const NodalField& p, const FlowProblem& problem,
                       DirichletMode mode, Averaging avg, double t = 0.0,
                       const Transient* transient = nullptr);

using VelocityFn = std::function<Vec2(double t, Point x)>;

/// u.n_F of a velocity field at the face Gauss points.
FaceField sample_flux(const Mesh& mesh, const VelocityFn& u, double t);

/// Net flux in +x direction through the vertical mesh line at abscissa x.
/// Throws std::invalid_argument if the line faces do not span the domain.
double integrate_flux_on_line(const FaceField& field, const Mesh& mesh, double x);

/// Same along an explicit face list, counted positive in +x direction.
double integrate_flux_on_faces(const FaceField& field, const Mesh& mesh,
                               const std::vector<int>& faces);

enum class FaceNorm { Plain, HWeighted };

/// sqrt(sum_F w_F ||u.n - field||_F^2) over interior and Dirichlet faces,
/// w_F = 1 (Plain) or h (HWeighted). h <= 0 selects h = |F| per face.
double face_norm_error(const FaceField& field, const Mesh& mesh, const VelocityFn& exact, double t,
                       FaceNorm norm = FaceNorm::Plain, double h = 0.0);

}  // namespace consflux
