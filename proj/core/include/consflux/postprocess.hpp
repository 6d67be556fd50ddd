#pragma once

// Minimal piecewise-constant correction of a face flux so that every element
// balances its source exactly.

#include <optional>

#include "consflux/fields.hpp"
#include "consflux/flow.hpp"
#include "consflux/linalg.hpp"
#include "consflux/mesh.hpp"

namespace consflux {

enum class WeightScheme { Uniform, InversePermeability };

/// Integrated source per element, int_E q~.
struct SourceSpec {
  CellField integrated;

  static SourceSpec from_integrals(CellField integrated);
  /// int_E q(t) by Gauss quadrature.
  static SourceSpec stationary(const Mesh& mesh, const SpaceTimeFn& q, double t, int order = 3);
  /// int_E q(t) - (beta(t) p_new - beta(t - dt) p_old) / dt.
  static SourceSpec transient(const Mesh& mesh, const SpaceTimeFn& q, const SpaceTimeFn& beta,
                              const NodalField& p_new, const NodalField& p_old, double t,
                              double dt, int order = 3);
};

/// Net outflow density (1/|E|) sum_F mean_F |F| n_F.n_E.
CellField discrete_divergence(const FaceField& field, const Mesh& mesh);

/// (int_E q~ - net outflow) / |E|.
CellField residual(const FaceField& field, const SourceSpec& source, const Mesh& mesh);

/// sqrt(sum_E |E| v_E^2) for a piecewise-constant density.
double cell_norm(const CellField& density, const Mesh& mesh);

struct ConservationReport {
  CellField residual;           // densities
  double norm = 0.0;
  double global_imbalance = 0.0;
  double max_abs = 0.0;
};

ConservationReport conservation_report(const FaceField& field, const SourceSpec& source,
                                       const Mesh& mesh);

/// Faces that receive a correction: interior faces, plus Dirichlet faces
/// unless `fix_dirichlet` is set (then they are treated like Neumann faces).
bool corrected_face(const Face& face, bool fix_dirichlet);

/// Per-face 1/omega_F.
std::vector<double> inverse_weights(const Mesh& mesh, WeightScheme weights,
                                    const PermeabilityField& k);

SparseMatrix assemble_pp_matrix(const Mesh& mesh, WeightScheme weights, const PermeabilityField& k,
                                bool fix_dirichlet = false);

/// Face field (1/omega)[y] on corrected faces, zero elsewhere.
FaceField correction_field(const Mesh& mesh, const CellField& y,
                           const std::vector<double>& inverse_weight, bool fix_dirichlet = false);

struct PostprocessResult {
  FaceField flux;
  CellField y;
  ConservationReport report;   // for the corrected flux
  int iterations = 0;
};

/// Holds the correction matrix so repeated calls on one mesh reuse it.
class Postprocessor {
 public:
  Postprocessor(const Mesh& mesh, WeightScheme weights, const PermeabilityField& k,
                SolverConfig cfg = {1e-13}, bool fix_dirichlet = false);

  PostprocessResult apply(const FaceField& field, const SourceSpec& source) const;

  const SparseMatrix& matrix() const { return matrix_; }
  const std::vector<double>& inverse_weight() const { return inverse_weight_; }
  bool singular() const { return singular_; }

 private:
  const Mesh& mesh_;
  SolverConfig cfg_;
  bool fix_dirichlet_;
  bool singular_;
  std::vector<double> inverse_weight_;
  SparseMatrix matrix_;
};

PostprocessResult postprocess_flux(const FaceField& field, const SourceSpec& source,
                                   const Mesh& mesh, WeightScheme weights,
                                   const PermeabilityField& k, const SolverConfig& cfg = {1e-13},
                                   bool fix_dirichlet = false);

}  // namespace consflux
