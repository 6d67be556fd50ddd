#pragma once

// Scenario catalog and experiment drivers: consistency grids, manufactured
// convergence studies and the coupled flow/transport scenarios.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "consflux/fields.hpp"
#include "consflux/flow.hpp"
#include "consflux/flux.hpp"
#include "consflux/linalg.hpp"
#include "consflux/mesh.hpp"
#include "consflux/postprocess.hpp"
#include "consflux/transport.hpp"

namespace consflux {

enum class ScenarioId {
  ConsistencyUniform1d,
  ConsistencyNonuniform1d,
  ConsistencyUniform2d,
  ConsistencyDistorted,
  ConsistencyNonmatching,
  ConvergenceSmooth,
  ConvergenceDistortedFamily,
  Barrier,
  Channel,
  Wellpair,
};

/// "consistency-uniform1d", ..., "wellpair".
std::string to_string(ScenarioId id);
/// Inverse of to_string. Throws std::invalid_argument on an unknown name.
ScenarioId parse_scenario(const std::string& name);

bool is_consistency(ScenarioId id);
bool is_convergence(ScenarioId id);

struct CaseSpec {
  ScenarioId scenario = ScenarioId::ConsistencyUniform1d;
  DirichletMode mode = DirichletMode::Strong;
  Averaging averaging = Averaging::Central;
  /// nullopt runs transport on U_h directly.
  std::optional<WeightScheme> weights = WeightScheme::Uniform;
  double sigma = 10.0;

  int cells = 32;   // per side, flow/transport scenarios
  int levels = 4;   // convergence studies
  double dt = 0.01;
  double end_time = 2.0;

  double low_permeability = 1e-3;  // barrier block, channel surroundings, well pair right half
  Rectangle barrier{0.375, 0.25, 0.625, 0.75};
  std::vector<Rectangle> channel{{0.0, 0.625, 0.5, 0.875},
                                 {0.25, 0.0, 0.5, 0.875},
                                 {0.25, 0.0, 1.0, 0.25}};
  double well_rate = 100.0;
  double well_size = 1.0 / 32.0;
  double injected = 1.0;  // c_B for barrier/channel, c_w for the well pair

  double distortion = 0.25;
  std::uint64_t seed = 7;
  int snapshot_every = 0;  // steps between stored snapshots, 0 keeps the last one only

  SolverConfig flow_solver{1e-12};
  SolverConfig pp_solver{1e-13};
  SolverConfig transport_solver{1e-12, 20000, Preconditioner::Jacobi};

  /// Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
  /// Method tag such as "PP(SD,theta,wL2)" or "CG(RD)".
  std::string label() const;
};

// Manufactured solution with alpha = t + x - y.
struct AnalyticValues {
  double p = 0.0;
  double c = 0.0;
  double q = 0.0;
  double f = 0.0;
  Vec2 u;
};

AnalyticValues analytic_case(double t, double x, double y);
double analytic_normal_flux(double t, Point x, Vec2 n);

/// Flow problem of the manufactured case on a mesh (K = I, beta = 1).
FlowProblem analytic_flow_problem(const Mesh& mesh, double sigma = 10.0);
TransportProblem analytic_transport_problem(const Mesh& mesh);

/// Grids of the consistency study.
Mesh consistency_grid(ScenarioId id, double distortion = 0.25, std::uint64_t seed = 7);

/// Jittered 4x4 grid with the diagonal cells split (hanging nodes), refined
/// `level` times.
Mesh distorted_family_mesh(int level);

struct LineIntegral {
  double x = 0.0;
  double exact = 0.0;
  double u = 0.0;
  double v = 0.0;
};

struct ConsistencyResult {
  double residual_u = 0.0;
  double residual_v = 0.0;
  double error_u = 0.0;
  double error_v = 0.0;
  double imbalance_u = 0.0;
  double imbalance_v = 0.0;
  std::vector<LineIntegral> lines;
  Mesh mesh;
  FaceField flux_u;
  FaceField flux_v;
  CellField source;  // int_E q per element
};

/// Stationary problem -div grad p = 2, p = 1 - x^2, on the selected grid.
ConsistencyResult run_consistency(const CaseSpec& spec);

/// Log-ratio rates between consecutive levels; NaN where an error is zero.
std::vector<double> compute_rates(const std::vector<double>& errors, const std::vector<double>& hs);

struct ConvergenceTable {
  std::vector<double> h;
  std::vector<std::string> names;
  std::vector<std::vector<double>> errors;  // errors[column][level]

  const std::vector<double>& column(const std::string& name) const;
  std::vector<double> rates(const std::string& name) const;
};

/// Columns: energy, flux_U, flux_V, residual_U, residual_V, conc_exact,
/// conc_U, conc_V. Levels start at 1/h = 4 (smooth) or at M0 (distorted).
ConvergenceTable run_convergence(const CaseSpec& spec, int levels);

struct ScenarioSample {
  double time = 0.0;
  double overshoot = 0.0;
  double min_c = 0.0;
  double max_c = 0.0;
  double production = 0.0;
};

struct ScenarioResult {
  Mesh mesh;
  CellField permeability;       // scalar k per element
  FaceField flux_u;             // CG flux
  FaceField flux;               // flux driving the transport
  double residual_u = 0.0;
  std::optional<double> residual_v;
  int pp_iterations = 0;
  std::vector<ScenarioSample> series;
  std::vector<std::pair<double, CellField>> snapshots;
  CellField concentration;      // at the final time
  double region_mean = 0.0;     // inside the barrier, outside the channel, 0 otherwise
  std::optional<double> breakthrough;  // first time |PR| > 0.01 max |PR|
};

Mesh scenario_mesh(const CaseSpec& spec);
CellField scenario_permeability(const CaseSpec& spec, const Mesh& mesh);
/// Source q of a flow scenario: the well pair's cell-averaged wells, zero otherwise.
SpaceTimeFn scenario_source(const CaseSpec& spec);
/// Elements of the diagnostic region (barrier block or complement of the channel).
std::vector<bool> scenario_region(const CaseSpec& spec, const Mesh& mesh);

/// Flow once with beta = 0, optional postprocessing, then the transport loop.
ScenarioResult run_scenario(const CaseSpec& spec);

struct SolverTrend {
  std::string system;  // "flow", "pp-L2", "pp-wL2"
  double k_low = 0.0;
  std::size_t dof = 0;
  int iterations_plain = 0;
  int iterations_ssor = 0;
};

/// CG iteration counts on the barrier problem with strong Dirichlet and
/// harmonic averaging, with and without SSOR(1.5).
std::vector<SolverTrend> barrier_solver_trends(int cells, const std::vector<double>& k_low,
                                               double tolerance = 1e-12);

}  // namespace consflux
