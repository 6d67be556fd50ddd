#include "consflux/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

const std::pair<ScenarioId, const char*> kNames[] = {
    {ScenarioId::ConsistencyUniform1d, "consistency-uniform1d"},
    {ScenarioId::ConsistencyNonuniform1d, "consistency-nonuniform1d"},
    {ScenarioId::ConsistencyUniform2d, "consistency-uniform2d"},
    {ScenarioId::ConsistencyDistorted, "consistency-distorted"},
    {ScenarioId::ConsistencyNonmatching, "consistency-nonmatching"},
    {ScenarioId::ConvergenceSmooth, "convergence-smooth"},
    {ScenarioId::ConvergenceDistortedFamily, "convergence-distorted-family"},
    {ScenarioId::Barrier, "barrier"},
    {ScenarioId::Channel, "channel"},
    {ScenarioId::Wellpair, "wellpair"},
};

const char* mode_tag(DirichletMode m) {
  switch (m) {
    case DirichletMode::Strong: return "SD";
    case DirichletMode::Weak: return "WD";
    case DirichletMode::Recovery: return "RD";
  }
  return "?";
}

bool inside(const Rectangle& r, Point p, double tol = 0.0) {
  return p.x >= r.x0 - tol && p.x <= r.x1 + tol && p.y >= r.y0 - tol && p.y <= r.y1 + tol;
}

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Consistency problem: -div grad p = 2 with p = 1 - x^2.
FlowProblem consistency_problem(const Mesh& mesh, double sigma) {
  FlowProblem pb;
  pb.permeability = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  pb.source = [](double, Point) { return 2.0; };
  pb.dirichlet = [](double, Point x) { return 1.0 - x.x * x.x; };
  pb.sigma = sigma;
  return pb;
}

// Vertical mesh lines of the undistorted 4x4 grid, as face lists of `mesh`.
std::vector<std::pair<double, std::vector<int>>> distorted_lines(const Mesh& base,
                                                                 const Mesh& mesh) {
  std::map<EdgeKey, int> by_nodes;
  for (const auto& f : mesh.faces()) by_nodes[edge_key(f.endpoints[0], f.endpoints[1])] = f.id;
  std::vector<std::pair<double, std::vector<int>>> out;
  for (int k = 0; k <= 4; ++k) {
    const double x = 0.25 * k;
    std::vector<int> faces;
    for (const auto& f : base.faces()) {
      const Point a = base.node(f.endpoints[0]);
      const Point b = base.node(f.endpoints[1]);
      if (std::abs(a.x - x) < 1e-12 && std::abs(b.x - x) < 1e-12)
        faces.push_back(by_nodes.at(edge_key(f.endpoints[0], f.endpoints[1])));
    }
    out.emplace_back(x, std::move(faces));
  }
  return out;
}

// Well rates are cell averages on the Cartesian scenario grid so that the
// injected and produced volumes are exact on every resolution.
SpaceTimeFn well_source(const CaseSpec& spec) {
  const int n = spec.cells;
  const double w = spec.well_size;
  const double rate = spec.well_rate;
  return [n, w, rate](double, Point x) {
    const double h = 1.0 / n;
    const int i = std::clamp(static_cast<int>(std::floor(x.x * n)), 0, n - 1);
    const int j = std::clamp(static_cast<int>(std::floor(x.y * n)), 0, n - 1);
    const double x0 = i * h, y0 = j * h;
    const double in = overlap(x0, x0 + h, 0.0, w) * overlap(y0, y0 + h, 0.0, w);
    const double out = overlap(x0, x0 + h, 1.0 - w, 1.0) * overlap(y0, y0 + h, 1.0 - w, 1.0);
    return rate * (in - out) / (h * h);
  };
}

FlowProblem scenario_flow(const CaseSpec& spec, const Mesh& mesh) {
  FlowProblem pb;
  pb.permeability = PermeabilityField::from_scalar(scenario_permeability(spec, mesh));
  pb.sigma = spec.sigma;
  if (spec.scenario == ScenarioId::Wellpair)
    pb.source = well_source(spec);
  else
    pb.dirichlet = [](double, Point x) { return 1.0 - x.x; };
  return pb;
}

TransportProblem scenario_transport(const CaseSpec& spec, const Mesh& mesh,
                                    const FlowProblem& flow) {
  TransportProblem tp;
  tp.porosity.assign(mesh.num_elements(), 1.0);
  const double c = spec.injected;
  switch (spec.scenario) {
    case ScenarioId::Barrier:
      tp.inflow = [c](double, Point) { return c; };
      break;
    case ScenarioId::Channel: {
      auto segments = spec.channel;
      tp.inflow = [c, segments](double, Point x) {
        for (const auto& r : segments)
          if (inside(r, x, 1e-12)) return c;
        return 0.0;
      };
      break;
    }
    case ScenarioId::Wellpair:
      tp.well = [c](double, Point) { return c; };
      tp.source = flow.source;
      break;
    default:
      break;
  }
  return tp;
}

}  // namespace

std::string to_string(ScenarioId id) {
  for (const auto& [k, name] : kNames)
    if (k == id) return name;
  return "unknown";
}

ScenarioId parse_scenario(const std::string& name) {
  for (const auto& [k, n] : kNames)
    if (name == n) return k;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

bool is_consistency(ScenarioId id) {
  return id == ScenarioId::ConsistencyUniform1d || id == ScenarioId::ConsistencyNonuniform1d ||
         id == ScenarioId::ConsistencyUniform2d || id == ScenarioId::ConsistencyDistorted ||
         id == ScenarioId::ConsistencyNonmatching;
}

bool is_convergence(ScenarioId id) {
  return id == ScenarioId::ConvergenceSmooth || id == ScenarioId::ConvergenceDistortedFamily;
}

void CaseSpec::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("case: sigma must be positive");
  if (is_convergence(scenario) && levels < 2)
    throw std::invalid_argument("case: a convergence study needs at least two levels");
  if (is_consistency(scenario) || is_convergence(scenario)) {
    if (averaging != Averaging::Central)
      throw std::invalid_argument("case: K = I here, use central averaging");
    return;
  }
  if (cells < 1) throw std::invalid_argument("case: cells must be positive");
  if (!(dt > 0.0) || !(end_time > 0.0))
    throw std::invalid_argument("case: dt and end_time must be positive");
  if (!(low_permeability > 0.0))
    throw std::invalid_argument("case: low_permeability must be positive");
  if (!(injected >= 0.0)) throw std::invalid_argument("case: injected concentration must be >= 0");
  if (snapshot_every < 0) throw std::invalid_argument("case: snapshot_every must be >= 0");
  if (scenario == ScenarioId::Wellpair) {
    if (mode != DirichletMode::Strong)
      throw std::invalid_argument("case: the well pair has no Dirichlet boundary, use SD");
    if (!(well_size > 0.0 && well_size < 0.5))
      throw std::invalid_argument("case: well_size must lie in (0, 0.5)");
  }
  if (scenario == ScenarioId::Barrier &&
      !(barrier.x0 >= 0.0 && barrier.x1 <= 1.0 && barrier.y0 >= 0.0 && barrier.y1 <= 1.0 &&
        barrier.x0 < barrier.x1 && barrier.y0 < barrier.y1))
    throw std::invalid_argument("case: barrier block must lie inside the unit square");
  if (scenario == ScenarioId::Channel && channel.empty())
    throw std::invalid_argument("case: channel needs at least one segment");
}

std::string CaseSpec::label() const {
  std::string avg = averaging == Averaging::Harmonic ? "theta" : "1/2";
  std::string head = std::string(mode_tag(mode));
  if (!is_consistency(scenario) && !is_convergence(scenario)) head += "," + avg;
  if (!weights) return "CG(" + head + ")";
  return "PP(" + head + "," + (*weights == WeightScheme::Uniform ? "L2" : "wL2") + ")";
}

AnalyticValues analytic_case(double t, double x, double y) {
  const double a = t + x - y;
  const double s = std::sin(a), c = std::cos(a);
  return {c, s, 2.0 * c - s, (1.0 + 4.0 * s) * c, {s, -s}};
}

double analytic_normal_flux(double t, Point x, Vec2 n) {
  return dot(analytic_case(t, x.x, x.y).u, n);
}

FlowProblem analytic_flow_problem(const Mesh& mesh, double sigma) {
  FlowProblem pb;
  pb.permeability = PermeabilityField::uniform(mesh.num_elements(), 1.0);
  pb.beta = [](double, Point) { return 1.0; };
  pb.source = [](double t, Point x) { return analytic_case(t, x.x, x.y).q; };
  pb.dirichlet = [](double t, Point x) { return analytic_case(t, x.x, x.y).p; };
  pb.neumann = analytic_normal_flux;
  pb.initial = pb.dirichlet;
  pb.sigma = sigma;
  return pb;
}

TransportProblem analytic_transport_problem(const Mesh& mesh) {
  TransportProblem tp;
  tp.porosity.assign(mesh.num_elements(), 1.0);
  tp.initial = [](double t, Point x) { return analytic_case(t, x.x, x.y).c; };
  tp.inflow = tp.initial;
  tp.forcing = [](double t, Point x) { return analytic_case(t, x.x, x.y).f; };
  return tp;
}

Mesh consistency_grid(ScenarioId id, double distortion, std::uint64_t seed) {
  switch (id) {
    case ScenarioId::ConsistencyUniform1d:
      return build_cartesian(4, 1);
    case ScenarioId::ConsistencyNonuniform1d:
      return build_tensor({0.0, 0.125, 0.25, 0.5, 1.0}, {0.0, 1.0});
    case ScenarioId::ConsistencyUniform2d:
      return build_cartesian(4, 4);
    case ScenarioId::ConsistencyDistorted:
      return distort(build_cartesian(4, 4), distortion, seed);
    case ScenarioId::ConsistencyNonmatching:
      // 2x2 with the lower left and upper right cells split
      return refine_cells(build_cartesian(2, 2), {0, 3});
    default:
      throw std::invalid_argument("consistency_grid: not a consistency scenario");
  }
}

Mesh distorted_family_mesh(int level) {
  if (level < 0) throw std::invalid_argument("distorted_family_mesh: level must be >= 0");
  // Coarse grid: 4x4 with the diagonal cells split, then jittered.
  Mesh m = distort(refine_cells(build_cartesian(4, 4), {0, 5, 10, 15}), 0.4, 7);
  for (int i = 0; i < level; ++i) m = refine_global(m);
  return m;
}

ConsistencyResult run_consistency(const CaseSpec& spec) {
  spec.validate();
  if (!is_consistency(spec.scenario))
    throw std::invalid_argument("run_consistency: not a consistency scenario");
  const Mesh mesh = consistency_grid(spec.scenario, spec.distortion, spec.seed);
  const FlowProblem pb = consistency_problem(mesh, spec.sigma);
  const NodalField p = solve_stationary(mesh, pb, spec.mode, 0.0, spec.flow_solver);
  const FaceField u = extract_flux(mesh, p, pb, spec.mode, spec.averaging);
  const SourceSpec src = SourceSpec::stationary(mesh, pb.source, 0.0, pb.quadrature_order);
  const bool fixed = spec.mode == DirichletMode::Recovery;
  const auto pp = postprocess_flux(u, src, mesh, spec.weights.value_or(WeightScheme::Uniform),
                                   pb.permeability, spec.pp_solver, fixed);
  const VelocityFn exact = [](double, Point x) { return Vec2{2.0 * x.x, 0.0}; };

  ConsistencyResult r;
  const auto rep = conservation_report(u, src, mesh);
  r.residual_u = rep.norm;
  r.imbalance_u = rep.global_imbalance;
  r.residual_v = pp.report.norm;
  r.imbalance_v = pp.report.global_imbalance;
  r.error_u = face_norm_error(u, mesh, exact, 0.0);
  r.error_v = face_norm_error(pp.flux, mesh, exact, 0.0);
  r.mesh = mesh;
  r.flux_u = u;
  r.flux_v = pp.flux;
  r.source = src.integrated;

  if (spec.scenario == ScenarioId::ConsistencyDistorted) {
    const Mesh base = build_cartesian(4, 4);
    for (const auto& [x, faces] : distorted_lines(base, mesh)) {
      double left = 0.0;
      for (const auto& el : base.elements())
        if (base.centroid(el.id).x < x) left += mesh.area(el.id);
      r.lines.push_back({x, 2.0 * left, integrate_flux_on_faces(u, mesh, faces),
                         integrate_flux_on_faces(pp.flux, mesh, faces)});
    }
  } else {
    std::vector<double> xs;
    if (spec.scenario == ScenarioId::ConsistencyNonmatching) {
      xs = {0.0, 0.5, 1.0};
    } else {
      for (const auto& n : mesh.nodes())
        if (std::abs(n.y) < 1e-14) xs.push_back(n.x);
      std::sort(xs.begin(), xs.end());
    }
    for (double x : xs)
      r.lines.push_back({x, 2.0 * x, integrate_flux_on_line(u, mesh, x),
                         integrate_flux_on_line(pp.flux, mesh, x)});
  }
  return r;
}

std::vector<double> compute_rates(const std::vector<double>& errors,
                                  const std::vector<double>& hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("compute_rates: size mismatch");
  std::vector<double> out;
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (!(hs[k] > 0.0 && hs[k] < hs[k - 1]))
      throw std::invalid_argument("compute_rates: h must be positive and strictly decreasing");
    if (errors[k] < 0.0 || errors[k - 1] < 0.0)
      throw std::invalid_argument("compute_rates: errors must be non-negative");
    if (errors[k] == 0.0 || errors[k - 1] == 0.0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(std::log(errors[k - 1] / errors[k]) / std::log(hs[k - 1] / hs[k]));
  }
  return out;
}

const std::vector<double>& ConvergenceTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return errors[i];
  throw std::invalid_argument("convergence table has no column '" + name + "'");
}

std::vector<double> ConvergenceTable::rates(const std::string& name) const {
  return compute_rates(column(name), h);
}

ConvergenceTable run_convergence(const CaseSpec& spec, int levels) {
  CaseSpec s = spec;
  s.levels = levels;
  s.validate();
  if (!is_convergence(spec.scenario))
    throw std::invalid_argument("run_convergence: not a convergence scenario");
  const bool distorted = spec.scenario == ScenarioId::ConvergenceDistortedFamily;
  const bool fixed = spec.mode == DirichletMode::Recovery;
  const double end_time = 0.1;

  ConvergenceTable table;
  table.names = {"energy",     "flux_U",     "flux_V", "residual_U",
                 "residual_V", "conc_exact", "conc_U", "conc_V"};
  table.errors.assign(table.names.size(), {});

  for (int level = 0; level < levels; ++level) {
    const int n = 4 << level;
    const Mesh mesh = distorted ? distorted_family_mesh(level) : build_cartesian(n, n);
    const double h = distorted ? 0.25 / (1 << level) : 1.0 / n;
    const double dt = distorted ? 1.0 / (5.0 * std::pow(4.0, level + 1)) : 0.8 * h * h;
    const int steps = static_cast<int>(std::lround(end_time / dt));

    const FlowProblem pb = analytic_flow_problem(mesh, spec.sigma);
    const TransportProblem tp = analytic_transport_problem(mesh);
    const VelocityFn exact_u = [](double t, Point x) { return analytic_case(t, x.x, x.y).u; };
    const Postprocessor pp(mesh, spec.weights.value_or(WeightScheme::Uniform), pb.permeability,
                           spec.pp_solver, fixed);

    NodalField p = interpolate(mesh, pb.initial, 0.0);
    TransportState conc[3] = {initial_state(mesh, tp), initial_state(mesh, tp),
                              initial_state(mesh, tp)};
    FaceField u, v;
    double res_u = 0.0, res_v = 0.0, t = 0.0;
    for (int k = 1; k <= steps; ++k) {
      t = k * dt;
      const Transient tr{dt, p};
      NodalField pn = advance_timestep(mesh, pb, spec.mode, p, t, dt, spec.flow_solver);
      u = extract_flux(mesh, pn, pb, spec.mode, spec.averaging, t, &tr);
      const auto src = SourceSpec::transient(mesh, pb.source, pb.beta, pn, p, t, dt,
                                             pb.quadrature_order);
      res_u = conservation_report(u, src, mesh).norm;
      const auto post = pp.apply(u, src);
      v = post.flux;
      res_v = post.report.norm;
      p = std::move(pn);
      const FaceField e = sample_flux(mesh, exact_u, t);
      const FaceField* drive[3] = {&e, &u, &v};
      for (int i = 0; i < 3; ++i)
        conc[i] = advance_transport(conc[i], *drive[i], mesh, tp, dt, spec.transport_solver);
    }

    const GradientFn grad = [](double tt, Point x) {
      const Vec2 w = analytic_case(tt, x.x, x.y).u;
      return Vec2{-w.x, -w.y};
    };
    const auto fe = compute_errors(mesh, p, pb.dirichlet, grad, pb.permeability, t);
    const double vals[] = {fe.energy,
                           face_norm_error(u, mesh, exact_u, t, FaceNorm::HWeighted),
                           face_norm_error(v, mesh, exact_u, t, FaceNorm::HWeighted),
                           res_u,
                           res_v,
                           concentration_error(conc[0].c, mesh, tp.initial, t),
                           concentration_error(conc[1].c, mesh, tp.initial, t),
                           concentration_error(conc[2].c, mesh, tp.initial, t)};
    table.h.push_back(h);
    for (std::size_t i = 0; i < table.names.size(); ++i) table.errors[i].push_back(vals[i]);
  }
  return table;
}

SpaceTimeFn scenario_source(const CaseSpec& spec) {
  return spec.scenario == ScenarioId::Wellpair ? well_source(spec) : SpaceTimeFn(zero_fn);
}

Mesh scenario_mesh(const CaseSpec& spec) {
  if (spec.scenario == ScenarioId::Wellpair)
    return build_cartesian(spec.cells, spec.cells, {},
                           {FaceMarker::Neumann, FaceMarker::Neumann, FaceMarker::Neumann,
                            FaceMarker::Neumann});
  return build_cartesian(spec.cells, spec.cells);
}

std::vector<bool> scenario_region(const CaseSpec& spec, const Mesh& mesh) {
  std::vector<bool> out(mesh.num_elements(), false);
  for (const auto& el : mesh.elements()) {
    const Point c = mesh.centroid(el.id);
    switch (spec.scenario) {
      case ScenarioId::Barrier:
        out[ix(el.id)] = inside(spec.barrier, c);
        break;
      case ScenarioId::Channel:
        out[ix(el.id)] = std::none_of(spec.channel.begin(), spec.channel.end(),
                                      [&](const Rectangle& r) { return inside(r, c); });
        break;
      default:
        break;
    }
  }
  return out;
}

CellField scenario_permeability(const CaseSpec& spec, const Mesh& mesh) {
  CellField k(mesh.num_elements(), 1.0);
  if (spec.scenario == ScenarioId::Wellpair) {
    for (const auto& el : mesh.elements())
      if (mesh.centroid(el.id).x > 0.5) k[ix(el.id)] = spec.low_permeability;
    return k;
  }
  const auto region = scenario_region(spec, mesh);
  for (std::size_t e = 0; e < k.size(); ++e)
    if (region[e]) k[e] = spec.low_permeability;
  return k;
}

ScenarioResult run_scenario(const CaseSpec& spec) {
  spec.validate();
  if (spec.scenario != ScenarioId::Barrier && spec.scenario != ScenarioId::Channel &&
      spec.scenario != ScenarioId::Wellpair)
    throw std::invalid_argument("run_scenario: not a flow/transport scenario");

  ScenarioResult r;
  r.mesh = scenario_mesh(spec);
  const Mesh& mesh = r.mesh;
  r.permeability = scenario_permeability(spec, mesh);
  const FlowProblem pb = scenario_flow(spec, mesh);
  const TransportProblem tp = scenario_transport(spec, mesh, pb);

  const NodalField p = solve_stationary(mesh, pb, spec.mode, 0.0, spec.flow_solver);
  r.flux_u = extract_flux(mesh, p, pb, spec.mode, spec.averaging);
  const SourceSpec src = SourceSpec::stationary(mesh, pb.source, 0.0, pb.quadrature_order);
  r.residual_u = conservation_report(r.flux_u, src, mesh).norm;
  r.flux = r.flux_u;
  if (spec.weights) {
    const auto pp = postprocess_flux(r.flux_u, src, mesh, *spec.weights, pb.permeability,
                                     spec.pp_solver, spec.mode == DirichletMode::Recovery);
    r.flux = pp.flux;
    r.residual_v = pp.report.norm;
    r.pp_iterations = pp.iterations;
  }

  const bool wells = spec.scenario == ScenarioId::Wellpair;
  const double c_bar = std::max(spec.injected, 0.0);
  const int steps = static_cast<int>(std::lround(spec.end_time / spec.dt));
  TransportState state = initial_state(mesh, tp);
  for (int k = 1; k <= steps; ++k) {
    state = advance_transport(state, r.flux, mesh, tp, spec.dt, spec.transport_solver);
    const auto [lo, hi] = std::minmax_element(state.c.begin(), state.c.end());
    r.series.push_back({state.time, overshoot(state.c, c_bar, mesh), *lo, *hi,
                        wells ? production_rate(state.c, mesh, tp, state.time) : 0.0});
    if (spec.snapshot_every > 0 && k % spec.snapshot_every == 0)
      r.snapshots.emplace_back(state.time, state.c);
  }
  if (r.snapshots.empty() || r.snapshots.back().first != state.time)
    r.snapshots.emplace_back(state.time, state.c);
  r.concentration = state.c;

  const auto region = scenario_region(spec, mesh);
  double mass = 0.0, area = 0.0;
  for (const auto& el : mesh.elements())
    if (region[ix(el.id)]) {
      mass += mesh.area(el.id) * state.c[ix(el.id)];
      area += mesh.area(el.id);
    }
  r.region_mean = area > 0.0 ? mass / area : 0.0;

  if (wells) {
    double peak = 0.0;
    for (const auto& s : r.series) peak = std::max(peak, std::abs(s.production));
    if (peak > 0.0)
      for (const auto& s : r.series)
        if (std::abs(s.production) > 0.01 * peak) {
          r.breakthrough = s.time;
          break;
        }
  }
  return r;
}

std::vector<SolverTrend> barrier_solver_trends(int cells, const std::vector<double>& k_low,
                                               double tolerance) {
  std::vector<SolverTrend> out;
  for (double k : k_low) {
    CaseSpec spec;
    spec.scenario = ScenarioId::Barrier;
    spec.cells = cells;
    spec.low_permeability = k;
    spec.averaging = Averaging::Harmonic;
    spec.validate();
    const Mesh mesh = scenario_mesh(spec);
    const FlowProblem pb = scenario_flow(spec, mesh);

    SolverConfig plain{tolerance, 100000, Preconditioner::None};
    SolverConfig ssor{tolerance, 100000, Preconditioner::SSOR, 1.5};
    const ReducedSystem rs = reduce_flow_system(mesh, pb, DirichletMode::Strong, 0.0);
    out.push_back({"flow", k, rs.matrix.size(), cg_solve(rs.matrix, rs.rhs, plain).iterations,
                   cg_solve(rs.matrix, rs.rhs, ssor).iterations});

    const NodalField p = solve_stationary(mesh, pb, DirichletMode::Strong, 0.0, {tolerance});
    const FaceField u = extract_flux(mesh, p, pb, DirichletMode::Strong, Averaging::Harmonic);
    const SourceSpec src = SourceSpec::stationary(mesh, pb.source, 0.0);
    for (auto [name, w] : {std::pair{"pp-L2", WeightScheme::Uniform},
                           std::pair{"pp-wL2", WeightScheme::InversePermeability}}) {
      const Postprocessor a(mesh, w, pb.permeability, plain);
      const Postprocessor b(mesh, w, pb.permeability, ssor);
      out.push_back({name, k, mesh.num_elements(), a.apply(u, src).iterations,
                     b.apply(u, src).iterations});
    }
  }
  return out;
}

}  // namespace consflux
