#include "consflux/flow.hpp"

#include <cmath>
#include <map>

#include "consflux/q1.hpp"

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

using Expansion = std::vector<std::pair<int, double>>;

// Each node written as a combination of unconstrained nodes.
std::vector<Expansion> node_expansions(const Mesh& mesh) {
  std::vector<Expansion> out(mesh.num_nodes());
  std::map<int, const HangingConstraint*> by_node;
  for (const auto& c : mesh.constraints()) by_node[c.node] = &c;
  std::vector<bool> done(mesh.num_nodes(), false);

  std::function<const Expansion&(int)> expand = [&](int n) -> const Expansion& {
    if (done[ix(n)]) return out[ix(n)];
    auto it = by_node.find(n);
    Expansion e;
    if (it == by_node.end()) {
      e = {{n, 1.0}};
    } else {
      std::map<int, double> acc;
      for (int k = 0; k < 2; ++k)
        for (auto [m, w] : expand(it->second->parents[ix(k)]))
          acc[m] += it->second->weights[ix(k)] * w;
      e.assign(acc.begin(), acc.end());
    }
    out[ix(n)] = std::move(e);
    done[ix(n)] = true;
    return out[ix(n)];
  };
  for (int n = 0; n < static_cast<int>(mesh.num_nodes()); ++n) expand(n);
  return out;
}

class Assembler {
 public:
  Assembler(const Mesh& mesh) : mesh_(mesh), exp_(node_expansions(mesh)) {}

  void add_matrix(std::vector<Triplet>& t, const std::array<int, 4>& v, int i, int j,
                  double value) const {
    for (auto [a, wa] : exp_[ix(v[ix(i)])])
      for (auto [b, wb] : exp_[ix(v[ix(j)])]) t.push_back({a, b, wa * wb * value});
  }
  void add_vector(std::vector<double>& r, const std::array<int, 4>& v, int i, double value) const {
    for (auto [a, wa] : exp_[ix(v[ix(i)])]) r[ix(a)] += wa * value;
  }
  void identity_on_hanging(std::vector<Triplet>& t) const {
    for (const auto& c : mesh_.constraints()) t.push_back({c.node, c.node, 1.0});
  }

 private:
  const Mesh& mesh_;
  std::vector<Expansion> exp_;
};

void apply_constraints(const Mesh& mesh, NodalField& p) {
  const auto exp = node_expansions(mesh);
  for (const auto& c : mesh.constraints()) {
    double v = 0.0;
    for (auto [m, w] : exp[ix(c.node)]) v += w * p[ix(m)];
    p[ix(c.node)] = v;
  }
}

SparseMatrix mass_matrix(const Mesh& mesh, const Assembler& as, const SpaceTimeFn& beta,
                         double t, int order) {
  std::vector<Triplet> trip;
  const auto quad = q1::cell_gauss(order);
  for (const auto& el : mesh.elements()) {
    const q1::CellGeometry geo(mesh, el.id);
    std::array<std::array<double, 4>, 4> m{};
    bool any = false;
    for (const auto& qp : quad) {
      const double b = beta(t, geo.map(qp.ref));
      if (b == 0.0) continue;
      any = true;
      const double w = qp.weight * geo.jacobian(qp.ref).det() * b;
      const auto n = q1::shape(qp.ref);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m[i][j] += w * n[i] * n[j];
    }
    if (!any) continue;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) as.add_matrix(trip, el.vertices, i, j, m[ix(i)][ix(j)]);
  }
  as.identity_on_hanging(trip);
  return SparseMatrix::assemble(mesh.num_nodes(), std::move(trip));
}

bool all_zero(const SparseMatrix& m, const Mesh& mesh) {
  // Only the hanging identity rows are present.
  return m.nonzeros() == mesh.constraints().size();
}

}  // namespace

PermeabilityField::PermeabilityField(std::vector<Tensor2> k) : k_(std::move(k)) {
  for (const auto& t : k_)
    if (!std::isfinite(t.xx) || !std::isfinite(t.xy) || !std::isfinite(t.yy) ||
        !t.positive_definite())
      throw std::invalid_argument("permeability: tensor is not symmetric positive definite");
}

PermeabilityField PermeabilityField::uniform(std::size_t num_elements, double k) {
  return PermeabilityField(std::vector<Tensor2>(num_elements, Tensor2::isotropic(k)));
}

PermeabilityField PermeabilityField::from_scalar(const std::vector<double>& k) {
  std::vector<Tensor2> t;
  t.reserve(k.size());
  for (double v : k) t.push_back(Tensor2::isotropic(v));
  return PermeabilityField(std::move(t));
}

void FlowProblem::validate(const Mesh& mesh) const {
  if (permeability.size() != mesh.num_elements())
    throw std::invalid_argument("flow: permeability has " + std::to_string(permeability.size()) +
                                " entries for " + std::to_string(mesh.num_elements()) +
                                " elements");
  if (!(sigma > 0.0)) throw std::invalid_argument("flow: penalty sigma must be positive");
  if (quadrature_order < 1 || quadrature_order > 5)
    throw std::invalid_argument("flow: quadrature order must be 1..5");
}

Vec2 pressure_gradient(const Mesh& mesh, const NodalField& p, int element, double xi, double eta) {
  const q1::CellGeometry geo(mesh, element);
  const auto g = geo.grad({xi, eta});
  const auto& v = mesh.element(element).vertices;
  Vec2 out;
  for (std::size_t k = 0; k < 4; ++k) out = out + p[ix(v[k])] * g[k];
  return out;
}

double pressure_value(const Mesh& mesh, const NodalField& p, int element, double xi, double eta) {
  const auto n = q1::shape({xi, eta});
  const auto& v = mesh.element(element).vertices;
  double out = 0.0;
  for (std::size_t k = 0; k < 4; ++k) out += n[k] * p[ix(v[k])];
  return out;
}

FlowSystem assemble_flow(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                         double t, const Transient* transient) {
  problem.validate(mesh);
  const Assembler as(mesh);
  const std::size_t n = mesh.num_nodes();
  const int order = problem.quadrature_order;
  const auto cell_quad = q1::cell_gauss(std::max(2, order));

  std::vector<Triplet> trip;
  std::vector<double> load(n, 0.0);

  for (const auto& el : mesh.elements()) {
    const q1::CellGeometry geo(mesh, el.id);
    const Tensor2& k = problem.permeability[el.id];
    std::array<std::array<double, 4>, 4> a{};
    std::array<double, 4> f{};
    for (const auto& qp : q1::cell_gauss(2)) {
      const double w = qp.weight * geo.jacobian(qp.ref).det();
      const auto g = geo.grad(qp.ref);
      for (std::size_t i = 0; i < 4; ++i) {
        const Vec2 kg = k.apply(g[i]);
        for (std::size_t j = 0; j < 4; ++j) a[i][j] += w * dot(kg, g[j]);
      }
    }
    for (const auto& qp : cell_quad) {
      const double w = qp.weight * geo.jacobian(qp.ref).det();
      const double q = problem.source(t, geo.map(qp.ref));
      const auto nshape = q1::shape(qp.ref);
      for (std::size_t i = 0; i < 4; ++i) f[i] += w * q * nshape[i];
    }

    for (const auto& inc : el.faces) {
      const Face& face = mesh.face(inc.face);
      if (!face.is_boundary()) continue;
      for (const auto& fq : q1::face_gauss()) {
        const double s = inc.s_begin + fq.s * (inc.s_end - inc.s_begin);
        const q1::RefPoint rp = q1::edge_point(inc.local_edge, s);
        const Point x = geo.map(rp);
        const double w = fq.weight * face.measure;
        const auto nshape = q1::shape(rp);
        if (face.marker == FaceMarker::Neumann) {
          const double ub = problem.neumann(t, x, face.normal);
          for (std::size_t i = 0; i < 4; ++i) f[i] -= w * ub * nshape[i];
        } else if (mode == DirichletMode::Weak) {
          const auto g = geo.grad(rp);
          const double pen = problem.sigma / face.measure;
          const double pb = problem.dirichlet(t, x);
          std::array<double, 4> kgn{};
          for (std::size_t i = 0; i < 4; ++i) kgn[i] = dot(k.apply(g[i]), face.normal);
          for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j)
              a[i][j] += w * (pen * nshape[i] * nshape[j] - kgn[j] * nshape[i] -
                              kgn[i] * nshape[j]);
            f[i] += w * (pen * pb * nshape[i] - kgn[i] * pb);
          }
        }
      }
    }

    for (int i = 0; i < 4; ++i) {
      as.add_vector(load, el.vertices, i, f[ix(i)]);
      for (int j = 0; j < 4; ++j) as.add_matrix(trip, el.vertices, i, j, a[ix(i)][ix(j)]);
    }
  }
  as.identity_on_hanging(trip);

  FlowSystem sys;
  sys.stiffness = SparseMatrix::assemble(n, std::move(trip));
  sys.load = std::move(load);
  if (transient) {
    if (!(transient->dt > 0.0)) throw std::invalid_argument("flow: time step must be positive");
    if (transient->p_prev.size() != n)
      throw std::invalid_argument("flow: previous solution has the wrong size");
    sys.mass_new = mass_matrix(mesh, as, problem.beta, t, order);
    sys.mass_old = mass_matrix(mesh, as, problem.beta, t - transient->dt, order);
  }
  std::set<int> dn;
  for (const auto& f : mesh.faces())
    if (f.marker == FaceMarker::Dirichlet) dn.insert(f.endpoints.begin(), f.endpoints.end());
  sys.dirichlet_nodes.assign(dn.begin(), dn.end());
  return sys;
}

ReducedSystem reduce_flow_system(const Mesh& mesh, const FlowProblem& problem,
                                 DirichletMode mode, double t, const Transient* transient) {
  const FlowSystem sys = assemble_flow(mesh, problem, mode, t, transient);
  const std::size_t n = mesh.num_nodes();

  std::vector<Triplet> trip;
  std::vector<double> rhs = sys.load;
  auto push = [&](const SparseMatrix& m, double scale) {
    const auto& off = m.row_offsets();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = off[i]; k < off[i + 1]; ++k)
        trip.push_back({static_cast<int>(i), m.columns()[k], scale * m.values()[k]});
  };
  push(sys.stiffness, 1.0);
  bool has_mass = false;
  if (transient && !all_zero(sys.mass_new, mesh)) {
    has_mass = true;
    // The hanging identity rows of the mass matrices must not alter the stiffness rows.
    std::vector<Triplet> before = std::move(trip);
    trip.clear();
    push(sys.mass_new, 1.0 / transient->dt);
    for (auto& tr : trip)
      if (mesh.is_hanging(tr.row)) tr.value = 0.0;
    trip.insert(trip.end(), before.begin(), before.end());
    const auto mp = sys.mass_old * transient->p_prev;
    for (std::size_t i = 0; i < n; ++i)
      if (!mesh.is_hanging(static_cast<int>(i))) rhs[i] += mp[i] / transient->dt;
  }
  SparseMatrix a = SparseMatrix::assemble(n, std::move(trip));

  // Previous step as the starting guess.
  NodalField p = transient && transient->p_prev.size() == n ? transient->p_prev : NodalField(n, 0.0);
  const bool strong = mode != DirichletMode::Weak && !sys.dirichlet_nodes.empty();
  if (strong) {
    std::vector<bool> fixed(n, false);
    for (int d : sys.dirichlet_nodes) {
      fixed[ix(d)] = true;
      p[ix(d)] = problem.dirichlet(t, mesh.node(d));
    }
    std::vector<Triplet> reduced;
    const auto& off = a.row_offsets();
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        reduced.push_back({static_cast<int>(i), static_cast<int>(i), 1.0});
        rhs[i] = p[i];
        continue;
      }
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
        const int j = a.columns()[k];
        if (fixed[ix(j)])
          rhs[i] -= a.values()[k] * p[ix(j)];
        else
          reduced.push_back({static_cast<int>(i), j, a.values()[k]});
      }
    }
    a = SparseMatrix::assemble(n, std::move(reduced));
  }

  ReducedSystem out;
  out.singular = !mesh.has_dirichlet_boundary() && !has_mass;
  out.matrix = std::move(a);
  out.rhs = std::move(rhs);
  out.initial = std::move(p);
  return out;
}

namespace {

NodalField solve_system(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                        double t, const Transient* transient, const SolverConfig& cfg) {
  const std::size_t n = mesh.num_nodes();
  ReducedSystem rs = reduce_flow_system(mesh, problem, mode, t, transient);
  std::vector<double>& rhs = rs.rhs;
  const bool singular = rs.singular;
  if (singular) {
    // Remove the component along the constant nullspace vector of the free nodes.
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!mesh.is_hanging(static_cast<int>(i))) {
        sum += rhs[i];
        count += 1.0;
      }
    for (std::size_t i = 0; i < n; ++i)
      if (!mesh.is_hanging(static_cast<int>(i))) rhs[i] -= sum / count;
  }

  std::vector<double> kernel;
  if (singular) {
    kernel.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (!mesh.is_hanging(static_cast<int>(i))) kernel[i] = 1.0;
  }
  NodalField p = cg_solve(rs.matrix, rhs, cfg, rs.initial, kernel).x;
  apply_constraints(mesh, p);

  if (singular) {
    double integral = 0.0;
    for (const auto& el : mesh.elements()) {
      const q1::CellGeometry geo(mesh, el.id);
      for (const auto& qp : q1::cell_gauss(2))
        integral += qp.weight * geo.jacobian(qp.ref).det() *
                    pressure_value(mesh, p, el.id, qp.ref.xi, qp.ref.eta);
    }
    const double mean = integral / mesh.total_area();
    for (double& v : p) v -= mean;
  }
  return p;
}

}  // namespace

NodalField solve_stationary(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                            double t, const SolverConfig& cfg) {
  return solve_system(mesh, problem, mode, t, nullptr, cfg);
}

NodalField advance_timestep(const Mesh& mesh, const FlowProblem& problem, DirichletMode mode,
                            const NodalField& p_prev, double t_new, double dt,
                            const SolverConfig& cfg) {
  const Transient tr{dt, p_prev};
  return solve_system(mesh, problem, mode, t_new, &tr, cfg);
}

NodalField interpolate(const Mesh& mesh, const SpaceTimeFn& f, double t) {
  NodalField p(mesh.num_nodes());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = f(t, mesh.nodes()[i]);
  apply_constraints(mesh, p);
  return p;
}

FlowErrors compute_errors(const Mesh& mesh, const NodalField& p_h, const SpaceTimeFn& exact,
                          const GradientFn& exact_gradient, const PermeabilityField& k, double t,
                          int quadrature_order) {
  FlowErrors e;
  const auto quad = q1::cell_gauss(quadrature_order);
  for (const auto& el : mesh.elements()) {
    const q1::CellGeometry geo(mesh, el.id);
    const auto& v = el.vertices;
    for (const auto& qp : quad) {
      const double w = qp.weight * geo.jacobian(qp.ref).det();
      const Point x = geo.map(qp.ref);
      const auto nshape = q1::shape(qp.ref);
      const auto g = geo.grad(qp.ref);
      double ph = 0.0;
      Vec2 gh;
      for (std::size_t a = 0; a < 4; ++a) {
        ph += nshape[a] * p_h[ix(v[a])];
        gh = gh + p_h[ix(v[a])] * g[a];
      }
      const double dp = ph - exact(t, x);
      const Vec2 dg = gh - exact_gradient(t, x);
      e.l2 += w * dp * dp;
      e.energy += w * dot(dg, k[el.id].apply(dg));
    }
  }
  e.l2 = std::sqrt(e.l2);
  e.energy = std::sqrt(e.energy);
  return e;
}

}  // namespace consflux
