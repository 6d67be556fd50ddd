#include "consflux/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace consflux {

namespace {

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

std::vector<double> residual(const SparseMatrix& a, const std::vector<double>& b,
                             const std::vector<double>& x) {
  std::vector<double> r = a * x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return r;
}

std::vector<double> ssor_sweep(const SparseMatrix& a, const std::vector<double>& d, double w,
                               const std::vector<double>& r) {
  const std::size_t n = a.size();
  const auto& off = a.row_offsets();
  const auto& col = a.columns();
  const auto& val = a.values();
  // (D/w + L) u = r
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    for (std::size_t k = off[i]; k < off[i + 1] && ix(col[k]) < i; ++k) s -= val[k] * u[ix(col[k])];
    u[i] = s * w / d[i];
  }
  // v = ((2 - w)/w) D u
  for (std::size_t i = 0; i < n; ++i) u[i] *= (2.0 - w) / w * d[i];
  // (D/w + U) z = v
  std::vector<double> z(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = u[i];
    for (std::size_t k = off[i + 1]; k-- > off[i] && ix(col[k]) > i;) s -= val[k] * z[ix(col[k])];
    z[i] = s * w / d[i];
  }
  return z;
}

class Precond {
 public:
  Precond(const SparseMatrix& a, const SolverConfig& cfg) : a_(a), cfg_(cfg) {
    if (cfg.preconditioner == Preconditioner::None) return;
    diag_ = a.diagonal();
    inv_diag_ = diag_;
    for (double& d : inv_diag_) {
      if (d == 0.0) throw std::invalid_argument("preconditioner: zero diagonal entry");
      d = 1.0 / d;
    }
  }

  std::vector<double> apply(const std::vector<double>& r) const {
    switch (cfg_.preconditioner) {
      case Preconditioner::None: return r;
      case Preconditioner::SSOR: return ssor_sweep(a_, diag_, cfg_.relaxation, r);
      case Preconditioner::Jacobi: {
        std::vector<double> z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
        return z;
      }
    }
    return r;
  }

 private:
  const SparseMatrix& a_;
  const SolverConfig& cfg_;
  std::vector<double> diag_;
  std::vector<double> inv_diag_;
};

}  // namespace

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

SparseMatrix SparseMatrix::assemble(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.col < 0 || ix(t.row) >= n || ix(t.col) >= n)
      throw std::out_of_range("assemble: triplet (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") outside " + std::to_string(n) + "x" +
                              std::to_string(n));
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m;
  m.n_ = n;
  m.offsets_.assign(n + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const auto& t = triplets[k];
    double v = 0.0;
    std::size_t j = k;
    for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j)
      v += triplets[j].value;
    m.cols_.push_back(t.col);
    m.values_.push_back(v);
    ++m.offsets_[ix(t.row) + 1];
    k = j;
  }
  for (std::size_t i = 0; i < n; ++i) m.offsets_[i + 1] += m.offsets_[i];
  return m;
}

double SparseMatrix::at(int i, int j) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[ix(i)]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[ix(i) + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
      if (ix(cols_[k]) == i) d[i] = values_[k];
  return d;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += values_[k] * x[ix(cols_[k])];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::operator*(const std::vector<double>& x) const {
  std::vector<double> y;
  multiply(x, y);
  return y;
}

double SparseMatrix::asymmetry() const {
  double amax = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      amax = std::max(amax, std::abs(values_[k]));
      diff = std::max(diff, std::abs(values_[k] - at(cols_[k], static_cast<int>(i))));
    }
  return amax > 0.0 ? diff / amax : 0.0;
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be >= 1");
  if (preconditioner == Preconditioner::SSOR && !(relaxation > 0.0 && relaxation < 2.0))
    throw std::invalid_argument("solver: SSOR relaxation must lie in (0, 2)");
}

std::vector<double> ssor_apply(const SparseMatrix& a, double w, const std::vector<double>& r) {
  if (!(w > 0.0 && w < 2.0)) throw std::invalid_argument("ssor: relaxation must lie in (0, 2)");
  const std::vector<double> d = a.diagonal();
  for (double di : d)
    if (di == 0.0) throw std::invalid_argument("ssor: zero diagonal entry");
  return ssor_sweep(a, d, w, r);
}

SolveResult cg_solve(const SparseMatrix& a, const std::vector<double>& b, const SolverConfig& cfg,
                     std::vector<double> x0, const std::vector<double>& nullspace) {
  cfg.validate();
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("cg: right-hand side size mismatch");
  if (!nullspace.empty() && nullspace.size() != n)
    throw std::invalid_argument("cg: nullspace vector size mismatch");
  const double ee = nullspace.empty() ? 0.0 : dot(nullspace, nullspace);
  auto project = [&](std::vector<double>& v) {
    if (ee == 0.0) return;
    axpy(-dot(nullspace, v) / ee, nullspace, v);
  };
  SolveResult res;
  res.x = x0.empty() ? std::vector<double>(n, 0.0) : std::move(x0);
  if (res.x.size() != n) throw std::invalid_argument("cg: initial guess size mismatch");

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  const double target = cfg.tolerance * bnorm;
  const Precond m(a, cfg);

  std::vector<double> r = residual(a, b, res.x);
  project(r);
  double rnorm = norm2(r);
  std::vector<double> z, p, ap;
  int restarts = 0;
  while (rnorm > target) {
    z = m.apply(r);
    project(z);
    p = z;
    double rz = dot(r, z);
    while (res.iterations < cfg.max_iterations) {
      a.multiply(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;  // breakdown; fall through to the true-residual check
      const double alpha = rz / pap;
      axpy(alpha, p, res.x);
      axpy(-alpha, ap, r);
      ++res.iterations;
      if (norm2(r) <= target) break;
      z = m.apply(r);
      project(z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    r = residual(a, b, res.x);
    project(r);
    const double true_norm = norm2(r);
    // Recursive residual drifted from the true one; restart from the true residual.
    if (true_norm <= target) {
      rnorm = true_norm;
      break;
    }
    if (res.iterations >= cfg.max_iterations || ++restarts > 20 || true_norm >= rnorm * 0.999999) {
      throw SolverError("cg: no convergence after " + std::to_string(res.iterations) +
                            " iterations, relative residual " + sci(true_norm / bnorm),
                        true_norm / bnorm);
    }
    rnorm = true_norm;
  }
  res.relative_residual = rnorm / bnorm;
  return res;
}

SolveResult bicgstab_solve(const SparseMatrix& a, const std::vector<double>& b,
                           const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("bicgstab: right-hand side size mismatch");
  SolveResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return res;
  const double target = cfg.tolerance * bnorm;
  const Precond m(a, cfg);

  std::vector<double> r = b;
  std::vector<double> r_hat = r;
  std::vector<double> p(n, 0.0), v(n, 0.0), s(n), t(n), phat, shat;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rnorm = norm2(r);
  int restarts = 0;
  while (rnorm > target) {
    if (res.iterations >= cfg.max_iterations)
      throw SolverError("bicgstab: no convergence after " + std::to_string(res.iterations) +
                            " iterations, relative residual " + sci(rnorm / bnorm),
                        rnorm / bnorm);
    double rho_new = dot(r_hat, r);
    if (rho_new == 0.0 || omega == 0.0) {
      // restart with the current residual as shadow vector
      if (++restarts > 20) throw SolverError("bicgstab: breakdown", rnorm / bnorm);
      r_hat = r;
      rho_new = dot(r_hat, r);
      rho = alpha = omega = 1.0;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    phat = m.apply(p);
    a.multiply(phat, v);
    alpha = rho / dot(r_hat, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    ++res.iterations;
    if (norm2(s) <= target) {
      axpy(alpha, phat, res.x);
      r = residual(a, b, res.x);
      rnorm = norm2(r);
      if (rnorm <= target) break;
      continue;
    }
    shat = m.apply(s);
    a.multiply(shat, t);
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = norm2(r);
    if (rnorm <= target) {
      r = residual(a, b, res.x);
      rnorm = norm2(r);
    }
  }
  res.relative_residual = rnorm / bnorm;
  return res;
}

void write_matrix_market(const SparseMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.size() << ' ' << a.size() << ' ' << a.nonzeros() << '\n';
  out << std::setprecision(17);
  const auto& off = a.row_offsets();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      out << i + 1 << ' ' << a.columns()[k] + 1 << ' ' << a.values()[k] << '\n';
}

}  // namespace consflux
