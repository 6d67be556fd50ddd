#pragma once

// Dense reference computations for the unit tests. Eigen is used here only.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "consflux/linalg.hpp"
#include "consflux/mesh.hpp"

namespace oracle {

inline Eigen::MatrixXd dense(const consflux::SparseMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto& off = a.row_offsets();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      m(static_cast<Eigen::Index>(i), a.columns()[k]) += a.values()[k];
  return m;
}

inline consflux::SparseMatrix sparse(const Eigen::MatrixXd& m) {
  std::vector<consflux::Triplet> t;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) t.push_back({static_cast<int>(i), static_cast<int>(j), m(i, j)});
  return consflux::SparseMatrix::assemble(static_cast<std::size_t>(m.rows()), t);
}

inline Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> stdvec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
