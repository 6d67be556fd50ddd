#pragma once

// Bilinear (Q1) reference element on [0,1]^2 and Gauss rules.

#include <array>
#include <cmath>
#include <vector>

#include "consflux/mesh.hpp"

namespace consflux::q1 {

struct RefPoint {
  double xi = 0.0;
  double eta = 0.0;
};

struct QuadraturePoint {
  double s = 0.0;
  double weight = 0.0;
};

/// n-point Gauss-Legendre rule on [0,1] (n = 1..5).
const std::vector<QuadraturePoint>& gauss_1d(int n);

inline const std::array<QuadraturePoint, 2>& face_gauss() {
  static const std::array<QuadraturePoint, 2> rule = {
      QuadraturePoint{0.5 - 0.5 / std::sqrt(3.0), 0.5},
      QuadraturePoint{0.5 + 0.5 / std::sqrt(3.0), 0.5}};
  return rule;
}

inline std::array<double, 4> shape(RefPoint p) {
  return {(1 - p.xi) * (1 - p.eta), p.xi * (1 - p.eta), p.xi * p.eta, (1 - p.xi) * p.eta};
}

/// Reference gradients (d/dxi, d/deta) of the four shape functions.
inline std::array<Vec2, 4> shape_grad(RefPoint p) {
  return {Vec2{-(1 - p.eta), -(1 - p.xi)}, Vec2{(1 - p.eta), -p.xi}, Vec2{p.eta, p.xi},
          Vec2{-p.eta, (1 - p.xi)}};
}

/// Reference coordinates of parameter s on local edge k (vertex k to k+1).
inline RefPoint edge_point(int k, double s) {
  switch (k) {
    case 0: return {s, 0.0};
    case 1: return {1.0, s};
    case 2: return {1.0 - s, 1.0};
    default: return {0.0, 1.0 - s};
  }
}

struct Jacobian {
  double a = 1, b = 0, c = 0, d = 1;  // [[dx/dxi, dx/deta], [dy/dxi, dy/deta]]
  double det() const { return a * d - b * c; }
};

class CellGeometry {
 public:
  explicit CellGeometry(const std::array<Point, 4>& v) : v_(v) {}
  CellGeometry(const Mesh& mesh, int element);

  Point map(RefPoint p) const;
  Jacobian jacobian(RefPoint p) const;
  /// Physical gradients of the four shape functions.
  std::array<Vec2, 4> grad(RefPoint p) const;
  const std::array<Point, 4>& vertices() const { return v_; }

 private:
  std::array<Point, 4> v_;
};

/// Tensor Gauss rule on the reference square, weights include no Jacobian.
struct CellQuadPoint {
  RefPoint ref;
  double weight;
};
const std::vector<CellQuadPoint>& cell_gauss(int n);

}  // namespace consflux::q1
