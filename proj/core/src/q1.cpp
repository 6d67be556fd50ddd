#include "consflux/q1.hpp"

#include <stdexcept>

namespace consflux::q1 {

namespace {

std::vector<QuadraturePoint> build_gauss(int n) {
  // Nodes and weights on [-1,1], mapped to [0,1] below.
  std::vector<std::pair<double, double>> rule;
  switch (n) {
    case 1: rule = {{0.0, 2.0}}; break;
    case 2: {
      const double x = 1.0 / std::sqrt(3.0);
      rule = {{-x, 1.0}, {x, 1.0}};
      break;
    }
    case 3: {
      const double x = std::sqrt(3.0 / 5.0);
      rule = {{-x, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {x, 5.0 / 9.0}};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      rule = {{-b, wb}, {-a, wa}, {a, wa}, {b, wb}};
      break;
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      rule = {{-b, wb}, {-a, wa}, {0.0, 128.0 / 225.0}, {a, wa}, {b, wb}};
      break;
    }
    default: throw std::invalid_argument("gauss_1d: supported orders are 1..5");
  }
  std::vector<QuadraturePoint> out;
  out.reserve(rule.size());
  for (auto [x, w] : rule) out.push_back({0.5 * (x + 1.0), 0.5 * w});
  return out;
}

}  // namespace

const std::vector<QuadraturePoint>& gauss_1d(int n) {
  static const auto rules = [] {
    std::array<std::vector<QuadraturePoint>, 5> r;
    for (int k = 1; k <= 5; ++k) r[static_cast<std::size_t>(k - 1)] = build_gauss(k);
    return r;
  }();
  if (n < 1 || n > 5) throw std::invalid_argument("gauss_1d: supported orders are 1..5");
  return rules[static_cast<std::size_t>(n - 1)];
}

const std::vector<CellQuadPoint>& cell_gauss(int n) {
  static const auto rules = [] {
    std::array<std::vector<CellQuadPoint>, 5> r;
    for (int k = 1; k <= 5; ++k) {
      const auto& g = gauss_1d(k);
      for (const auto& gy : g)
        for (const auto& gx : g)
          r[static_cast<std::size_t>(k - 1)].push_back({{gx.s, gy.s}, gx.weight * gy.weight});
    }
    return r;
  }();
  if (n < 1 || n > 5) throw std::invalid_argument("cell_gauss: supported orders are 1..5");
  return rules[static_cast<std::size_t>(n - 1)];
}

CellGeometry::CellGeometry(const Mesh& mesh, int element) {
  const auto& v = mesh.element(element).vertices;
  for (int k = 0; k < 4; ++k) v_[static_cast<std::size_t>(k)] = mesh.node(v[static_cast<std::size_t>(k)]);
}

Point CellGeometry::map(RefPoint p) const {
  const auto n = shape(p);
  Point x;
  for (std::size_t k = 0; k < 4; ++k) x = x + n[k] * v_[k];
  return x;
}

Jacobian CellGeometry::jacobian(RefPoint p) const {
  const auto g = shape_grad(p);
  Jacobian j{0, 0, 0, 0};
  for (std::size_t k = 0; k < 4; ++k) {
    j.a += v_[k].x * g[k].x;
    j.b += v_[k].x * g[k].y;
    j.c += v_[k].y * g[k].x;
    j.d += v_[k].y * g[k].y;
  }
  return j;
}

std::array<Vec2, 4> CellGeometry::grad(RefPoint p) const {
  const auto j = jacobian(p);
  const double det = j.det();
  const auto g = shape_grad(p);
  std::array<Vec2, 4> out;
  // J^{-T} applied to reference gradients.
  for (std::size_t k = 0; k < 4; ++k) {
    out[k].x = (j.d * g[k].x - j.c * g[k].y) / det;
    out[k].y = (-j.b * g[k].x + j.a * g[k].y) / det;
  }
  return out;
}

}  // namespace consflux::q1
