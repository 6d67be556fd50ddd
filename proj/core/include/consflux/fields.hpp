#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace consflux {

/// One value per element.
using CellField = std::vector<double>;

/// One value per mesh node; hanging nodes hold their constrained value.
using NodalField = std::vector<double>;

/// Normal flux trace per face, oriented along the face normal, sampled at the
/// two face Gauss points. Traces are linear, so the mean is the Gauss average.
struct FaceField {
  std::vector<std::array<double, 2>> gauss;

  FaceField() = default;
  explicit FaceField(std::size_t num_faces) : gauss(num_faces, {0.0, 0.0}) {}

  std::size_t size() const { return gauss.size(); }
  double mean(int face) const {
    const auto& g = gauss[static_cast<std::size_t>(face)];
    return 0.5 * (g[0] + g[1]);
  }
  std::array<double, 2>& operator[](int face) { return gauss[static_cast<std::size_t>(face)]; }
  const std::array<double, 2>& operator[](int face) const {
    return gauss[static_cast<std::size_t>(face)];
  }
};

}  // namespace consflux
