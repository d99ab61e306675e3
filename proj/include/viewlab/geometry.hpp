#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace viewlab {

inline constexpr int kVertexCount = 8;

using ClassId = std::uint32_t;

/// Vertices as columns, 3 x 8.
using Vertices3 = Eigen::Matrix<double, 3, kVertexCount>;
/// Projected vertices as columns, 2 x 8.
using View2 = Eigen::Matrix<double, 2, kVertexCount>;

}  // namespace viewlab
