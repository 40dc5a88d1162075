#pragma once

#include <Eigen/Dense>

namespace ibplab {

// Every catalog manifold embeds in R^3, and every catalog system is driven by
// at most three noise channels, so ambient vectors and operators are fixed-size
// 3-vectors and 3x3 matrices. Unused trailing coordinates stay zero.
inline constexpr int kAmbientMax = 3;

using Vec = Eigen::Vector3d;
using Mat = Eigen::Matrix3d;

}  // namespace ibplab
