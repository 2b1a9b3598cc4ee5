#pragma once

#include <Eigen/Dense>

namespace flowlin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest dimension the dense small-matrix kernels accept.
inline constexpr int kMaxDim = 32;

/// Radius (relative to 1 + ‖x*‖) inside which a state is treated as the
/// equilibrium itself.
inline constexpr double kEquilibriumSnap = 1e-13;

inline double snap_radius(const Vec& equilibrium) {
    return kEquilibriumSnap * (1.0 + equilibrium.norm());
}

}  // namespace flowlin
