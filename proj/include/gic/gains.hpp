#pragma once

#include <Eigen/Core>

namespace gic {

/// Diagonal stiffness pair: kp on the translational axes (N/m), kr on the
/// rotational axes (N·m/rad). Both are expressed along the desired frame axes.
struct ImpedanceGains {
  Eigen::Vector3d kp = Eigen::Vector3d::Constant(100.0);
  Eigen::Vector3d kr = Eigen::Vector3d::Constant(100.0);

  Eigen::Matrix<double, 6, 1> stacked() const {
    Eigen::Matrix<double, 6, 1> out;
    out << kp, kr;
    return out;
  }
};

}  // namespace gic
