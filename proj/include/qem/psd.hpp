#pragma once

#include <Eigen/Dense>

#include "qem/noise.hpp"

namespace qem {

// Smallest eigenvalue of the (Hermitian) density matrix — positivity audit
// for simulator trajectories. Kept in its own header so the simulator itself
// does not pull in Eigen.
inline double min_eigenvalue(const DensityMatrix& dm) {
  Eigen::MatrixXcd m(dm.dim, dm.dim);
  for (int r = 0; r < dm.dim; ++r)
    for (int c = 0; c < dm.dim; ++c) m(r, c) = dm.at(r, c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace qem
