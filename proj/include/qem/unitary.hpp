#pragma once

#include <complex>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/gates.hpp"

namespace qem {

// Dense 2^n x 2^n unitary of a circuit under little-endian ordering
// (qubit 0 = least significant index bit). Test oracle; n is capped at 10.

using CMatrix = std::vector<cxd>;  // row-major, dim x dim

inline void apply_1q_rows(CMatrix& u, int dim, const Mat2& g, int qubit) {
  // u <- lift(g) * u : mix row pairs differing in the qubit bit.
  const int bit = 1 << qubit;
  for (int r0 = 0; r0 < dim; ++r0) {
    if (r0 & bit) continue;
    int r1 = r0 | bit;
    cxd* row0 = &u[static_cast<size_t>(r0) * dim];
    cxd* row1 = &u[static_cast<size_t>(r1) * dim];
    for (int c = 0; c < dim; ++c) {
      cxd a = row0[c], b = row1[c];
      row0[c] = g[0] * a + g[1] * b;
      row1[c] = g[2] * a + g[3] * b;
    }
  }
}

inline void apply_2q_rows(CMatrix& u, int dim, const Mat4& g, int q_low, int q_high) {
  // Local index packs q_low as bit0 and q_high as bit1 of the 4x4 matrix.
  const int b0 = 1 << q_low, b1 = 1 << q_high;
  for (int r = 0; r < dim; ++r) {
    if (r & (b0 | b1)) continue;
    int rows[4] = {r, r | b0, r | b1, r | b0 | b1};
    for (int c = 0; c < dim; ++c) {
      cxd in[4];
      for (int k = 0; k < 4; ++k) in[k] = u[static_cast<size_t>(rows[k]) * dim + c];
      for (int k = 0; k < 4; ++k) {
        cxd acc = 0;
        for (int l = 0; l < 4; ++l) acc += g[static_cast<size_t>(k * 4 + l)] * in[l];
        u[static_cast<size_t>(rows[k]) * dim + c] = acc;
      }
    }
  }
}

inline CMatrix circuit_unitary(const Circuit& c) {
  if (c.n_qubits > 10) throw std::invalid_argument("circuit_unitary supports at most 10 qubits");
  validate_circuit(c);
  const int dim = 1 << c.n_qubits;
  CMatrix u(static_cast<size_t>(dim) * dim, cxd(0));
  for (int i = 0; i < dim; ++i) u[static_cast<size_t>(i) * dim + i] = 1.0;
  for (const auto& g : c.gates) {
    if (arity(g.kind) == 1) {
      apply_1q_rows(u, dim, gate_matrix_1q(g.kind, g.angle), g.qubits[0]);
    } else {
      apply_2q_rows(u, dim, gate_matrix_2q(g.kind, g.angle), g.qubits[0], g.qubits[1]);
    }
  }
  return u;
}

// max |(U V†)_ij - I_ij| — unitarity defect.
inline double unitarity_defect(const CMatrix& u, int dim) {
  double worst = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      cxd acc = 0;
      for (int k = 0; k < dim; ++k)
        acc += u[static_cast<size_t>(i) * dim + k] * std::conj(u[static_cast<size_t>(j) * dim + k]);
      double d = std::abs(acc - (i == j ? cxd(1) : cxd(0)));
      if (d > worst) worst = d;
    }
  }
  return worst;
}

// Entrywise max |A - e^{i phi} B| with the global phase chosen optimally
// (phi = arg tr(A† B)). Computing the residual after explicit alignment keeps
// it at rounding level (~1e-16) instead of the ~1e-8 floor that the
// cancellation-prone Frobenius form sqrt(|A|² + |B|² - 2|tr|) exhibits.
inline double phase_aligned_distance(const CMatrix& a, const CMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("matrix size mismatch");
  cxd tr = 0;
  for (size_t i = 0; i < a.size(); ++i) tr += std::conj(a[i]) * b[i];
  cxd phase = std::abs(tr) > 1e-300 ? tr / std::abs(tr) : cxd(1);
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i] / phase);
    if (d > worst) worst = d;
  }
  return worst;
}

}  // namespace qem
