#pragma once

#include <functional>
#include <map>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/errors.hpp"
#include "qem/gates.hpp"
#include "qem/rng.hpp"

namespace qem {

struct NoiseModel {
  double p1 = 0.0;            // depolarizing probability after each 1-qubit gate
  double p2 = 0.0;            // depolarizing probability after each 2-qubit gate
  double readout_flip = 0.0;  // per-measurement bit-flip probability

  void validate() const {
    if (!(p1 >= 0.0 && p1 <= 1.0)) throw ConfigError("p1 must lie in [0, 1]");
    if (!(p2 >= 0.0 && p2 <= 1.0)) throw ConfigError("p2 must lie in [0, 1]");
    if (!(readout_flip >= 0.0 && readout_flip <= 0.5))
      throw ConfigError("readout_flip must lie in [0, 0.5]");
  }
};

// Row-major dim x dim density matrix over n qubits, little-endian bit order.
struct DensityMatrix {
  int n_qubits = 0;
  int dim = 0;
  std::vector<cxd> rho;

  explicit DensityMatrix(int n) : n_qubits(n), dim(1 << n) {
    if (n < 1 || n > 10) throw std::invalid_argument("density matrix supports 1..10 qubits");
    rho.assign(static_cast<size_t>(dim) * dim, cxd(0));
    rho[0] = 1.0;  // |0...0><0...0|
  }

  cxd& at(int r, int c) { return rho[static_cast<size_t>(r) * dim + c]; }
  const cxd& at(int r, int c) const { return rho[static_cast<size_t>(r) * dim + c]; }

  double trace_real() const {
    double t = 0;
    for (int i = 0; i < dim; ++i) t += at(i, i).real();
    return t;
  }

  double hermiticity_defect() const {
    double worst = 0;
    for (int r = 0; r < dim; ++r)
      for (int c = r; c < dim; ++c)
        worst = std::max(worst, std::abs(at(r, c) - std::conj(at(c, r))));
    return worst;
  }

  // rho <- U rho U† for a 1-qubit gate.
  void apply_1q(const Mat2& g, int qubit) {
    const int bit = 1 << qubit;
    for (int r0 = 0; r0 < dim; ++r0) {  // left multiply: mix row pairs
      if (r0 & bit) continue;
      cxd* row0 = &rho[static_cast<size_t>(r0) * dim];
      cxd* row1 = &rho[static_cast<size_t>(r0 | bit) * dim];
      for (int c = 0; c < dim; ++c) {
        cxd a = row0[c], b = row1[c];
        row0[c] = g[0] * a + g[1] * b;
        row1[c] = g[2] * a + g[3] * b;
      }
    }
    for (int r = 0; r < dim; ++r) {  // right multiply by U†: mix column pairs
      cxd* row = &rho[static_cast<size_t>(r) * dim];
      for (int c0 = 0; c0 < dim; ++c0) {
        if (c0 & bit) continue;
        int c1 = c0 | bit;
        cxd a = row[c0], b = row[c1];
        row[c0] = a * std::conj(g[0]) + b * std::conj(g[1]);
        row[c1] = a * std::conj(g[2]) + b * std::conj(g[3]);
      }
    }
  }

  // rho <- U rho U† for a 2-qubit gate; local matrix index packs q_low as
  // bit0, q_high as bit1.
  void apply_2q(const Mat4& g, int q_low, int q_high) {
    const int b0 = 1 << q_low, b1 = 1 << q_high;
    for (int r = 0; r < dim; ++r) {
      if (r & (b0 | b1)) continue;
      const int rows[4] = {r, r | b0, r | b1, r | b0 | b1};
      for (int c = 0; c < dim; ++c) {
        cxd in[4];
        for (int k = 0; k < 4; ++k) in[k] = rho[static_cast<size_t>(rows[k]) * dim + c];
        for (int k = 0; k < 4; ++k) {
          cxd acc = 0;
          for (int l = 0; l < 4; ++l) acc += g[static_cast<size_t>(k * 4 + l)] * in[l];
          rho[static_cast<size_t>(rows[k]) * dim + c] = acc;
        }
      }
    }
    for (int r = 0; r < dim; ++r) {
      cxd* row = &rho[static_cast<size_t>(r) * dim];
      for (int c = 0; c < dim; ++c) {
        if (c & (b0 | b1)) continue;
        const int cols[4] = {c, c | b0, c | b1, c | b0 | b1};
        cxd in[4];
        for (int k = 0; k < 4; ++k) in[k] = row[cols[k]];
        for (int k = 0; k < 4; ++k) {
          cxd acc = 0;
          for (int l = 0; l < 4; ++l) acc += in[l] * std::conj(g[static_cast<size_t>(k * 4 + l)]);
          row[cols[k]] = acc;
        }
      }
    }
  }

  // Depolarizing channel on `support`:
  //   rho <- (1-p) rho + p * (I/2^k  ⊗  Tr_support(rho))
  // where the maximally mixed factor replaces the support qubits and the
  // partial trace keeps the rest.
  void depolarize(const std::vector<int>& support, double p) {
    if (p == 0.0) return;
    const int k = static_cast<int>(support.size());
    int smask = 0;
    for (int q : support) smask |= 1 << q;
    const int dim_rest = dim >> k;

    // Enumerate the global index of every (support value, rest value) pair.
    std::vector<int> rest_bits;
    for (int q = 0; q < n_qubits; ++q)
      if (!(smask & (1 << q))) rest_bits.push_back(q);
    std::vector<int> rest_to_global(static_cast<size_t>(dim_rest), 0);
    for (int r = 0; r < dim_rest; ++r) {
      int g = 0;
      for (size_t b = 0; b < rest_bits.size(); ++b)
        if (r & (1 << b)) g |= 1 << rest_bits[b];
      rest_to_global[static_cast<size_t>(r)] = g;
    }
    std::vector<int> sup_to_global(static_cast<size_t>(1 << k), 0);
    for (int s = 0; s < (1 << k); ++s) {
      int g = 0;
      for (int b = 0; b < k; ++b)
        if (s & (1 << b)) g |= 1 << support[static_cast<size_t>(b)];
      sup_to_global[static_cast<size_t>(s)] = g;
    }

    // sigma = Tr_support(rho), a dim_rest x dim_rest matrix.
    std::vector<cxd> sigma(static_cast<size_t>(dim_rest) * dim_rest, cxd(0));
    for (int ra = 0; ra < dim_rest; ++ra)
      for (int rb = 0; rb < dim_rest; ++rb) {
        cxd acc = 0;
        for (int s = 0; s < (1 << k); ++s)
          acc += at(rest_to_global[static_cast<size_t>(ra)] | sup_to_global[static_cast<size_t>(s)],
                    rest_to_global[static_cast<size_t>(rb)] | sup_to_global[static_cast<size_t>(s)]);
        sigma[static_cast<size_t>(ra) * dim_rest + rb] = acc;
      }

    for (auto& v : rho) v *= (1.0 - p);
    const double w = p / static_cast<double>(1 << k);
    for (int ra = 0; ra < dim_rest; ++ra)
      for (int rb = 0; rb < dim_rest; ++rb) {
        cxd add = w * sigma[static_cast<size_t>(ra) * dim_rest + rb];
        if (add == cxd(0)) continue;
        for (int s = 0; s < (1 << k); ++s)
          at(rest_to_global[static_cast<size_t>(ra)] | sup_to_global[static_cast<size_t>(s)],
             rest_to_global[static_cast<size_t>(rb)] | sup_to_global[static_cast<size_t>(s)]) += add;
      }
  }

  // Tr(rho * P_qubit) for a single-qubit Pauli observable.
  double pauli_expectation(int qubit, Basis basis) const {
    const int bit = 1 << qubit;
    double v = 0;
    switch (basis) {
      case Basis::Z:
        for (int i = 0; i < dim; ++i) v += (i & bit) ? -at(i, i).real() : at(i, i).real();
        break;
      case Basis::X:
        for (int i = 0; i < dim; ++i)
          if (!(i & bit)) v += 2.0 * at(i, i | bit).real();
        break;
      case Basis::Y:
        // Tr(rho Y) over one qubit: pairs (a, a|bit) contribute
        // i*rho[a, a|bit] - i*conj(rho[a, a|bit]) = -2 Im rho[a, a|bit].
        for (int i = 0; i < dim; ++i)
          if (!(i & bit)) v += -2.0 * at(i, i | bit).imag();
        break;
    }
    return v;
  }
};

// Called after every noise-channel application (i.e. once per gate) so tests
// can audit trace preservation and positivity along the trajectory.
using StateAudit = std::function<void(const DensityMatrix&)>;

// Evolve |0..0> through the native circuit under depolarizing noise with all
// probabilities scaled by noise_scale, then return exact expectation values
// (no shot sampling) for the measured qubits, with the readout flip applied
// as <P> -> (1-2r)<P>.
inline std::map<int, double> simulate(const Circuit& c, const NoiseModel& noise,
                                      double noise_scale = 1.0,
                                      const StateAudit& audit = nullptr) {
  if (c.stage != Stage::native)
    throw std::invalid_argument("simulate requires a native-stage circuit");
  validate_circuit(c);
  noise.validate();
  if (!(noise_scale >= 1.0)) throw std::invalid_argument("noise scale must be >= 1");
  if (noise_scale * noise.p2 > 1.0)
    throw std::invalid_argument("noise scale takes p2 beyond 1; rejected");
  const double p1 = std::min(1.0, noise_scale * noise.p1);
  const double p2 = std::min(1.0, noise_scale * noise.p2);

  DensityMatrix dm(c.n_qubits);
  for (const auto& g : c.gates) {
    if (arity(g.kind) == 1) {
      dm.apply_1q(gate_matrix_1q(g.kind, g.angle), g.qubits[0]);
      dm.depolarize(g.qubits, p1);
    } else {
      dm.apply_2q(gate_matrix_2q(g.kind, g.angle), g.qubits[0], g.qubits[1]);
      dm.depolarize(g.qubits, p2);
    }
    if (audit) audit(dm);
  }

  std::map<int, double> out;
  const double readout = 1.0 - 2.0 * noise.readout_flip;
  for (const auto& m : c.measured)
    out[m.qubit] = readout * dm.pauli_expectation(m.qubit, m.basis);
  return out;
}

// Finite-shot estimates: per qubit, Binomial(shots, (1+<P>)/2)/shots mapped
// back to [-1, 1]. Deterministic given the seed; map iteration order is the
// sorted qubit order, so draws are reproducible.
inline std::map<int, double> sample_shots(const std::map<int, double>& expectations,
                                          int shots, uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  std::map<int, double> out;
  for (const auto& [qubit, value] : expectations) {
    double p = std::min(1.0, std::max(0.0, (1.0 + value) / 2.0));
    std::mt19937_64 rng = derive_stream(seed, static_cast<uint64_t>(qubit));
    long hits = 0;
    for (int s = 0; s < shots; ++s)
      if (uniform_double(rng) < p) ++hits;
    out[qubit] = 2.0 * static_cast<double>(hits) / shots - 1.0;
  }
  return out;
}

}  // namespace qem
