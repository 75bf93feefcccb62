#pragma once

#include <utility>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/errors.hpp"

namespace qem {

// Digital noise amplification: each gate G becomes G,(P†,P)×k where the pair
// multiplies to the identity, so the unitary is unchanged while the gate
// count (and with it the per-gate noise exposure) grows by the odd factor.
// ecr, x, id are involutions and rz inverts by negating the angle, so those
// use the literal (G†,G). sx† is not a single native gate; an x,x identity
// pair on the same wire stands in, which preserves both the count contract
// (factor * |gates|) and the unitary.
inline Circuit fold_circuit(const Circuit& c, int factor) {
  if (c.stage != Stage::native)
    throw std::invalid_argument("fold_circuit requires a native-stage circuit");
  if (factor < 1 || factor % 2 == 0)
    throw std::invalid_argument("folding factor must be an odd positive integer");
  if (factor == 1) return c;

  const int k = (factor - 1) / 2;
  Circuit out;
  out.n_qubits = c.n_qubits;
  out.measured = c.measured;
  out.stage = Stage::native;
  int next = 0;
  auto emit = [&](GateKind kind, const std::vector<int>& qs, double angle) {
    out.gates.push_back({next, kind, qs, angle, next});
    ++next;
  };
  for (const auto& g : c.gates) {
    emit(g.kind, g.qubits, g.angle);
    for (int rep = 0; rep < k; ++rep) {
      switch (g.kind) {
        case GateKind::ecr:
        case GateKind::x:
        case GateKind::id:
          emit(g.kind, g.qubits, 0.0);
          emit(g.kind, g.qubits, 0.0);
          break;
        case GateKind::rz:
          emit(GateKind::rz, g.qubits, normalize_angle(-g.angle));
          emit(GateKind::rz, g.qubits, g.angle);
          break;
        case GateKind::sx:
          emit(GateKind::x, g.qubits, 0.0);
          emit(GateKind::x, g.qubits, 0.0);
          break;
        default:
          throw std::invalid_argument("fold_circuit: unexpected gate kind");
      }
    }
  }
  return out;
}

enum class Extrapolation { linear, richardson };

// Extrapolate (noise factor, value) pairs to zero noise. `linear` fits a
// least-squares line; `richardson` is the exact degree-(n-1) polynomial
// interpolant. Output is clamped to the physical range [-1, 1].
inline double zne_extrapolate(const std::vector<std::pair<double, double>>& points,
                              Extrapolation method) {
  if (points.size() < 2)
    throw std::invalid_argument("zne_extrapolate needs at least two points");
  for (size_t i = 0; i < points.size(); ++i)
    for (size_t j = i + 1; j < points.size(); ++j)
      if (points[i].first == points[j].first)
        throw std::invalid_argument("zne_extrapolate: duplicate noise factor");

  double value;
  if (method == Extrapolation::linear) {
    double mx = 0, my = 0;
    for (const auto& [x, y] : points) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0, sxx = 0;
    for (const auto& [x, y] : points) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    value = my - (sxy / sxx) * mx;  // intercept at lambda = 0
  } else {
    // Lagrange interpolation evaluated at 0.
    value = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      double w = 1;
      for (size_t j = 0; j < points.size(); ++j) {
        if (j == i) continue;
        w *= points[j].first / (points[j].first - points[i].first);
      }
      value += w * points[i].second;
    }
  }
  return std::min(1.0, std::max(-1.0, value));
}

}  // namespace qem
