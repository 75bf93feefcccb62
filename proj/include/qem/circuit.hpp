#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "qem/gates.hpp"
#include "qem/rng.hpp"

namespace qem {

struct GateInstance {
  int id = 0;
  GateKind kind = GateKind::id;
  std::vector<int> qubits;   // 1 or 2 entries; for 2-qubit gates order is (control, target)
  double angle = 0.0;        // meaningful iff has_angle(kind)
  int time_index = 0;        // position in circuit order
  bool operator==(const GateInstance&) const = default;
};

struct Measurement {
  int qubit = 0;
  Basis basis = Basis::Z;
  bool operator==(const Measurement&) const = default;
};

enum class Stage { logical, native };

struct Circuit {
  int n_qubits = 0;
  std::vector<GateInstance> gates;
  std::vector<Measurement> measured;
  Stage stage = Stage::native;
  bool operator==(const Circuit&) const = default;
};

inline void validate_circuit(const Circuit& c) {
  if (c.n_qubits <= 0) throw std::invalid_argument("circuit needs at least one qubit");
  std::set<int> ids;
  int prev_time = -1;
  for (const auto& g : c.gates) {
    if (!ids.insert(g.id).second)
      throw std::invalid_argument("duplicate gate id " + std::to_string(g.id));
    if (g.time_index <= prev_time)
      throw std::invalid_argument("gate time_index must be strictly increasing");
    prev_time = g.time_index;
    if (static_cast<int>(g.qubits.size()) != arity(g.kind))
      throw std::invalid_argument(std::string("arity mismatch for ") + kind_name(g.kind));
    std::set<int> qs;
    for (int q : g.qubits) {
      if (q < 0 || q >= c.n_qubits)
        throw std::invalid_argument("qubit index out of range: " + std::to_string(q));
      if (!qs.insert(q).second)
        throw std::invalid_argument("gate qubits must be distinct");
    }
    if (has_angle(g.kind) && !std::isfinite(g.angle))
      throw std::invalid_argument("gate angle must be finite");
    if (c.stage == Stage::native && !is_native_kind(g.kind))
      throw std::invalid_argument(std::string("logical gate in native circuit: ") + kind_name(g.kind));
  }
  std::set<int> mq;
  for (const auto& m : c.measured) {
    if (m.qubit < 0 || m.qubit >= c.n_qubits)
      throw std::invalid_argument("measured qubit out of range");
    if (!mq.insert(m.qubit).second)
      throw std::invalid_argument("measured qubits must be distinct");
  }
}

struct TfimConfig {
  int n_qubits = 2;
  int trotter_steps = 1;
  double J = 1.0;   // ZZ coupling
  double h = 1.0;   // transverse field
  double dt = 0.1;  // Trotter time step
  double angle_jitter = 0.0;  // optional +/- jitter on rotation angles, off by default
};

// First-order Trotter circuit for H = -J sum Z_i Z_{i+1} - h sum X_i on a 1D
// chain: each step applies rzz(2*J*dt) to every neighbor pair, then
// rx(2*h*dt) to every qubit. All qubits are measured in Z. With jitter off
// the output is a pure function of cfg.
inline Circuit generate_tfim(const TfimConfig& cfg, uint64_t seed = 0) {
  if (cfg.n_qubits < 1 || cfg.n_qubits > 10)
    throw std::invalid_argument("n_qubits must be within [1, 10]");
  if (cfg.trotter_steps < 1) throw std::invalid_argument("trotter_steps must be >= 1");
  if (!(cfg.dt > 0)) throw std::invalid_argument("dt must be positive");

  std::mt19937_64 rng = derive_stream(seed, 0);
  auto jittered = [&](double base) {
    if (cfg.angle_jitter == 0.0) return normalize_angle(base);
    return normalize_angle(base + uniform_range(rng, -cfg.angle_jitter, cfg.angle_jitter));
  };

  Circuit c;
  c.n_qubits = cfg.n_qubits;
  c.stage = Stage::logical;
  int next = 0;
  for (int s = 0; s < cfg.trotter_steps; ++s) {
    for (int q = 0; q + 1 < cfg.n_qubits; ++q) {
      c.gates.push_back({next, GateKind::rzz, {q, q + 1}, jittered(2.0 * cfg.J * cfg.dt), next});
      ++next;
    }
    for (int q = 0; q < cfg.n_qubits; ++q) {
      c.gates.push_back({next, GateKind::rx, {q}, jittered(2.0 * cfg.h * cfg.dt), next});
      ++next;
    }
  }
  for (int q = 0; q < cfg.n_qubits; ++q) c.measured.push_back({q, Basis::Z});
  return c;
}

// Lower logical rotations to the native set. Both identities below hold
// exactly up to a global phase and are locked in by the unitary-equivalence
// tests:
//   rx(t)          = rz(pi/2) . sx . rz(t + pi) . sx . rz(pi/2)   (circuit order)
//   rzz(t) on (c,t)= sx(c) . ecr . rz(-t)(c) . ecr . x(c) . sx(c)
// The rzz form comes from conjugating ecr.rz(c).ecr — which equals a
// rotation about Z(target) Y(control) — by sx on the control to turn the Y
// into a Z.
inline Circuit transpile(const Circuit& c) {
  if (c.stage == Stage::native) return c;
  Circuit out;
  out.n_qubits = c.n_qubits;
  out.measured = c.measured;
  out.stage = Stage::native;
  int next = 0;
  auto emit = [&](GateKind k, std::vector<int> qs, double angle = 0.0) {
    out.gates.push_back({next, k, std::move(qs), has_angle(k) ? normalize_angle(angle) : 0.0, next});
    ++next;
  };
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::rx: {
        int q = g.qubits[0];
        emit(GateKind::rz, {q}, kPi / 2);
        emit(GateKind::sx, {q});
        emit(GateKind::rz, {q}, g.angle + kPi);
        emit(GateKind::sx, {q});
        emit(GateKind::rz, {q}, kPi / 2);
        break;
      }
      case GateKind::rzz: {
        int ctl = g.qubits[0], tgt = g.qubits[1];
        emit(GateKind::sx, {ctl});
        emit(GateKind::ecr, {ctl, tgt});
        emit(GateKind::rz, {ctl}, -g.angle);
        emit(GateKind::ecr, {ctl, tgt});
        emit(GateKind::x, {ctl});
        emit(GateKind::sx, {ctl});
        break;
      }
      case GateKind::ecr:
      case GateKind::sx:
      case GateKind::x:
      case GateKind::id:
      case GateKind::rz:
        emit(g.kind, g.qubits, g.angle);
        break;
      default:
        throw std::invalid_argument(std::string("cannot lower gate kind: ") + kind_name(g.kind));
    }
  }
  return out;
}

}  // namespace qem
