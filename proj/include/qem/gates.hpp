#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "qem/errors.hpp"

namespace qem {

using cxd = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Native hardware set {ecr, sx, x, id, rz}; rx and rzz are logical-only kinds
// that the transpiler lowers away.
enum class GateKind { ecr, sx, x, id, rz, rx, rzz };

enum class Basis { X, Y, Z };

inline const char* kind_name(GateKind k) {
  switch (k) {
    case GateKind::ecr: return "ecr";
    case GateKind::sx:  return "sx";
    case GateKind::x:   return "x";
    case GateKind::id:  return "id";
    case GateKind::rz:  return "rz";
    case GateKind::rx:  return "rx";
    case GateKind::rzz: return "rzz";
  }
  return "?";
}

inline bool kind_from_name(const std::string& name, GateKind& out) {
  if (name == "ecr") { out = GateKind::ecr; return true; }
  if (name == "sx")  { out = GateKind::sx;  return true; }
  if (name == "x")   { out = GateKind::x;   return true; }
  if (name == "id")  { out = GateKind::id;  return true; }
  if (name == "rz")  { out = GateKind::rz;  return true; }
  if (name == "rx")  { out = GateKind::rx;  return true; }
  if (name == "rzz") { out = GateKind::rzz; return true; }
  return false;
}

inline bool is_native_kind(GateKind k) { return k != GateKind::rx && k != GateKind::rzz; }
inline int arity(GateKind k) { return (k == GateKind::ecr || k == GateKind::rzz) ? 2 : 1; }
inline bool has_angle(GateKind k) {
  return k == GateKind::rz || k == GateKind::rx || k == GateKind::rzz;
}

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::X: return "X";
    case Basis::Y: return "Y";
    case Basis::Z: return "Z";
  }
  return "?";
}

inline bool basis_from_name(const std::string& name, Basis& out) {
  if (name == "X") { out = Basis::X; return true; }
  if (name == "Y") { out = Basis::Y; return true; }
  if (name == "Z") { out = Basis::Z; return true; }
  return false;
}

// Reduce an angle into [0, 2*pi). Guard the fmod edge where rounding lands
// exactly on 2*pi.
inline double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("gate angle must be finite");
  double a = std::fmod(theta, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

using Mat2 = std::array<cxd, 4>;    // row-major 2x2
using Mat4 = std::array<cxd, 16>;   // row-major 4x4

inline Mat2 mat_x()  { return {cxd(0), cxd(1), cxd(1), cxd(0)}; }
inline Mat2 mat_id() { return {cxd(1), cxd(0), cxd(0), cxd(1)}; }
inline Mat2 mat_sx() {
  return {cxd(0.5, 0.5), cxd(0.5, -0.5), cxd(0.5, -0.5), cxd(0.5, 0.5)};
}
inline Mat2 mat_rz(double theta) {
  return {std::exp(cxd(0, -theta / 2)), cxd(0), cxd(0), std::exp(cxd(0, theta / 2))};
}
inline Mat2 mat_rx(double theta) {
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {cxd(c, 0), cxd(0, -s), cxd(0, -s), cxd(c, 0)};
}

// Two-qubit matrices use the local index (bit1, bit0) = (qubits[1], qubits[0]):
// the first-listed qubit is the low bit. For ecr(c, t) = (IX - XY)/sqrt(2),
// the first Pauli symbol of each term acts on c, the second on t, i.e. in
// matrix form kron(X_t, I_c) - kron(Y_t, X_c).
inline Mat4 mat_ecr() {
  const Mat2 X = mat_x(), I = mat_id();
  const Mat2 Y = {cxd(0), cxd(0, -1), cxd(0, 1), cxd(0)};
  const double r = 1.0 / std::sqrt(2.0);
  Mat4 m{};
  for (int rt = 0; rt < 2; ++rt)
    for (int ct = 0; ct < 2; ++ct)
      for (int rc = 0; rc < 2; ++rc)
        for (int cc = 0; cc < 2; ++cc)
          m[static_cast<size_t>((rt * 2 + rc) * 4 + (ct * 2 + cc))] =
              r * (X[static_cast<size_t>(rt * 2 + ct)] * I[static_cast<size_t>(rc * 2 + cc)] -
                   Y[static_cast<size_t>(rt * 2 + ct)] * X[static_cast<size_t>(rc * 2 + cc)]);
  return m;
}

inline Mat4 mat_rzz(double theta) {
  cxd em = std::exp(cxd(0, -theta / 2)), ep = std::exp(cxd(0, theta / 2));
  Mat4 m{};
  m[0] = em; m[5] = ep; m[10] = ep; m[15] = em;
  return m;
}

inline Mat2 gate_matrix_1q(GateKind k, double angle) {
  switch (k) {
    case GateKind::sx: return mat_sx();
    case GateKind::x:  return mat_x();
    case GateKind::id: return mat_id();
    case GateKind::rz: return mat_rz(angle);
    case GateKind::rx: return mat_rx(angle);
    default: throw std::invalid_argument(std::string("not a one-qubit gate: ") + kind_name(k));
  }
}

inline Mat4 gate_matrix_2q(GateKind k, double angle) {
  switch (k) {
    case GateKind::ecr: return mat_ecr();
    case GateKind::rzz: return mat_rzz(angle);
    default: throw std::invalid_argument(std::string("not a two-qubit gate: ") + kind_name(k));
  }
}

}  // namespace qem
