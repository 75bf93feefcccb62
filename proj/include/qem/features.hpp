#pragma once

#include <array>
#include <map>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/errors.hpp"

namespace qem {

// Circuit descriptor blocks, concatenated in this fixed order:
//   [0..4]    normalized gate counts (ecr, sx, x, id, rz)
//   [5..84]   80-bin rz-angle histogram, bin width 0.025*pi over [0, 2*pi)
//   [85]      the qubit's noisy expectation value
//   [86..88]  measurement-basis one-hot (X, Y, Z)
//   [89..]    qubit one-hot over the circuit's measured list
// Total length 89 + n_measured.

inline constexpr int kAngleBins = 80;
inline constexpr int kDescriptorBase = 5 + kAngleBins + 1 + 3;

using DescriptorVector = std::vector<double>;

inline std::array<double, 5> gate_count_features(const Circuit& c) {
  if (c.stage != Stage::native)
    throw std::invalid_argument("gate features are defined over native circuits");
  std::array<double, 5> counts{};
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::ecr: counts[0] += 1; break;
      case GateKind::sx:  counts[1] += 1; break;
      case GateKind::x:   counts[2] += 1; break;
      case GateKind::id:  counts[3] += 1; break;
      case GateKind::rz:  counts[4] += 1; break;
      default: break;  // unreachable for native circuits
    }
  }
  if (!c.gates.empty())
    for (auto& v : counts) v /= static_cast<double>(c.gates.size());
  return counts;
}

inline std::array<double, kAngleBins> angle_histogram(const Circuit& c) {
  if (c.stage != Stage::native)
    throw std::invalid_argument("angle histogram is defined over native circuits");
  std::array<double, kAngleBins> hist{};
  int n_rz = 0;
  const double bin_width = 0.025 * kPi;
  for (const auto& g : c.gates) {
    if (g.kind != GateKind::rz) continue;
    if (!std::isfinite(g.angle)) throw std::invalid_argument("non-finite rz angle");
    int bin = static_cast<int>(g.angle / bin_width);
    if (bin < 0) bin = 0;
    if (bin >= kAngleBins) bin = kAngleBins - 1;
    hist[static_cast<size_t>(bin)] += 1;
    ++n_rz;
  }
  if (n_rz > 0)
    for (auto& v : hist) v /= static_cast<double>(n_rz);
  return hist;
}

inline DescriptorVector assemble_descriptor(const Circuit& c, int qubit,
                                            const std::map<int, double>& noisy) {
  int slot = -1;
  Basis basis = Basis::Z;
  for (size_t i = 0; i < c.measured.size(); ++i) {
    if (c.measured[i].qubit == qubit) {
      slot = static_cast<int>(i);
      basis = c.measured[i].basis;
      break;
    }
  }
  if (slot < 0)
    throw std::invalid_argument("descriptor qubit is not measured: " + std::to_string(qubit));
  auto it = noisy.find(qubit);
  if (it == noisy.end())
    throw std::invalid_argument("missing noisy value for qubit " + std::to_string(qubit));

  DescriptorVector d;
  d.reserve(static_cast<size_t>(kDescriptorBase) + c.measured.size());
  for (double v : gate_count_features(c)) d.push_back(v);
  for (double v : angle_histogram(c)) d.push_back(v);
  d.push_back(it->second);
  d.push_back(basis == Basis::X ? 1.0 : 0.0);
  d.push_back(basis == Basis::Y ? 1.0 : 0.0);
  d.push_back(basis == Basis::Z ? 1.0 : 0.0);
  for (size_t i = 0; i < c.measured.size(); ++i)
    d.push_back(static_cast<int>(i) == slot ? 1.0 : 0.0);
  return d;
}

}  // namespace qem
