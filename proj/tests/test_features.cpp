// Descriptor vector: normalized gate counts, rz-angle histogram, noisy value,
// basis and qubit one-hots.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "qem/circuit.hpp"
#include "qem/features.hpp"
#include "qem/gates.hpp"
#include "qem/rng.hpp"

namespace {

qem::Circuit native_gate_list(int n_qubits, const std::vector<std::pair<qem::GateKind, double>>& kinds) {
  qem::Circuit c;
  c.n_qubits = n_qubits;
  c.stage = qem::Stage::native;
  int id = 0;
  for (const auto& [kind, angle] : kinds) {
    qem::GateInstance g;
    g.id = id;
    g.time_index = id;
    g.kind = kind;
    g.qubits = {id % n_qubits};
    if (kind == qem::GateKind::ecr) g.qubits = {0, 1};
    if (qem::has_angle(kind)) g.angle = angle;
    c.gates.push_back(g);
    ++id;
  }
  c.measured.push_back({0, qem::Basis::Z});
  qem::validate_circuit(c);
  return c;
}

}  // namespace

TEST_CASE("gate counts normalize over the gate total", "[features]") {
  using K = qem::GateKind;

  qem::Circuit empty = native_gate_list(1, {});
  auto zero = qem::gate_count_features(empty);
  for (double v : zero) REQUIRE(v == 0.0);

  // Order is (ecr, sx, x, id, rz).
  qem::Circuit mix = native_gate_list(2, {{K::sx, 0}, {K::sx, 0}, {K::rz, 0.3}, {K::rz, 0.7}});
  auto counts = qem::gate_count_features(mix);
  REQUIRE(counts == std::array<double, 5>{0.0, 0.5, 0.0, 0.0, 0.5});

  qem::Circuit lone = native_gate_list(2, {{K::ecr, 0}});
  REQUIRE(qem::gate_count_features(lone) == std::array<double, 5>{1.0, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("angle histogram bins rz by 0.025 pi", "[features]") {
  using K = qem::GateKind;

  auto hist_of = [](const qem::Circuit& c) { return qem::angle_histogram(c); };

  qem::Circuit none = native_gate_list(1, {{K::sx, 0}, {K::x, 0}});
  for (double v : hist_of(none)) REQUIRE(v == 0.0);

  qem::Circuit zero_angle = native_gate_list(1, {{K::rz, 0.0}});
  auto h0 = hist_of(zero_angle);
  REQUIRE(h0[0] == 1.0);

  // 0.25pi / 0.025pi = 10 exactly.
  qem::Circuit quarter = native_gate_list(1, {{K::rz, 0.25 * qem::kPi}});
  auto h10 = hist_of(quarter);
  REQUIRE(h10[10] == 1.0);

  // Both angles land in the first bin.
  qem::Circuit tiny = native_gate_list(1, {{K::rz, 0.01 * qem::kPi}, {K::rz, 0.02 * qem::kPi}});
  auto hsmall = hist_of(tiny);
  REQUIRE(hsmall[0] == 1.0);

  // Just under 2pi clamps into the final bin.
  qem::Circuit high = native_gate_list(1, {{K::rz, qem::kTwoPi - 1e-9}});
  auto htop = hist_of(high);
  REQUIRE(htop[qem::kAngleBins - 1] == 1.0);

  // Mixed circuit: only rz angles are binned, normalized over rz count.
  qem::Circuit mixed = native_gate_list(
      2, {{K::sx, 0}, {K::rz, 0.25 * qem::kPi}, {K::rz, 0.25 * qem::kPi}, {K::rz, 0.0}});
  auto hmix = hist_of(mixed);
  REQUIRE(hmix[10] == Catch::Approx(2.0 / 3.0));
  REQUIRE(hmix[0] == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("descriptor assembles blocks in fixed order", "[features]") {
  // Identity circuit, measure Z on q0: everything zero except the noisy value
  // and the Z flag and the qubit one-hot.
  qem::Circuit c = native_gate_list(1, {});
  std::map<int, double> noisy = {{0, 1.0}};
  qem::DescriptorVector d = qem::assemble_descriptor(c, 0, noisy);
  REQUIRE(d.size() == static_cast<size_t>(qem::kDescriptorBase) + 1);
  for (int i = 0; i < 85; ++i) REQUIRE(d[i] == 0.0);  // counts + histogram
  REQUIRE(d[85] == 1.0);                              // noisy value
  REQUIRE(d[86] == 0.0);                              // X
  REQUIRE(d[87] == 0.0);                              // Y
  REQUIRE(d[88] == 1.0);                              // Z
  REQUIRE(d[89] == 1.0);                              // qubit one-hot
}

TEST_CASE("qubit one-hot marks the position within the measured list", "[features]") {
  qem::Circuit c = native_gate_list(2, {{qem::GateKind::sx, 0}});
  c.measured = {{0, qem::Basis::Z}, {1, qem::Basis::X}};
  std::map<int, double> noisy = {{0, 0.5}, {1, -0.25}};

  qem::DescriptorVector d1 = qem::assemble_descriptor(c, 1, noisy);
  REQUIRE(d1.size() == static_cast<size_t>(qem::kDescriptorBase) + 2);
  REQUIRE(d1[85] == -0.25);
  REQUIRE(d1[86] == 1.0);  // X basis for qubit 1
  REQUIRE(d1[88] == 0.0);
  REQUIRE(d1[89] == 0.0);
  REQUIRE(d1[90] == 1.0);  // second slot

  qem::DescriptorVector d0 = qem::assemble_descriptor(c, 0, noisy);
  REQUIRE(d0[89] == 1.0);
  REQUIRE(d0[90] == 0.0);
}

TEST_CASE("TFIM descriptors have constant length and normalized blocks", "[features]") {
  qem::TfimConfig cfg;
  cfg.n_qubits = 4;
  cfg.trotter_steps = 3;
  qem::Circuit c = qem::transpile(qem::generate_tfim(cfg, 21));
  std::map<int, double> noisy;
  for (int q = 0; q < 4; ++q) noisy[q] = 0.1 * q;

  for (int q = 0; q < 4; ++q) {
    qem::DescriptorVector d = qem::assemble_descriptor(c, q, noisy);
    REQUIRE(d.size() == static_cast<size_t>(qem::kDescriptorBase) + 4);
    double count_sum = 0.0, hist_sum = 0.0;
    for (int i = 0; i < 5; ++i) count_sum += d[i];
    for (int i = 5; i < 85; ++i) hist_sum += d[i];
    REQUIRE(count_sum == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(hist_sum == Catch::Approx(1.0).margin(1e-12));
    for (double v : d) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("count features ignore gate order", "[features]") {
  qem::TfimConfig cfg;
  cfg.n_qubits = 3;
  cfg.trotter_steps = 2;
  qem::Circuit c = qem::transpile(qem::generate_tfim(cfg, 8));

  qem::Circuit shuffled = c;
  std::mt19937_64 rng = qem::derive_stream(77, 0);
  qem::shuffle_inplace(shuffled.gates, rng);
  for (size_t i = 0; i < shuffled.gates.size(); ++i) {
    shuffled.gates[i].id = static_cast<int>(i);
    shuffled.gates[i].time_index = static_cast<int>(i);
  }
  qem::validate_circuit(shuffled);

  REQUIRE(qem::gate_count_features(shuffled) == qem::gate_count_features(c));
  REQUIRE(qem::angle_histogram(shuffled) == qem::angle_histogram(c));
}

TEST_CASE("descriptor assembly rejects bad inputs", "[features]") {
  qem::Circuit c = native_gate_list(2, {{qem::GateKind::sx, 0}});
  std::map<int, double> noisy = {{0, 0.5}};

  // Qubit 1 is not measured.
  REQUIRE_THROWS_AS(qem::assemble_descriptor(c, 1, noisy), std::invalid_argument);

  // Measured but no noisy value present.
  c.measured = {{0, qem::Basis::Z}, {1, qem::Basis::Z}};
  REQUIRE_THROWS_AS(qem::assemble_descriptor(c, 1, noisy), std::invalid_argument);
}
