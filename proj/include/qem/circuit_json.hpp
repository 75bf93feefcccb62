#pragma once

#include <nlohmann/json.hpp>

#include "qem/circuit.hpp"
#include "qem/errors.hpp"

namespace qem {

// Canonical JSON form of a circuit. Field order is part of the format
// (ordered_json preserves insertion order), so serializations are stable
// byte-for-byte for a given circuit.
//   {version:1, n_qubits, stage, gates:[{id,kind,qubits,angle?}],
//    measured:[{qubit,basis}]}

inline nlohmann::ordered_json circuit_to_json(const Circuit& c) {
  validate_circuit(c);
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["n_qubits"] = c.n_qubits;
  j["stage"] = c.stage == Stage::native ? "native" : "logical";
  j["gates"] = nlohmann::ordered_json::array();
  for (const auto& g : c.gates) {
    nlohmann::ordered_json jg;
    jg["id"] = g.id;
    jg["kind"] = kind_name(g.kind);
    jg["qubits"] = g.qubits;
    if (has_angle(g.kind)) jg["angle"] = g.angle;
    j["gates"].push_back(std::move(jg));
  }
  j["measured"] = nlohmann::ordered_json::array();
  for (const auto& m : c.measured)
    j["measured"].push_back({{"qubit", m.qubit}, {"basis", basis_name(m.basis)}});
  return j;
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported circuit format version");
    Circuit c;
    c.n_qubits = j.at("n_qubits").get<int>();
    std::string stage = j.at("stage").get<std::string>();
    if (stage == "native") {
      c.stage = Stage::native;
    } else if (stage == "logical") {
      c.stage = Stage::logical;
    } else {
      throw DataError("unknown circuit stage: " + stage);
    }
    int time = 0;
    for (const auto& jg : j.at("gates")) {
      GateInstance g;
      g.id = jg.at("id").get<int>();
      if (!kind_from_name(jg.at("kind").get<std::string>(), g.kind))
        throw DataError("unknown gate kind: " + jg.at("kind").get<std::string>());
      g.qubits = jg.at("qubits").get<std::vector<int>>();
      if (has_angle(g.kind)) g.angle = normalize_angle(jg.at("angle").get<double>());
      g.time_index = time++;
      c.gates.push_back(std::move(g));
    }
    for (const auto& jm : j.at("measured")) {
      Measurement m;
      m.qubit = jm.at("qubit").get<int>();
      if (!basis_from_name(jm.at("basis").get<std::string>(), m.basis))
        throw DataError("unknown measurement basis: " + jm.at("basis").get<std::string>());
      c.measured.push_back(m);
    }
    validate_circuit(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed circuit JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid circuit in JSON: ") + e.what());
  }
}

}  // namespace qem
