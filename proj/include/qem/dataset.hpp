#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qem/circuit.hpp"
#include "qem/circuit_json.hpp"
#include "qem/errors.hpp"
#include "qem/features.hpp"
#include "qem/noise.hpp"
#include "qem/zne.hpp"

namespace qem {

// One labeled circuit: per measured qubit, the noisy value at scale 1, the
// zero-noise extrapolation of the scaled runs, and the noiseless reference.
struct Sample {
  int circuit_id = 0;
  Circuit circuit;  // native stage
  std::map<int, double> noisy;
  std::map<int, double> label_zne;
  std::map<int, double> label_exact;
  int trotter_steps = 0;
};

struct DatasetConfig {
  int n_qubits = 6;
  int circuits_total = 500;
  int steps_min = 1, steps_max = 10;
  double J_min = 0.5, J_max = 1.5;
  double h_min = 0.2, h_max = 1.0;
  double dt_min = 0.05, dt_max = 0.15;
  NoiseModel noise{1e-3, 1e-2, 0.0};
  std::vector<double> zne_factors{1.0, 2.0, 3.0};
  Extrapolation method = Extrapolation::linear;
  uint64_t seed = 42;

  void validate() const {
    if (n_qubits < 1 || n_qubits > 10) throw ConfigError("n_qubits must lie in [1, 10]");
    if (circuits_total < 1) throw ConfigError("circuits_total must be >= 1");
    if (steps_min < 1 || steps_max < steps_min) throw ConfigError("bad trotter step range");
    if (J_max < J_min || h_max < h_min || dt_max < dt_min)
      throw ConfigError("parameter ranges must satisfy lo <= hi");
    if (!(dt_min > 0)) throw ConfigError("dt range must be positive");
    noise.validate();
    if (zne_factors.size() < 2) throw ConfigError("need at least two noise factors");
    if (zne_factors.front() != 1.0) throw ConfigError("noise factors must start at 1");
    for (size_t i = 1; i < zne_factors.size(); ++i)
      if (zne_factors[i] <= zne_factors[i - 1])
        throw ConfigError("noise factors must be strictly ascending");
  }
};

// Build one circuit's sample. Every random draw comes from a stream derived
// from (seed, circuit_id), so samples are independent of build order and a
// dataset can be assembled by any number of workers.
inline Sample build_sample(const DatasetConfig& cfg, int circuit_id) {
  std::mt19937_64 rng = derive_stream(cfg.seed, static_cast<uint64_t>(circuit_id));
  TfimConfig tfim;
  tfim.n_qubits = cfg.n_qubits;
  tfim.trotter_steps = static_cast<int>(uniform_int(rng, cfg.steps_min, cfg.steps_max));
  tfim.J = uniform_range(rng, cfg.J_min, cfg.J_max);
  tfim.h = uniform_range(rng, cfg.h_min, cfg.h_max);
  tfim.dt = uniform_range(rng, cfg.dt_min, cfg.dt_max);

  Sample s;
  s.circuit_id = circuit_id;
  s.trotter_steps = tfim.trotter_steps;
  s.circuit = transpile(generate_tfim(tfim));

  std::vector<std::map<int, double>> runs;
  runs.reserve(cfg.zne_factors.size());
  for (double factor : cfg.zne_factors)
    runs.push_back(simulate(s.circuit, cfg.noise, factor));
  s.noisy = runs.front();  // factors start at 1

  for (const auto& m : s.circuit.measured) {
    std::vector<std::pair<double, double>> points;
    points.reserve(runs.size());
    for (size_t i = 0; i < runs.size(); ++i)
      points.emplace_back(cfg.zne_factors[i], runs[i].at(m.qubit));
    s.label_zne[m.qubit] = zne_extrapolate(points, cfg.method);
  }
  s.label_exact = simulate(s.circuit, NoiseModel{0, 0, 0}, 1.0);
  return s;
}

inline std::vector<Sample> build_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(cfg.circuits_total));
  for (int id = 0; id < cfg.circuits_total; ++id) samples.push_back(build_sample(cfg, id));
  return samples;
}

namespace detail {
inline nlohmann::ordered_json value_map_json(const std::map<int, double>& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [q, v] : m) j["q" + std::to_string(q)] = v;
  return j;
}

inline std::map<int, double> value_map_from_json(const nlohmann::json& j) {
  std::map<int, double> m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key.size() < 2 || key[0] != 'q') throw DataError("bad value-map key: " + key);
    m[std::stoi(key.substr(1))] = it.value().get<double>();
  }
  return m;
}
}  // namespace detail

inline nlohmann::ordered_json sample_to_json(const Sample& s, bool materialize_features = false) {
  nlohmann::ordered_json j;
  j["circuit_id"] = s.circuit_id;
  j["trotter_steps"] = s.trotter_steps;
  j["circuit"] = circuit_to_json(s.circuit);
  j["noisy"] = detail::value_map_json(s.noisy);
  j["label_zne"] = detail::value_map_json(s.label_zne);
  j["label_exact"] = detail::value_map_json(s.label_exact);
  if (materialize_features) {
    nlohmann::ordered_json desc = nlohmann::ordered_json::array();
    for (const auto& m : s.circuit.measured)
      desc.push_back(assemble_descriptor(s.circuit, m.qubit, s.noisy));
    j["descriptor"] = std::move(desc);
  }
  return j;
}

inline Sample sample_from_json(const nlohmann::json& j) {
  try {
    Sample s;
    s.circuit_id = j.at("circuit_id").get<int>();
    s.trotter_steps = j.at("trotter_steps").get<int>();
    s.circuit = circuit_from_json(j.at("circuit"));
    s.noisy = detail::value_map_from_json(j.at("noisy"));
    s.label_zne = detail::value_map_from_json(j.at("label_zne"));
    s.label_exact = detail::value_map_from_json(j.at("label_exact"));
    for (const auto& m : s.circuit.measured) {
      if (!s.noisy.count(m.qubit) || !s.label_zne.count(m.qubit) ||
          !s.label_exact.count(m.qubit))
        throw DataError("sample value maps do not cover measured qubit " +
                        std::to_string(m.qubit));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed sample JSON: ") + e.what());
  }
}

// JSON Lines persistence: one sample per line, insertion-ordered fields.
// Stream forms are the primitives; the path forms wrap them.
inline void write_dataset_jsonl(std::ostream& out, const std::vector<Sample>& samples,
                                bool materialize_features = false) {
  for (const auto& s : samples) out << sample_to_json(s, materialize_features).dump() << "\n";
}

inline void write_dataset_jsonl(const std::vector<Sample>& samples, const std::string& path,
                                bool materialize_features = false) {
  std::ofstream out(path);
  if (!out.good()) throw DataError("cannot open dataset file for writing: " + path);
  write_dataset_jsonl(out, samples, materialize_features);
}

inline std::vector<Sample> read_dataset_jsonl(std::istream& in) {
  std::vector<Sample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw DataError("dataset line " + std::to_string(lineno) + " is not valid JSON");
    samples.push_back(sample_from_json(j));
  }
  return samples;
}

inline std::vector<Sample> read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw DataError("cannot open dataset file: " + path);
  return read_dataset_jsonl(in);
}

}  // namespace qem
