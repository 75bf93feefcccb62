#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qem/dataset.hpp"
#include "qem/errors.hpp"
#include "qem/features.hpp"
#include "qem/graph.hpp"
#include "qem/rng.hpp"
#include "qem/tensor.hpp"

namespace qem {

// The regressor: shared node embedding feeding two masked-attention paths
// (one restricted to the measurement's lightcone, one circuit-wide), pooled
// into a local and a global context vector, concatenated with the per-qubit
// descriptor, and mapped to a single tanh-squashed expectation value by an
// MLP. Three ablations reuse the same skeleton: NoLightcone widens the local
// mask to the whole graph, NoGlobal removes the global path (shrinking the
// MLP input), GCNBackbone swaps both attention paths for one stack of
// normalized-adjacency graph convolutions.

enum class Variant { Full, GCNBackbone, NoGlobal, NoLightcone };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "Full";
    case Variant::GCNBackbone: return "GCNBackbone";
    case Variant::NoGlobal: return "NoGlobal";
    case Variant::NoLightcone: return "NoLightcone";
  }
  throw std::invalid_argument("unknown variant");
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "Full") return Variant::Full;
  if (s == "GCNBackbone") return Variant::GCNBackbone;
  if (s == "NoGlobal") return Variant::NoGlobal;
  if (s == "NoLightcone") return Variant::NoLightcone;
  throw ConfigError("unknown model variant '" + s + "'");
}

inline constexpr int kNodeFeatureDim = 10;

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 3;  // the architecture is three blocks deep; kept explicit
  int d_ff = 128;
  std::vector<int> mlp_hidden = {128, 64};
  Variant variant = Variant::Full;
  int max_nodes = 2000;
  int descriptor_dim = kDescriptorBase + 6;  // 89 + measured count of the data

  void validate() const {
    if (d_model <= 0 || n_heads <= 0 || d_ff <= 0 || max_nodes <= 0)
      throw ConfigError("model dimensions must be positive");
    if (d_model % n_heads != 0)
      throw ConfigError("d_model must be divisible by n_heads");
    if (n_layers != 3)
      throw ConfigError("the architecture is fixed at 3 layers");
    if (descriptor_dim <= kDescriptorBase)
      throw ConfigError("descriptor_dim must exceed the base descriptor length");
    for (int h : mlp_hidden)
      if (h <= 0) throw ConfigError("mlp hidden sizes must be positive");
  }

  int mlp_input_dim() const {
    const int ctx = (variant == Variant::NoGlobal) ? d_model : 2 * d_model;
    return ctx + descriptor_dim;
  }
};

// ---------------------------------------------------------------------------
// Node featurization: kind one-hot (5) | terminal flag | sin a | cos a |
// normalized time | measured-wire flag.
inline Tensor node_features(const CircuitGraph& g) {
  if (g.n_nodes() == 0) throw std::invalid_argument("node_features: empty graph");
  std::vector<char> measured_wire(g.n_qubits, 0);
  for (const auto& m : g.terminals) measured_wire[m.qubit] = 1;

  Tensor X(g.n_nodes(), kNodeFeatureDim);
  const int L = g.n_gate_nodes;
  for (int i = 0; i < L; ++i) {
    const GateInstance& gate = g.gates[i];
    X.at(i, static_cast<int>(gate.kind)) = 1.0;
    const double angle = gate.kind == GateKind::rz ? gate.angle : 0.0;
    X.at(i, 6) = std::sin(angle);
    X.at(i, 7) = std::cos(angle);
    X.at(i, 8) = L > 1 ? static_cast<double>(i) / (L - 1) : 0.0;
    for (int q : gate.qubits)
      if (measured_wire[q]) X.at(i, 9) = 1.0;
  }
  for (int s = 0; s < static_cast<int>(g.terminals.size()); ++s) {
    const int row = g.n_gate_nodes + s;
    X.at(row, 5) = 1.0;
    X.at(row, 7) = 1.0;  // angle 0
    X.at(row, 8) = 1.0;  // measurements close the circuit
    X.at(row, 9) = 1.0;
  }
  return X;
}

// Symmetric GCN propagation matrix D^{-1/2}(A+I)D^{-1/2} over the undirected
// edge view with self-loops.
inline Tensor normalized_adjacency(const CircuitGraph& g) {
  const int n = g.n_nodes();
  Tensor A(n, n);
  for (int i = 0; i < n; ++i) A.at(i, i) = 1.0;
  for (const auto& [u, v] : g.edges) {
    A.at(u, v) = 1.0;
    A.at(v, u) = 1.0;
  }
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += A.at(i, j);
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A.at(i, j) *= dinv[i] * dinv[j];
  return A;
}

// ---------------------------------------------------------------------------
// Parameter manifest. The layout list is the single source of truth for
// names, shapes and init rules; the optimizer, checkpoints and the closed
// form below all follow its order.

enum class InitRule { xavier, zeros, ones };

struct ParamSpec {
  std::string name;
  int rows, cols;
  InitRule init;
};

inline std::vector<ParamSpec> param_layout(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model, ff = cfg.d_ff;
  std::vector<ParamSpec> specs;
  specs.push_back({"embed.w", kNodeFeatureDim, d, InitRule::xavier});
  specs.push_back({"embed.b", 1, d, InitRule::zeros});

  if (cfg.variant == Variant::GCNBackbone) {
    for (int l = 0; l < cfg.n_layers; ++l)
      specs.push_back({"l" + std::to_string(l) + ".gcn.w", d, d, InitRule::xavier});
  } else {
    const std::vector<std::string> paths =
        cfg.variant == Variant::NoGlobal ? std::vector<std::string>{"local"}
                                         : std::vector<std::string>{"local", "global"};
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (const auto& path : paths) {
        const std::string p = "l" + std::to_string(l) + "." + path + ".";
        for (const char* m : {"wq", "wk", "wv", "wo"}) {
          specs.push_back({p + "attn." + m, d, d, InitRule::xavier});
          specs.push_back({p + "attn.b" + std::string(1, m[1]), 1, d, InitRule::zeros});
        }
        specs.push_back({p + "ln1.g", 1, d, InitRule::ones});
        specs.push_back({p + "ln1.b", 1, d, InitRule::zeros});
        specs.push_back({p + "ff.w1", d, ff, InitRule::xavier});
        specs.push_back({p + "ff.b1", 1, ff, InitRule::zeros});
        specs.push_back({p + "ff.w2", ff, d, InitRule::xavier});
        specs.push_back({p + "ff.b2", 1, d, InitRule::zeros});
        specs.push_back({p + "ln2.g", 1, d, InitRule::ones});
        specs.push_back({p + "ln2.b", 1, d, InitRule::zeros});
      }
    }
  }

  int in = cfg.mlp_input_dim();
  for (size_t i = 0; i < cfg.mlp_hidden.size(); ++i) {
    const std::string p = "mlp." + std::to_string(i) + ".";
    specs.push_back({p + "w", in, cfg.mlp_hidden[i], InitRule::xavier});
    specs.push_back({p + "b", 1, cfg.mlp_hidden[i], InitRule::zeros});
    in = cfg.mlp_hidden[i];
  }
  specs.push_back({"head.w", in, 1, InitRule::xavier});
  specs.push_back({"head.b", 1, 1, InitRule::zeros});
  return specs;
}

// Closed-form parameter total; must agree with the instantiated layout.
inline long long param_count(const ModelConfig& cfg) {
  cfg.validate();
  const long long d = cfg.d_model, ff = cfg.d_ff;
  long long count = kNodeFeatureDim * d + d;  // embedding
  if (cfg.variant == Variant::GCNBackbone) {
    count += cfg.n_layers * d * d;
  } else {
    const long long paths = cfg.variant == Variant::NoGlobal ? 1 : 2;
    const long long per_block = 4 * (d * d + d)        // q,k,v,o projections
                                + 2 * d                // ln1
                                + (d * ff + ff)        // ff in
                                + (ff * d + d)         // ff out
                                + 2 * d;               // ln2
    count += cfg.n_layers * paths * per_block;
  }
  long long in = cfg.mlp_input_dim();
  for (int h : cfg.mlp_hidden) {
    count += in * h + h;
    in = h;
  }
  count += in + 1;  // head
  return count;
}

struct NamedTensor {
  std::string name;
  Tensor t;
};

struct ModelParams {
  ModelConfig cfg;
  std::vector<NamedTensor> params;
  std::unordered_map<std::string, int> index;

  void reindex() {
    index.clear();
    for (size_t i = 0; i < params.size(); ++i) index[params[i].name] = static_cast<int>(i);
  }
  int index_of(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::logic_error("unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor& at(const std::string& name) const { return params[index_of(name)].t; }
  Tensor& at(const std::string& name) { return params[index_of(name)].t; }
  long long count() const {
    long long n = 0;
    for (const auto& p : params) n += static_cast<long long>(p.t.size());
    return n;
  }
};

inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams mp;
  mp.cfg = cfg;
  std::mt19937_64 rng = derive_stream(seed, 1000003);  // dedicated init stream
  for (const ParamSpec& spec : param_layout(cfg)) {
    Tensor t(spec.rows, spec.cols);
    switch (spec.init) {
      case InitRule::xavier: {
        const double limit = std::sqrt(6.0 / (spec.rows + spec.cols));
        for (double& x : t.v) x = uniform_range(rng, -limit, limit);
        break;
      }
      case InitRule::zeros:
        break;
      case InitRule::ones:
        for (double& x : t.v) x = 1.0;
        break;
    }
    mp.params.push_back({spec.name, std::move(t)});
  }
  mp.reindex();
  return mp;
}

// ---------------------------------------------------------------------------
// Per-circuit working set: graph, masks, features and per-slot descriptors,
// computed once and reused across epochs.

struct EncodedCircuit {
  int circuit_id = 0;
  int trotter_steps = 0;
  CircuitGraph graph;
  std::vector<LightconeMask> masks;  // aligned with graph.terminals
  Tensor features;                   // [N x kNodeFeatureDim]
  std::vector<Tensor> descriptors;   // per slot, [1 x descriptor_dim]
  std::vector<double> noisy, label_zne, label_exact;  // per slot

  int n_slots() const { return static_cast<int>(graph.terminals.size()); }
};

inline EncodedCircuit encode_sample(const Sample& s) {
  EncodedCircuit enc;
  enc.circuit_id = s.circuit_id;
  enc.trotter_steps = s.trotter_steps;
  enc.graph = build_graph(s.circuit);
  enc.masks = all_lightcones(enc.graph);
  enc.features = node_features(enc.graph);
  for (const auto& m : enc.graph.terminals) {
    enc.noisy.push_back(s.noisy.at(m.qubit));
    enc.label_zne.push_back(s.label_zne.at(m.qubit));
    enc.label_exact.push_back(s.label_exact.at(m.qubit));
    DescriptorVector d = assemble_descriptor(s.circuit, m.qubit, s.noisy);
    Tensor t(1, static_cast<int>(d.size()));
    t.v.assign(d.begin(), d.end());
    enc.descriptors.push_back(std::move(t));
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Forward pass. One tape evaluates every measured slot of a circuit so the
// shared pieces — the embedding, the global path, and (for NoLightcone) the
// widened local path — are computed once. The local path runs on the rows of
// L_q gathered into a dense submatrix: attention over the gathered set is
// exactly masked attention over the full set restricted to L_q (verified in
// the test suite), and it never touches out-of-cone rows, which is what makes
// the NoGlobal independence property hold bit-for-bit.

struct CircuitForward {
  std::vector<int> param_ids;  // tape ids parallel to ModelParams::params
  std::vector<int> pred;       // scalar tape id per slot; -1 if not computed
};

inline CircuitForward model_forward(Tape& tape, const ModelParams& P,
                                    const EncodedCircuit& enc, bool track_params,
                                    int only_slot = -1) {
  const ModelConfig& cfg = P.cfg;
  const int N = enc.graph.n_nodes();
  if (N > cfg.max_nodes)
    throw std::invalid_argument("circuit graph has " + std::to_string(N) +
                                " nodes, above the configured max of " +
                                std::to_string(cfg.max_nodes));
  const int n_slots = enc.n_slots();
  if (static_cast<int>(enc.masks.size()) != n_slots)
    throw std::invalid_argument("mask list does not match the graph's terminals");
  for (const auto& d : enc.descriptors)
    if (d.cols != cfg.descriptor_dim)
      throw std::invalid_argument("descriptor length " + std::to_string(d.cols) +
                                  " does not match configured dimension " +
                                  std::to_string(cfg.descriptor_dim));

  CircuitForward out;
  out.param_ids.reserve(P.params.size());
  for (const auto& nt : P.params)
    out.param_ids.push_back(track_params ? tape.input(nt.t, true) : tape.constant(nt.t));
  auto pid = [&](const std::string& name) { return out.param_ids[P.index_of(name)]; };

  const Tensor no_mask;  // empty: plain softmax
  const int dh = cfg.d_model / cfg.n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  auto attn_stack = [&](int H, const std::string& path) {
    for (int l = 0; l < cfg.n_layers; ++l) {
      const std::string p = "l" + std::to_string(l) + "." + path + ".";
      const int Q = tape.linear(H, pid(p + "attn.wq"), pid(p + "attn.bq"));
      const int K = tape.linear(H, pid(p + "attn.wk"), pid(p + "attn.bk"));
      const int V = tape.linear(H, pid(p + "attn.wv"), pid(p + "attn.bv"));
      std::vector<int> heads;
      for (int h = 0; h < cfg.n_heads; ++h) {
        // Scaling Q before the score product keeps the 1/sqrt(dh) factor on
        // an [n x dh] tensor; scaling the product instead would put a second
        // [n x n] value (and its gradient) on the tape per head.
        const int qh = tape.scale(tape.slice_cols(Q, h * dh, dh), inv_sqrt_dh);
        const int kh = tape.slice_cols(K, h * dh, dh);
        const int vh = tape.slice_cols(V, h * dh, dh);
        const int scores = tape.matmul_nt(qh, kh);
        heads.push_back(tape.matmul(tape.masked_softmax(scores, no_mask), vh));
      }
      const int ctx = tape.concat_cols(heads);
      const int attn = tape.linear(ctx, pid(p + "attn.wo"), pid(p + "attn.bo"));
      H = tape.layer_norm(tape.add(H, attn), pid(p + "ln1.g"), pid(p + "ln1.b"));
      const int f1 = tape.relu(tape.linear(H, pid(p + "ff.w1"), pid(p + "ff.b1")));
      const int f2 = tape.linear(f1, pid(p + "ff.w2"), pid(p + "ff.b2"));
      H = tape.layer_norm(tape.add(H, f2), pid(p + "ln2.g"), pid(p + "ln2.b"));
    }
    return H;
  };

  const int X = tape.constant(enc.features);
  const int H0 = tape.linear(X, pid("embed.w"), pid("embed.b"));

  // Shared context pieces.
  int global_ctx = -1;   // [1 x d], Full/NoLightcone/GCN
  int wide_local = -1;   // NoLightcone's shared local path output
  int gcn_out = -1;      // GCN stack output
  switch (cfg.variant) {
    case Variant::Full:
      global_ctx = tape.mean_pool_all_rows(attn_stack(H0, "global"));
      break;
    case Variant::NoLightcone:
      global_ctx = tape.mean_pool_all_rows(attn_stack(H0, "global"));
      wide_local = attn_stack(H0, "local");
      break;
    case Variant::NoGlobal:
      break;
    case Variant::GCNBackbone: {
      const int A = tape.constant(normalized_adjacency(enc.graph));
      int H = H0;
      for (int l = 0; l < cfg.n_layers; ++l)
        H = tape.relu(
            tape.matmul(tape.matmul(A, H), pid("l" + std::to_string(l) + ".gcn.w")));
      gcn_out = H;
      global_ctx = tape.mean_pool_all_rows(H);
      break;
    }
  }

  out.pred.assign(n_slots, -1);
  for (int slot = 0; slot < n_slots; ++slot) {
    if (only_slot >= 0 && slot != only_slot) continue;

    int local_ctx;
    switch (cfg.variant) {
      case Variant::Full:
      case Variant::NoGlobal: {
        const int sub = tape.gather_rows(H0, enc.masks[slot].nodes);
        local_ctx = tape.mean_pool_all_rows(attn_stack(sub, "local"));
        break;
      }
      case Variant::NoLightcone:
        local_ctx = tape.mean_pool_rows(wide_local, enc.masks[slot].nodes);
        break;
      case Variant::GCNBackbone:
        local_ctx = tape.mean_pool_rows(gcn_out, enc.masks[slot].nodes);
        break;
      default:
        throw std::logic_error("unreachable");
    }

    const int desc = tape.constant(enc.descriptors[slot]);
    int h = cfg.variant == Variant::NoGlobal
                ? tape.concat_cols({local_ctx, desc})
                : tape.concat_cols({local_ctx, global_ctx, desc});
    for (size_t i = 0; i < cfg.mlp_hidden.size(); ++i) {
      const std::string p = "mlp." + std::to_string(i) + ".";
      h = tape.relu(tape.linear(h, pid(p + "w"), pid(p + "b")));
    }
    out.pred[slot] = tape.tanh_op(tape.linear(h, pid("head.w"), pid("head.b")));
  }
  return out;
}

// Single-qubit convenience wrapper over the taped forward.
inline double forward(const ModelParams& P, const CircuitGraph& g,
                      const std::vector<LightconeMask>& masks,
                      const DescriptorVector& descriptor, int qubit) {
  EncodedCircuit enc;
  enc.graph = g;
  enc.masks = masks;
  enc.features = node_features(g);
  int slot = -1;
  for (size_t s = 0; s < g.terminals.size(); ++s)
    if (g.terminals[s].qubit == qubit) slot = static_cast<int>(s);
  if (slot < 0) throw std::invalid_argument("forward: qubit not measured");
  Tensor d(1, static_cast<int>(descriptor.size()));
  d.v.assign(descriptor.begin(), descriptor.end());
  enc.descriptors.assign(g.terminals.size(), d);
  Tape tape;
  const CircuitForward f = model_forward(tape, P, enc, false, slot);
  return tape.value(f.pred[slot]).v[0];
}

inline std::map<std::pair<int, int>, double> predict_batch(
    const ModelParams& P, const std::vector<EncodedCircuit>& circuits) {
  std::map<std::pair<int, int>, double> preds;
  for (const auto& enc : circuits) {
    Tape tape;
    const CircuitForward f = model_forward(tape, P, enc, false);
    for (int slot = 0; slot < enc.n_slots(); ++slot)
      preds[{enc.circuit_id, enc.graph.terminals[slot].qubit}] =
          tape.value(f.pred[slot]).v[0];
  }
  return preds;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON manifest (config, parameter names, shapes, seed, step)
// next to a binary blob of all parameter values concatenated in manifest
// order as little-endian doubles.

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob writer assumes a little-endian host");

inline nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["n_layers"] = cfg.n_layers;
  j["d_ff"] = cfg.d_ff;
  j["mlp_hidden"] = cfg.mlp_hidden;
  j["variant"] = variant_name(cfg.variant);
  j["max_nodes"] = cfg.max_nodes;
  j["descriptor_dim"] = cfg.descriptor_dim;
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    cfg.max_nodes = j.at("max_nodes").get<int>();
    cfg.descriptor_dim = j.at("descriptor_dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  long long step = 0;
};

inline void save_checkpoint(const ModelParams& P, const std::string& json_path,
                            const std::string& bin_path, std::uint64_t seed,
                            long long step) {
  // ordered_json backs its object by a vector, so references returned by
  // operator[] do not survive later insertions; build the arrays first.
  nlohmann::ordered_json names = nlohmann::json::array();
  nlohmann::ordered_json shapes = nlohmann::json::array();
  for (const auto& p : P.params) {
    names.push_back(p.name);
    shapes.push_back({p.t.rows, p.t.cols});
  }
  nlohmann::ordered_json manifest;
  manifest["config"] = model_config_to_json(P.cfg);
  manifest["param_names"] = std::move(names);
  manifest["shapes"] = std::move(shapes);
  manifest["seed"] = seed;
  manifest["step"] = step;

  std::ofstream jf(json_path);
  if (!jf.good()) throw DataError("cannot write checkpoint manifest: " + json_path);
  jf << manifest.dump(2) << "\n";

  std::ofstream bf(bin_path, std::ios::binary);
  if (!bf.good()) throw DataError("cannot write checkpoint blob: " + bin_path);
  for (const auto& p : P.params)
    bf.write(reinterpret_cast<const char*>(p.t.v.data()),
             static_cast<std::streamsize>(p.t.size() * sizeof(double)));
}

inline Checkpoint load_checkpoint(const std::string& json_path,
                                  const std::string& bin_path) {
  std::ifstream jf(json_path);
  if (!jf.good()) throw DataError("cannot open checkpoint manifest: " + json_path);
  nlohmann::json manifest = nlohmann::json::parse(jf, nullptr, false);
  if (manifest.is_discarded())
    throw DataError("checkpoint manifest is not valid JSON: " + json_path);

  Checkpoint ck;
  try {
    ck.params.cfg = model_config_from_json(manifest.at("config"));
    ck.seed = manifest.at("seed").get<std::uint64_t>();
    ck.step = manifest.at("step").get<long long>();

    const auto names = manifest.at("param_names").get<std::vector<std::string>>();
    const auto shapes = manifest.at("shapes").get<std::vector<std::vector<int>>>();
    const auto layout = param_layout(ck.params.cfg);
    if (names.size() != layout.size() || shapes.size() != layout.size())
      throw DataError("checkpoint parameter list does not match its config");
    for (size_t i = 0; i < layout.size(); ++i) {
      if (names[i] != layout[i].name || shapes[i].size() != 2 ||
          shapes[i][0] != layout[i].rows || shapes[i][1] != layout[i].cols)
        throw DataError("checkpoint parameter '" + names[i] +
                        "' does not match the expected layout");
      ck.params.params.push_back({names[i], Tensor(shapes[i][0], shapes[i][1])});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  ck.params.reindex();

  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf.good()) throw DataError("cannot open checkpoint blob: " + bin_path);
  for (auto& p : ck.params.params) {
    bf.read(reinterpret_cast<char*>(p.t.v.data()),
            static_cast<std::streamsize>(p.t.size() * sizeof(double)));
    if (bf.gcount() != static_cast<std::streamsize>(p.t.size() * sizeof(double)))
      throw DataError("checkpoint blob truncated at parameter '" + p.name + "'");
  }
  char extra;
  if (bf.read(&extra, 1).gcount() != 0)
    throw DataError("checkpoint blob larger than its manifest describes");
  return ck;
}

}  // namespace qem
