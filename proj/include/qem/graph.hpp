#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qem/circuit.hpp"

namespace qem {

// Gate-instance DAG. Node ids are dense: gate nodes first (in gate order,
// which validate_circuit guarantees is time order), then one measurement
// terminal per measured qubit, appended in measured-list order. Edges are
// wire-successor edges u -> v (v is the next node touching one of u's wires),
// deduplicated when a two-qubit gate feeds the same successor on both wires.
// Directed edges always point forward in time, so u < v holds for every edge
// and the directed edge list doubles as the undirected one.
struct CircuitGraph {
  int n_gate_nodes = 0;
  int n_qubits = 0;
  std::vector<GateInstance> gates;             // node payloads, index = node id
  std::vector<Measurement> terminals;          // measured list, in order
  std::vector<std::pair<int, int>> edges;      // u -> v, sorted, unique
  std::vector<std::vector<int>> in_adj;        // reverse adjacency by node id

  int n_nodes() const { return n_gate_nodes + static_cast<int>(terminals.size()); }
  bool is_terminal(int node) const { return node >= n_gate_nodes; }
  int terminal_node(int slot) const { return n_gate_nodes + slot; }
};

// Node-id set of one measurement's causal cone (terminal included).
struct LightconeMask {
  int qubit = -1;
  std::vector<int> nodes;  // sorted ascending

  bool contains(int node) const {
    return std::binary_search(nodes.begin(), nodes.end(), node);
  }
};

struct LocalityReport {
  int n_nodes = 0;
  int n_measured = 0;
  std::vector<int> qubits;                     // measured order
  std::vector<double> coverage;                // |L_m| / N
  std::vector<double> internal_frac;           // both-endpoint edges / touching edges
  std::vector<double> boundary;                // one-endpoint edges / touching edges
  std::vector<std::vector<double>> jaccard;    // M x M, symmetric, unit diagonal
};

inline CircuitGraph build_graph(const Circuit& c) {
  if (c.stage != Stage::native)
    throw std::invalid_argument("build_graph expects a native-stage circuit");
  if (c.measured.empty())
    throw std::invalid_argument("build_graph: circuit measures no qubits");
  validate_circuit(c);

  CircuitGraph g;
  g.n_gate_nodes = static_cast<int>(c.gates.size());
  g.n_qubits = c.n_qubits;
  g.gates = c.gates;
  g.terminals = c.measured;

  std::vector<int> last_on_wire(c.n_qubits, -1);
  for (int i = 0; i < g.n_gate_nodes; ++i) {
    for (int q : c.gates[i].qubits) {
      if (last_on_wire[q] >= 0) g.edges.push_back({last_on_wire[q], i});
      last_on_wire[q] = i;
    }
  }
  for (size_t s = 0; s < c.measured.size(); ++s) {
    const int last = last_on_wire[c.measured[s].qubit];
    if (last >= 0) g.edges.push_back({last, g.terminal_node(static_cast<int>(s))});
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  g.in_adj.assign(g.n_nodes(), {});
  for (const auto& [u, v] : g.edges) g.in_adj[v].push_back(u);
  return g;
}

// All nodes from which `qubit`'s terminal is reachable, terminal included:
// reverse BFS over in-edges.
inline LightconeMask lightcone(const CircuitGraph& g, int qubit) {
  int slot = -1;
  for (size_t s = 0; s < g.terminals.size(); ++s)
    if (g.terminals[s].qubit == qubit) slot = static_cast<int>(s);
  if (slot < 0)
    throw std::invalid_argument("lightcone: qubit " + std::to_string(qubit) +
                                " is not measured");

  std::vector<char> seen(g.n_nodes(), 0);
  std::vector<int> frontier = {g.terminal_node(slot)};
  seen[frontier[0]] = 1;
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    for (int u : g.in_adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        frontier.push_back(u);
      }
    }
  }

  LightconeMask mask;
  mask.qubit = qubit;
  for (int v = 0; v < g.n_nodes(); ++v)
    if (seen[v]) mask.nodes.push_back(v);
  return mask;
}

inline std::vector<LightconeMask> all_lightcones(const CircuitGraph& g) {
  std::vector<LightconeMask> masks;
  masks.reserve(g.terminals.size());
  for (const auto& m : g.terminals) masks.push_back(lightcone(g, m.qubit));
  return masks;
}

// Coverage / internal / boundary / Jaccard over the undirected edge view.
// internal_frac and boundary share one denominator — the edges touching the
// mask at all — so they sum to 1 whenever that denominator is nonzero; a mask
// no edge touches reports 0 for both.
inline LocalityReport locality_metrics(const CircuitGraph& g,
                                       const std::vector<LightconeMask>& masks) {
  LocalityReport rep;
  rep.n_nodes = g.n_nodes();
  rep.n_measured = static_cast<int>(masks.size());

  for (const auto& mask : masks) {
    if (mask.nodes.empty())
      throw std::invalid_argument("locality_metrics: empty lightcone mask");
    for (int v : mask.nodes)
      if (v < 0 || v >= g.n_nodes())
        throw std::invalid_argument("locality_metrics: mask references node " +
                                    std::to_string(v) + " outside the graph");

    std::vector<char> in(g.n_nodes(), 0);
    for (int v : mask.nodes) in[v] = 1;
    int internal = 0, crossing = 0;
    for (const auto& [u, v] : g.edges) {
      const int ends = in[u] + in[v];
      if (ends == 2) ++internal;
      else if (ends == 1) ++crossing;
    }
    const int touching = internal + crossing;
    rep.qubits.push_back(mask.qubit);
    rep.coverage.push_back(static_cast<double>(mask.nodes.size()) / rep.n_nodes);
    rep.internal_frac.push_back(touching ? static_cast<double>(internal) / touching : 0.0);
    rep.boundary.push_back(touching ? static_cast<double>(crossing) / touching : 0.0);
  }

  rep.jaccard.assign(masks.size(), std::vector<double>(masks.size(), 0.0));
  for (size_t a = 0; a < masks.size(); ++a) {
    for (size_t b = a; b < masks.size(); ++b) {
      std::vector<int> inter;
      std::set_intersection(masks[a].nodes.begin(), masks[a].nodes.end(),
                            masks[b].nodes.begin(), masks[b].nodes.end(),
                            std::back_inserter(inter));
      const size_t uni = masks[a].nodes.size() + masks[b].nodes.size() - inter.size();
      const double j = uni ? static_cast<double>(inter.size()) / uni : 1.0;
      rep.jaccard[a][b] = j;
      rep.jaccard[b][a] = j;
    }
  }
  return rep;
}

}  // namespace qem
