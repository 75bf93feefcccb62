#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qem/adam.hpp"
#include "qem/dataset.hpp"
#include "qem/errors.hpp"
#include "qem/graph.hpp"
#include "qem/model.hpp"
#include "qem/ridge.hpp"
#include "qem/rng.hpp"
#include "qem/toml.hpp"

namespace qem {

// Training, evaluation, ablation and the report emitters behind the CLI.
// Everything here is deterministic given (seed, config, dataset): random
// draws come from derived streams, map iteration orders are over int keys,
// and CSV doubles print with %.17g so reruns are byte-identical.

enum class LabelSource { zne, exact };

inline const char* label_source_name(LabelSource s) {
  return s == LabelSource::zne ? "zne" : "exact";
}

inline LabelSource label_source_from_name(const std::string& s) {
  if (s == "zne") return LabelSource::zne;
  if (s == "exact") return LabelSource::exact;
  throw ConfigError("label source must be 'zne' or 'exact', got '" + s + "'");
}

struct TrainConfig {
  int n_train = 100;
  int n_val = 400;
  LabelSource label = LabelSource::exact;
  std::vector<double> lrs = {1e-2, 3e-3, 1e-3};
  int max_epochs = 500;
  int patience = 20;
  uint64_t seed = 42;
  double ridge_lambda = 1e-3;
  ModelConfig model;

  void validate() const {
    if (n_train < 1 || n_val < 1) throw ConfigError("split sizes must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (lrs.empty()) throw ConfigError("need at least one learning rate");
    for (double lr : lrs)
      if (!(lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(ridge_lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
    model.validate();
  }
};

// Split by circuit, never by sample: all of a circuit's qubits land on the
// same side. Circuits are taken in circuit_id order, first n_train to train
// and the next n_val to validation.
struct Split {
  std::vector<int> train, val;  // indices into the sample list
};

inline Split split_by_circuit(const std::vector<Sample>& samples, int n_train,
                              int n_val) {
  if (static_cast<size_t>(n_train) + n_val > samples.size())
    throw ConfigError("dataset holds " + std::to_string(samples.size()) +
                      " circuits but the split needs " +
                      std::to_string(n_train + n_val));
  std::vector<int> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return samples[a].circuit_id < samples[b].circuit_id;
  });
  for (size_t i = 1; i < order.size(); ++i)
    if (samples[order[i]].circuit_id == samples[order[i - 1]].circuit_id)
      throw DataError("duplicate circuit_id " +
                      std::to_string(samples[order[i]].circuit_id));
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  return s;
}

inline double slot_label(const EncodedCircuit& e, int slot, LabelSource src) {
  return src == LabelSource::zne ? e.label_zne[slot] : e.label_exact[slot];
}

// Mean squared error of the model over all (circuit, qubit) samples in idxs.
inline double dataset_mse(const ModelParams& P, const std::vector<EncodedCircuit>& encs,
                          const std::vector<int>& idxs, LabelSource src) {
  double acc = 0.0;
  long long n = 0;
  for (int idx : idxs) {
    const EncodedCircuit& enc = encs[idx];
    Tape tape;
    const CircuitForward f = model_forward(tape, P, enc, false);
    for (int slot = 0; slot < enc.n_slots(); ++slot) {
      const double d = tape.value(f.pred[slot]).v[0] - slot_label(enc, slot, src);
      acc += d * d;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("dataset_mse: empty index set");
  return acc / static_cast<double>(n);
}

struct EpochLog {
  int epoch = 0;  // 1-based within one learning rate's run
  double lr = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  ModelParams params;  // snapshot from the best validation epoch
  double val_mse = std::numeric_limits<double>::infinity();
  double lr = 0.0;
  int epoch = 0;
  long long adam_steps = 0;  // optimizer steps up to the snapshot
  std::vector<EpochLog> log;
};

inline std::vector<EncodedCircuit> encode_dataset(const std::vector<Sample>& samples) {
  std::vector<EncodedCircuit> encs;
  encs.reserve(samples.size());
  for (const Sample& s : samples) encs.push_back(encode_sample(s));
  return encs;
}

// Adam + early stopping over the learning-rate grid. Each lr restarts from
// the same seed-derived init; one optimizer step per circuit (all of its
// qubits share a tape). A learning rate whose forward or optimizer hits
// non-finite values is recorded as diverged and the remaining rates still
// run; only if every rate diverges does training fail.
inline TrainResult train(const std::vector<Sample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<EncodedCircuit> encs = encode_dataset(samples);
  const Split split = split_by_circuit(samples, cfg.n_train, cfg.n_val);

  TrainResult best;
  for (size_t li = 0; li < cfg.lrs.size(); ++li) {
    const double lr = cfg.lrs[li];
    ModelParams P = init_params(cfg.model, cfg.seed);
    AdamState opt{AdamConfig{lr, 0.9, 0.999, 1e-8}};
    {
      std::vector<Tensor> shapes;
      shapes.reserve(P.params.size());
      for (const auto& p : P.params) shapes.emplace_back(p.t.rows, p.t.cols);
      opt.init(shapes);
    }
    std::mt19937_64 order_rng = derive_stream(cfg.seed, 3000017 + li);
    std::vector<int> order = split.train;

    double lr_best_val = std::numeric_limits<double>::infinity();
    int lr_best_epoch = 0;
    long long lr_best_step = 0;
    ModelParams lr_best_params;
    int bad_epochs = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
      shuffle_inplace(order, order_rng);
      double train_acc = 0.0;
      long long train_n = 0;
      try {
        for (int idx : order) {
          const EncodedCircuit& enc = encs[idx];
          Tape tape;
          const CircuitForward f = model_forward(tape, P, enc, true);
          Tensor target(enc.n_slots(), 1);
          for (int slot = 0; slot < enc.n_slots(); ++slot)
            target.v[slot] = slot_label(enc, slot, cfg.label);
          const int loss = tape.mse(tape.stack_scalars(f.pred), target);
          tape.backward(loss);
          train_acc += tape.value(loss).v[0] * enc.n_slots();
          train_n += enc.n_slots();

          std::vector<Tensor> w(P.params.size()), g(P.params.size());
          for (size_t i = 0; i < P.params.size(); ++i) {
            g[i] = tape.grad(f.param_ids[i]);
            w[i] = std::move(P.params[i].t);
          }
          adam_step(w, g, opt);
          for (size_t i = 0; i < P.params.size(); ++i)
            P.params[i].t = std::move(w[i]);
        }
      } catch (const NumericError&) {
        lr_best_val = std::numeric_limits<double>::infinity();  // diverged
        break;
      }
      const double val = dataset_mse(P, encs, split.val, cfg.label);
      best.log.push_back({epoch, lr, train_acc / train_n, val});
      if (val < lr_best_val) {
        lr_best_val = val;
        lr_best_epoch = epoch;
        lr_best_step = opt.step;
        lr_best_params = P;
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg.patience) {
        break;
      }
    }

    if (lr_best_val < best.val_mse) {
      best.params = std::move(lr_best_params);
      best.val_mse = lr_best_val;
      best.lr = lr;
      best.epoch = lr_best_epoch;
      best.adam_steps = lr_best_step;
    }
  }
  if (!std::isfinite(best.val_mse))
    throw NumericError("training diverged at every learning rate in the grid");
  return best;
}

// ---------------------------------------------------------------------------
// Reports. All CSVs carry a header row; doubles print with %.17g.

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string train_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,lr,train_mse,val_mse\n";
  for (const EpochLog& row : log)
    out << row.epoch << ',' << format_double(row.lr) << ','
        << format_double(row.train_mse) << ',' << format_double(row.val_mse) << '\n';
  return out.str();
}

struct QubitRow {
  std::string method;
  int qubit = 0;
  double mae = 0.0, sd = 0.0;
  long long n_samples = 0;
};

struct StepRow {
  std::string method;
  int trotter_steps = 0;
  double mean_signed_error = 0.0;
  long long n_samples = 0;
};

struct EvalReport {
  std::vector<QubitRow> per_qubit;
  std::vector<StepRow> per_step;
  std::map<std::string, double> total_mae;  // per method, over all val samples
};

// Per-qubit MAE +/- SD and per-Trotter-step mean signed error on the
// validation split, for the model ("qagt"), the ridge fit ("baseline", fit on
// the train split), and the raw noisy values ("unmitigated"), all against the
// configured label.
inline EvalReport evaluate(const ModelParams& P, const std::vector<Sample>& samples,
                           const Split& split, LabelSource label,
                           double ridge_lambda) {
  const std::vector<EncodedCircuit> encs = encode_dataset(samples);
  for (const EncodedCircuit& e : encs)
    for (const Tensor& d : e.descriptors)
      if (d.cols != P.cfg.descriptor_dim)
        throw ConfigError("checkpoint expects descriptor length " +
                          std::to_string(P.cfg.descriptor_dim) +
                          " but the dataset provides " + std::to_string(d.cols));

  std::vector<std::vector<double>> ridge_x;
  std::vector<double> ridge_y;
  for (int idx : split.train) {
    const EncodedCircuit& enc = encs[idx];
    for (int slot = 0; slot < enc.n_slots(); ++slot) {
      const Tensor& d = enc.descriptors[slot];
      ridge_x.emplace_back(d.v.begin(), d.v.end());
      ridge_y.push_back(slot_label(enc, slot, label));
    }
  }
  const RidgeModel ridge = ridge_fit(ridge_x, ridge_y, ridge_lambda);

  static const std::vector<std::string> kMethods = {"qagt", "baseline", "unmitigated"};
  std::map<std::string, std::map<int, std::vector<double>>> abs_err;  // by qubit
  std::map<std::string, std::map<int, std::pair<double, long long>>> step_err;

  for (int idx : split.val) {
    const EncodedCircuit& enc = encs[idx];
    Tape tape;
    const CircuitForward f = model_forward(tape, P, enc, false);
    for (int slot = 0; slot < enc.n_slots(); ++slot) {
      const double y = slot_label(enc, slot, label);
      const int qubit = enc.graph.terminals[slot].qubit;
      const std::vector<double> desc(enc.descriptors[slot].v.begin(),
                                     enc.descriptors[slot].v.end());
      const std::map<std::string, double> preds = {
          {"qagt", tape.value(f.pred[slot]).v[0]},
          {"baseline", ridge_predict(ridge, desc)},
          {"unmitigated", enc.noisy[slot]},
      };
      for (const auto& [method, pred] : preds) {
        abs_err[method][qubit].push_back(std::abs(pred - y));
        auto& se = step_err[method][enc.trotter_steps];
        se.first += pred - y;
        se.second += 1;
      }
    }
  }

  EvalReport rep;
  for (const std::string& method : kMethods) {
    double total = 0.0;
    long long total_n = 0;
    for (const auto& [qubit, errs] : abs_err[method]) {
      const long long n = static_cast<long long>(errs.size());
      double mean = 0.0;
      for (double e : errs) mean += e;
      mean /= n;
      double var = 0.0;
      for (double e : errs) var += (e - mean) * (e - mean);
      const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      rep.per_qubit.push_back({method, qubit, mean, sd, n});
      total += mean * n;
      total_n += n;
    }
    rep.total_mae[method] = total / total_n;
    for (const auto& [steps, se] : step_err[method])
      rep.per_step.push_back({method, steps, se.first / se.second, se.second});
  }
  return rep;
}

inline std::string per_qubit_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "method,qubit,mae,sd,n_samples\n";
  for (const QubitRow& r : rep.per_qubit)
    out << r.method << ',' << r.qubit << ',' << format_double(r.mae) << ','
        << format_double(r.sd) << ',' << r.n_samples << '\n';
  return out.str();
}

inline std::string per_step_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "method,trotter_steps,mean_signed_error,n_samples\n";
  for (const StepRow& r : rep.per_step)
    out << r.method << ',' << r.trotter_steps << ','
        << format_double(r.mean_signed_error) << ',' << r.n_samples << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Ablation grid: each variant trained at seeds base.seed + 0..n_seeds-1 on
// identical data and splits.

struct AblationRow {
  Variant variant;
  uint64_t seed = 0;
  double total_mae = 0.0;
  std::vector<int> qubits;          // ascending
  std::vector<double> per_qubit_mae;
};

inline std::vector<AblationRow> ablate(const std::vector<Sample>& samples,
                                       const TrainConfig& base,
                                       const std::vector<Variant>& variants,
                                       int n_seeds) {
  if (n_seeds < 1) throw ConfigError("ablation needs n_seeds >= 1");
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  const Split split = split_by_circuit(samples, base.n_train, base.n_val);
  std::vector<AblationRow> rows;
  for (Variant v : variants) {
    for (int k = 0; k < n_seeds; ++k) {
      TrainConfig cfg = base;
      cfg.model.variant = v;
      cfg.seed = base.seed + static_cast<uint64_t>(k);
      const TrainResult r = train(samples, cfg);
      const EvalReport rep =
          evaluate(r.params, samples, split, cfg.label, cfg.ridge_lambda);
      AblationRow row;
      row.variant = v;
      row.seed = cfg.seed;
      row.total_mae = rep.total_mae.at("qagt");
      for (const QubitRow& q : rep.per_qubit) {
        if (q.method != "qagt") continue;
        row.qubits.push_back(q.qubit);
        row.per_qubit_mae.push_back(q.mae);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,seed,total_mae";
  if (!rows.empty())
    for (int q : rows.front().qubits) out << ",mae_q" << q;
  out << '\n';
  for (const AblationRow& r : rows) {
    out << variant_name(r.variant) << ',' << r.seed << ','
        << format_double(r.total_mae);
    for (double m : r.per_qubit_mae) out << ',' << format_double(m);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Execution-cost model. ZNE runs every test circuit at m noise factors; the
// mimic pays the m factors only on the training circuits and one plain run
// per test circuit. Break-even sits exactly at n_train/n_test = (m-1)/m.

struct CostModelRow {
  std::string method;
  int m = 0;
  long long total_executions = 0;
  double relative_cost = 0.0;
};

inline std::vector<CostModelRow> cost_model(int m, long long n_train,
                                            long long n_test) {
  if (m < 2) throw ConfigError("cost model needs at least two noise factors");
  if (n_train < 1 || n_test < 1) throw ConfigError("cost model counts must be >= 1");
  const long long zne = static_cast<long long>(m) * n_test;
  const long long mimic = static_cast<long long>(m) * n_train + n_test;
  return {{"zne", m, zne, 1.0},
          {"qagt", m, mimic, static_cast<double>(mimic) / static_cast<double>(zne)}};
}

inline double cost_break_even(int m) {
  if (m < 2) throw ConfigError("cost model needs at least two noise factors");
  return static_cast<double>(m - 1) / m;
}

inline std::string cost_model_csv(const std::vector<CostModelRow>& rows) {
  std::ostringstream out;
  out << "method,m,total_executions,relative_cost\n";
  for (const CostModelRow& r : rows)
    out << r.method << ',' << r.m << ',' << r.total_executions << ','
        << format_double(r.relative_cost) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Lightcone locality statistics: one row per circuit with qubit-averaged
// metrics plus the mean Jaccard overlap across distinct cone pairs (defined
// as 1 for a single-qubit circuit), and a final corpus-mean row.

inline std::string lightcone_stats_csv(const std::vector<Sample>& samples) {
  if (samples.empty()) throw DataError("lightcone stats need at least one circuit");
  std::ostringstream out;
  out << "circuit_id,coverage,internal_frac,boundary,mean_pairwise_jaccard\n";
  double sum_cov = 0.0, sum_int = 0.0, sum_bnd = 0.0, sum_jac = 0.0;
  for (const Sample& s : samples) {
    const CircuitGraph g = build_graph(s.circuit);
    const LocalityReport rep = locality_metrics(g, all_lightcones(g));
    double cov = 0.0, internal = 0.0, bnd = 0.0;
    for (int i = 0; i < rep.n_measured; ++i) {
      cov += rep.coverage[i];
      internal += rep.internal_frac[i];
      bnd += rep.boundary[i];
    }
    cov /= rep.n_measured;
    internal /= rep.n_measured;
    bnd /= rep.n_measured;
    double jac = 0.0;
    int pairs = 0;
    for (int a = 0; a < rep.n_measured; ++a)
      for (int b = a + 1; b < rep.n_measured; ++b) {
        jac += rep.jaccard[a][b];
        ++pairs;
      }
    jac = pairs > 0 ? jac / pairs : 1.0;
    out << s.circuit_id << ',' << format_double(cov) << ',' << format_double(internal)
        << ',' << format_double(bnd) << ',' << format_double(jac) << '\n';
    sum_cov += cov;
    sum_int += internal;
    sum_bnd += bnd;
    sum_jac += jac;
  }
  const double n = static_cast<double>(samples.size());
  out << "mean," << format_double(sum_cov / n) << ',' << format_double(sum_int / n)
      << ',' << format_double(sum_bnd / n) << ',' << format_double(sum_jac / n)
      << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// TOML config loading. Sections: [data] (dataset generation), [noise]
// (the noise model), [model] (architecture), [train] (optimization).
// Every key is optional and falls back to the struct default.

inline DatasetConfig dataset_config_from_toml(const Toml& t) {
  DatasetConfig c;
  c.n_qubits = t.get_int("data", "n_qubits", c.n_qubits);
  c.circuits_total = t.get_int("data", "circuits_total", c.circuits_total);
  c.steps_min = t.get_int("data", "steps_min", c.steps_min);
  c.steps_max = t.get_int("data", "steps_max", c.steps_max);
  c.J_min = t.get_double("data", "J_min", c.J_min);
  c.J_max = t.get_double("data", "J_max", c.J_max);
  c.h_min = t.get_double("data", "h_min", c.h_min);
  c.h_max = t.get_double("data", "h_max", c.h_max);
  c.dt_min = t.get_double("data", "dt_min", c.dt_min);
  c.dt_max = t.get_double("data", "dt_max", c.dt_max);
  c.zne_factors = t.get_double_array("data", "zne_factors", c.zne_factors);
  const std::string method = t.get_string("data", "method", "linear");
  if (method == "linear") c.method = Extrapolation::linear;
  else if (method == "richardson") c.method = Extrapolation::richardson;
  else throw ConfigError("extrapolation method must be 'linear' or 'richardson'");
  c.seed = static_cast<uint64_t>(t.get_int("data", "seed", static_cast<int>(c.seed)));
  c.noise.p1 = t.get_double("noise", "p1", c.noise.p1);
  c.noise.p2 = t.get_double("noise", "p2", c.noise.p2);
  c.noise.readout_flip = t.get_double("noise", "readout_flip", c.noise.readout_flip);
  c.validate();
  return c;
}

inline ModelConfig model_config_from_toml(const Toml& t, int default_descriptor_dim) {
  ModelConfig m;
  m.d_model = t.get_int("model", "d_model", m.d_model);
  m.n_heads = t.get_int("model", "n_heads", m.n_heads);
  m.n_layers = t.get_int("model", "n_layers", m.n_layers);
  m.d_ff = t.get_int("model", "d_ff", m.d_ff);
  m.mlp_hidden = t.get_int_array("model", "mlp_hidden", m.mlp_hidden);
  m.variant = variant_from_name(t.get_string("model", "variant", "Full"));
  m.max_nodes = t.get_int("model", "max_nodes", m.max_nodes);
  m.descriptor_dim = t.get_int("model", "descriptor_dim", default_descriptor_dim);
  m.validate();
  return m;
}

inline TrainConfig train_config_from_toml(const Toml& t, int default_descriptor_dim) {
  TrainConfig c;
  c.n_train = t.get_int("train", "n_train", c.n_train);
  c.n_val = t.get_int("train", "n_val", c.n_val);
  c.label = label_source_from_name(
      t.get_string("train", "label", label_source_name(c.label)));
  c.lrs = t.get_double_array("train", "lrs", c.lrs);
  c.max_epochs = t.get_int("train", "max_epochs", c.max_epochs);
  c.patience = t.get_int("train", "patience", c.patience);
  c.seed = static_cast<uint64_t>(t.get_int("train", "seed", static_cast<int>(c.seed)));
  c.ridge_lambda = t.get_double("train", "ridge_lambda", c.ridge_lambda);
  c.model = model_config_from_toml(t, default_descriptor_dim);
  c.validate();
  return c;
}

}  // namespace qem
