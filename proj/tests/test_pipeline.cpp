// Pipeline tests: cost model arithmetic, ridge baseline against weighted
// normal-equations oracles, the TOML reader, config mapping, circuit splits,
// training (degenerate-task convergence, divergence drill, determinism),
// evaluation reports, the ablation grid, and lightcone statistics.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "qem/train.hpp"

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

qem::ModelConfig tiny_model(int n_measured, qem::Variant v = qem::Variant::Full) {
  qem::ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.mlp_hidden = {16};
  cfg.variant = v;
  cfg.descriptor_dim = qem::kDescriptorBase + n_measured;
  return cfg;
}

std::vector<qem::Sample> tiny_dataset(int n_circuits, int n_qubits, int steps_max,
                                      const qem::NoiseModel& noise, uint64_t seed) {
  qem::DatasetConfig cfg;
  cfg.n_qubits = n_qubits;
  cfg.circuits_total = n_circuits;
  cfg.steps_min = 1;
  cfg.steps_max = steps_max;
  cfg.noise = noise;
  cfg.seed = seed;
  return qem::build_dataset(cfg);
}

// Weighted ridge via explicit normal equations, for the duplicate-row
// identity: a row listed twice must act exactly like weight 2.
qem::RidgeModel weighted_ridge_oracle(const std::vector<std::vector<double>>& X,
                                      const std::vector<double>& y,
                                      const std::vector<double>& w, double lambda) {
  const int n = static_cast<int>(X.size()), d = static_cast<int>(X[0].size());
  Eigen::MatrixXd M(n, d);
  Eigen::VectorXd v(n), wv(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) M(i, j) = X[i][j];
    v(i) = y[i];
    wv(i) = w[i];
  }
  const double wsum = wv.sum();
  const Eigen::RowVectorXd xbar = (wv.asDiagonal() * M).colwise().sum() / wsum;
  const double ybar = wv.dot(v) / wsum;
  M.rowwise() -= xbar;
  v.array() -= ybar;
  Eigen::MatrixXd G = M.transpose() * wv.asDiagonal() * M;
  G.diagonal().array() += lambda;
  const Eigen::VectorXd beta = G.ldlt().solve(M.transpose() * (wv.asDiagonal() * v));
  qem::RidgeModel m;
  m.w.assign(beta.data(), beta.data() + d);
  m.b = ybar - xbar.dot(beta);
  return m;
}

}  // namespace

TEST_CASE("cost model reproduces the execution-count table", "[pipeline]") {
  const auto m2 = qem::cost_model(2, 100, 400);
  REQUIRE(m2.size() == 2);
  CHECK(m2[0].method == "zne");
  CHECK(m2[0].total_executions == 800);
  CHECK(m2[0].relative_cost == 1.0);
  CHECK(m2[1].method == "qagt");
  CHECK(m2[1].total_executions == 600);
  CHECK(m2[1].relative_cost == 0.75);

  const auto m3 = qem::cost_model(3, 100, 400);
  CHECK(m3[0].total_executions == 1200);
  CHECK(m3[1].total_executions == 700);
  CHECK(m3[1].relative_cost == Catch::Approx(0.5833).margin(1e-4));

  for (int m = 2; m <= 10; ++m) {
    CHECK(qem::cost_break_even(m) == static_cast<double>(m - 1) / m);
    // Sitting exactly at the break-even ratio costs exactly 1.
    const auto rows = qem::cost_model(m, m - 1, m);
    CHECK(rows[1].relative_cost == 1.0);
    // Strictly below it is strictly cheaper, strictly above strictly dearer.
    CHECK(qem::cost_model(m, m - 2 > 0 ? m - 2 : 1, m)[1].relative_cost <= 1.0);
    CHECK(qem::cost_model(m, m, m)[1].relative_cost > 1.0);
  }

  CHECK_THROWS_AS(qem::cost_model(1, 100, 400), qem::ConfigError);
  CHECK_THROWS_AS(qem::cost_model(2, 0, 400), qem::ConfigError);
  CHECK_THROWS_AS(qem::cost_break_even(1), qem::ConfigError);

  const auto lines = lines_of(qem::cost_model_csv(m2));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "method,m,total_executions,relative_cost");
  CHECK(lines[1] == "zne,2,800,1");
  CHECK(lines[2] == "qagt,2,600,0.75");
}

TEST_CASE("ridge regression recovers planted coefficients", "[pipeline]") {
  // y = 2 x0 - 3 x1 + 1 on a well-conditioned design; tiny lambda barely
  // perturbs the exact solution.
  std::mt19937_64 rng = qem::derive_stream(5, 0);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    const double a = qem::uniform_range(rng, -1, 1), b = qem::uniform_range(rng, -1, 1);
    X.push_back({a, b});
    y.push_back(2 * a - 3 * b + 1);
  }
  const qem::RidgeModel m = qem::ridge_fit(X, y, 1e-10);
  CHECK(m.w[0] == Catch::Approx(2.0).margin(1e-6));
  CHECK(m.w[1] == Catch::Approx(-3.0).margin(1e-6));
  CHECK(m.b == Catch::Approx(1.0).margin(1e-6));
  CHECK(qem::ridge_predict(m, {0.5, -0.5}) == Catch::Approx(3.5).margin(1e-6));

  // lambda -> infinity kills the weights; predictions collapse to mean(y).
  const qem::RidgeModel flat = qem::ridge_fit(X, y, 1e15);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= y.size();
  CHECK(qem::ridge_predict(flat, {0.9, 0.9}) == Catch::Approx(ybar).margin(1e-9));

  CHECK_THROWS_AS(qem::ridge_fit(X, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(qem::ridge_fit(X, y, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(qem::ridge_fit({}, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(qem::ridge_fit({{1, 2}, {1}}, {0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(qem::ridge_predict(m, {1.0}), std::invalid_argument);
}

TEST_CASE("duplicated ridge rows act as doubled weights", "[pipeline]") {
  std::mt19937_64 rng = qem::derive_stream(6, 0);
  std::vector<std::vector<double>> X0;
  std::vector<double> y0;
  for (int i = 0; i < 5; ++i) {
    X0.push_back({qem::uniform_range(rng, -1, 1), qem::uniform_range(rng, -1, 1),
                  qem::uniform_range(rng, -1, 1)});
    y0.push_back(qem::uniform_range(rng, -1, 1));
  }
  std::vector<std::vector<double>> X = X0;
  std::vector<double> y = y0;
  X.push_back(X0[2]);
  y.push_back(y0[2]);

  const qem::RidgeModel dup = qem::ridge_fit(X, y, 0.5);
  const qem::RidgeModel weighted = weighted_ridge_oracle(X0, y0, {1, 1, 2, 1, 1}, 0.5);
  for (int j = 0; j < 3; ++j)
    CHECK(dup.w[j] == Catch::Approx(weighted.w[j]).margin(1e-9));
  CHECK(dup.b == Catch::Approx(weighted.b).margin(1e-9));
}

TEST_CASE("toml reader handles the config surface", "[pipeline]") {
  const std::string text = R"(# experiment config
title = "desk run"   # root-level key
[data]
n_qubits = 6
J_min = 0.5
zne_factors = [1.0, 2.0, 3.0]
method = "linear"
deep = [[1, 2], [3]]
[train]
label = "zne"
resume = false
note = "quoted \"stuff\" here"
)";
  const qem::Toml t = qem::Toml::parse(text);
  CHECK(t.get_string("", "title", "") == "desk run");
  CHECK(t.get_int("data", "n_qubits", 0) == 6);
  CHECK(t.get_double("data", "J_min", 0) == 0.5);
  CHECK(t.get_double_array("data", "zne_factors", {}) ==
        std::vector<double>{1.0, 2.0, 3.0});
  CHECK(t.get_string("data", "method", "") == "linear");
  CHECK(t.get_string("train", "label", "") == "zne");
  CHECK(t.get_bool("train", "resume", true) == false);
  CHECK(t.get_string("train", "note", "") == "quoted \"stuff\" here");
  CHECK(t.has("data", "n_qubits"));
  CHECK_FALSE(t.has("data", "missing"));
  CHECK(t.get_int("data", "missing", 42) == 42);  // fallback

  // Type errors name the key; syntax errors name the line.
  CHECK_THROWS_WITH(t.get_int("data", "method", 0),
                    Catch::Matchers::ContainsSubstring("[data].method"));
  CHECK_THROWS_WITH(t.get_int("data", "J_min", 0),
                    Catch::Matchers::ContainsSubstring("integer"));
  CHECK_THROWS_WITH(t.get_double_array("data", "deep", {}),
                    Catch::Matchers::ContainsSubstring("number"));
  CHECK_THROWS_WITH(qem::Toml::parse("[data\nx = 1"),
                    Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(qem::Toml::parse("x = 1\nnonsense"),
                    Catch::Matchers::ContainsSubstring("line 2"));
  CHECK_THROWS_WITH(qem::Toml::parse("x = not_a_value"),
                    Catch::Matchers::ContainsSubstring("cannot parse"));
  CHECK_THROWS_WITH(qem::Toml::parse("x = 1\nx = 2"),
                    Catch::Matchers::ContainsSubstring("duplicate"));
  CHECK_THROWS_WITH(qem::Toml::parse("x = \"open"),
                    Catch::Matchers::ContainsSubstring("unterminated"));
  CHECK_THROWS_WITH(qem::Toml::parse("x = [1, 2"),
                    Catch::Matchers::ContainsSubstring("close"));
  CHECK_THROWS_AS(qem::Toml::parse_file("/nonexistent/config.toml"),
                  qem::ConfigError);
}

TEST_CASE("toml maps onto dataset, model, and train configs", "[pipeline]") {
  const std::string text = R"(
[data]
n_qubits = 4
circuits_total = 50
steps_min = 2
steps_max = 5
seed = 9
[noise]
p1 = 0.002
p2 = 0.02
readout_flip = 0.01
[model]
d_model = 16
n_heads = 4
d_ff = 32
mlp_hidden = [24, 12]
variant = "NoGlobal"
[train]
n_train = 30
n_val = 20
label = "zne"
lrs = [0.003]
max_epochs = 50
patience = 5
seed = 3
ridge_lambda = 0.01
)";
  const qem::Toml t = qem::Toml::parse(text);
  const qem::DatasetConfig ds = qem::dataset_config_from_toml(t);
  CHECK(ds.n_qubits == 4);
  CHECK(ds.circuits_total == 50);
  CHECK(ds.steps_min == 2);
  CHECK(ds.steps_max == 5);
  CHECK(ds.noise.p1 == 0.002);
  CHECK(ds.noise.p2 == 0.02);
  CHECK(ds.noise.readout_flip == 0.01);
  CHECK(ds.seed == 9);
  CHECK(ds.J_min == 0.5);  // untouched default

  const qem::TrainConfig tc =
      qem::train_config_from_toml(t, qem::kDescriptorBase + ds.n_qubits);
  CHECK(tc.n_train == 30);
  CHECK(tc.n_val == 20);
  CHECK(tc.label == qem::LabelSource::zne);
  CHECK(tc.lrs == std::vector<double>{0.003});
  CHECK(tc.max_epochs == 50);
  CHECK(tc.patience == 5);
  CHECK(tc.seed == 3);
  CHECK(tc.ridge_lambda == 0.01);
  CHECK(tc.model.d_model == 16);
  CHECK(tc.model.variant == qem::Variant::NoGlobal);
  CHECK(tc.model.descriptor_dim == qem::kDescriptorBase + 4);

  CHECK_THROWS_AS(
      qem::dataset_config_from_toml(qem::Toml::parse("[data]\nmethod = \"cubic\"")),
      qem::ConfigError);
  CHECK_THROWS_AS(
      qem::model_config_from_toml(qem::Toml::parse("[model]\nd_model = 10"), 95),
      qem::ConfigError);  // 10 not divisible by 4 heads
  CHECK_THROWS_AS(
      qem::train_config_from_toml(qem::Toml::parse("[train]\npatience = 0"), 95),
      qem::ConfigError);
}

TEST_CASE("splits are by circuit and reject bad shapes", "[pipeline]") {
  std::vector<qem::Sample> samples = tiny_dataset(10, 2, 2, {0, 0, 0}, 11);
  // Scramble storage order; the split must still go by ascending circuit_id.
  std::swap(samples[0], samples[7]);
  std::swap(samples[3], samples[9]);

  const qem::Split s = qem::split_by_circuit(samples, 6, 3);
  REQUIRE(s.train.size() == 6);
  REQUIRE(s.val.size() == 3);
  std::set<int> train_ids, val_ids;
  for (int i : s.train) train_ids.insert(samples[i].circuit_id);
  for (int i : s.val) val_ids.insert(samples[i].circuit_id);
  CHECK(train_ids == std::set<int>{0, 1, 2, 3, 4, 5});
  CHECK(val_ids == std::set<int>{6, 7, 8});

  CHECK_THROWS_AS(qem::split_by_circuit(samples, 8, 3), qem::ConfigError);
  std::vector<qem::Sample> dup = samples;
  dup[1].circuit_id = dup[2].circuit_id;
  CHECK_THROWS_AS(qem::split_by_circuit(dup, 2, 2), qem::DataError);
}

TEST_CASE("zero-noise exact-label training converges to tiny MSE", "[pipeline]") {
  // With no noise the exact label equals the noisy value, which sits in the
  // descriptor; the model just has to learn to copy one input through. The
  // copy has to generalize to held-out circuits, and with only a few dozen
  // training slots the attention stack memorizes instead — hence the full
  // 120-circuit training split (val plateaus near 3e-3 at 20 circuits and
  // reaches ~5e-5 here).
  const std::vector<qem::Sample> samples = tiny_dataset(150, 3, 3, {0, 0, 0}, 7);
  qem::TrainConfig cfg;
  cfg.n_train = 120;
  cfg.n_val = 30;
  cfg.label = qem::LabelSource::exact;
  cfg.lrs = {1e-2};
  cfg.max_epochs = 500;
  cfg.patience = 80;
  cfg.seed = 1;
  cfg.model = tiny_model(3);

  const qem::TrainResult r = qem::train(samples, cfg);
  CHECK(r.val_mse < 1e-4);
  CHECK(r.lr == 1e-2);
  CHECK(r.epoch >= 1);
  CHECK(std::isfinite(r.log.back().train_mse));
}

TEST_CASE("absurd learning rate stops within two epochs", "[pipeline]") {
  const std::vector<qem::Sample> samples = tiny_dataset(8, 2, 2, {1e-3, 1e-2, 0}, 3);
  qem::TrainConfig cfg;
  cfg.n_train = 5;
  cfg.n_val = 3;
  cfg.lrs = {1e10};
  cfg.max_epochs = 50;
  cfg.patience = 1;
  cfg.seed = 1;
  cfg.model = tiny_model(2);

  // Either the step blows the weights into non-finite territory (diagnosed
  // NumericError) or validation never improves and patience 1 halts after
  // epoch 2; both count as stopping within two epochs.
  try {
    const qem::TrainResult r = qem::train(samples, cfg);
    CHECK(r.log.size() <= 2);
  } catch (const qem::NumericError& e) {
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("identical seeds give bit-identical logs and checkpoints", "[pipeline]") {
  const std::vector<qem::Sample> samples = tiny_dataset(10, 2, 2, {1e-3, 1e-2, 0}, 5);
  qem::TrainConfig cfg;
  cfg.n_train = 6;
  cfg.n_val = 4;
  cfg.lrs = {1e-2, 1e-3};
  cfg.max_epochs = 3;
  cfg.patience = 3;
  cfg.seed = 17;
  cfg.model = tiny_model(2);

  const qem::TrainResult a = qem::train(samples, cfg);
  const qem::TrainResult b = qem::train(samples, cfg);
  CHECK(qem::train_log_csv(a.log) == qem::train_log_csv(b.log));
  REQUIRE(a.params.params.size() == b.params.params.size());
  for (size_t i = 0; i < a.params.params.size(); ++i)
    CHECK(a.params.params[i].t.v == b.params.params[i].t.v);

  // The grid ran both rates: 3 epochs each, lr column tells them apart.
  REQUIRE(a.log.size() == 6);
  CHECK(a.log[0].lr == 1e-2);
  CHECK(a.log[3].lr == 1e-3);
  CHECK(a.log[3].epoch == 1);  // per-rate epoch numbering restarts

  const auto lines = lines_of(qem::train_log_csv(a.log));
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "epoch,lr,train_mse,val_mse");
}

TEST_CASE("evaluation reports the three methods against the label", "[pipeline]") {
  const std::vector<qem::Sample> samples = tiny_dataset(12, 3, 3, {0, 0, 0}, 19);
  const qem::Split split = qem::split_by_circuit(samples, 8, 4);
  const qem::ModelParams P = qem::init_params(tiny_model(3), 2);

  const qem::EvalReport rep =
      qem::evaluate(P, samples, split, qem::LabelSource::exact, 1e-3);

  // Zero noise: unmitigated coincides with the exact label bit-for-bit.
  int unmitigated_rows = 0;
  for (const qem::QubitRow& r : rep.per_qubit) {
    if (r.method != "unmitigated") continue;
    ++unmitigated_rows;
    CHECK(r.mae == 0.0);
    CHECK(r.sd == 0.0);
    CHECK(r.n_samples == 4);
  }
  CHECK(unmitigated_rows == 3);
  CHECK(rep.total_mae.at("unmitigated") == 0.0);
  CHECK(rep.per_qubit.size() == 9);  // 3 methods x 3 qubits
  CHECK(rep.total_mae.count("qagt") == 1);
  CHECK(rep.total_mae.count("baseline") == 1);

  for (const qem::StepRow& r : rep.per_step)
    if (r.method == "unmitigated") CHECK(r.mean_signed_error == 0.0);

  // Ridge sees the label as a descriptor feature here, but with only 24
  // training rows against ~90 descriptor columns the penalized fit spreads
  // weight across collinear features instead of isolating the copy column,
  // so it is close rather than exact. Exact recovery with rows > columns is
  // covered by the planted-coefficients case; here we only need the wiring
  // (fit on train descriptors, predict on val) to land far below the ~0.3
  // spread of the labels themselves.
  CHECK(rep.total_mae.at("baseline") < 0.02);

  const auto pq = lines_of(qem::per_qubit_csv(rep));
  CHECK(pq[0] == "method,qubit,mae,sd,n_samples");
  CHECK(pq.size() == 10);
  const auto ps = lines_of(qem::per_step_csv(rep));
  CHECK(ps[0] == "method,trotter_steps,mean_signed_error,n_samples");

  // Checkpoint/dataset dimension mismatch is a config error.
  const qem::ModelParams wrong = qem::init_params(tiny_model(5), 2);
  CHECK_THROWS_AS(qem::evaluate(wrong, samples, split, qem::LabelSource::exact, 1e-3),
                  qem::ConfigError);
}

TEST_CASE("ablation grid trains every variant at every seed", "[pipeline]") {
  const std::vector<qem::Sample> samples = tiny_dataset(8, 2, 2, {1e-3, 1e-2, 0}, 23);
  qem::TrainConfig base;
  base.n_train = 5;
  base.n_val = 3;
  base.lrs = {3e-3};
  base.max_epochs = 2;
  base.patience = 2;
  base.seed = 40;
  base.model = tiny_model(2);

  const auto single = qem::ablate(samples, base, {qem::Variant::Full}, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].seed == 40);
  CHECK(single[0].per_qubit_mae.size() == 2);
  CHECK(single[0].total_mae >= 0.0);

  const auto grid = qem::ablate(
      samples, base, {qem::Variant::Full, qem::Variant::GCNBackbone}, 2);
  REQUIRE(grid.size() == 4);
  CHECK(grid[0].variant == qem::Variant::Full);
  CHECK(grid[1].seed == 41);
  CHECK(grid[2].variant == qem::Variant::GCNBackbone);

  const auto lines = lines_of(qem::ablation_csv(grid));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "variant,seed,total_mae,mae_q0,mae_q1");
  CHECK(lines[1].rfind("Full,40,", 0) == 0);

  CHECK_THROWS_AS(qem::ablate(samples, base, {qem::Variant::Full}, 0),
                  qem::ConfigError);
  CHECK_THROWS_AS(qem::ablate(samples, base, {}, 1), qem::ConfigError);
}

TEST_CASE("lightcone stats emit per-circuit rows plus a corpus mean", "[pipeline]") {
  // Single-wire chain: the cone is the whole graph on every metric.
  qem::Sample chain;
  chain.circuit.n_qubits = 1;
  chain.circuit.gates.push_back({0, qem::GateKind::sx, {0}, 0.0, 0});
  chain.circuit.gates.push_back({1, qem::GateKind::rz, {0}, 0.3, 1});
  chain.circuit.measured = {{0, qem::Basis::Z}};
  chain.noisy[0] = chain.label_zne[0] = chain.label_exact[0] = 0.5;
  qem::Sample chain2 = chain;
  chain2.circuit_id = 1;

  const auto lines = lines_of(qem::lightcone_stats_csv({chain, chain2}));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "circuit_id,coverage,internal_frac,boundary,mean_pairwise_jaccard");
  CHECK(lines[1] == "0,1,1,0,1");
  CHECK(lines[2] == "1,1,1,0,1");
  CHECK(lines[3] == "mean,1,1,0,1");  // identical circuits: mean == row

  // TFIM corpus: every row satisfies internal + boundary = 1.
  const std::vector<qem::Sample> samples = tiny_dataset(6, 4, 4, {1e-3, 1e-2, 0}, 31);
  const auto rows = lines_of(qem::lightcone_stats_csv(samples));
  REQUIRE(rows.size() == samples.size() + 2);
  for (size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string id, cov, internal, boundary, jac;
    std::getline(in, id, ',');
    std::getline(in, cov, ',');
    std::getline(in, internal, ',');
    std::getline(in, boundary, ',');
    std::getline(in, jac, ',');
    CHECK(std::abs(std::stod(internal) + std::stod(boundary) - 1.0) < 1e-12);
    CHECK(std::stod(cov) <= 1.0);
    CHECK(std::stod(jac) <= 1.0);
  }

  CHECK_THROWS_AS(qem::lightcone_stats_csv({}), qem::DataError);
}
