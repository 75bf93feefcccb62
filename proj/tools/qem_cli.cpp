// qem: command-line surface over the mitigation pipeline. Subcommands cover
// dataset generation, training with the learning-rate sweep, evaluation CSVs,
// the ablation grid, the ridge baseline, lightcone statistics, the
// execution-cost model, and parameter accounting.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qem/train.hpp"

namespace {

namespace fs = std::filesystem;

qem::Toml load_config(const std::string& path) {
  return path.empty() ? qem::Toml{} : qem::Toml::parse_file(path);
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw qem::DataError("cannot create output directory: " + out_dir);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.good()) throw qem::DataError("cannot write file: " + path.string());
  out << text;
}

std::vector<qem::Sample> load_samples(const std::string& path) {
  std::vector<qem::Sample> samples = qem::read_dataset_jsonl(path);
  if (samples.empty()) throw qem::DataError("dataset is empty: " + path);
  return samples;
}

// When [model].descriptor_dim is absent the descriptor length follows from
// the dataset itself: base features plus one slot column per measured qubit.
int descriptor_dim_of(const std::vector<qem::Sample>& samples) {
  return qem::kDescriptorBase +
         static_cast<int>(samples.front().circuit.measured.size());
}

// `--checkpoint` names the manifest; the weight blob sits next to it.
std::string checkpoint_bin_path(const std::string& json_path) {
  const std::string suffix = ".json";
  if (json_path.size() > suffix.size() &&
      json_path.compare(json_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return json_path.substr(0, json_path.size() - suffix.size()) + ".bin";
  return json_path + ".bin";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qem: lightcone-attention circuit mitigation pipeline\n"
      "Config file: TOML with sections [data], [noise], [model], [train]."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "TOML config file");
  app.add_option("--out-dir", out_dir, "directory for emitted files")
      ->capture_default_str();
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override the config's RNG seed");

  std::string data_path, gen_out, checkpoint_path;
  int n_seeds = 1;
  long long cm_train = 100, cm_test = 400;
  std::vector<int> cm_factors = {2, 3};
  std::vector<std::string> variant_names = {"Full", "GCNBackbone", "NoGlobal",
                                            "NoLightcone"};

  CLI::App* gen = app.add_subcommand(
      "gen-data", "simulate a Trotterized-TFIM dataset and write JSONL");
  gen->add_option("--out", gen_out, "output JSONL path (default <out-dir>/dataset.jsonl)");
  gen->fallthrough();

  CLI::App* train = app.add_subcommand(
      "train", "train the model; writes checkpoint.{json,bin} and train_log.csv");
  train->add_option("--data", data_path, "dataset JSONL")->required();
  train->fallthrough();

  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate a checkpoint; writes per_qubit.csv and per_step.csv");
  eval->add_option("--data", data_path, "dataset JSONL")->required();
  eval->add_option("--checkpoint", checkpoint_path,
                   "checkpoint manifest (.json; weight blob expected alongside)")
      ->required();
  eval->fallthrough();

  CLI::App* ablate = app.add_subcommand(
      "ablate", "train the variant grid; writes ablation.csv");
  ablate->add_option("--data", data_path, "dataset JSONL")->required();
  ablate->add_option("--seeds", n_seeds, "seeds per variant")
      ->capture_default_str();
  ablate->add_option("--variants", variant_names, "comma-separated variant names")
      ->delimiter(',')
      ->capture_default_str();
  ablate->fallthrough();

  CLI::App* baseline = app.add_subcommand(
      "baseline", "ridge regression from descriptors; writes baseline.csv");
  baseline->add_option("--data", data_path, "dataset JSONL")->required();
  baseline->fallthrough();

  CLI::App* lstats = app.add_subcommand(
      "lightcone-stats", "locality metrics per circuit; writes lightcone_stats.csv");
  lstats->add_option("--data", data_path, "dataset JSONL")->required();
  lstats->fallthrough();

  CLI::App* cost = app.add_subcommand(
      "cost-model", "execution counts vs plain ZNE; writes cost_model.csv");
  cost->add_option("--m", cm_factors, "noise-factor counts (repeatable)")
      ->delimiter(',')
      ->capture_default_str();
  cost->add_option("--n-train", cm_train, "training circuits")->capture_default_str();
  cost->add_option("--n-test", cm_test, "test circuits")->capture_default_str();
  cost->fallthrough();

  CLI::App* pcount = app.add_subcommand(
      "param-count", "print the parameter manifest for the configured model");
  pcount->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the message or requested help text
    return rc == 0 ? 0 : 2;
  }

  try {
    const qem::Toml cfg = load_config(config_path);

    if (gen->parsed()) {
      qem::DatasetConfig dc = qem::dataset_config_from_toml(cfg);
      if (seed_opt->count()) dc.seed = seed;
      const std::vector<qem::Sample> samples = qem::build_dataset(dc);
      const fs::path out = gen_out.empty()
                               ? prepare_out_dir(out_dir) / "dataset.jsonl"
                               : fs::path(gen_out);
      qem::write_dataset_jsonl(samples, out.string());
      std::cout << "wrote " << samples.size() << " circuits (n_qubits="
                << dc.n_qubits << ", seed=" << dc.seed << ") to " << out.string()
                << "\n";
    } else if (train->parsed()) {
      const std::vector<qem::Sample> samples = load_samples(data_path);
      qem::TrainConfig tc = qem::train_config_from_toml(cfg, descriptor_dim_of(samples));
      if (seed_opt->count()) tc.seed = seed;
      const qem::TrainResult r = qem::train(samples, tc);
      const fs::path out = prepare_out_dir(out_dir);
      qem::save_checkpoint(r.params, (out / "checkpoint.json").string(),
                           (out / "checkpoint.bin").string(), tc.seed, r.adam_steps);
      write_text(out / "train_log.csv", qem::train_log_csv(r.log));
      std::cout << "best val_mse " << qem::format_double(r.val_mse) << " at lr "
                << qem::format_double(r.lr) << ", epoch " << r.epoch << " ("
                << r.params.count() << " parameters, "
                << qem::variant_name(tc.model.variant) << ")\n"
                << "wrote checkpoint.json, checkpoint.bin, train_log.csv to "
                << out.string() << "\n";
    } else if (eval->parsed()) {
      const std::vector<qem::Sample> samples = load_samples(data_path);
      const qem::TrainConfig tc =
          qem::train_config_from_toml(cfg, descriptor_dim_of(samples));
      const qem::Checkpoint ck = qem::load_checkpoint(
          checkpoint_path, checkpoint_bin_path(checkpoint_path));
      const qem::Split split =
          qem::split_by_circuit(samples, tc.n_train, tc.n_val);
      const qem::EvalReport rep =
          qem::evaluate(ck.params, samples, split, tc.label, tc.ridge_lambda);
      const fs::path out = prepare_out_dir(out_dir);
      write_text(out / "per_qubit.csv", qem::per_qubit_csv(rep));
      write_text(out / "per_step.csv", qem::per_step_csv(rep));
      for (const auto& [method, mae] : rep.total_mae)
        std::cout << "total MAE " << method << " = " << qem::format_double(mae)
                  << "\n";
      std::cout << "wrote per_qubit.csv, per_step.csv to " << out.string() << "\n";
    } else if (ablate->parsed()) {
      const std::vector<qem::Sample> samples = load_samples(data_path);
      qem::TrainConfig tc = qem::train_config_from_toml(cfg, descriptor_dim_of(samples));
      if (seed_opt->count()) tc.seed = seed;
      std::vector<qem::Variant> variants;
      for (const std::string& name : variant_names)
        variants.push_back(qem::variant_from_name(name));
      const std::vector<qem::AblationRow> rows =
          qem::ablate(samples, tc, variants, n_seeds);
      const fs::path out = prepare_out_dir(out_dir);
      write_text(out / "ablation.csv", qem::ablation_csv(rows));
      for (const qem::AblationRow& r : rows)
        std::cout << qem::variant_name(r.variant) << " seed " << r.seed
                  << ": total MAE " << qem::format_double(r.total_mae) << "\n";
      std::cout << "wrote ablation.csv to " << out.string() << "\n";
    } else if (baseline->parsed()) {
      const std::vector<qem::Sample> samples = load_samples(data_path);
      const qem::TrainConfig tc =
          qem::train_config_from_toml(cfg, descriptor_dim_of(samples));
      const qem::Split split =
          qem::split_by_circuit(samples, tc.n_train, tc.n_val);
      const std::vector<qem::EncodedCircuit> encs = qem::encode_dataset(samples);

      std::vector<std::vector<double>> X;
      std::vector<double> y;
      for (int idx : split.train) {
        const qem::EncodedCircuit& enc = encs[idx];
        for (int slot = 0; slot < enc.n_slots(); ++slot) {
          X.emplace_back(enc.descriptors[slot].v.begin(),
                         enc.descriptors[slot].v.end());
          y.push_back(qem::slot_label(enc, slot, tc.label));
        }
      }
      const qem::RidgeModel model = qem::ridge_fit(X, y, tc.ridge_lambda);

      std::string csv = "circuit_id,qubit,prediction,label\n";
      double abs_sum = 0.0;
      long long n = 0;
      for (int idx : split.val) {
        const qem::EncodedCircuit& enc = encs[idx];
        for (int slot = 0; slot < enc.n_slots(); ++slot) {
          const std::vector<double> x(enc.descriptors[slot].v.begin(),
                                      enc.descriptors[slot].v.end());
          const double pred = qem::ridge_predict(model, x);
          const double label = qem::slot_label(enc, slot, tc.label);
          csv += std::to_string(enc.circuit_id) + "," +
                 std::to_string(enc.graph.terminals[slot].qubit) + "," +
                 qem::format_double(pred) + "," + qem::format_double(label) + "\n";
          abs_sum += std::abs(pred - label);
          ++n;
        }
      }
      const fs::path out = prepare_out_dir(out_dir);
      write_text(out / "baseline.csv", csv);
      std::cout << "ridge val MAE " << qem::format_double(abs_sum / n) << " over "
                << n << " samples\nwrote baseline.csv to " << out.string() << "\n";
    } else if (lstats->parsed()) {
      const std::vector<qem::Sample> samples = load_samples(data_path);
      const std::string csv = qem::lightcone_stats_csv(samples);
      const fs::path out = prepare_out_dir(out_dir);
      write_text(out / "lightcone_stats.csv", csv);
      // Echo the corpus-mean row (the last line) for a quick look.
      const size_t pos = csv.rfind("mean,");
      if (pos != std::string::npos) std::cout << csv.substr(pos);
      std::cout << "wrote lightcone_stats.csv to " << out.string() << "\n";
    } else if (cost->parsed()) {
      std::vector<qem::CostModelRow> rows;
      for (int m : cm_factors) {
        const std::vector<qem::CostModelRow> pair =
            qem::cost_model(m, cm_train, cm_test);
        rows.insert(rows.end(), pair.begin(), pair.end());
        std::cout << "m=" << m << ": break-even n_train/n_test = "
                  << qem::format_double(qem::cost_break_even(m)) << "\n";
      }
      const fs::path out = prepare_out_dir(out_dir);
      write_text(out / "cost_model.csv", qem::cost_model_csv(rows));
      std::cout << "wrote cost_model.csv to " << out.string() << "\n";
    } else if (pcount->parsed()) {
      const qem::DatasetConfig dc = qem::dataset_config_from_toml(cfg);
      const qem::ModelConfig mc = qem::model_config_from_toml(
          cfg, qem::kDescriptorBase + dc.n_qubits);
      long long total = 0;
      for (const qem::ParamSpec& p : qem::param_layout(mc)) {
        const long long n = static_cast<long long>(p.rows) * p.cols;
        total += n;
        std::cout << p.name << " [" << p.rows << " x " << p.cols << "] = " << n
                  << "\n";
      }
      std::cout << "total " << total << " parameters ("
                << qem::variant_name(mc.variant) << ")\n";
    }
    return 0;
  } catch (const qem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qem::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const qem::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const qem::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
}
