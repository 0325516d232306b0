// nlreg command-line pipeline: dataset generation, weight training,
// validation, the full experiment, and the numerical self-check suite.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "nlreg/csv.hpp"
#include "nlreg/experiment.hpp"
#include "nlreg/oracle.hpp"

namespace fs = std::filesystem;
using namespace nlreg;

namespace {

struct CliOptions {
  std::string config_file;
  std::vector<double> s_values;
  std::string data_case;
  std::string noise_scaling;
  long n_nodes = -1, n_pieces = -1;
  int n_train = -1, n_val = -1;
  std::vector<int> batch_sizes;
  double alpha = -1, beta = -1, gamma1 = -1, gamma2 = -1, delta = -1;
  double rho = -1, epsilon = -1, phi_tol = -1, init_sigma = -1;
  long seed = -1;
  int threads = -1, max_outer = -1, max_inner = -1;
  bool dump_data = false;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_file, "config file (key = value lines)");
  cmd->add_option("--s", opt.s_values, "fractional orders");
  cmd->add_option("--case", opt.data_case, "data case, A or B");
  cmd->add_option("--n-nodes", opt.n_nodes, "FEM nodes");
  cmd->add_option("--n-pieces", opt.n_pieces, "weight pieces (default n_nodes+1)");
  cmd->add_option("--n-train", opt.n_train, "training samples");
  cmd->add_option("--n-val", opt.n_val, "validation samples");
  cmd->add_option("--batch-sizes", opt.batch_sizes, "batch sizes (divisors of n_train)");
  cmd->add_option("--alpha", opt.alpha, "L2 weight-penalty coefficient");
  cmd->add_option("--beta", opt.beta, "L1 weight-penalty coefficient");
  cmd->add_option("--gamma1", opt.gamma1, "lower weight bound on (0,delta)");
  cmd->add_option("--gamma2", opt.gamma2, "global upper weight bound");
  cmd->add_option("--delta", opt.delta, "radius of the lower-bound band");
  cmd->add_option("--rho", opt.rho, "forward operator diffusion coefficient");
  cmd->add_option("--epsilon", opt.epsilon, "relative noise level");
  cmd->add_option("--noise-scaling", opt.noise_scaling, "dataset|per-sample");
  cmd->add_option("--seed", opt.seed, "RNG seed");
  cmd->add_option("--phi-tol", opt.phi_tol, "stationarity tolerance");
  cmd->add_option("--max-outer", opt.max_outer, "outer iteration cap");
  cmd->add_option("--max-inner", opt.max_inner, "inner iteration cap");
  cmd->add_option("--init-sigma", opt.init_sigma, "initial weight value");
  cmd->add_option("--threads", opt.threads, "worker threads (0 = auto)");
  cmd->add_flag("--dump-data", opt.dump_data, "write datasets to out-dir");
  cmd->add_option("--out-dir", opt.out_dir, "output directory");
}

ExperimentConfig resolve_config(const CliOptions& opt) {
  ExperimentConfig cfg;
  if (!opt.config_file.empty()) cfg = load_config_file(opt.config_file);
  if (!opt.s_values.empty()) cfg.s_values = opt.s_values;
  if (!opt.data_case.empty()) apply_config_line(cfg, "case", opt.data_case);
  if (!opt.noise_scaling.empty()) {
    apply_config_line(cfg, "noise_scaling", opt.noise_scaling);
  }
  if (opt.n_nodes >= 0) cfg.n_nodes = opt.n_nodes;
  if (opt.n_pieces >= 0) cfg.n_pieces = opt.n_pieces;
  if (opt.n_train >= 0) cfg.n_train = opt.n_train;
  if (opt.n_val >= 0) cfg.n_val = opt.n_val;
  if (!opt.batch_sizes.empty()) cfg.batch_sizes = opt.batch_sizes;
  if (opt.alpha >= 0) cfg.alpha = opt.alpha;
  if (opt.beta >= 0) cfg.beta = opt.beta;
  if (opt.gamma1 >= 0) cfg.gamma1 = opt.gamma1;
  if (opt.gamma2 >= 0) cfg.gamma2 = opt.gamma2;
  if (opt.delta >= 0) cfg.delta = opt.delta;
  if (opt.rho >= 0) cfg.rho = opt.rho;
  if (opt.epsilon >= 0) cfg.epsilon = opt.epsilon;
  if (opt.phi_tol >= 0) cfg.stopping.phi_tol = opt.phi_tol;
  if (opt.max_outer >= 0) cfg.stopping.max_outer = opt.max_outer;
  if (opt.max_inner >= 0) cfg.stopping.max_inner = opt.max_inner;
  if (opt.init_sigma >= 0) cfg.init_sigma = opt.init_sigma;
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.threads >= 0) cfg.threads = opt.threads;
  if (opt.dump_data) cfg.dump_data = true;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  cfg.validate();
  return cfg;
}

int cmd_generate(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  fs::create_directories(cfg.out_dir + "/datasets");
  Mesh1D mesh = build_mesh(cfg.n_nodes);
  ForwardSystem fwd = assemble_fem(mesh, cfg.rho);
  const NoiseModel noise{cfg.epsilon, cfg.noise_scaling};
  const auto train = make_dataset(cfg.data_case, cfg.n_train, noise, fwd,
                                  cfg.seed);
  const auto val = make_dataset(cfg.data_case, cfg.n_val, noise, fwd,
                                cfg.seed + 1);
  write_dataset_csv(cfg.out_dir + "/datasets/train.csv", train, cfg, "train");
  write_dataset_csv(cfg.out_dir + "/datasets/val.csv", val, cfg, "val");
  std::cout << "wrote " << cfg.out_dir << "/datasets/{train,val}.csv\n";
  return 0;
}

int cmd_train(const CliOptions& opt, const std::string& data_path) {
  ExperimentConfig cfg = resolve_config(opt);
  Mesh1D mesh = build_mesh(cfg.n_nodes);
  auto fwd = std::make_shared<ForwardSystem>(assemble_fem(mesh, cfg.rho));
  std::vector<DataSample> train_set;
  if (!data_path.empty()) {
    train_set = read_dataset_csv(data_path);
    if (!train_set.empty() &&
        train_set.front().u_true.size() != cfg.n_nodes) {
      std::cerr << "error: dataset node count does not match --n-nodes\n";
      return 1;
    }
  } else {
    const NoiseModel noise{cfg.epsilon, cfg.noise_scaling};
    train_set = make_dataset(cfg.data_case, cfg.n_train, noise, *fwd, cfg.seed);
  }
  cfg.n_train = static_cast<int>(train_set.size());
  for (int bs : cfg.batch_sizes) {
    if (cfg.n_train % bs != 0) {
      std::cerr << "error: batch size " << bs << " does not divide "
                << cfg.n_train << " samples\n";
      return 1;
    }
  }

  for (Scalar s : cfg.s_values) {
    SContext ctx = make_context(cfg, s);
    char name[64];
    for (int bs : cfg.batch_sizes) {
      const auto batches = split_batches(train_set, cfg.n_train / bs);
      char sdir[32];
      std::snprintf(sdir, sizeof(sdir), "s%g", s);
      fs::create_directories(cfg.out_dir + "/weights/" + sdir);
      fs::create_directories(cfg.out_dir + "/traces/" + sdir);
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const TrainedBatch tb = run_training(cfg, ctx, batches[b]);
        std::snprintf(name, sizeof(name), "bs%04d_b%04d", bs,
                      static_cast<int>(b));
        write_weight_csv(cfg.out_dir + "/weights/" + std::string(sdir) + "/" +
                             name + ".csv",
                         tb.sigma, s, name);
        write_trace_csv(cfg.out_dir + "/traces/" + std::string(sdir) + "/" +
                            name + "_sigma.csv",
                        tb.sigma_state);
        write_trace_csv(cfg.out_dir + "/traces/" + std::string(sdir) + "/" +
                            name + "_nu.csv",
                        tb.nu_state);
        std::cout << sdir << " " << name << ": nu=" << fmt_double(tb.nu)
                  << " train_err_sigma=" << fmt_double(tb.train_err_sigma)
                  << " train_err_nu=" << fmt_double(tb.train_err_nu) << "\n";
      }
    }
  }
  return 0;
}

int cmd_validate(const CliOptions& opt, const std::string& weights_dir,
                 const std::string& data_path) {
  ExperimentConfig cfg = resolve_config(opt);
  const auto val_set = read_dataset_csv(data_path);
  if (val_set.empty()) {
    std::cerr << "error: empty validation set\n";
    return 1;
  }
  cfg.n_nodes = val_set.front().u_true.size();

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(weights_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
        entry.path().filename().string().rfind("bs", 0) == 0 &&
        entry.path().filename().string().find("_nus") == std::string::npos) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no weight files under " << weights_dir << "\n";
    return 1;
  }
  Scalar s = cfg.s_values.front();
  std::vector<WeightVector> sigmas;
  for (const auto& f : files) {
    Scalar file_s = s;
    sigmas.push_back(read_weight_csv(f, &file_s));
    s = file_s;
  }
  cfg.n_pieces = sigmas.front().grid.n_pieces;
  SContext ctx = make_context(cfg, s);
  const Scalar err = run_validation(ctx, sigmas, val_set);
  std::cout << "weights = " << files.size() << ", samples = " << val_set.size()
            << "\naverage_validation_error = " << fmt_double(err) << "\n";
  return 0;
}

int cmd_experiment(const CliOptions& opt) {
  ExperimentConfig cfg = resolve_config(opt);
  const ResultTable table = run_experiment(cfg);
  std::cout << "s,batch_size,train_err_nu,val_err_nu,train_err_sigma,"
               "val_err_sigma\n";
  for (const auto& row : table.rows) {
    std::cout << fmt_double(row.s) << ',' << row.batch_size << ','
              << fmt_double(row.train_err_nu) << ','
              << fmt_double(row.val_err_nu) << ','
              << fmt_double(row.train_err_sigma) << ','
              << fmt_double(row.val_err_sigma)
              << (row.ok ? "" : " FAILED: " + row.note) << "\n";
  }
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  bool ok = true;
  for (const auto& row : table.rows) ok = ok && row.ok;
  return ok ? 0 : 1;
}

// Numerical self-checks: assembly vs oracle, the two-sided norm bounds, and
// the adjoint gradient against central differences.
int cmd_check(const CliOptions& opt, const std::string& dump_bands) {
  ExperimentConfig cfg;
  cfg.n_train = 4;
  cfg.n_val = 4;
  cfg.batch_sizes = {4};
  if (!opt.config_file.empty()) cfg = load_config_file(opt.config_file);
  bool all_ok = true;

  {  // assembly against the quadrature oracle
    const Index n = 9;
    Mesh1D mesh = build_mesh(n);
    WeightGrid grid{10, 1.0};
    double max_rel = 0;
    bool conv = true;
    const double s = 0.5;
    NonlocalTensor tensor = assemble_band_matrices(mesh, grid, s);
    for (Index k = 0; k < grid.n_pieces; ++k) {
      const Matrix a = Matrix(tensor.matrices[k]);
      for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
          const OracleResult o = oracle_entry(mesh, grid.breakpoint(k),
                                              grid.breakpoint(k + 1), s, i, j);
          conv = conv && o.converged;
          const double den = std::max(std::abs(o.value), 1e-12);
          max_rel = std::max(max_rel, std::abs(a(i, j) - o.value) / den);
        }
      }
    }
    const bool ok = conv && max_rel <= 1e-8;
    all_ok = all_ok && ok;
    std::cout << "check=assembly_vs_oracle status=" << (ok ? "pass" : "fail")
              << " max_rel_err=" << fmt_double(max_rel) << "\n";
    if (!dump_bands.empty()) {
      std::ofstream out(dump_bands, std::ios::binary);
      dump_band_matrices_csv(tensor, out);
    }
  }

  {  // two-sided norm equivalence on random data
    const Index n = 32;
    Mesh1D mesh = build_mesh(n);
    WeightGrid grid{n + 1, 1.0};
    NonlocalTensor tensor = assemble_band_matrices(mesh, grid, 0.4);
    RandomStream rng(7);
    int fails = 0;
    for (int trial = 0; trial < 200; ++trial) {
      WeightVector sigma;
      sigma.grid = grid;
      sigma.gamma1 = 0.1;
      sigma.gamma2 = 10.0;
      sigma.delta = 1.0;
      sigma.values.resize(grid.n_pieces);
      for (Index k = 0; k < grid.n_pieces; ++k) {
        sigma.values[k] = 0.1 + (10.0 - 0.1) * rng.uniform();
      }
      Vector u(n);
      for (Index j = 0; j < n; ++j) u[j] = rng.normal();
      if (!check_norm_equivalence(tensor, sigma, u).pass) ++fails;
    }
    const bool ok = fails == 0;
    all_ok = all_ok && ok;
    std::cout << "check=norm_equivalence status=" << (ok ? "pass" : "fail")
              << " fails=" << fails << "/200\n";
  }

  {  // adjoint gradient vs central finite differences
    ExperimentConfig small;
    small.n_nodes = 24;
    small.n_train = 1;
    small.n_val = 1;
    small.batch_sizes = {1};
    small.epsilon = 0.01;
    double worst = 0;
    for (DataCase dc : {DataCase::A, DataCase::B}) {
      small.data_case = dc;
      SContext ctx = make_context(small, 0.3);
      const NoiseModel noise{small.epsilon, small.noise_scaling};
      const auto data = make_dataset(dc, 1, noise, *ctx.fwd, 11);
      const auto objective =
          make_batch_objective(small, ctx, {data.data(), 1});
      RandomStream rng(13);
      Vector sigma(ctx.prototype.grid.n_pieces);
      for (Index k = 0; k < sigma.size(); ++k) {
        sigma[k] = 0.1 + 2.0 * rng.uniform();
      }
      Vector grad;
      objective.value_and_gradient(sigma, grad);
      for (Index k = 0; k < sigma.size(); k += 5) {
        const Scalar step = 1e-5 * std::max(1.0, std::abs(sigma[k]));
        Vector lo = sigma, hi = sigma;
        lo[k] -= step;
        hi[k] += step;
        const Scalar fd =
            (objective.value(hi) - objective.value(lo)) / (2 * step);
        worst = std::max(worst, std::abs(fd - grad[k]) /
                                    std::max(std::abs(fd), 1e-12));
      }
    }
    const bool ok = worst <= 1e-5;
    all_ok = all_ok && ok;
    std::cout << "check=gradient_vs_fd status=" << (ok ? "pass" : "fail")
              << " max_rel_err=" << fmt_double(worst) << "\n";
  }

  std::cout << "check=all status=" << (all_ok ? "pass" : "fail") << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned distance-dependent weights for nonlocal regularization "
               "of a 1D linear inverse problem"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* generate = app.add_subcommand("generate", "write train/val datasets");
  add_common_flags(generate, opt);

  std::string data_path;
  auto* train = app.add_subcommand("train", "train weights per batch");
  add_common_flags(train, opt);
  train->add_option("--data", data_path, "training dataset CSV (else generated)");

  std::string weights_dir, val_path;
  auto* validate = app.add_subcommand("validate", "evaluate trained weights");
  add_common_flags(validate, opt);
  validate->add_option("--weights-dir", weights_dir, "directory of weight CSVs")
      ->required();
  validate->add_option("--data", val_path, "validation dataset CSV")->required();

  auto* experiment = app.add_subcommand("experiment", "full pipeline");
  add_common_flags(experiment, opt);

  std::string dump_bands;
  auto* check = app.add_subcommand("check", "numerical self-checks");
  add_common_flags(check, opt);
  check->add_option("--dump-bands", dump_bands, "write band matrices as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(opt);
    if (train->parsed()) return cmd_train(opt, data_path);
    if (validate->parsed()) return cmd_validate(opt, weights_dir, val_path);
    if (experiment->parsed()) return cmd_experiment(opt);
    if (check->parsed()) return cmd_check(opt, dump_bands);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
