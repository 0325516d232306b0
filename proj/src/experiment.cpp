#include "nlreg/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nlreg/csv.hpp"

namespace fs = std::filesystem;

namespace nlreg {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

std::string s_dirname(Scalar s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%g", s);
  return buf;
}

void parallel_for(int n_tasks, int n_threads,
                  const std::function<void(int)>& fn) {
  if (n_threads <= 1 || n_tasks <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  const int nt = std::min(n_threads, n_tasks);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_tasks) break;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' only, byte-stable
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("config: n_nodes must be >= 2");
  if (s_values.empty()) throw std::invalid_argument("config: no s values");
  for (Scalar s : s_values) {
    if (!(s > 0 && s < 1)) {
      throw std::invalid_argument("config: s must lie in (0,1)");
    }
  }
  if (n_train < 1 || n_val < 1) {
    throw std::invalid_argument("config: need n_train, n_val >= 1");
  }
  if (batch_sizes.empty()) {
    throw std::invalid_argument("config: no batch sizes");
  }
  for (int bs : batch_sizes) {
    if (bs < 1 || n_train % bs != 0) {
      throw std::invalid_argument(
          "config: every batch size must divide n_train");
    }
  }
  if (!(gamma1 > 0) || !(gamma1 <= gamma2)) {
    throw std::invalid_argument("config: need 0 < gamma1 <= gamma2");
  }
  if (!(delta > 0)) throw std::invalid_argument("config: delta must be > 0");
  if (!(rho > 0)) throw std::invalid_argument("config: rho must be > 0");
  if (alpha < 0 || beta < 0 || epsilon < 0) {
    throw std::invalid_argument("config: alpha, beta, epsilon must be >= 0");
  }
}

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "s") {
    cfg.s_values.clear();
    for (const auto& v : split_list(value)) cfg.s_values.push_back(std::stod(v));
  } else if (key == "n_nodes") {
    cfg.n_nodes = std::stol(value);
  } else if (key == "n_pieces") {
    cfg.n_pieces = std::stol(value);
  } else if (key == "n_train") {
    cfg.n_train = std::stoi(value);
  } else if (key == "n_val") {
    cfg.n_val = std::stoi(value);
  } else if (key == "batch_sizes") {
    cfg.batch_sizes.clear();
    for (const auto& v : split_list(value)) cfg.batch_sizes.push_back(std::stoi(v));
  } else if (key == "alpha") {
    cfg.alpha = std::stod(value);
  } else if (key == "beta") {
    cfg.beta = std::stod(value);
  } else if (key == "gamma1") {
    cfg.gamma1 = std::stod(value);
  } else if (key == "gamma2") {
    cfg.gamma2 = std::stod(value);
  } else if (key == "delta") {
    cfg.delta = std::stod(value);
  } else if (key == "rho") {
    cfg.rho = std::stod(value);
  } else if (key == "epsilon") {
    cfg.epsilon = std::stod(value);
  } else if (key == "noise_scaling") {
    if (value == "dataset") {
      cfg.noise_scaling = NoiseScaling::kDatasetMax;
    } else if (value == "per-sample") {
      cfg.noise_scaling = NoiseScaling::kPerSample;
    } else {
      throw std::invalid_argument("config: noise_scaling must be dataset|per-sample");
    }
  } else if (key == "case") {
    if (value == "A" || value == "a") {
      cfg.data_case = DataCase::A;
    } else if (value == "B" || value == "b") {
      cfg.data_case = DataCase::B;
    } else {
      throw std::invalid_argument("config: case must be A or B");
    }
  } else if (key == "seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "phi_tol") {
    cfg.stopping.phi_tol = std::stod(value);
  } else if (key == "max_outer") {
    cfg.stopping.max_outer = std::stoi(value);
  } else if (key == "max_inner") {
    cfg.stopping.max_inner = std::stoi(value);
  } else if (key == "armijo_c1") {
    cfg.stopping.armijo_c1 = std::stod(value);
  } else if (key == "armijo_shrink") {
    cfg.stopping.armijo_shrink = std::stod(value);
  } else if (key == "pdas_c") {
    cfg.stopping.pdas_c = std::stod(value);
  } else if (key == "init_sigma") {
    cfg.init_sigma = std::stod(value);
  } else if (key == "threads") {
    cfg.threads = std::stoi(value);
  } else if (key == "dump_data") {
    cfg.dump_data = parse_bool(value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string config_to_string(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "s = ";
  for (std::size_t i = 0; i < cfg.s_values.size(); ++i) {
    out << (i ? "," : "") << fmt_double(cfg.s_values[i]);
  }
  out << "\n";
  out << "n_nodes = " << cfg.n_nodes << "\n";
  out << "n_pieces = " << cfg.pieces() << "\n";
  out << "n_train = " << cfg.n_train << "\n";
  out << "n_val = " << cfg.n_val << "\n";
  out << "batch_sizes = ";
  for (std::size_t i = 0; i < cfg.batch_sizes.size(); ++i) {
    out << (i ? "," : "") << cfg.batch_sizes[i];
  }
  out << "\n";
  out << "alpha = " << fmt_double(cfg.alpha) << "\n";
  out << "beta = " << fmt_double(cfg.beta) << "\n";
  out << "gamma1 = " << fmt_double(cfg.gamma1) << "\n";
  out << "gamma2 = " << fmt_double(cfg.gamma2) << "\n";
  out << "delta = " << fmt_double(cfg.delta) << "\n";
  out << "rho = " << fmt_double(cfg.rho) << "\n";
  out << "epsilon = " << fmt_double(cfg.epsilon) << "\n";
  out << "noise_scaling = "
      << (cfg.noise_scaling == NoiseScaling::kDatasetMax ? "dataset"
                                                         : "per-sample")
      << "\n";
  out << "case = " << (cfg.data_case == DataCase::A ? "A" : "B") << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "phi_tol = " << fmt_double(cfg.stopping.phi_tol) << "\n";
  out << "max_outer = " << cfg.stopping.max_outer << "\n";
  out << "max_inner = " << cfg.stopping.max_inner << "\n";
  out << "armijo_c1 = " << fmt_double(cfg.stopping.armijo_c1) << "\n";
  out << "armijo_shrink = " << fmt_double(cfg.stopping.armijo_shrink) << "\n";
  out << "pdas_c = " << fmt_double(cfg.stopping.pdas_c) << "\n";
  out << "init_sigma = " << fmt_double(cfg.init_sigma) << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "dump_data = " << (cfg.dump_data ? "1" : "0") << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

SContext make_context(const ExperimentConfig& cfg, Scalar s) {
  SContext ctx;
  ctx.mesh = build_mesh(cfg.n_nodes);
  ctx.fwd = std::make_shared<ForwardSystem>(assemble_fem(ctx.mesh, cfg.rho));
  WeightGrid grid{cfg.pieces(), 1.0};
  ctx.tensor = std::make_shared<NonlocalTensor>(
      assemble_band_matrices(ctx.mesh, grid, s));
  ctx.B = make_normal_matrix(*ctx.fwd);
  ctx.prototype.grid = grid;
  ctx.prototype.gamma1 = cfg.gamma1;
  ctx.prototype.gamma2 = cfg.gamma2;
  ctx.prototype.delta = cfg.delta;
  return ctx;
}

BatchReducedObjective make_batch_objective(const ExperimentConfig& cfg,
                                           const SContext& ctx,
                                           std::span<const DataSample> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("make_batch_objective: empty batch");
  }
  std::vector<LowerSystem> systems;
  std::vector<Vector> u_true;
  systems.reserve(batch.size());
  u_true.reserve(batch.size());
  for (const DataSample& smp : batch) {
    systems.push_back(build_lower_system(ctx.fwd, ctx.tensor, smp.y_delta,
                                         ctx.B));
    u_true.push_back(smp.u_true);
  }
  return BatchReducedObjective(std::move(systems), std::move(u_true),
                               {cfg.alpha, cfg.beta}, ctx.prototype);
}

TrainedBatch run_training(const ExperimentConfig& cfg, const SContext& ctx,
                          std::span<const DataSample> batch) {
  const BatchReducedObjective objective = make_batch_objective(cfg, ctx, batch);
  Objective callbacks;
  callbacks.piece_widths = objective.piece_widths();
  callbacks.value = [&objective](const Vector& v) { return objective.value(v); };
  callbacks.value_and_grad = [&objective](const Vector& v, Vector& g) {
    return objective.value_and_gradient(v, g);
  };

  TrainedBatch result;
  const Scalar nu_init = std::clamp(cfg.init_sigma, cfg.gamma1, cfg.gamma2);
  ScalarFitResult nu_fit =
      learn_scalar_nu(callbacks, cfg.gamma1, cfg.gamma2, nu_init, cfg.stopping);
  result.nu = nu_fit.nu;
  result.nu_state = std::move(nu_fit.state);

  // Warm start at the learned scalar weight: a feasible point, so monotone
  // descent keeps the trained weight at or below the scalar objective.
  const BoxBounds bounds = BoxBounds::for_weights(ctx.prototype.grid,
                                                  cfg.gamma1, cfg.gamma2,
                                                  cfg.delta);
  const Vector init = Vector::Constant(ctx.prototype.grid.n_pieces, result.nu);
  result.sigma_state = pdas_solve(callbacks, bounds, init, cfg.stopping);
  result.sigma = objective.wrap(result.sigma_state.sigma);

  result.train_err_sigma =
      objective.mean_reconstruction_error(result.sigma_state.sigma);
  result.train_err_nu = objective.mean_reconstruction_error(
      Vector::Constant(ctx.prototype.grid.n_pieces, result.nu));
  return result;
}

Scalar run_validation(const SContext& ctx,
                      const std::vector<WeightVector>& sigmas,
                      const std::vector<DataSample>& val_set) {
  if (sigmas.empty() || val_set.empty()) {
    throw std::invalid_argument("run_validation: empty inputs");
  }
  std::vector<Vector> rhs;
  rhs.reserve(val_set.size());
  for (const DataSample& smp : val_set) {
    rhs.push_back(ctx.fwd->mass * apply_forward(*ctx.fwd, smp.y_delta));
  }
  Scalar total = 0;
  long pairs = 0, failed = 0;
  for (const WeightVector& sigma : sigmas) {
    try {
      Matrix a = weighted_operator(*ctx.tensor, sigma);
      a += *ctx.B;
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) throw std::runtime_error("not SPD");
      for (std::size_t i = 0; i < val_set.size(); ++i) {
        const Vector u = refined_solve(llt, a, rhs[i]);
        const Vector diff = u - val_set[i].u_true;
        total += diff.dot(ctx.fwd->mass * diff);
        ++pairs;
      }
    } catch (const std::exception&) {
      failed += static_cast<long>(val_set.size());
    }
  }
  if (pairs == 0) throw std::runtime_error("run_validation: all pairs failed");
  (void)failed;
  return total / static_cast<Scalar>(pairs);
}

namespace {

const char* status_name(OptimizerStatus st) {
  switch (st) {
    case OptimizerStatus::kConverged: return "converged";
    case OptimizerStatus::kIterationCap: return "iteration-cap";
    case OptimizerStatus::kLineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_threads = resolve_threads(cfg);
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/weights");
  fs::create_directories(cfg.out_dir + "/traces");
  fs::create_directories(cfg.out_dir + "/recon");

  Mesh1D mesh = build_mesh(cfg.n_nodes);
  auto fwd = std::make_shared<ForwardSystem>(assemble_fem(mesh, cfg.rho));
  const NoiseModel noise{cfg.epsilon, cfg.noise_scaling};
  const std::vector<DataSample> train_set =
      make_dataset(cfg.data_case, cfg.n_train, noise, *fwd, cfg.seed);
  // validation draws from the next stream
  const std::vector<DataSample> val_set =
      make_dataset(cfg.data_case, cfg.n_val, noise, *fwd, cfg.seed + 1);
  if (cfg.dump_data) {
    fs::create_directories(cfg.out_dir + "/datasets");
    write_dataset_csv(cfg.out_dir + "/datasets/train.csv", train_set, cfg,
                      "train");
    write_dataset_csv(cfg.out_dir + "/datasets/val.csv", val_set, cfg, "val");
  }
  auto B = make_normal_matrix(*fwd);

  ResultTable table;
  std::ostringstream run_notes;
  for (Scalar s : cfg.s_values) {
    SContext ctx;
    ctx.mesh = mesh;
    ctx.fwd = fwd;
    ctx.B = B;
    WeightGrid grid{cfg.pieces(), 1.0};
    ctx.tensor =
        std::make_shared<NonlocalTensor>(assemble_band_matrices(mesh, grid, s));
    ctx.prototype.grid = grid;
    ctx.prototype.gamma1 = cfg.gamma1;
    ctx.prototype.gamma2 = cfg.gamma2;
    ctx.prototype.delta = cfg.delta;

    const std::string sdir = s_dirname(s);
    fs::create_directories(cfg.out_dir + "/weights/" + sdir);
    fs::create_directories(cfg.out_dir + "/traces/" + sdir);
    fs::create_directories(cfg.out_dir + "/recon/" + sdir);

    for (int bs : cfg.batch_sizes) {
      const int n_batches = cfg.n_train / bs;
      const auto batches = split_batches(train_set, n_batches);
      std::vector<TrainedBatch> trained(batches.size());
      std::vector<std::string> errors(batches.size());
      parallel_for(static_cast<int>(batches.size()), n_threads, [&](int b) {
        try {
          trained[static_cast<std::size_t>(b)] =
              run_training(cfg, ctx, batches[static_cast<std::size_t>(b)]);
        } catch (const std::exception& e) {
          errors[static_cast<std::size_t>(b)] = e.what();
        }
      });

      ResultRow row;
      row.s = s;
      row.batch_size = bs;
      std::vector<WeightVector> sigma_list, nu_list;
      Scalar train_sigma = 0, train_nu = 0;
      int good = 0;
      char name[64];
      for (std::size_t b = 0; b < trained.size(); ++b) {
        if (!errors[b].empty()) {
          row.ok = false;
          row.note += "batch " + std::to_string(b) + ": " + errors[b] + "; ";
          continue;
        }
        const TrainedBatch& tb = trained[b];
        ++good;
        train_sigma += tb.train_err_sigma;
        train_nu += tb.train_err_nu;
        sigma_list.push_back(tb.sigma);
        nu_list.push_back(constant_weight(grid, tb.nu, cfg.gamma1, cfg.gamma2,
                                          cfg.delta));
        if (tb.sigma_state.status != OptimizerStatus::kConverged) {
          run_notes << sdir << " bs" << bs << " b" << b << " sigma: "
                    << status_name(tb.sigma_state.status) << "\n";
        }
        if (tb.nu_state.status != OptimizerStatus::kConverged) {
          run_notes << sdir << " bs" << bs << " b" << b << " nu: "
                    << status_name(tb.nu_state.status) << "\n";
        }

        std::snprintf(name, sizeof(name), "bs%04d_b%04d", bs,
                      static_cast<int>(b));
        write_weight_csv(cfg.out_dir + "/weights/" + sdir + "/" + name +
                             ".csv",
                         tb.sigma, s, name);
        write_trace_csv(cfg.out_dir + "/traces/" + sdir + "/" + name +
                            "_sigma.csv",
                        tb.sigma_state);
        write_trace_csv(cfg.out_dir + "/traces/" + sdir + "/" + name +
                            "_nu.csv",
                        tb.nu_state);
      }
      if (good == 0) {
        row.ok = false;
        row.note += "no successful batches";
        table.rows.push_back(row);
        continue;
      }
      row.train_err_sigma = train_sigma / good;
      row.train_err_nu = train_nu / good;
      row.val_err_sigma = run_validation(ctx, sigma_list, val_set);
      row.val_err_nu = run_validation(ctx, nu_list, val_set);
      table.rows.push_back(row);

      // scalar values per batch
      std::snprintf(name, sizeof(name), "bs%04d_nus.csv", bs);
      auto nus = open_out(cfg.out_dir + "/weights/" + sdir + "/" + name);
      nus << "batch,nu\n";
      for (std::size_t b = 0; b < trained.size(); ++b) {
        if (errors[b].empty()) {
          nus << b << ',' << fmt_double(trained[b].nu) << '\n';
        }
      }

      // reconstruction of the first validation sample under the first weight
      if (!sigma_list.empty()) {
        const DataSample& smp = val_set.front();
        LowerSystem lsys = build_lower_system(ctx.fwd, ctx.tensor, smp.y_delta,
                                              ctx.B);
        const Vector u = solve_lower(lsys, sigma_list.front());
        std::snprintf(name, sizeof(name), "bs%04d_val0.csv", bs);
        auto rec = open_out(cfg.out_dir + "/recon/" + sdir + "/" + name);
        rec << "x,u_true,u_reconstructed\n";
        for (Index jn = 0; jn < mesh.n_nodes; ++jn) {
          rec << fmt_double(mesh.node(jn)) << ',' << fmt_double(smp.u_true[jn])
              << ',' << fmt_double(u[jn]) << '\n';
        }
      }
    }
  }

  write_table_csv(cfg.out_dir + "/table.csv", table);

  auto manifest = open_out(cfg.out_dir + "/manifest.txt");
  manifest << "nlreg experiment manifest\n";
  manifest << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
           << '.' << EIGEN_MINOR_VERSION << "\n";
  manifest << "validation_seed = seed + 1\n";
  manifest << "threads_used = " << n_threads << "\n\n";
  manifest << config_to_string(cfg);
  const std::string notes = run_notes.str();
  if (!notes.empty()) manifest << "\n[optimizer flags]\n" << notes;
  return table;
}

void write_dataset_csv(const std::string& path,
                       const std::vector<DataSample>& data,
                       const ExperimentConfig& cfg, const std::string& tag) {
  auto out = open_out(path);
  out << "# nlreg dataset\n";
  out << "# tag = " << tag << "\n";
  out << "# case = " << (cfg.data_case == DataCase::A ? "A" : "B") << "\n";
  out << "# seed = " << cfg.seed << "\n";
  out << "# n_samples = " << data.size() << "\n";
  out << "# n_nodes = " << cfg.n_nodes << "\n";
  out << "# epsilon = " << fmt_double(cfg.epsilon) << "\n";
  out << "# noise_scaling = "
      << (cfg.noise_scaling == NoiseScaling::kDatasetMax ? "dataset"
                                                         : "per-sample")
      << "\n";
  out << "# rho = " << fmt_double(cfg.rho) << "\n";
  out << "sample_id,node_index,x,u_true,y_true,y_delta\n";
  const Index n = data.empty() ? 0 : data.front().u_true.size();
  for (const DataSample& smp : data) {
    for (Index j = 0; j < n; ++j) {
      const Scalar x =
          static_cast<Scalar>(j) / static_cast<Scalar>(n - 1);
      out << smp.sample_id << ',' << j << ',' << fmt_double(x) << ','
          << fmt_double(smp.u_true[j]) << ',' << fmt_double(smp.y_true[j])
          << ',' << fmt_double(smp.y_delta[j]) << '\n';
    }
  }
}

std::vector<DataSample> read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  std::vector<DataSample> out;
  std::vector<std::array<Scalar, 3>> rows;  // u_true, y_true, y_delta
  std::vector<int> ids;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("sample_id", 0) == 0) {
      continue;
    }
    const auto parts = split_list(line);
    if (parts.size() != 6) {
      throw std::runtime_error("malformed dataset row: " + line);
    }
    ids.push_back(std::stoi(parts[0]));
    rows.push_back({std::stod(parts[3]), std::stod(parts[4]),
                    std::stod(parts[5])});
  }
  if (rows.empty()) throw std::runtime_error("empty dataset: " + path);
  const int n_samples = ids.back() + 1;
  if (rows.size() % static_cast<std::size_t>(n_samples) != 0) {
    throw std::runtime_error("inconsistent dataset: " + path);
  }
  const Index n_nodes = static_cast<Index>(rows.size()) / n_samples;
  out.resize(static_cast<std::size_t>(n_samples));
  std::size_t r = 0;
  for (int i = 0; i < n_samples; ++i) {
    DataSample& smp = out[static_cast<std::size_t>(i)];
    smp.sample_id = i;
    smp.omega.setZero();  // not serialized
    smp.u_true.resize(n_nodes);
    smp.y_true.resize(n_nodes);
    smp.y_delta.resize(n_nodes);
    for (Index j = 0; j < n_nodes; ++j, ++r) {
      if (ids[r] != i) throw std::runtime_error("dataset rows out of order");
      smp.u_true[j] = rows[r][0];
      smp.y_true[j] = rows[r][1];
      smp.y_delta[j] = rows[r][2];
    }
  }
  return out;
}

void write_weight_csv(const std::string& path, const WeightVector& sigma,
                      Scalar s, const std::string& tag) {
  require_feasible(sigma);  // re-validated at write time
  auto out = open_out(path);
  out << "# nlreg weight\n";
  out << "# tag = " << tag << "\n";
  out << "# s = " << fmt_double(s) << "\n";
  out << "# gamma1 = " << fmt_double(sigma.gamma1) << "\n";
  out << "# gamma2 = " << fmt_double(sigma.gamma2) << "\n";
  out << "# delta = " << fmt_double(sigma.delta) << "\n";
  out << "t_lo,t_hi,sigma\n";
  for (Index k = 0; k < sigma.grid.n_pieces; ++k) {
    out << fmt_double(sigma.grid.breakpoint(k)) << ','
        << fmt_double(sigma.grid.breakpoint(k + 1)) << ','
        << fmt_double(sigma.values[k]) << '\n';
  }
}

WeightVector read_weight_csv(const std::string& path, Scalar* s_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  WeightVector w;
  std::vector<Scalar> values;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string val = trim(line.substr(eq + 1));
      if (key == "s" && s_out) *s_out = std::stod(val);
      if (key == "gamma1") w.gamma1 = std::stod(val);
      if (key == "gamma2") w.gamma2 = std::stod(val);
      if (key == "delta") w.delta = std::stod(val);
      continue;
    }
    if (line.rfind("t_lo", 0) == 0) continue;
    const auto parts = split_list(line);
    if (parts.size() != 3) {
      throw std::runtime_error("malformed weight row: " + line);
    }
    values.push_back(std::stod(parts[2]));
  }
  if (values.empty()) throw std::runtime_error("empty weight file: " + path);
  w.grid = WeightGrid{static_cast<Index>(values.size()), 1.0};
  w.values = Eigen::Map<const Vector>(values.data(),
                                      static_cast<Index>(values.size()));
  return w;
}

void write_table_csv(const std::string& path, const ResultTable& table) {
  auto out = open_out(path);
  out << "s,batch_size,train_err_nu,val_err_nu,train_err_sigma,val_err_sigma\n";
  for (const ResultRow& row : table.rows) {
    out << fmt_double(row.s) << ',' << row.batch_size << ','
        << fmt_double(row.train_err_nu) << ',' << fmt_double(row.val_err_nu)
        << ',' << fmt_double(row.train_err_sigma) << ','
        << fmt_double(row.val_err_sigma);
    if (!row.ok) out << ",FAILED:" << row.note;
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const OptimizerState& state) {
  auto out = open_out(path);
  out << "outer_iter,inner_iter,F,phi_norm,n_active_lower,n_active_upper\n";
  for (const TraceRow& row : state.trace) {
    out << row.outer << ',' << row.inner << ',' << fmt_double(row.value) << ','
        << fmt_double(row.phi_norm) << ',' << row.n_active_lower << ','
        << row.n_active_upper << '\n';
  }
}

}  // namespace nlreg
