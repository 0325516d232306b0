#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlreg/datagen.hpp"
#include "nlreg/lower.hpp"
#include "nlreg/optimizer.hpp"
#include "nlreg/reduced.hpp"
#include "nlreg/types.hpp"

namespace nlreg {

struct ExperimentConfig {
  std::vector<Scalar> s_values = {0.1, 0.9};
  Index n_nodes = 128;
  Index n_pieces = 0;  // 0 -> n_nodes + 1
  int n_train = 512;
  int n_val = 512;
  std::vector<int> batch_sizes = {1, 8, 64, 512};
  Scalar alpha = 1e-4;
  Scalar beta = 1e-8;
  Scalar gamma1 = 0.1;
  Scalar gamma2 = 10.0;
  Scalar delta = 1.0;
  Scalar rho = 0.1;
  Scalar epsilon = 0.01;
  NoiseScaling noise_scaling = NoiseScaling::kDatasetMax;
  DataCase data_case = DataCase::A;
  std::uint64_t seed = 1;
  StoppingCriteria stopping;
  Scalar init_sigma = 1.0;  // pdas start value, clamped into the box
  int threads = 0;          // 0 -> hardware concurrency
  bool dump_data = false;
  std::string out_dir = "out";

  Index pieces() const { return n_pieces > 0 ? n_pieces : n_nodes + 1; }
  void validate() const;  // throws std::invalid_argument
};

// Flat "key = value" config file; '#' starts a comment. Unknown keys are
// rejected. Keys mirror the CLI flags (s, case, n_train, batch_sizes, ...).
ExperimentConfig load_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);
std::string config_to_string(const ExperimentConfig& cfg);

struct ResultRow {
  Scalar s = 0;
  int batch_size = 0;
  Scalar train_err_nu = 0;
  Scalar val_err_nu = 0;
  Scalar train_err_sigma = 0;
  Scalar val_err_sigma = 0;
  bool ok = true;
  std::string note;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

/// Operators shared by every run at one fractional order.
struct SContext {
  Mesh1D mesh;
  std::shared_ptr<const ForwardSystem> fwd;
  std::shared_ptr<const NonlocalTensor> tensor;
  std::shared_ptr<const Matrix> B;
  WeightVector prototype;  // admissibility metadata, values unset
};

SContext make_context(const ExperimentConfig& cfg, Scalar s);

BatchReducedObjective make_batch_objective(const ExperimentConfig& cfg,
                                           const SContext& ctx,
                                           std::span<const DataSample> batch);

struct TrainedBatch {
  WeightVector sigma;
  Scalar nu = 0;
  OptimizerState sigma_state;
  OptimizerState nu_state;
  Scalar train_err_sigma = 0;  // mean ||u(sigma*) - u_true||^2 over the batch
  Scalar train_err_nu = 0;
};

// Trains the scalar baseline nu* first, then the weight sigma* warm-started
// at nu* * 1 (a feasible point, so the training objective of sigma* can
// never exceed the scalar one).
TrainedBatch run_training(const ExperimentConfig& cfg, const SContext& ctx,
                          std::span<const DataSample> batch);

// Average of ||u_sigma - u_true||^2_{L2} over all (weight, sample) pairs.
Scalar run_validation(const SContext& ctx,
                      const std::vector<WeightVector>& sigmas,
                      const std::vector<DataSample>& val_set);

// Full pipeline: datasets, per-batch training of sigma* and nu*, validation
// of both, table assembly, and artifact emission under cfg.out_dir
// (manifest.txt, table.csv, weights/, traces/, recon/, optionally datasets/).
ResultTable run_experiment(const ExperimentConfig& cfg);

// Artifact I/O used by the CLI subcommands.
void write_dataset_csv(const std::string& path,
                       const std::vector<DataSample>& data,
                       const ExperimentConfig& cfg, const std::string& tag);
std::vector<DataSample> read_dataset_csv(const std::string& path);
void write_weight_csv(const std::string& path, const WeightVector& sigma,
                      Scalar s, const std::string& tag);
WeightVector read_weight_csv(const std::string& path, Scalar* s_out = nullptr);
void write_table_csv(const std::string& path, const ResultTable& table);
void write_trace_csv(const std::string& path, const OptimizerState& state);

}  // namespace nlreg
