#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nlreg/forward.hpp"
#include "nlreg/types.hpp"

namespace nlreg {

enum class DataCase { A, B };

enum class NoiseScaling {
  kDatasetMax,  // epsilon * max_i ||y_true_i||_inf, one level per dataset
  kPerSample,   // epsilon * ||y_true_i||_inf per sample
};

struct NoiseModel {
  Scalar epsilon = 0.01;  // relative noise level ("1%")
  NoiseScaling scaling = NoiseScaling::kDatasetMax;
};

struct DataSample {
  int sample_id = 0;
  Eigen::Vector3d omega;
  Vector u_true;   // ground-truth control
  Vector y_true;   // forward-mapped state, same discretization as inversion
  Vector y_delta;  // noisy measurement
};

/// Deterministic random stream: mt19937_64 with fixed mappings (top 53 bits
/// for uniforms, Box-Muller for normals), so a seed reproduces a dataset
/// bit-for-bit independent of the standard library's distributions.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0;
};

// u(x) = sin(20 w1 x) + w3 cos(40 w2 x), sampled nodally; omega in [0,1]^3.
Vector sample_case_A(const Eigen::Vector3d& omega, const Mesh1D& mesh);

// u(x) = 3 w3 cos(6 pi x + 10 w1) + 2 w2; period 1/3 in x.
Vector sample_case_B(const Eigen::Vector3d& omega, const Mesh1D& mesh);

// Draws omega uniformly on [0,1]^3 and nodal Gaussian noise from one seeded
// stream (all omegas first, then all xi in sample-major order); a fixed
// (seed, case, n_samples, mesh) reproduces the dataset exactly.
std::vector<DataSample> make_dataset(DataCase data_case, int n_samples,
                                     const NoiseModel& noise,
                                     const ForwardSystem& sys,
                                     std::uint64_t seed);

// Contiguous equal-size batches; n_batches must divide the dataset size.
std::vector<std::span<const DataSample>> split_batches(
    const std::vector<DataSample>& dataset, int n_batches);

}  // namespace nlreg
