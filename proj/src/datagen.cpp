#include "nlreg/datagen.hpp"

#include <cmath>
#include <stdexcept>

namespace nlreg {
namespace {

void check_omega(const Eigen::Vector3d& omega) {
  for (int c = 0; c < 3; ++c) {
    if (!(omega[c] >= 0.0 && omega[c] <= 1.0)) {
      throw std::invalid_argument("omega must lie in [0,1]^3");
    }
  }
}

}  // namespace

Vector sample_case_A(const Eigen::Vector3d& omega, const Mesh1D& mesh) {
  check_omega(omega);
  Vector u(mesh.n_nodes);
  for (Index j = 0; j < mesh.n_nodes; ++j) {
    const Scalar x = mesh.node(j);
    u[j] = std::sin(20.0 * omega[0] * x) +
           omega[2] * std::cos(40.0 * omega[1] * x);
  }
  return u;
}

Vector sample_case_B(const Eigen::Vector3d& omega, const Mesh1D& mesh) {
  check_omega(omega);
  Vector u(mesh.n_nodes);
  for (Index j = 0; j < mesh.n_nodes; ++j) {
    const Scalar x = mesh.node(j);
    u[j] = 3.0 * omega[2] * std::cos(6.0 * M_PI * x + 10.0 * omega[0]) +
           2.0 * omega[1];
  }
  return u;
}

std::vector<DataSample> make_dataset(DataCase data_case, int n_samples,
                                     const NoiseModel& noise,
                                     const ForwardSystem& sys,
                                     std::uint64_t seed) {
  if (n_samples < 1) {
    throw std::invalid_argument("make_dataset: n_samples must be >= 1");
  }
  if (!(noise.epsilon >= 0)) {
    throw std::invalid_argument("make_dataset: negative noise level");
  }
  RandomStream rng(seed);
  std::vector<DataSample> out(static_cast<std::size_t>(n_samples));
  Scalar max_amp = 0;
  for (int i = 0; i < n_samples; ++i) {
    DataSample& smp = out[static_cast<std::size_t>(i)];
    smp.sample_id = i;
    smp.omega = {rng.uniform(), rng.uniform(), rng.uniform()};
    smp.u_true = (data_case == DataCase::A) ? sample_case_A(smp.omega, sys.mesh)
                                            : sample_case_B(smp.omega, sys.mesh);
    smp.y_true = apply_forward(sys, smp.u_true);
    max_amp = std::max(max_amp, smp.y_true.cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < n_samples; ++i) {
    DataSample& smp = out[static_cast<std::size_t>(i)];
    const Scalar level =
        noise.scaling == NoiseScaling::kDatasetMax
            ? noise.epsilon * max_amp
            : noise.epsilon * smp.y_true.cwiseAbs().maxCoeff();
    smp.y_delta = smp.y_true;
    for (Index j = 0; j < smp.y_delta.size(); ++j) {
      smp.y_delta[j] += level * rng.normal();
    }
  }
  return out;
}

std::vector<std::span<const DataSample>> split_batches(
    const std::vector<DataSample>& dataset, int n_batches) {
  const int n = static_cast<int>(dataset.size());
  if (n_batches < 1 || n % n_batches != 0) {
    throw std::invalid_argument(
        "split_batches: n_batches must divide the dataset size");
  }
  const int batch_size = n / n_batches;
  std::vector<std::span<const DataSample>> batches;
  batches.reserve(static_cast<std::size_t>(n_batches));
  for (int b = 0; b < n_batches; ++b) {
    batches.emplace_back(dataset.data() + static_cast<std::ptrdiff_t>(b) *
                                              batch_size,
                         static_cast<std::size_t>(batch_size));
  }
  return batches;
}

}  // namespace nlreg
