#pragma once

// Surrogate ensemble generation from a fitted model, and storage accounting
// for the model viewed as a compressed ensemble.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coherence.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "temporal.hpp"
#include "trend.hpp"

namespace evsp {

struct SimulationOptions {
  std::size_t burn_in = 200;
  double noise_scale = 1.0;  // 0 reproduces the trend exactly
  std::size_t workers = 0;
};

struct SurrogateEnsemble {
  EnsembleField field;
  std::uint64_t seed = 0;
};

/// Spatial innovations H for `steps` time steps of one realization, shape
/// (m, n, k) with k fastest. Stream (seed, realization, band) supplies the
/// latitudinal recursion innovations of that band in (k, basis) order.
inline Tensor3 simulate_innovations(const FittedModel& model, const std::vector<Eigen::MatrixXd>& loadings,
                                    std::size_t steps, std::uint64_t seed, std::size_t realization) {
  const std::size_t M = model.grid.M, N = model.grid.N;
  const TrigBasis basis(N);
  // Recursion coefficients and innovation sds per (band, basis index).
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(M, N), sd = Eigen::MatrixXd::Ones(M, N);
  if (model.variant != Variant::ind)
    for (std::size_t m = 1; m < M; ++m)
      for (std::size_t j = 0; j < N; ++j) {
        coef(m, j) = step_coefficient(model.coherence, m - 1, basis.wavenumber[j], N);
        sd(m, j) = latitude_innovation_sd(model.coherence, m, basis.wavenumber[j], N);
      }
  std::vector<Stream> streams;
  streams.reserve(M);
  for (std::size_t m = 0; m < M; ++m) streams.emplace_back(seed, realization, m);
  Tensor3 out(M, N, steps);
  Eigen::VectorXd prev(N), cur(N);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t j = 0; j < N; ++j) {
        const double e = streams[m].normal();
        cur[static_cast<Eigen::Index>(j)] = m == 0 ? e : coef(m, j) * prev[static_cast<Eigen::Index>(j)] + sd(m, j) * e;
      }
      const Eigen::VectorXd h = loadings[m] * cur;
      for (std::size_t n = 0; n < N; ++n) out(m, n, k) = h[static_cast<Eigen::Index>(n)];
      prev.swap(cur);
    }
  }
  return out;
}

/// Latitudinal recursion -> longitude-space innovations -> AR(2) colouring
/// (with burn-in) -> trend added. Realizations are independent of each other
/// and of the worker count.
inline SurrogateEnsemble simulate_surrogates(const FittedModel& model, const TrendField& trend, std::size_t runs,
                                             std::uint64_t seed, const SimulationOptions& options = {}) {
  if (runs < 1) throw validation_error("simulate: need at least one run");
  model.temporal.validate();
  const std::size_t M = model.grid.M, N = model.grid.N, K = trend.values.K();
  if (trend.values.M() != M || trend.values.N() != N) throw validation_error("simulate: trend shape differs from model grid");
  if (model.variant != Variant::ind && model.bands.size() != M) throw validation_error("simulate: model has no band parameters");
  const TrigBasis basis(N);
  std::vector<Eigen::MatrixXd> loadings;
  for (const auto& F : model_transfers(model)) loadings.push_back(latent_loading(F, basis));

  SphereGrid grid = model.grid;
  grid.K = K;
  grid.R = runs;
  Tensor4 values(M, N, K, runs);
  const std::size_t steps = K + options.burn_in;
  parallel_for(runs, options.workers, [&](std::size_t r) {
    const Tensor3 h = simulate_innovations(model, loadings, steps, seed, r);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) {
        const auto& p = model.temporal.at(m, n);
        double prev1 = 0.0, prev2 = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          const double e = p.phi1 * prev1 + p.phi2 * prev2 + p.sigma * h(m, n, k);
          prev2 = prev1;
          prev1 = e;
          if (k >= options.burn_in) {
            const std::size_t t = k - options.burn_in;
            values(m, n, t, r) = trend.values(m, n, t) + options.noise_scale * e;
          }
        }
      }
  });
  return {EnsembleField(std::move(grid), std::move(values)), seed};
}

struct CompressionReport {
  std::size_t spatial = 0;
  std::size_t temporal = 0;
  std::size_t trend = 0;
  std::size_t data_values = 0;
  TrendStorage storage;
  double parameter_ratio = 0.0;  // (spatial + temporal) / data
  double total_ratio = 0.0;      // (spatial + temporal + trend) / data
};

inline CompressionReport compression_report(Variant variant, std::size_t tropical_band_count, std::size_t M,
                                            std::size_t N, std::size_t K, std::size_t R, const TrendStorage& storage) {
  CompressionReport rep;
  rep.spatial = parameter_count(variant, M, tropical_band_count);
  rep.temporal = 3 * M * N;
  rep.trend = storage.stored_values(M, N, K);
  rep.data_values = M * N * K * R;
  rep.storage = storage;
  const double data = static_cast<double>(rep.data_values);
  rep.parameter_ratio = static_cast<double>(rep.spatial + rep.temporal) / data;
  rep.total_ratio = static_cast<double>(rep.spatial + rep.temporal + rep.trend) / data;
  return rep;
}

inline CompressionReport compression_report(const FittedModel& model, std::size_t K, std::size_t R,
                                            const TrendStorage& storage) {
  return compression_report(model.variant, model.tropical_band_count(), model.grid.M, model.grid.N, K, R, storage);
}

}  // namespace evsp
