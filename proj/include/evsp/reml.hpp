#pragma once

// Restricted (REML) negative log-likelihood for R independent realizations
// with unknown common mean, evaluated on realization anomalies:
//
//   d(R-1)/2 log 2pi + (R-1)/2 log|Sigma| + d/2 log R + 1/2 sum_r D_r' Sigma^-1 D_r
//
// plus the block-decomposed forms used by the fitting pipeline.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coherence.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "temporal.hpp"

namespace evsp {

/// Terms of the REML criterion that do not depend on Sigma.
inline double reml_constant(double dim, double R) {
  return 0.5 * dim * (R - 1.0) * std::log(2.0 * std::numbers::pi) + 0.5 * dim * std::log(R);
}

/// Dense covariance backed by a Cholesky factorization.
class DenseCovariance {
 public:
  explicit DenseCovariance(const Eigen::MatrixXd& sigma, const std::string& label = "covariance") : llt_(sigma) {
    if (llt_.info() != Eigen::Success) throw numerical_error(label + " is not positive definite");
    const Eigen::VectorXd diag = llt_.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i)
      if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) throw numerical_error(label + " is not positive definite");
    log_det_ = 2.0 * diag.array().log().sum();
  }
  double log_det() const { return log_det_; }
  double quad_form(const Eigen::VectorXd& v) const { return v.dot(llt_.solve(v)); }
  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

class IdentityCovariance {
 public:
  explicit IdentityCovariance(Eigen::Index dim) : dim_(dim) {}
  double log_det() const { return 0.0; }
  double quad_form(const Eigen::VectorXd& v) const { return v.squaredNorm(); }
  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::Index dim_;
};

/// REML negative log-likelihood of the columns of `anomalies` (d x R).
template <class Covariance>
double reml_negloglik(const Eigen::MatrixXd& anomalies, const Covariance& cov) {
  const double d = static_cast<double>(anomalies.rows());
  const double R = static_cast<double>(anomalies.cols());
  if (anomalies.cols() < 2) throw validation_error("reml: need at least two realizations");
  if (anomalies.rows() != cov.dim()) throw validation_error("reml: covariance dimension differs from data");
  double quad = 0.0;
  for (Eigen::Index r = 0; r < anomalies.cols(); ++r) quad += cov.quad_form(anomalies.col(r));
  return reml_constant(d, R) + 0.5 * (R - 1.0) * cov.log_det() + 0.5 * quad;
}

/// Sufficient statistics of one latitude band of whitened innovations.
///
/// The band likelihood treats the N-vectors H(m, ., k, r) as independent over
/// (k, r) with covariance C; its REML criterion on the AR-filtered scale is
///   const + (R-1) K_eff / 2 (log|C| + 2 sum_n log sigma_n) + 1/2 tr(C^-1 S).
struct BandStatistics {
  std::size_t N = 0;
  std::size_t K_eff = 0;
  std::size_t R = 0;
  Eigen::MatrixXd factor;          // B with B B^T = S = sum_{k,r} h h^T
  Eigen::VectorXd periodogram;     // sum_{k,r} |DFT(h)(c)|^2 / N
  double trace = 0.0;              // tr(S)
  double log_sigma_sum = 0.0;      // sum_n log sigma_n

  double dim() const { return static_cast<double>(N * K_eff); }
  double dof() const { return static_cast<double>(K_eff) * (static_cast<double>(R) - 1.0); }
  double constant() const { return reml_constant(dim(), static_cast<double>(R)) + dof() * log_sigma_sum; }
};

inline BandStatistics band_statistics(const InnovationField& h, const TemporalParams& temporal, std::size_t m) {
  const auto& v = h.values;
  const std::size_t N = v.N(), K = v.K(), R = v.R();
  BandStatistics s;
  s.N = N;
  s.K_eff = K;
  s.R = R;
  Eigen::MatrixXd data(N, K * R);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t r = 0; r < R; ++r) data(n, k * R + r) = v(m, n, k, r);
  s.trace = data.squaredNorm();
  if (K * R <= N) {
    s.factor = data;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(data * data.transpose());
    s.factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  s.periodogram = Eigen::VectorXd::Zero(N);
  for (std::size_t c = 0; c < N; ++c) {
    Eigen::VectorXd re = Eigen::VectorXd::Zero(K * R), im = Eigen::VectorXd::Zero(K * R);
    for (std::size_t n = 0; n < N; ++n) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c * n % N) / static_cast<double>(N);
      re += std::cos(angle) * data.row(n).transpose();
      im -= std::sin(angle) * data.row(n).transpose();
    }
    s.periodogram[c] = (re.squaredNorm() + im.squaredNorm()) / static_cast<double>(N);
  }
  for (std::size_t n = 0; n < N; ++n) s.log_sigma_sum += std::log(temporal.at(m, n).sigma);
  return s;
}

/// Band criterion for a general covariance; +inf when C is not positive definite.
inline double band_negloglik(const BandStatistics& s, const Eigen::MatrixXd& C) {
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd& L = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
    log_det += std::log(L(i, i));
  }
  log_det *= 2.0;
  const Eigen::MatrixXd solved = llt.matrixL().solve(s.factor);
  return s.constant() + 0.5 * s.dof() * log_det + 0.5 * solved.squaredNorm();
}

/// Band criterion for a circulant covariance with eigenvalues N * spectrum(c).
inline double band_negloglik_circulant(const BandStatistics& s, const Eigen::VectorXd& spectrum) {
  double log_det = 0.0, quad = 0.0;
  const double N = static_cast<double>(s.N);
  for (std::size_t c = 0; c < s.N; ++c) {
    const double lambda = N * spectrum[c];
    if (!(lambda > 0.0) || !std::isfinite(lambda)) return std::numeric_limits<double>::infinity();
    log_det += std::log(lambda);
    quad += s.periodogram[c] / lambda;
  }
  return s.constant() + 0.5 * s.dof() * log_det + 0.5 * quad;
}

inline double band_negloglik_identity(const BandStatistics& s) { return s.constant() + 0.5 * s.trace; }

/// Innovations mapped to independent-by-construction latent coefficients.
///
/// With band loadings L_m (C_m = L_m L_m^T) the coefficients z_m = L_m^-1 h_m
/// have unit variance and are correlated only across bands at equal basis
/// index j, following the latitudinal AR(1) recursion. The multi-band
/// criterion then splits into per-band determinant terms and per-transition
/// AR(1) terms, which only need the per-(m, j) sums below.
struct LatentDecomposition {
  std::size_t M = 0, N = 0, K_eff = 0, R = 0;
  std::vector<std::size_t> wavenumber;  // c_j for basis index j
  std::vector<double> band_log_det;     // log|C_m|
  std::vector<double> band_log_sigma;   // sum_n log sigma_{m,n}
  Eigen::MatrixXd square;               // (m, j): sum_{k,r} z_mj^2
  Eigen::MatrixXd cross;                // (m, j): sum_{k,r} z_mj z_{m+1,j}, m < M-1

  double dof() const { return static_cast<double>(K_eff) * (static_cast<double>(R) - 1.0); }
};

inline LatentDecomposition latent_decomposition(const InnovationField& h, const TemporalParams& temporal,
                                                const std::vector<TransferFunction>& transfers,
                                                std::size_t workers = 1) {
  const auto& v = h.values;
  const std::size_t M = v.M(), N = v.N(), K = v.K(), R = v.R();
  if (transfers.size() != M) throw validation_error("latent decomposition: need one transfer function per band");
  const TrigBasis basis(N);
  LatentDecomposition out;
  out.M = M;
  out.N = N;
  out.K_eff = K;
  out.R = R;
  out.wavenumber = basis.wavenumber;
  out.band_log_det.assign(M, 0.0);
  out.band_log_sigma.assign(M, 0.0);
  out.square = Eigen::MatrixXd::Zero(M, N);
  out.cross = Eigen::MatrixXd::Zero(M, N);
  std::vector<Eigen::MatrixXd> latent(M);
  std::vector<std::string> failures(M);
  parallel_for(M, workers, [&](std::size_t m) {
    const Eigen::MatrixXd L = latent_loading(transfers[m], basis);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
    const Eigen::MatrixXd& LU = lu.matrixLU();
    double log_abs = 0.0;
    for (Eigen::Index i = 0; i < LU.rows(); ++i) {
      const double d = std::abs(LU(i, i));
      if (!(d > 0.0) || !std::isfinite(d)) {
        failures[m] = "band " + std::to_string(m) + " covariance is not positive definite";
        return;
      }
      log_abs += std::log(d);
    }
    out.band_log_det[m] = 2.0 * log_abs;
    Eigen::MatrixXd data(N, K * R);
    for (std::size_t n = 0; n < N; ++n) {
      out.band_log_sigma[m] += std::log(temporal.at(m, n).sigma);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t r = 0; r < R; ++r) data(n, k * R + r) = v(m, n, k, r);
    }
    latent[m] = lu.solve(data);
    out.square.row(m) = latent[m].rowwise().squaredNorm().transpose();
  });
  for (std::size_t m = 0; m < M; ++m)
    if (!failures[m].empty()) throw numerical_error(failures[m]);
  for (std::size_t m = 0; m + 1 < M; ++m)
    out.cross.row(m) = latent[m].cwiseProduct(latent[m + 1]).rowwise().sum().transpose();
  return out;
}

namespace detail {
/// AR(1) transition contribution for one (band step, basis index):
/// dof/2 log(1 - phi^2) + 1/2 (S_next - 2 phi X + phi^2 S_prev) / (1 - phi^2).
inline double transition_term(double dof, double phi, double prev_sq, double next_sq, double cross) {
  const double one_minus = 1.0 - phi * phi;
  return 0.5 * dof * std::log(one_minus) + 0.5 * (next_sq - 2.0 * phi * cross + phi * phi * prev_sq) / one_minus;
}
}  // namespace detail

/// Full multi-band criterion for coherence `profile` over all M bands.
inline double coherence_negloglik(const LatentDecomposition& z, const LatitudeCoherenceProfile& profile,
                                  std::size_t workers = 1) {
  const double dim = static_cast<double>(z.M * z.N * z.K_eff);
  double total = reml_constant(dim, static_cast<double>(z.R));
  for (std::size_t m = 0; m < z.M; ++m) total += 0.5 * z.dof() * (z.band_log_det[m] + 2.0 * z.band_log_sigma[m]);
  std::vector<double> per_basis(z.N, 0.0);
  parallel_for(z.N, workers, [&](std::size_t j) {
    const std::size_t c = z.wavenumber[j];
    double s = 0.5 * z.square(0, j);
    for (std::size_t m = 1; m < z.M; ++m)
      s += detail::transition_term(z.dof(), step_coefficient(profile, m - 1, c, z.N), z.square(m - 1, j),
                                   z.square(m, j), z.cross(m - 1, j));
    per_basis[j] = s;
  });
  for (double s : per_basis) total += s;
  return total;
}

/// Two-band criterion for bands (m, m + 1) with a single coherence pair.
inline double pair_negloglik(const LatentDecomposition& z, std::size_t m, const CoherencePair& pair) {
  const double dim = static_cast<double>(2 * z.N * z.K_eff);
  double total = reml_constant(dim, static_cast<double>(z.R));
  for (std::size_t b = m; b <= m + 1; ++b) total += 0.5 * z.dof() * (z.band_log_det[b] + 2.0 * z.band_log_sigma[b]);
  for (std::size_t j = 0; j < z.N; ++j)
    total += 0.5 * z.square(m, j) + detail::transition_term(z.dof(), coherence_value(pair, z.wavenumber[j], z.N),
                                                              z.square(m, j), z.square(m + 1, j), z.cross(m, j));
  return total;
}

/// Criterion with identity spatial covariance on the whitened innovations.
inline double independent_negloglik(const InnovationField& h, const TemporalParams& temporal) {
  const auto& v = h.values;
  const double dim = static_cast<double>(v.M() * v.N() * v.K());
  const double dof = static_cast<double>(v.K()) * (static_cast<double>(v.R()) - 1.0);
  double log_sigma = 0.0;
  for (const auto& s : temporal.sites) log_sigma += std::log(s.sigma);
  double quad = 0.0;
  for (double x : v.data()) quad += x * x;
  return reml_constant(dim, static_cast<double>(v.R())) + dof * log_sigma + 0.5 * quad;
}

}  // namespace evsp
