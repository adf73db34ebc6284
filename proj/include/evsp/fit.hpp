#pragma once

// Three-step conditional REML fit: per-site AR(2) (step 1), per-band
// longitudinal spectra (step 2), latitudinal coherence (step 3).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coherence.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "reml.hpp"
#include "spectral.hpp"
#include "temporal.hpp"

namespace evsp {

enum class Variant { ind, ax, ev_st, ev_nst };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::ind: return "ind";
    case Variant::ax: return "ax";
    case Variant::ev_st: return "ev-st";
    case Variant::ev_nst: return "ev-nst";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "ind") return Variant::ind;
  if (s == "ax") return Variant::ax;
  if (s == "ev-st") return Variant::ev_st;
  if (s == "ev-nst") return Variant::ev_nst;
  throw validation_error("unknown variant '" + s + "'");
}

/// Spatial parameter count, temporal parameters excluded.
inline std::size_t parameter_count(Variant variant, std::size_t M, std::size_t tropical_band_count) {
  switch (variant) {
    case Variant::ind: return 0;
    case Variant::ax: return 3 * M + 2;
    case Variant::ev_st: return 8 * M + 2;
    case Variant::ev_nst: return 8 * M + 2 + 2 * tropical_band_count;
  }
  throw validation_error("unknown variant");
}

/// Effective observation count used by BIC: M N K_eff (R - 1).
inline double effective_observations(std::size_t M, std::size_t N, std::size_t K_eff, std::size_t R) {
  return static_cast<double>(M * N * K_eff) * (static_cast<double>(R) - 1.0);
}

/// BIC on the log-likelihood scale (larger is better): 2 loglik - p log n,
/// i.e. -2 negloglik - p log n.
inline double bic(double negloglik, std::size_t p, double n_obs) {
  return -2.0 * negloglik - static_cast<double>(p) * std::log(n_obs);
}

struct FitConfig {
  Variant variant = Variant::ev_nst;
  NelderMeadOptions optimizer{};
  std::size_t restarts = 2;
  int g_min = -3;
  int g_max = 3;
  double tropic_bound_deg = 23.0;
  std::size_t workers = 0;  // 0: EVSP_THREADS or hardware concurrency

  void validate(std::size_t N) const {
    if (!(optimizer.f_tol > 0.0) || !(optimizer.x_tol > 0.0) || optimizer.max_evaluations == 0)
      throw validation_error("fit config: tolerances and evaluation budget must be positive");
    if (g_min > g_max) throw validation_error("fit config: g range is empty");
    if (2 * static_cast<std::size_t>(std::max(std::abs(g_min), std::abs(g_max))) >= N)
      throw validation_error("fit config: g range must satisfy |g| < N/2");
  }
};

struct FitReport {
  double step1_negloglik = 0.0;  // spatial independence
  double step2_negloglik = 0.0;  // independent bands
  double step3_negloglik = 0.0;  // full model
  std::vector<double> band_negloglik_ax;
  std::vector<double> band_negloglik_ev;
  std::vector<CoherencePair> pairwise;  // (m, m+1) estimates, ev-nst only
  std::map<std::string, double> nested_negloglik;  // variant name -> full criterion
  std::vector<std::string> warnings;
  std::map<std::string, double> seconds;  // wall clock per step; not serialized
};

struct FittedModel {
  Variant variant = Variant::ind;
  SphereGrid grid;
  LandMask mask;
  TemporalParams temporal;
  std::vector<BandSpectralParams> bands;  // empty for ind
  LatitudeCoherenceProfile coherence;
  FitReport report;

  std::size_t tropical_band_count() const {
    return variant == Variant::ev_nst ? coherence.tropical.size() : 0;
  }
  std::size_t spatial_parameter_count() const { return parameter_count(variant, grid.M, tropical_band_count()); }
  double negloglik() const { return report.step3_negloglik; }
};

/// Band transfer functions of a model; ind bands get a flat unit-variance
/// spectrum (identity covariance).
inline std::vector<TransferFunction> model_transfers(const FittedModel& model) {
  const std::size_t M = model.grid.M, N = model.grid.N;
  std::vector<TransferFunction> out(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (model.variant == Variant::ind) {
      out[m].values = Eigen::MatrixXd::Constant(N, N, 1.0 / std::sqrt(static_cast<double>(N)));
    } else {
      out[m] = evolutionary_transfer(model.bands[m], model.mask.row(m), N);
    }
  }
  return out;
}

/// Full-model criterion of `model` on whitened innovations.
inline double model_negloglik(const FittedModel& model, const InnovationField& h, std::size_t workers = 1) {
  if (model.variant == Variant::ind) return independent_negloglik(h, model.temporal);
  const auto z = latent_decomposition(h, model.temporal, model_transfers(model), workers);
  return coherence_negloglik(z, model.coherence, workers);
}

namespace detail {

inline double clamp_exp(double x) { return std::abs(x) > 40.0 ? std::numeric_limits<double>::quiet_NaN() : std::exp(x); }
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline Eigen::VectorXd matern_spectrum_vector(const MaternSpectrumParams& p, std::size_t N) {
  Eigen::VectorXd s(N);
  for (std::size_t c = 0; c < N; ++c) s[c] = matern_like_spectrum(c, p, N);
  return s;
}

/// phi maximizing the circulant criterion for fixed (alpha, nu).
inline double profiled_phi(const BandStatistics& s, double alpha, double nu) {
  const MaternSpectrumParams unit{1.0, alpha, nu};
  double acc = 0.0;
  for (std::size_t c = 0; c < s.N; ++c)
    acc += s.periodogram[c] / (static_cast<double>(s.N) * matern_like_spectrum(c, unit, s.N));
  return std::max(acc / (s.dof() * static_cast<double>(s.N)), 1e-300);
}

inline MaternSpectrumParams decode_matern(const Eigen::VectorXd& x, Eigen::Index at) {
  return {clamp_exp(x[at]), clamp_exp(x[at + 1]), clamp_exp(x[at + 2])};
}

inline bool finite_params(const MaternSpectrumParams& p) {
  return std::isfinite(p.phi) && std::isfinite(p.alpha) && std::isfinite(p.nu) && p.phi > 0 && p.alpha > 0 && p.nu > 0;
}

/// Four grid spacings, capped at half the circle for very coarse bands.
inline double default_gamma(std::size_t N) {
  return std::min(4.0 * 2.0 * std::numbers::pi / static_cast<double>(N), std::numbers::pi);
}

inline double encode_gamma(double gamma) {
  const double p = std::clamp(gamma / (2.0 * std::numbers::pi), 1e-9, 1.0 - 1e-9);
  return logit(p);
}
inline double decode_gamma(double x) { return 2.0 * std::numbers::pi * logistic(x) * (1.0 - 1e-12); }

}  // namespace detail

struct BandFit {
  BandSpectralParams params;
  double negloglik = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;
};

/// Axially symmetric band fit (land and ocean share one spectrum); uses the
/// circulant fast path.
inline BandFit fit_band_axial(const BandStatistics& s, const FitConfig& config) {
  const std::size_t N = s.N;
  auto objective = [&](const Eigen::VectorXd& x) {
    const auto p = detail::decode_matern(x, 0);
    if (!detail::finite_params(p)) return std::numeric_limits<double>::infinity();
    return band_negloglik_circulant(s, detail::matern_spectrum_vector(p, N));
  };
  std::vector<Eigen::VectorXd> starts;
  for (const auto& [alpha, nu] : {std::pair{1.0, 1.0}, std::pair{0.3, 0.5}, std::pair{3.0, 2.0}}) {
    Eigen::VectorXd x(3);
    x << std::log(detail::profiled_phi(s, alpha, nu)), std::log(alpha), std::log(nu);
    starts.push_back(x);
  }
  const auto best = minimize_multistart(objective, starts, config.optimizer, config.restarts);
  BandFit fit;
  const auto p = detail::decode_matern(best.x, 0);
  fit.params = {p, p, TaperParams{0, 0.0}};
  fit.negloglik = best.value;
  fit.converged = best.converged;
  if (!best.converged) fit.warnings.push_back("axial band fit did not converge");
  return fit;
}

/// Evolutionary-spectrum band fit warm-started from the axial solution, with
/// exhaustive search over integer g.
inline BandFit fit_band_evolutionary(const BandStatistics& s, const std::vector<std::uint8_t>& mask_row,
                                     const BandFit& axial, const FitConfig& config) {
  const std::size_t N = s.N;
  bool any_land = false, any_ocean = false;
  for (auto v : mask_row) (v ? any_land : any_ocean) = true;
  if (!any_land || !any_ocean) {
    BandFit fit = axial;
    fit.warnings.push_back("single-regime band: evolutionary fit equals axial fit");
    return fit;
  }
  const int g_lo = std::max(config.g_min, -static_cast<int>((N - 1) / 2));
  const int g_hi = std::min(config.g_max, static_cast<int>((N - 1) / 2));

  auto make_objective = [&](int g) {
    return [&, g](const Eigen::VectorXd& x) {
      BandSpectralParams p{detail::decode_matern(x, 0), detail::decode_matern(x, 3), TaperParams{g, detail::decode_gamma(x[6])}};
      if (!detail::finite_params(p.land) || !detail::finite_params(p.ocean)) return std::numeric_limits<double>::infinity();
      return band_negloglik(s, band_covariance(evolutionary_transfer(p, mask_row, N)));
    };
  };
  auto encode = [](const BandSpectralParams& p) {
    Eigen::VectorXd x(7);
    x << std::log(p.land.phi), std::log(p.land.alpha), std::log(p.land.nu), std::log(p.ocean.phi),
        std::log(p.ocean.alpha), std::log(p.ocean.nu), detail::encode_gamma(p.taper.gamma);
    return x;
  };

  BandSpectralParams warm = axial.params;
  warm.taper.gamma = detail::default_gamma(N);
  OptimResult best;
  int best_g = 0;
  for (int g = g_lo; g <= g_hi; ++g) {
    std::vector<Eigen::VectorXd> starts{encode(warm)};
    if (best.x.size() > 0) starts.push_back(best.x);
    auto r = minimize_multistart(make_objective(g), starts, config.optimizer, 0);
    if (best.x.size() == 0 || r.value < best.value) {
      best = r;
      best_g = g;
    }
  }
  best = minimize_multistart(make_objective(best_g), {best.x}, config.optimizer, config.restarts);

  BandFit fit;
  fit.params = {detail::decode_matern(best.x, 0), detail::decode_matern(best.x, 3),
                TaperParams{best_g, detail::decode_gamma(best.x[6])}};
  fit.negloglik = best.value;
  fit.converged = best.converged;
  if (!best.converged) fit.warnings.push_back("evolutionary band fit did not converge");
  bool vanished = false;
  (void)land_modulation(mask_row, fit.params.taper, &vanished);
  if (vanished) fit.warnings.push_back("erosion by g removed all land; band uses the ocean regime only");
  if (!(fit.negloglik <= axial.negloglik)) {
    fit.params = axial.params;
    fit.negloglik = axial.negloglik;
    fit.warnings.push_back("evolutionary fit did not improve on the axial warm start; axial parameters kept");
  }
  return fit;
}

/// Step 2 for one band: axial fit, and the evolutionary fit on top of it when
/// requested.
inline std::pair<BandFit, std::optional<BandFit>> fit_step2_band(const BandStatistics& s,
                                                                 const std::vector<std::uint8_t>& mask_row,
                                                                 const FitConfig& config, bool evolutionary) {
  auto ax = fit_band_axial(s, config);
  if (!evolutionary) return {ax, std::nullopt};
  auto ev = fit_band_evolutionary(s, mask_row, ax, config);
  return {ax, ev};
}

namespace detail {

constexpr double xi_ceiling = 1.0 - 1e-6;

inline CoherencePair decode_pair(const Eigen::VectorXd& x) {
  return {xi_ceiling * logistic(x[0]), std::abs(x[1]) > 40.0 ? std::numeric_limits<double>::quiet_NaN() : std::exp(x[1])};
}
inline Eigen::VectorXd encode_pair(const CoherencePair& p) {
  Eigen::VectorXd x(2);
  const double xi = std::clamp(p.xi / xi_ceiling, 1e-9, 1.0 - 1e-9);
  x << logit(xi), std::log(std::max(p.tau, 1e-9));
  return x;
}

inline std::vector<Eigen::VectorXd> coherence_starts(std::optional<CoherencePair> warm) {
  std::vector<Eigen::VectorXd> starts;
  if (warm) starts.push_back(encode_pair(*warm));
  for (const auto& p : {CoherencePair{0.5, 0.5}, CoherencePair{0.2, 0.1}, CoherencePair{0.8, 1.0}})
    starts.push_back(encode_pair(p));
  return starts;
}

}  // namespace detail

struct CoherenceFit {
  LatitudeCoherenceProfile profile;
  double negloglik = 0.0;
  std::vector<CoherencePair> pairwise;
  std::vector<std::string> warnings;
};

/// Maximizes the pair criterion for bands (m, m + 1), never returning a pair
/// worse than `warm`.
inline std::pair<CoherencePair, double> fit_coherence_pair(const LatentDecomposition& z, std::size_t m,
                                                           const CoherencePair& warm, const FitConfig& config) {
  auto objective = [&](const Eigen::VectorXd& x) {
    const auto p = detail::decode_pair(x);
    if (!std::isfinite(p.tau)) return std::numeric_limits<double>::infinity();
    return pair_negloglik(z, m, p);
  };
  auto best = minimize_multistart(objective, detail::coherence_starts(warm), config.optimizer, config.restarts);
  auto pair = detail::decode_pair(best.x);
  const double warm_value = pair_negloglik(z, m, warm);
  if (!(best.value <= warm_value)) return {warm, warm_value};
  return {pair, best.value};
}

/// Step 3. Stationary mode optimizes one global pair over all bands;
/// nonstationary mode fixes tropical steps at their pairwise estimates and
/// optimizes the extra-tropical pair.
inline CoherenceFit fit_step3_coherence(const LatentDecomposition& z, const std::vector<double>& latitudes,
                                        CoherenceMode mode, const FitConfig& config,
                                        std::optional<CoherencePair> warm = std::nullopt) {
  const std::size_t workers = config.workers;
  CoherenceFit out;
  out.profile.tropic_bound_deg = config.tropic_bound_deg;
  if (z.M < 2) {
    out.profile.global = {0.0, 0.0};
    out.negloglik = coherence_negloglik(z, out.profile, workers);
    return out;
  }
  auto global_objective = [&](const LatitudeCoherenceProfile& base) {
    return [&, base](const Eigen::VectorXd& x) {
      auto profile = base;
      profile.global = detail::decode_pair(x);
      if (!std::isfinite(profile.global.tau)) return std::numeric_limits<double>::infinity();
      return coherence_negloglik(z, profile, workers);
    };
  };

  // Stationary global pair; independence (xi = 0) is always a candidate.
  LatitudeCoherenceProfile stationary;
  stationary.tropic_bound_deg = config.tropic_bound_deg;
  auto best = minimize_multistart(global_objective(stationary), detail::coherence_starts(warm), config.optimizer,
                                  config.restarts);
  stationary.global = detail::decode_pair(best.x);
  double stationary_value = best.value;
  {
    LatitudeCoherenceProfile independent = stationary;
    independent.global = {0.0, 0.0};
    const double v = coherence_negloglik(z, independent, workers);
    if (v < stationary_value) {
      stationary = independent;
      stationary_value = v;
    }
  }
  if (stationary.global.xi >= detail::xi_ceiling * (1.0 - 1e-9))
    out.warnings.push_back("global coherence reached the xi -> 1 boundary; clamped");
  if (mode == CoherenceMode::stationary) {
    out.profile = stationary;
    out.negloglik = stationary_value;
    return out;
  }

  // Pairwise (m, m + 1) estimates, warm-started from the stationary pair.
  out.pairwise.assign(z.M - 1, {});
  std::vector<std::string> notes(z.M - 1);
  parallel_for(z.M - 1, workers, [&](std::size_t m) {
    auto [pair, value] = fit_coherence_pair(z, m, stationary.global, config);
    (void)value;
    out.pairwise[m] = pair;
    if (pair.xi >= detail::xi_ceiling * (1.0 - 1e-9))
      notes[m] = "pairwise coherence for bands (" + std::to_string(m) + ", " + std::to_string(m + 1) +
                 ") reached the xi -> 1 boundary; clamped";
  });
  for (auto& n : notes)
    if (!n.empty()) out.warnings.push_back(n);

  LatitudeCoherenceProfile nonstationary = stationary;
  nonstationary.mode = CoherenceMode::nonstationary;
  nonstationary.tropical.clear();
  for (std::size_t m : tropical_bands(latitudes, config.tropic_bound_deg)) nonstationary.tropical[m] = out.pairwise[m];
  auto extra = minimize_multistart(global_objective(nonstationary), {detail::encode_pair(stationary.global)},
                                   config.optimizer, config.restarts);
  nonstationary.global = detail::decode_pair(extra.x);
  double nonstationary_value = extra.value;

  // Nested guard: the stationary solution expressed in nonstationary form.
  LatitudeCoherenceProfile fallback = stationary;
  fallback.mode = CoherenceMode::nonstationary;
  for (const auto& [m, pair] : nonstationary.tropical) fallback.tropical[m] = stationary.global;
  const double fallback_value = coherence_negloglik(z, fallback, workers);
  if (!(nonstationary_value <= fallback_value)) {
    nonstationary = fallback;
    nonstationary_value = fallback_value;
    out.warnings.push_back("nonstationary coherence did not improve on the stationary fit; stationary values kept");
  }
  out.profile = nonstationary;
  out.negloglik = nonstationary_value;
  return out;
}

/// Step 1: per-site Yule-Walker on anomalies, sigma rescaled by sqrt(R/(R-1))
/// so it refers to the single-run process rather than the deflated anomalies.
inline TemporalParams fit_step1_temporal(const AnomalyField& anomalies, const FitConfig& config) {
  const auto& v = anomalies.values;
  const std::size_t K = v.K(), R = v.R();
  if (R < 2) throw validation_error("anomalies undefined for single realization");
  TemporalParams params(v.M(), v.N());
  const double inflate = std::sqrt(static_cast<double>(R) / (static_cast<double>(R) - 1.0));
  std::vector<std::string> failures(v.M() * v.N());
  parallel_for(v.M() * v.N(), config.workers, [&](std::size_t site) {
    const std::span<const double> series(v.data().data() + site * K * R, K * R);
    try {
      auto fit = fit_ar2_site(series, K, R);
      fit.sigma *= inflate;
      params.sites[site] = fit;
    } catch (const Error& e) {
      failures[site] = "site (" + std::to_string(site / v.N()) + ", " + std::to_string(site % v.N()) + "): " + e.what();
    }
  });
  std::string message;
  std::size_t count = 0;
  for (const auto& f : failures)
    if (!f.empty()) {
      if (count < 5) message += (count ? "; " : "") + f;
      ++count;
    }
  if (count) throw numerical_error("step 1 failed at " + std::to_string(count) + " site(s): " + message);
  return params;
}

/// Runs the conditional pipeline. Richer variants are fitted on top of the
/// simpler ones they nest (ind < ax < ev-st < ev-nst) and never return a full
/// criterion worse than the simpler variant they were warm-started from.
inline FittedModel fit(const EnsembleField& field, const LandMask& mask, const FitConfig& config) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };
  field.validate();
  const auto& grid = field.grid;
  if (grid.K < 5) throw validation_error("fit: need at least 5 time steps");
  if (grid.R < 2) throw validation_error("fit: need at least 2 realizations");
  if (mask.M() != grid.M || mask.N() != grid.N) throw validation_error("fit: mask shape differs from grid");
  config.validate(grid.N);

  FittedModel model;
  model.variant = config.variant;
  model.grid = grid;
  model.mask = mask;
  model.coherence.tropic_bound_deg = config.tropic_bound_deg;
  auto& report = model.report;

  auto t0 = clock::now();
  const auto anomaly = anomalies(field);
  model.temporal = fit_step1_temporal(anomaly, config);
  const auto innovations = whiten(anomaly, model.temporal, config.workers);
  report.step1_negloglik = independent_negloglik(innovations, model.temporal);
  report.nested_negloglik["ind"] = report.step1_negloglik;
  report.seconds["step1"] = seconds_since(t0);
  if (config.variant == Variant::ind) {
    report.step2_negloglik = report.step3_negloglik = report.step1_negloglik;
    return model;
  }

  t0 = clock::now();
  const std::size_t M = grid.M;
  const bool evolutionary = config.variant == Variant::ev_st || config.variant == Variant::ev_nst;
  std::vector<BandFit> ax(M), ev(M);
  std::vector<std::string> band_errors(M);
  parallel_for(M, config.workers, [&](std::size_t m) {
    try {
      const auto stats = band_statistics(innovations, model.temporal, m);
      auto [a, e] = fit_step2_band(stats, mask.row(m), config, evolutionary);
      ax[m] = std::move(a);
      if (e) ev[m] = std::move(*e);
    } catch (const Error& err) {
      band_errors[m] = "step 2, band " + std::to_string(m) + ": " + err.what();
    }
  });
  for (const auto& e : band_errors)
    if (!e.empty()) throw numerical_error(e);
  report.seconds["step2"] = seconds_since(t0);

  auto collect = [&](const std::vector<BandFit>& fits, std::vector<double>& nll, const std::string& tag) {
    std::vector<BandSpectralParams> params(M);
    nll.assign(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      params[m] = fits[m].params;
      nll[m] = fits[m].negloglik;
      for (const auto& w : fits[m].warnings) report.warnings.push_back(tag + " band " + std::to_string(m) + ": " + w);
    }
    return params;
  };
  auto transfers_of = [&](const std::vector<BandSpectralParams>& params) {
    std::vector<TransferFunction> t(M);
    for (std::size_t m = 0; m < M; ++m) t[m] = evolutionary_transfer(params[m], mask.row(m), grid.N);
    return t;
  };

  t0 = clock::now();
  const auto ax_params = collect(ax, report.band_negloglik_ax, "ax");
  const auto z_ax = latent_decomposition(innovations, model.temporal, transfers_of(ax_params), config.workers);
  auto ax_coherence = fit_step3_coherence(z_ax, grid.latitudes, CoherenceMode::stationary, config);
  report.nested_negloglik["ax"] = ax_coherence.negloglik;
  for (const auto& w : ax_coherence.warnings) report.warnings.push_back("ax step 3: " + w);

  if (!evolutionary) {
    model.bands = ax_params;
    model.coherence = ax_coherence.profile;
    for (double v : report.band_negloglik_ax) report.step2_negloglik += v;
    report.step3_negloglik = ax_coherence.negloglik;
    report.seconds["step3"] = seconds_since(t0);
    return model;
  }

  auto ev_params = collect(ev, report.band_negloglik_ev, "ev");
  const auto z_ev = latent_decomposition(innovations, model.temporal, transfers_of(ev_params), config.workers);
  auto st = fit_step3_coherence(z_ev, grid.latitudes, CoherenceMode::stationary, config, ax_coherence.profile.global);
  auto z_used = &z_ev;
  if (!(st.negloglik <= ax_coherence.negloglik)) {
    report.warnings.push_back("ev-st full criterion worse than ax; axial bands and coherence kept");
    ev_params = ax_params;
    report.band_negloglik_ev = report.band_negloglik_ax;
    st = ax_coherence;
    z_used = &z_ax;
  } else {
    for (const auto& w : st.warnings) report.warnings.push_back("ev-st step 3: " + w);
  }
  report.nested_negloglik["ev-st"] = st.negloglik;
  model.bands = ev_params;
  for (double v : report.band_negloglik_ev) report.step2_negloglik += v;

  if (config.variant == Variant::ev_st) {
    model.coherence = st.profile;
    report.step3_negloglik = st.negloglik;
    report.seconds["step3"] = seconds_since(t0);
    return model;
  }

  auto nst = fit_step3_coherence(*z_used, grid.latitudes, CoherenceMode::nonstationary, config, st.profile.global);
  for (const auto& w : nst.warnings) report.warnings.push_back("ev-nst step 3: " + w);
  report.pairwise = nst.pairwise;
  if (!(nst.negloglik <= st.negloglik)) {
    report.warnings.push_back("ev-nst full criterion worse than ev-st; stationary coherence kept");
    nst.profile = st.profile;
    nst.profile.mode = CoherenceMode::nonstationary;
    for (std::size_t m : tropical_bands(grid.latitudes, config.tropic_bound_deg)) nst.profile.tropical[m] = st.profile.global;
    nst.negloglik = coherence_negloglik(*z_used, nst.profile, config.workers);
  }
  report.nested_negloglik["ev-nst"] = nst.negloglik;
  model.coherence = nst.profile;
  report.step3_negloglik = nst.negloglik;
  report.seconds["step3"] = seconds_since(t0);
  return model;
}

}  // namespace evsp
