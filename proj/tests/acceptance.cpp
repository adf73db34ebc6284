// Acceptance checks. Each criterion prints one line:
//   PASS|FAIL|SKIP criterion <n> <name>: <measurements>
// Exit status: 0 all selected criteria passed, 1 any failed, 77 skipped only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dense_oracle.hpp"
#include "support.hpp"
#include "evsp/evsp.hpp"

using namespace evsp;

namespace {

enum class Outcome { pass, fail, skip };

struct Result {
  Outcome outcome;
  std::string detail;
};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Result verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

// Coefficient of the latitude recursion, written independently of the library.
double recursion_coefficient(const CoherencePair& p, std::size_t c, std::size_t N) {
  const double s = std::sin(std::numbers::pi * double(c) / double(N));
  return p.xi * std::pow(1.0 + 4.0 * s * s, -p.tau);
}

Result likelihood_oracle() {
  const auto t0 = clock_type::now();
  double worst = 0.0;
  std::size_t cases = 0;
  std::uint64_t seed = 100;
  for (std::size_t M : {2u, 4u})
    for (std::size_t N : {4u, 8u})
      for (Variant v : {Variant::ind, Variant::ax, Variant::ev_st, Variant::ev_nst}) {
        SphereGrid grid{M, N, 6, 3, SphereGrid::even_latitudes(M, -30.0, 30.0)};
        const auto mask = synthetic_mask(M, N, mask_pattern::Random{0.5, seed});
        const auto model = fixture::random_model(v, grid, mask, seed);
        InnovationField h{grid, fixture::random_tensor(M, N, 6, 3, seed + 1)};
        const double block = model_negloglik(model, h);
        const double dense = fixture::dense_reml(model, h);
        worst = std::max(worst, std::abs(block - dense) / std::abs(dense));
        ++cases;
        seed += 2;
      }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-8 && secs < 10.0, std::to_string(cases) + " cases, max relative difference " + fmt(worst) +
                                                   " (tol 1e-08), " + fmt(secs, 3) + " s (limit 10 s)");
}

Result coherence_identity() {
  const auto t0 = clock_type::now();
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t M = 2 + gen() % 9, N = 2 + gen() % 63, c = gen() % N;
    LatitudeCoherenceProfile profile;
    profile.global = {0.999 * u(gen), 3.0 * u(gen)};
    if (draw % 2) {
      profile.mode = CoherenceMode::nonstationary;
      for (std::size_t m = 0; m + 1 < M; ++m)
        if (gen() % 2) profile.tropical[m] = {0.999 * u(gen), 3.0 * u(gen)};
    }
    // Propagate z_m = a_m z_{m-1} + sqrt(1 - a_m^2) e_m from z_0 ~ N(0, 1).
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
    S(0, 0) = 1.0;
    for (std::size_t m = 1; m < M; ++m) {
      const CoherencePair& p =
          profile.tropical.count(m - 1) ? profile.tropical.at(m - 1) : profile.global;
      const double a = recursion_coefficient(p, c, N);
      for (std::size_t j = 0; j < m; ++j) S(m, j) = S(j, m) = a * S(m - 1, j);
      S(m, m) = a * a * S(m - 1, m - 1) + (1.0 - a * a);
    }
    const Eigen::MatrixXd lib = coherence_covariance(profile, 0, M, c, N);
    worst = std::max(worst, (lib - S).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-12 && secs < 5.0,
                 "1000 draws, max abs difference " + fmt(worst) + " (tol 1e-12), " + fmt(secs, 3) + " s (limit 5 s)");
}

Result circulant_structure() {
  const auto t0 = clock_type::now();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double circ = 0.0, eig = 0.0;
  int cases = 0;
  for (std::size_t N : {5u, 8u, 16u, 33u, 64u})
    for (int rep = 0; rep < 4; ++rep) {
      const MaternSpectrumParams p{0.2 + u(gen), 0.1 + 2.0 * u(gen), 0.1 + 2.0 * u(gen)};
      const BandSpectralParams band{p, p, {0, 0.0}};
      std::vector<std::uint8_t> row(N);
      for (auto& x : row) x = gen() % 2;
      const Eigen::MatrixXd C = band_covariance(evolutionary_transfer(band, row, N));
      const double scale = C.cwiseAbs().maxCoeff();
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t n2 = 0; n2 < N; ++n2)
          circ = std::max(circ, std::abs(C(n, n2) - C(0, (n2 + N - n) % N)) / scale);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
      std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + N), want(N);
      for (std::size_t c = 0; c < N; ++c) {
        const double s = std::sin(std::numbers::pi * double(c) / double(N));
        want[c] = double(N) * p.phi / std::pow(p.alpha * p.alpha + 4.0 * s * s, p.nu + 0.5);
      }
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      const double top = want.back();
      for (std::size_t i = 0; i < N; ++i) eig = std::max(eig, std::abs(got[i] - want[i]) / top);
      ++cases;
    }
  const double secs = seconds_since(t0);
  return verdict(circ <= 1e-12 && eig <= 1e-10 && secs < 1.0,
                 std::to_string(cases) + " bands, circulant deviation " + fmt(circ) + " (tol 1e-12), eigenvalue deviation " +
                     fmt(eig) + " (tol 1e-10), " + fmt(secs, 3) + " s (limit 1 s)");
}

Result parameter_counts() {
  const std::size_t got[4] = {parameter_count(Variant::ind, 142, 48), parameter_count(Variant::ax, 142, 48),
                              parameter_count(Variant::ev_st, 142, 48), parameter_count(Variant::ev_nst, 142, 48)};
  const std::size_t want[4] = {0, 428, 1138, 1234};
  std::string detail = "ind/ax/ev-st/ev-nst at M=142, 48 tropical bands:";
  bool ok = true;
  for (int i = 0; i < 4; ++i) {
    detail += " " + std::to_string(got[i]);
    ok = ok && got[i] == want[i];
  }
  return verdict(ok, detail + " (expected 0 428 1138 1234)");
}

double log_spectrum_rms(const MaternSpectrumParams& a, const MaternSpectrumParams& b, std::size_t N) {
  double s = 0.0;
  for (std::size_t c = 0; c < N; ++c) {
    const double d = std::log(matern_like_spectrum(c, a, N)) - std::log(matern_like_spectrum(c, b, N));
    s += d * d;
  }
  return std::sqrt(s / double(N));
}

Result synthetic_recovery() {
  const auto t0 = clock_type::now();
  const SyntheticSpec spec;
  const auto truth = synthetic_truth(spec);
  const auto data = synthetic_ensemble(spec, truth, spec.seed);
  FitConfig config;
  config.variant = Variant::ev_nst;
  const auto model = fit(data, truth.model.mask, config);

  double e1 = 0.0, e2 = 0.0;
  const std::size_t sites = spec.M * spec.N;
  for (std::size_t i = 0; i < sites; ++i) {
    e1 += std::pow(model.temporal.sites[i].phi1 - truth.model.temporal.sites[i].phi1, 2);
    e2 += std::pow(model.temporal.sites[i].phi2 - truth.model.temporal.sites[i].phi2, 2);
  }
  const double rms1 = std::sqrt(e1 / double(sites)), rms2 = std::sqrt(e2 / double(sites));
  // Large-sample SD of a per-site Yule-Walker coefficient (upper bound at phi2 = 0).
  const double floor = std::sqrt(1.0 / (double(spec.K - 2) * double(spec.R - 1)));

  double spec_worst = 0.0;
  for (std::size_t m = 0; m < spec.M; ++m) {
    spec_worst = std::max(spec_worst, log_spectrum_rms(model.bands[m].land, truth.model.bands[m].land, spec.N));
    spec_worst = std::max(spec_worst, log_spectrum_rms(model.bands[m].ocean, truth.model.bands[m].ocean, spec.N));
  }
  const auto& g = model.coherence.global;
  const double dxi = std::abs(g.xi - spec.coherence.xi), dtau = std::abs(g.tau - spec.coherence.tau);
  const double secs = seconds_since(t0);

  const bool ar_ok = rms1 <= 0.05 && rms2 <= 0.05;
  const bool spectra_ok = spec_worst <= 0.10;
  const bool coherence_ok = dxi <= 0.05 && dtau <= 0.05;
  auto flag = [](bool b) { return b ? "PASS" : "FAIL"; };
  return verdict(ar_ok && spectra_ok && coherence_ok && secs < 1800.0,
                 std::string("ar=") + flag(ar_ok) + " (phi1 RMS " + fmt(rms1, 3) + ", phi2 RMS " + fmt(rms2, 3) +
                     ", tol 0.05, per-site sampling SD ~" + fmt(floor, 3) + ") spectra=" + flag(spectra_ok) +
                     " (worst band log-spectrum RMS " + fmt(spec_worst, 3) + ", tol 0.10) coherence=" + flag(coherence_ok) +
                     " (xi " + fmt(g.xi, 4) + ", tau " + fmt(g.tau, 4) + ", tol 0.05) runtime=" + fmt(secs, 3) + " s");
}

std::vector<EnsembleField> nesting_datasets(std::vector<LandMask>& masks) {
  std::vector<EnsembleField> out;
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    SyntheticSpec spec;
    spec.M = 4;
    spec.N = 16;
    spec.K = 30;
    spec.R = 3;
    spec.south_deg = -30.0;
    spec.north_deg = 30.0;
    spec.land_width = 5 + seed % 3;
    spec.land_offset = seed % 5;
    spec.coherence = {0.3 + 0.2 * double(seed % 3), 0.4};
    spec.tropical[1] = {0.5, 0.2};
    const auto truth = synthetic_truth(spec);
    masks.push_back(truth.model.mask);
    out.push_back(synthetic_ensemble(spec, truth, seed));
  }
  return out;
}

Result nesting_monotonicity() {
  std::vector<LandMask> masks;
  const auto datasets = nesting_datasets(masks);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    FitConfig config;
    config.variant = Variant::ev_nst;
    const auto model = fit(datasets[i], masks[i], config);
    const auto& nl = model.report.nested_negloglik;
    const double ind = nl.at("ind"), ax = nl.at("ax"), st = nl.at("ev-st"), nst = nl.at("ev-nst");
    const bool chain = nst <= st && st <= ax && ax <= ind;
    std::size_t bands_ok = 0;
    for (std::size_t m = 0; m < model.grid.M; ++m)
      if (model.report.band_negloglik_ev[m] <= model.report.band_negloglik_ax[m]) ++bands_ok;
    ok = ok && chain && bands_ok == model.grid.M;
    detail += (i ? "; " : "") + std::string("set ") + std::to_string(i) + ": " + fmt(ind, 9) + " >= " + fmt(ax, 9) +
              " >= " + fmt(st, 9) + " >= " + fmt(nst, 9) + (chain ? "" : " VIOLATED") + ", ev>=ax loglik in " +
              std::to_string(bands_ok) + "/" + std::to_string(model.grid.M) + " bands";
  }
  return verdict(ok, detail);
}

// Desk-scale model for the simulation checks.
SyntheticTruth desk_model(std::size_t M, std::size_t N, std::size_t K) {
  SyntheticSpec spec;
  spec.M = M;
  spec.N = N;
  spec.K = K;
  spec.land_width = N / 3;
  spec.land_offset = 1;
  spec.land_shift = 1;
  spec.coherence = {0.6, 0.4};
  return synthetic_truth(spec);
}

InnovationField whitened(const SyntheticTruth& truth, std::size_t K, std::size_t runs, std::uint64_t seed) {
  TrendField zero{Tensor3(truth.model.grid.M, truth.model.grid.N, K), 0.01};
  const auto sur = simulate_surrogates(truth.model, zero, runs, seed);
  return whiten(AnomalyField{sur.field.grid, sur.field.values}, truth.model.temporal);
}

Result surrogate_calibration() {
  const auto t0 = clock_type::now();
  const std::size_t M = 3, N = 8, runs = 2000;
  auto truth = desk_model(M, N, 3);
  TrendField zero{Tensor3(M, N, 3), 0.01};
  const auto sur = simulate_surrogates(truth.model, zero, runs, 5);
  // Exact whitening leaves one innovation slice per run (k = 2): 2000 iid draws.
  const auto h = whiten(AnomalyField{sur.field.grid, sur.field.values}, truth.model.temporal);
  const double n = double(runs);
  std::size_t checks = 0, within = 0;
  double worst = 0.0;
  auto check = [&](double est, double want, double se) {
    const double z = std::abs(est - want) / se;
    worst = std::max(worst, z);
    ++checks;
    if (z <= 3.0) ++within;
  };

  const auto transfers = model_transfers(truth.model);
  const TrigBasis basis(N);
  std::vector<Eigen::MatrixXd> latent(M);
  for (std::size_t m = 0; m < M; ++m) {
    const Eigen::MatrixXd C = band_covariance(transfers[m]);
    Eigen::MatrixXd x(N, runs);
    for (std::size_t r = 0; r < runs; ++r)
      for (std::size_t i = 0; i < N; ++i) x(i, r) = h.values(m, i, 0, r);
    const Eigen::MatrixXd emp = x * x.transpose() / n;
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = a; b < N; ++b) check(emp(a, b), C(a, b), std::sqrt((C(a, a) * C(b, b) + C(a, b) * C(a, b)) / n));
    latent[m] = latent_loading(transfers[m], basis).fullPivLu().solve(x);
  }
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t m2 = m + 1; m2 < M; ++m2)
      for (std::size_t j = 0; j < N; ++j) {
        const double rho = cross_band_correlation(truth.model.coherence, m, m2, basis.wavenumber[j], N);
        const double est = latent[m].row(j).dot(latent[m2].row(j)) / n;
        check(est, rho, std::sqrt((1.0 + rho * rho) / n));
      }
  for (std::size_t m = 0; m < M; ++m) {
    const Eigen::MatrixXd C = band_covariance(transfers[m]);
    for (std::size_t i = 0; i < N; ++i) {
      const double v = truth.model.temporal.at(m, i).stationary_variance() * C(i, i);
      double s = 0.0;
      for (std::size_t r = 0; r < runs; ++r) s += std::pow(sur.field.values(m, i, 2, r), 2);
      check(s / n, v, v * std::sqrt(2.0 / n));
    }
  }
  const double secs = seconds_since(t0);
  return verdict(within == checks && secs < 300.0,
                 std::to_string(within) + "/" + std::to_string(checks) +
                     " statistics (band covariance entries, cross-band latent correlations, site AR(2) variances) within 3 MC SE"
                     ", largest |z| " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s (limit 300 s)");
}

Result contrast_closure() {
  const std::size_t M = 6, N = 24, K = 22, R = 10;
  const auto truth = desk_model(M, N, K);
  const auto h = whitened(truth, K, R, 8);
  const auto emp = contrast_variances(h);
  const auto mod = model_implied_contrasts(truth.model);
  std::size_t ok_sites = 0;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) {
      bool ok = std::abs(emp.ew(m, n) - mod.ew(m, n)) <= 3.0 * emp.ew_se(m, n);
      if (m > 0) ok = ok && std::abs(emp.ns(m, n) - mod.ns(m, n)) <= 3.0 * emp.ns_se(m, n);
      if (ok) ++ok_sites;
    }
  const double frac = double(ok_sites) / double(M * N);

  FittedModel ax = truth.model;
  ax.variant = Variant::ax;
  for (auto& b : ax.bands) b = {b.land, b.land, {0, 0.0}};
  const auto axc = model_implied_contrasts(ax);
  double spread = 0.0;
  for (std::size_t m = 0; m < M; ++m)
    spread = std::max(spread, (axc.ew.row(m).maxCoeff() - axc.ew.row(m).minCoeff()) / axc.ew.row(m).cwiseAbs().maxCoeff());

  return verdict(frac >= 0.95 && spread <= 1e-12,
                 std::to_string(ok_sites) + "/" + std::to_string(M * N) + " sites within 3 MC SE (" + fmt(100.0 * frac, 4) +
                     "%, need 95%), ax east-west row spread " + fmt(spread) + " (tol 1e-12)");
}

Result periodogram_signature() {
  const auto t0 = clock_type::now();
  const SyntheticSpec spec;
  const auto truth = synthetic_truth(spec);
  const auto data = synthetic_ensemble(spec, truth, spec.seed);
  const auto per = landocean_periodograms(data, truth.model.mask);
  // Slope of log periodogram against log wavenumber, c = 1..N/2.
  auto slope = [&](const Eigen::VectorXd& p) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t c = 1; c <= spec.N / 2; ++c) {
      const double x = std::log(double(c)), y = std::log(p[Eigen::Index(c)]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      cnt += 1;
    }
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  };
  std::vector<double> diff;
  double land_mean = 0.0, ocean_mean = 0.0;
  for (const auto& b : per) {
    if (!b.land || !b.ocean) continue;
    const double sl = slope(*b.land), so = slope(*b.ocean);
    land_mean += sl;
    ocean_mean += so;
    diff.push_back(sl - so);
  }
  const double B = double(diff.size());
  double mean = 0.0, var = 0.0;
  for (double d : diff) mean += d / B;
  for (double d : diff) var += (d - mean) * (d - mean) / (B - 1.0);
  const double se = std::sqrt(var / B);
  const std::size_t slower = std::count_if(diff.begin(), diff.end(), [](double d) { return d > 0.0; });
  const double secs = seconds_since(t0);
  return verdict(slower == diff.size() && mean > 3.0 * se && secs < 60.0,
                 "mean log-log slope land " + fmt(land_mean / B, 3) + " vs ocean " + fmt(ocean_mean / B, 3) +
                     ", land slower in " + std::to_string(slower) + "/" + std::to_string(diff.size()) +
                     " bands, slope difference " + fmt(mean, 3) + " +- " + fmt(se, 2) + " (must exceed 3 SE), " +
                     fmt(secs, 3) + " s (limit 60 s)");
}

Result determinism() {
  std::vector<LandMask> masks;
  const auto datasets = nesting_datasets(masks);
  std::vector<std::string> dumps;
  for (std::size_t workers : {1u, 2u, 3u, 8u}) {
    FitConfig config;
    config.variant = Variant::ev_nst;
    config.workers = workers;
    dumps.push_back(model_to_json({fit(datasets[0], masks[0], config), std::nullopt, {}}).dump());
  }
  bool same = std::all_of(dumps.begin(), dumps.end(), [&](const std::string& d) { return d == dumps[0]; });
  std::string detail = std::string("fits with 1/2/3/8 workers ") + (same ? "bit-identical" : "DIFFER");

  const unsigned cpus = std::thread::hardware_concurrency();
  if (cpus < 8) {
    if (!same) return {Outcome::fail, detail};
    return {Outcome::skip, detail + "; step-2 speedup not measurable: " + std::to_string(cpus) +
                               " hardware thread(s) available, 8 needed"};
  }
  SyntheticSpec spec;
  spec.M = 48;
  spec.N = 16;
  spec.K = 20;
  spec.R = 3;
  spec.land_width = 5;
  const auto truth = synthetic_truth(spec);
  const auto data = synthetic_ensemble(spec, truth, 3);
  double t[2];
  int i = 0;
  for (std::size_t workers : {1u, 8u}) {
    FitConfig config;
    config.variant = Variant::ev_st;
    config.workers = workers;
    t[i++] = fit(data, truth.model.mask, config).report.seconds.at("step2");
  }
  const double speedup = t[0] / t[1];
  return verdict(same && speedup >= 3.0, detail + "; step-2 on 48 bands " + fmt(t[0], 3) + " s -> " + fmt(t[1], 3) +
                                             " s, speedup " + fmt(speedup, 3) + " (need 3)");
}

const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
    {"likelihood oracle equivalence", likelihood_oracle},
    {"latitude recursion identity", coherence_identity},
    {"axially symmetric structure", circulant_structure},
    {"parameter counts", parameter_counts},
    {"synthetic recovery", synthetic_recovery},
    {"nesting monotonicity", nesting_monotonicity},
    {"surrogate calibration", surrogate_calibration},
    {"contrast closure", contrast_closure},
    {"two-regime periodogram signature", periodogram_signature},
    {"determinism and scaling", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<std::size_t> selected;
  app.add_option("--criterion", selected, "criterion number(s), 1-10; default all")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  bool failed = false, passed = false;
  for (std::size_t i : selected) {
    const auto& [name, run] = criteria[i - 1];
    Result r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %zu %s: %s\n", tag, i, name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    failed = failed || r.outcome == Outcome::fail;
    passed = passed || r.outcome == Outcome::pass;
  }
  if (failed) return 1;
  return passed ? 0 : 77;
}
