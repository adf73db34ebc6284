// evsp: command-line front end for fitting, simulating and diagnosing
// evolutionary-spectrum space-time models.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evsp/evsp.hpp"

namespace {

enum Exit : int {
  ok = 0,
  internal = 1,
  usage = 2,
  io = 3,
  format = 4,
  payload_length = 5,
  dimension_overflow = 6,
  validation = 7,
  numerical = 8,
};

int exit_code(evsp::ErrorKind kind) {
  switch (kind) {
    case evsp::ErrorKind::io: return io;
    case evsp::ErrorKind::format: return format;
    case evsp::ErrorKind::payload_length: return payload_length;
    case evsp::ErrorKind::dimension_overflow: return dimension_overflow;
    case evsp::ErrorKind::validation: return validation;
    case evsp::ErrorKind::numerical: return numerical;
  }
  return internal;
}

// EVSP_THREADS wins over --threads; 0 means "use default_workers()".
std::size_t resolve_workers(std::size_t threads) {
  if (std::getenv("EVSP_THREADS")) return 0;
  return threads;
}

struct FitArgs {
  std::string data, mask, variant = "ev-nst", out_model, config;
  std::size_t threads = 0;
  double trend_lambda = 0.01;
};

void run_fit(const FitArgs& a) {
  const auto field = evsp::read_tensor(a.data);
  const auto mask = evsp::read_mask_csv(a.mask);
  evsp::FitConfig config;
  if (!a.config.empty()) config = evsp::fit_config_from_json(evsp::read_json(a.config));
  config.variant = evsp::parse_variant(a.variant);
  config.workers = resolve_workers(a.threads ? a.threads : config.workers);
  evsp::ModelDocument doc;
  doc.model = evsp::fit(field, mask, config);
  doc.trend = evsp::fit_trend(evsp::ensemble_mean(field), a.trend_lambda);
  evsp::write_model(doc, a.out_model);
  std::cout << "variant " << evsp::to_string(doc.model.variant) << " negloglik "
            << evsp::format_number(doc.model.negloglik()) << " params " << doc.model.spatial_parameter_count() << '\n';
  for (const auto& w : doc.model.report.warnings) std::cerr << "warning: " << w << '\n';
}

struct SimulateArgs {
  std::string model, trend_policy = "store-full", out;
  std::size_t runs = 1, burn_in = 200, threads = 0;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
};

void run_simulate(const SimulateArgs& a) {
  const auto doc = evsp::read_model(a.model);
  if (!doc.trend) throw evsp::validation_error("simulate: model file has no trend");
  const auto trend = evsp::apply_trend_storage(*doc.trend, evsp::parse_trend_storage(a.trend_policy));
  evsp::SimulationOptions opt;
  opt.burn_in = a.burn_in;
  opt.noise_scale = a.noise_scale;
  opt.workers = resolve_workers(a.threads);
  const auto ens = evsp::simulate_surrogates(doc.model, trend, a.runs, a.seed, opt);
  evsp::write_tensor(ens.field, a.out);
}

struct DiagnoseArgs {
  std::string data, model, mask, sds, report = "contrasts", out_csv;
  std::size_t threads = 0;
};

void add_contrast_rows(evsp::CsvTable& t, const std::string& source, const evsp::ContrastReport& r, bool with_se) {
  using evsp::format_number;
  const auto M = static_cast<std::size_t>(r.ew.rows()), N = static_cast<std::size_t>(r.ew.cols());
  auto se = [&](const Eigen::MatrixXd& s, std::size_t m, std::size_t n) { return with_se ? format_number(s(m, n)) : ""; };
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n)
      t.add({source, "site", std::to_string(m), std::to_string(n), format_number(r.ew(m, n)), format_number(r.ns(m, n)),
             se(r.ew_se, m, n), se(r.ns_se, m, n)});
  for (std::size_t m = 0; m < M; ++m)
    t.add({source, "lat_mean", std::to_string(m), "", format_number(r.ew_lat[m]), format_number(r.ns_lat[m]), "", ""});
  for (std::size_t n = 0; n < N; ++n)
    t.add({source, "lon_mean", "", std::to_string(n), format_number(r.ew_lon[n]), format_number(r.ns_lon[n]), "", ""});
}

void run_diagnose(const DiagnoseArgs& a) {
  if (a.data.empty() && a.model.empty()) throw evsp::validation_error("diagnose: need --data or --model");
  std::optional<evsp::ModelDocument> doc;
  if (!a.model.empty()) doc = evsp::read_model(a.model);
  std::optional<evsp::EnsembleField> field;
  if (!a.data.empty()) field = evsp::read_tensor(a.data);
  const std::size_t workers = resolve_workers(a.threads);

  evsp::CsvTable table;
  if (a.report == "contrasts") {
    table.header = {"source", "kind", "m", "n", "ew", "ns", "ew_se", "ns_se"};
    if (field) {
      const auto anomaly = evsp::anomalies(*field);
      evsp::TemporalParams temporal;
      if (doc) {
        temporal = doc->model.temporal;
      } else {
        evsp::FitConfig config;
        config.workers = workers;
        temporal = evsp::fit_step1_temporal(anomaly, config);
      }
      const auto h = evsp::whiten(anomaly, temporal, workers);
      const double divisor = static_cast<double>(h.values.K() * (h.values.R() - 1));
      add_contrast_rows(table, "empirical", evsp::contrast_variances(h, divisor), true);
    }
    if (doc) add_contrast_rows(table, "model", evsp::model_implied_contrasts(doc->model), false);
  } else if (a.report == "periodogram") {
    if (!field) throw evsp::validation_error("diagnose: periodogram report needs --data");
    evsp::LandMask mask;
    if (!a.mask.empty()) mask = evsp::read_mask_csv(a.mask);
    else if (doc) mask = doc->model.mask;
    else throw evsp::validation_error("diagnose: periodogram report needs --mask or --model");
    std::optional<Eigen::MatrixXd> sds;
    if (!a.sds.empty()) {
      const auto s = evsp::read_tensor(a.sds);
      if (s.grid.K != 1 || s.grid.R != 1) throw evsp::validation_error("diagnose: sd grid must have K = R = 1");
      Eigen::MatrixXd v(s.grid.M, s.grid.N);
      for (std::size_t m = 0; m < s.grid.M; ++m)
        for (std::size_t n = 0; n < s.grid.N; ++n) v(m, n) = s.values(m, n, 0, 0);
      sds = v;
    }
    const auto p = evsp::landocean_periodograms(*field, mask, sds, std::nullopt, workers);
    table.header = {"m", "c", "land", "ocean"};
    for (std::size_t m = 0; m < p.size(); ++m)
      for (std::size_t c = 0; c <= field->grid.N / 2; ++c) {
        const auto i = static_cast<Eigen::Index>(c);
        table.add({std::to_string(m), std::to_string(c), p[m].land ? evsp::format_number((*p[m].land)[i]) : "",
                   p[m].ocean ? evsp::format_number((*p[m].ocean)[i]) : ""});
      }
  } else {
    throw evsp::validation_error("diagnose: unknown report '" + a.report + "'");
  }
  if (a.out_csv.empty()) std::cout << table.str();
  else table.write(a.out_csv);
}

struct CompareArgs {
  std::vector<std::string> models;
  std::string out_csv;
};

void run_compare(const CompareArgs& a) {
  struct Row {
    evsp::FittedModel model;
    double loglik;
  };
  std::vector<Row> rows;
  for (const auto& path : a.models) {
    auto doc = evsp::read_model(path);
    const double ll = -doc.model.negloglik();
    rows.push_back({std::move(doc.model), ll});
  }
  const auto& g = rows.front().model.grid;
  for (const auto& r : rows)
    if (r.model.grid.M != g.M || r.model.grid.N != g.N || r.model.grid.K != g.K || r.model.grid.R != g.R)
      throw evsp::validation_error("compare: models were fitted to different grids");
  double best = rows.front().loglik;
  for (const auto& r : rows) best = std::max(best, r.loglik);
  const double n_obs = evsp::effective_observations(g.M, g.N, g.K - 2, g.R);
  evsp::CsvTable table;
  table.header = {"variant", "params", "loglik", "dloglik_per_obs", "bic"};
  for (const auto& r : rows) {
    const auto p = r.model.spatial_parameter_count();
    table.add({evsp::to_string(r.model.variant), std::to_string(p), evsp::format_number(r.loglik),
               evsp::format_number((r.loglik - best) / n_obs), evsp::format_number(evsp::bic(-r.loglik, p, n_obs))});
  }
  if (a.out_csv.empty()) std::cout << table.str();
  else table.write(a.out_csv);
}

struct GenArgs {
  std::string spec, out_dir;
  std::optional<std::uint64_t> seed;
};

void run_gen(const GenArgs& a) {
  const auto spec = a.spec.empty() ? evsp::SyntheticSpec{} : evsp::synthetic_spec_from_json(evsp::read_json(a.spec));
  evsp::gen_synthetic(spec, a.seed.value_or(spec.seed), a.out_dir);
}

struct CompressionArgs {
  std::string model, data_dims, trend_policy = "store-full";
};

void run_compression(const CompressionArgs& a) {
  const auto doc = evsp::read_model(a.model);
  std::vector<std::size_t> dims;
  std::stringstream ss(a.data_dims);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      dims.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw evsp::validation_error("report-compression: bad --data-dims entry '" + item + "'");
    }
  }
  const auto& g = doc.model.grid;
  std::size_t M = g.M, N = g.N, K = g.K, R = g.R;
  if (dims.size() == 2) {
    K = dims[0];
    R = dims[1];
  } else if (dims.size() == 4) {
    M = dims[0], N = dims[1], K = dims[2], R = dims[3];
  } else if (!dims.empty()) {
    throw evsp::validation_error("report-compression: --data-dims takes K,R or M,N,K,R");
  }
  const auto storage = evsp::parse_trend_storage(a.trend_policy);
  const auto rep = evsp::compression_report(doc.model.variant, doc.model.tropical_band_count(), M, N, K, R, storage);
  evsp::CsvTable table;
  table.header = {"quantity", "value"};
  table.add({"variant", evsp::to_string(doc.model.variant)});
  table.add({"spatial_params", std::to_string(rep.spatial)});
  table.add({"temporal_params", std::to_string(rep.temporal)});
  table.add({"trend_values", std::to_string(rep.trend)});
  table.add({"trend_policy", evsp::to_string(storage.policy)});
  table.add({"data_values", std::to_string(rep.data_values)});
  table.add({"parameter_ratio", evsp::format_number(rep.parameter_ratio)});
  table.add({"total_ratio", evsp::format_number(rep.total_ratio)});
  std::cout << table.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary-spectrum space-time model: fit, simulate, diagnose"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to an ensemble tensor");
  fit_cmd->add_option("--data", fit.data, "Ensemble tensor (.evsp)")->required();
  fit_cmd->add_option("--mask", fit.mask, "Land mask CSV")->required();
  fit_cmd->add_option("--variant", fit.variant, "ind | ax | ev-st | ev-nst")
      ->check(CLI::IsMember({"ind", "ax", "ev-st", "ev-nst"}));
  fit_cmd->add_option("--out-model", fit.out_model, "Output model JSON")->required();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0: auto)");
  fit_cmd->add_option("--config", fit.config, "Fit configuration JSON");
  fit_cmd->add_option("--trend-lambda", fit.trend_lambda, "Trend smoothing weight in (0, 1]");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw surrogate runs from a fitted model");
  sim_cmd->add_option("--model", sim.model, "Model JSON")->required();
  sim_cmd->add_option("--trend-policy", sim.trend_policy, "store-full | store-spline-knots[:q]");
  sim_cmd->add_option("--runs", sim.runs, "Number of surrogate runs");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--out", sim.out, "Output tensor")->required();
  sim_cmd->add_option("--burn-in", sim.burn_in, "AR(2) burn-in steps");
  sim_cmd->add_option("--noise-scale", sim.noise_scale, "Multiplier on the stochastic part");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0: auto)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Contrast variances or land/ocean periodograms");
  diag_cmd->add_option("--data", diag.data, "Ensemble tensor");
  diag_cmd->add_option("--model", diag.model, "Model JSON");
  diag_cmd->add_option("--mask", diag.mask, "Land mask CSV (periodogram)");
  diag_cmd->add_option("--sds", diag.sds, "Per-site sd tensor with K = R = 1 (periodogram)");
  diag_cmd->add_option("--report", diag.report, "contrasts | periodogram")
      ->check(CLI::IsMember({"contrasts", "periodogram"}));
  diag_cmd->add_option("--out-csv", diag.out_csv, "Output CSV (default: stdout)");
  diag_cmd->add_option("--threads", diag.threads, "Worker threads (0: auto)");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Model comparison table");
  cmp_cmd->add_option("--model", cmp.models, "Model JSON (repeatable)")->required();
  cmp_cmd->add_option("--out-csv", cmp.out_csv, "Output CSV (default: stdout)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic ensemble with known parameters");
  gen_cmd->add_option("--spec", gen.spec, "Generator spec JSON (default: built-in desk-scale spec)");
  gen_cmd->add_option("--seed", gen.seed, "Random seed (overrides the spec)");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  CompressionArgs comp;
  auto* comp_cmd = app.add_subcommand("report-compression", "Storage of a model relative to its data");
  comp_cmd->add_option("--model", comp.model, "Model JSON")->required();
  comp_cmd->add_option("--data-dims", comp.data_dims, "K,R or M,N,K,R (default: fitted grid)");
  comp_cmd->add_option("--trend-policy", comp.trend_policy, "store-full | store-spline-knots[:q]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return usage;
  }

  try {
    if (*fit_cmd) run_fit(fit);
    else if (*sim_cmd) run_simulate(sim);
    else if (*diag_cmd) run_diagnose(diag);
    else if (*cmp_cmd) run_compare(cmp);
    else if (*gen_cmd) run_gen(gen);
    else if (*comp_cmd) run_compression(comp);
  } catch (const evsp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return internal;
  }
  return ok;
}
