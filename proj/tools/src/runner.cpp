#include <hetsync/app/runner.hpp>
#include <hetsync/errors.hpp>
#include <hetsync/random.hpp>
#include <hetsync/rate.hpp>
#include <hetsync/spectral.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>

namespace hetsync::app {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class V>
ordered_json vector_json(const V& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ordered_json analysis_json(const RunConfig& config, const Analysis& a) {
  ordered_json j;
  j["name"] = config.name;
  j["agents"] = config.agents();
  j["state_dim"] = config.dim();
  j["laplacian_eigenvalues"] = vector_json(a.spectrum.eigenvalues);
  j["connected"] = is_connected(a.spectrum);

  const AssumptionReport& r = a.assumptions;
  ordered_json as;
  as["stabilizable"] = r.stabilizable;
  as["unstable_average"] = r.unstable_average;
  as["product_gap"] = r.product_gap;
  as["spectral_radius"] = r.spectral_radius;
  as["inverse_unstable_product"] = r.lhs_value;
  as["graph_ratio"] = r.rhs_value;
  j["assumptions"] = std::move(as);

  const ProtocolDesign& d = a.design;
  ordered_json ds;
  ds["stable_case"] = d.stable_case;
  ds["S_inf"] = matrix_json(d.average);
  ds["lambda2"] = d.lambda2;
  ds["lambdaN"] = d.lambdaN;
  ds["coupling"] = d.coupling;
  ds["coupling_interval"] = ordered_json::array({d.coupling_interval.lower, d.coupling_interval.upper});
  ds["contraction"] = d.contraction;
  ds["eta"] = d.eta;
  ds["P_source"] = witness_source_name(d.witness);
  if (d.witness != WitnessSource::none) {
    ds["P"] = matrix_json(d.riccati_P);
    ds["riccati_residual_min_eig"] = d.riccati_residual;
  }
  ds["K_inf"] = vector_json(d.limit_gain);
  ds["rate_bound"] = d.rate_bound;
  j["design"] = std::move(ds);
  return j;
}

std::pair<std::size_t, std::size_t> rate_window(const RunConfig& config) {
  std::pair<std::size_t, std::size_t> w =
      config.rate_window.value_or(std::pair<std::size_t, std::size_t>{config.horizon / 3, config.horizon});
  w.second = std::min(w.second, config.horizon);
  return w;
}

const char* tail_trend(std::span<const double> series, double r, Window w) {
  const std::vector<double> ratio = ratio_series(series, r);
  if (tail_decreasing(ratio, w)) return "decreasing";
  if (tail_increasing(ratio, w)) return "increasing";
  return "mixed";
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const AssumptionViolation& e) {
    err << "assumption failed [" << condition_name(e.which()) << "]: " << e.what() << '\n';
    return exit_assumption;
  } catch (const OverflowError& e) {
    err << "numerical failure at step " << e.step() << ": " << e.what() << '\n';
    return exit_numerical;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  fill(f);
  if (!f) throw ConfigError("failed writing " + path.string());
}

RunConfig apply_overrides(RunConfig config, const CommonOptions& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.horizon) {
    if (*o.horizon < 1) throw ConfigError("horizon must be at least 1");
    config.horizon = *o.horizon;
  }
  if (o.rates) config.rates = *o.rates;
  validate(config);
  return config;
}

void prepare_out(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
}

}  // namespace

Analysis analyze(const RunConfig& config) {
  Analysis a;
  a.spectrum = spectrum(build_laplacian(config.graph()));
  a.assumptions = check_assumptions(config.s_init, config.input, a.spectrum);
  DesignOptions opts;
  opts.coupling = config.coupling;
  opts.eta = config.eta;
  opts.riccati_P = config.riccati_P;
  a.design = design_protocol(config.s_init, config.input, a.spectrum, opts);
  return a;
}

std::vector<Vector> initial_states(const RunConfig& config) {
  if (config.xi_init) return *config.xi_init;
  Rng rng(config.seed);
  std::vector<Vector> xs;
  xs.reserve(config.agents());
  for (std::size_t i = 0; i < config.agents(); ++i) xs.push_back(rng.vector(config.dim()));
  return xs;
}

SimulationResult run_simulation(const RunConfig& config) {
  SimulationResult r;
  r.analysis = analyze(config);
  r.initial = initial_states(config);
  SimulationOptions opts;
  opts.horizon = config.horizon;
  r.trajectory = simulate(r.analysis.spectrum.laplacian,
                          AgentEnsemble(config.s_init, r.initial, config.input), r.analysis.design,
                          opts);
  return r;
}

std::string analysis_report(const RunConfig& config, const Analysis& analysis) {
  return analysis_json(config, analysis).dump(2) + "\n";
}

std::string simulation_report(const RunConfig& config, const SimulationResult& result) {
  ordered_json j = analysis_json(config, result.analysis);
  const Trajectory& t = result.trajectory;
  ordered_json sim;
  sim["seed"] = config.seed;
  sim["horizon"] = config.horizon;
  sim["initial_states"] = config.xi_init ? "config" : "seeded uniform [-1, 1]";
  sim["sync_error_initial"] = t.sync_error.front();
  sim["sync_error_final"] = t.sync_error.back();
  sim["sync_error_reduction"] =
      t.sync_error.front() > 0.0 ? t.sync_error.back() / t.sync_error.front() : 0.0;
  sim["dynamics_deviation_final"] = t.dynamics_deviation.back();

  const auto [ws, we] = rate_window(config);
  const Window w{ws, we};
  ordered_json est;
  est["window"] = ordered_json::array({ws, we});
  try {
    const RateEstimate e = estimate_rate(t.sync_error, w);
    est["rate"] = e.rate;
    est["residual"] = e.residual;
    est["points"] = e.points;
  } catch (const InvalidArgument& e) {
    est["rate"] = nullptr;
    est["note"] = e.what();
  }
  sim["estimated_rate"] = std::move(est);

  ordered_json checks = ordered_json::array();
  const bool synchronizes = t.sync_error.front() > 0.0;
  for (double r : config.rates) {
    ordered_json c;
    c["r"] = r;
    c["above_rate_bound"] = r > result.analysis.design.rate_bound;
    if (synchronizes && we > ws) {
      c["ratio_tail"] = tail_trend(t.sync_error, r, w);
      const DecayCertificate cert = check_decay(t.sync_error, r, ws);
      c["bounded"] = cert.bounded;
      c["envelope_nonincreasing"] = cert.tail_nonincreasing;
      c["sup_ratio"] = cert.empirical_sup;
    } else {
      c["ratio_tail"] = nullptr;
    }
    checks.push_back(std::move(c));
  }
  sim["rate_checks"] = std::move(checks);
  j["simulation"] = std::move(sim);
  return j.dump(2) + "\n";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t n = traj.state_offsets.empty() ? 0 : static_cast<std::size_t>(traj.state_offsets[0].rows());
  out << "t,sync_error,dyn_dev";
  for (std::size_t i = 1; i <= n; ++i) out << ",dev_agent_" << i;
  out << '\n';
  for (std::size_t t = 0; t <= traj.horizon(); ++t) {
    out << t << ',' << num(traj.sync_error[t]) << ',' << num(traj.dynamics_deviation[t]);
    for (std::size_t i = 0; i < n; ++i) out << ',' << num(traj.agent_deviation(t, i));
    out << '\n';
  }
}

void write_components_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.state_offsets.empty()) return;
  const Eigen::Index n = traj.state_offsets[0].rows();
  const Eigen::Index p = traj.state_offsets[0].cols();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index k = 1; k <= p; ++k) out << ",x_" << i << '_' << k;
  }
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index k = 1; k <= p; ++k) out << ",dev_" << i << '_' << k;
  }
  out << '\n';
  for (std::size_t t = 0; t <= traj.horizon(); ++t) {
    const Matrix& e = traj.state_offsets[t];
    const Vector& m = traj.mean_state[t];
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < p; ++k) out << ',' << num(m(k) + e(i, k));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < p; ++k) out << ',' << num(e(i, k));
    }
    out << '\n';
  }
}

void write_ratio_csv(std::ostream& out, const std::vector<double>& series, double r) {
  const std::vector<double> ratio = ratio_series(series, r);
  out << "t,value,ratio_r" << rate_label(r) << '\n';
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << t << ',' << num(series[t]) << ',' << num(ratio[t]) << '\n';
  }
}

void write_suite_csv(std::ostream& out, const std::vector<TrialOutcome>& rows) {
  out << "seed,rho_As,rho_Astar,kappa,r_tested,sup_ratio,passed\n";
  for (const TrialOutcome& r : rows) {
    out << r.seed << ',' << num(r.rho_stable) << ',' << num(r.rho_star) << ',' << num(r.kappa) << ','
        << num(r.rate_tested) << ',' << num(r.sup_ratio) << ',' << (r.passed ? "true" : "false")
        << '\n';
  }
}

std::string rate_label(double r) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, r);
    if (std::strtod(buf, nullptr) == r) break;
  }
  return buf;
}

int cmd_analyze(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = apply_overrides(load_config(options.config), options);
    const std::string report = analysis_report(config, analyze(config));
    prepare_out(options.out);
    write_file(options.out / (config.name + "_report.json"), [&](std::ostream& f) { f << report; });
    out << report;
    return static_cast<int>(exit_ok);
  });
}

int cmd_simulate(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = apply_overrides(load_config(options.config), options);
    const SimulationResult result = run_simulation(config);
    const std::string report = simulation_report(config, result);
    prepare_out(options.out);
    const std::filesystem::path base = options.out;
    write_file(base / (config.name + "_report.json"), [&](std::ostream& f) { f << report; });
    write_file(base / (config.name + "_trajectory.csv"),
               [&](std::ostream& f) { write_trajectory_csv(f, result.trajectory); });
    write_file(base / (config.name + "_components.csv"),
               [&](std::ostream& f) { write_components_csv(f, result.trajectory); });
    for (double r : config.rates) {
      write_file(base / (config.name + "_ratio_" + rate_label(r) + ".csv"),
                 [&](std::ostream& f) { write_ratio_csv(f, result.trajectory.sync_error, r); });
    }
    out << report;
    return static_cast<int>(exit_ok);
  });
}

int cmd_decouple_suite(const SuiteOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.trials == 0) throw ConfigError("--trials must be at least 1");
    if (options.horizon < 10) throw ConfigError("--horizon must be at least 10 for the suite");
    std::vector<TrialOutcome> rows = run_decouple_suite(options.seed, options.trials, options.horizon);
    bool failed = false;
    for (const TrialOutcome& r : rows) failed = failed || (r.hypothesis && !r.passed);
    std::size_t passes = 0;
    for (const TrialOutcome& r : rows) passes += r.passed ? 1 : 0;
    if (options.negative_control) {
      const TrialOutcome neg = run_trial(make_violating_trial(), options.horizon);
      rows.push_back(neg);
      out << "negative control (kappa*rho(A*) = 1.2): " << (neg.passed ? "passed (unexpected)" : "failed as expected")
          << '\n';
    }
    prepare_out(options.out);
    write_file(options.out / "decouple_suite.csv", [&](std::ostream& f) { write_suite_csv(f, rows); });
    out << passes << " of " << options.trials << " trials passed\n";
    return failed ? static_cast<int>(exit_trial_failed) : static_cast<int>(exit_ok);
  });
}

}  // namespace hetsync::app
