#include "rbm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "rbm/io.hpp"
#include "rbm/models.hpp"
#include "rbm/registry.hpp"
#include "rbm/simulation.hpp"

namespace rbm {

namespace fs = std::filesystem;

namespace {

Index grid_index(double t, double tau, const char* what) {
  const double k = std::round(t / tau);
  if (std::abs(k * tau - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw std::invalid_argument(std::string(what) + " " + format_double(t) + " is not on the step grid");
  return static_cast<Index>(k);
}

/// States after each of `steps` (ascending) steps.
std::vector<Ensemble> states_at(const Simulation<double>& sim, Ensemble e, const std::vector<Index>& steps) {
  std::vector<Ensemble> out;
  Index done = 0;
  for (Index target : steps) {
    e = sim.run(std::move(e), target - done, {}, done);
    done = target;
    out.push_back(e);
  }
  return out;
}

StepScheme reference_scheme(const PreparedRun& run) {
  StepScheme s;
  s.kind = SchemeKind::full;
  s.intra = run.model.second_order ? IntraKind::verlet : IntraKind::euler;
  s.batch_size = run.plan.p;
  return s;
}

std::vector<Ensemble> reference_states(const PreparedRun& run, double reference_tau, const std::vector<double>& times) {
  std::vector<Index> steps;
  for (double t : times) steps.push_back(grid_index(t, reference_tau, "time"));
  const Simulation<double> sim(run.model, reference_scheme(run), reference_tau, run.plan.seed, 1);
  return states_at(sim, run.initial, steps);
}

std::vector<Ensemble> scheme_states(const PreparedRun& run, double tau, double reference_tau,
                                    const std::vector<double>& times) {
  const double ratio = tau / reference_tau;
  const auto r = static_cast<Index>(std::llround(ratio));
  if (r < 1 || std::abs(static_cast<double>(r) * reference_tau - tau) > 1e-9 * tau)
    throw std::invalid_argument("misaligned grids: tau " + format_double(tau) + " is not a multiple of the reference step " +
                                format_double(reference_tau));
  std::vector<Index> steps;
  for (double t : times) steps.push_back(grid_index(t, tau, "time"));
  StepScheme s = run.plan.step_scheme();
  const Simulation<double> sim(run.model, s, tau, run.plan.seed, r);
  return states_at(sim, run.initial, steps);
}

std::vector<double> sorted_times(std::vector<double> times) {
  if (times.empty()) throw std::invalid_argument("no comparison times given");
  std::sort(times.begin(), times.end());
  for (double t : times)
    if (!(t >= 0)) throw std::invalid_argument("comparison times must be >= 0");
  return times;
}

std::vector<double> first_coordinate(const Ensemble& e) {
  std::vector<double> x(static_cast<std::size_t>(e.size()));
  for (Index i = 0; i < e.size(); ++i) x[static_cast<std::size_t>(i)] = e.positions(i, 0);
  return x;
}

/// Reference laws known in closed form, evaluated cheaply at every record.
struct ReferenceLaw {
  std::vector<double> unit_quantiles;  // dyson: semicircle of radius sqrt(2)
  std::vector<double> quantiles;       // wealth: inverse gamma
  double kappa = 0, diffusion = 0, eta = 0;
};

ReferenceLaw reference_law(const PreparedRun& run) {
  ReferenceLaw law;
  const auto n = static_cast<std::size_t>(run.plan.n);
  if (run.plan.model == "dyson") {
    law.unit_quantiles = midpoint_quantiles(n, [](double u) { return dyson_quantile(u, INFINITY); });
  } else if (run.plan.model == "wealth") {
    law.kappa = run.plan.params.at("kappa");
    law.diffusion = run.plan.params.at("diffusion");
    law.eta = run.initial.positions.mean();
    law.quantiles = midpoint_quantiles(
        n, [&](double u) { return inverse_gamma_quantile(u, law.kappa, law.diffusion, law.eta); });
  }
  return law;
}

DiagnosticRecord measure(const PreparedRun& run, const ReferenceLaw& law, const Ensemble& e) {
  DiagnosticRecord r;
  r.time = e.time;
  const std::string& model = run.plan.model;
  if (model == "thomson") {
    r.set("energy", sphere_energy(e));
    r.set("max_norm_error", (e.positions.rowwise().norm().array() - 1).abs().maxCoeff());
    const auto counts = neighbor_counts(e);
    const auto good = std::count_if(counts.begin(), counts.end(), [](int c) { return c == 5 || c == 6; });
    r.set("frac_5_6", static_cast<double>(good) / static_cast<double>(counts.size()));
    return r;
  }
  const auto x = first_coordinate(e);
  const double mean = e.positions.col(0).mean();
  const double var = (e.positions.col(0).array() - mean).square().mean();
  r.set("mean", mean);
  r.set("std", std::sqrt(var));
  r.set("min", e.positions.col(0).minCoeff());
  r.set("max", e.positions.col(0).maxCoeff());
  if (model == "hamiltonian1d" && e.velocities) {
    r.set("momentum", e.velocities->mean());
    r.set("kinetic", e.velocities->squaredNorm() / (2.0 * static_cast<double>(e.size())));
  } else if (model == "dyson") {
    std::vector<double> q = law.unit_quantiles;
    const double scale = std::sqrt(dyson_sigma(e.time));
    for (double& v : q) v *= scale;
    r.set("w1", wasserstein_to_quantiles(x, q, 1));
  } else if (model == "wealth") {
    r.set("w1", wasserstein_to_quantiles(x, law.quantiles, 1));
  } else if (model == "cluster") {
    const Labels labels = labels_from_positions(x);
    r.set("clusters", static_cast<double>(*std::max_element(labels.begin(), labels.end()) + 1));
    if (run.truth) r.set("ari", adjusted_rand_index(labels, *run.truth));
  }
  return r;
}

void write_histogram(const std::string& path, const PreparedRun& run, const ReferenceLaw& law, const Ensemble& e) {
  const auto x = first_coordinate(e);
  const Histogram h = make_histogram(x);
  const bool has_reference = run.plan.model == "dyson" || run.plan.model == "wealth";
  std::vector<std::string> header{"left", "right", "density"};
  if (has_reference) header.push_back("reference");
  CsvWriter csv(path, header);
  for (std::size_t k = 0; k < h.bins(); ++k) {
    std::vector<double> row{h.edges[k], h.edges[k + 1], h.counts[k]};
    const double c = (h.edges[k] + h.edges[k + 1]) / 2;
    if (run.plan.model == "dyson") row.push_back(density_dyson(c, e.time));
    if (run.plan.model == "wealth") row.push_back(density_inverse_gamma(c, law.kappa, law.diffusion, law.eta));
    csv.row(row);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text << '\n';
}

}  // namespace

PreparedRun prepare_run(const SimPlan& plan) {
  validate_plan(plan);
  PreparedRun run;
  run.plan = plan;
  std::shared_ptr<const AdjacencyMatrix<double>> adjacency;
  if (plan.model == "cluster") {
    if (!plan.matrix.empty()) {
      SparseMatrix a = read_matrix_market(plan.matrix);
      if (plan.gram) a = gram_plus_identity(a);
      adjacency = std::make_shared<const AdjacencyMatrix<double>>(std::move(a));
    } else {
      if (plan.sbm_sizes.empty()) throw std::invalid_argument("cluster: give a matrix file or SBM block sizes");
      RngStream graph = derive_stream(plan.seed, streams::kGraph);
      auto [a, labels] = sbm_generate<double>(plan.sbm_sizes, plan.sbm_p, plan.sbm_q, graph);
      adjacency = std::make_shared<const AdjacencyMatrix<double>>(std::move(a));
      run.truth = std::move(labels);
    }
    if (!plan.labels_file.empty()) run.truth = read_labels(plan.labels_file);
    if (run.plan.n == 0)
      run.plan.n = adjacency->size();
    else if (run.plan.n != adjacency->size())
      throw std::invalid_argument("cluster: n differs from the graph size");
    if (run.truth && static_cast<Index>(run.truth->size()) != run.plan.n)
      throw std::invalid_argument("cluster: label count differs from the graph size");
    validate_plan(run.plan);
  }
  run.model = make_model(run.plan.model, run.plan.params, run.plan.n, adjacency);
  validate_scheme(run.plan.step_scheme(), run.model, run.plan.n);
  run.initial = initial_ensemble(run.plan.model, run.plan.n, run.plan.seed);
  return run;
}

std::vector<double> coupled_errors(const SimPlan& plan, double reference_tau, const std::vector<double>& times) {
  if (!(reference_tau > 0)) throw std::invalid_argument("reference tau must be > 0");
  const auto ts = sorted_times(times);
  const PreparedRun run = prepare_run(plan);
  const auto approx = scheme_states(run, plan.tau, reference_tau, ts);
  const auto exact = reference_states(run, reference_tau, ts);
  std::vector<double> errors;
  for (std::size_t k = 0; k < ts.size(); ++k) errors.push_back(trajectory_error(approx[k], exact[k]));
  return errors;
}

double run_coupled(const SimPlan& plan, double reference_tau) {
  return coupled_errors(plan, reference_tau, {plan.t_end}).front();
}

std::optional<double> fit_slope(const std::vector<double>& taus, const std::vector<double>& errors) {
  if (taus.size() != errors.size()) throw std::invalid_argument("fit_slope: length mismatch");
  if (std::set<double>(taus.begin(), taus.end()).size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0) || !(errors[k] > 0)) return std::nullopt;
    const double x = std::log2(taus[k]);
    const double y = std::log2(errors[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!std::isfinite(slope)) return std::nullopt;
  return slope;
}

std::vector<ConvergenceReport> convergence_study(const SimPlan& base, const std::vector<Index>& ns,
                                                 std::vector<double> taus, double reference_tau,
                                                 const std::string& csv_path) {
  if (ns.empty() || taus.empty()) throw std::invalid_argument("convergence_study: empty grid");
  if (!(reference_tau > 0)) throw std::invalid_argument("reference tau must be > 0");
  std::sort(taus.begin(), taus.end(), std::greater<>());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  for (double t : taus)
    if (!(t > 0 && t <= base.t_end)) throw std::invalid_argument("step sizes must lie in (0, t_end]");

  std::optional<CsvWriter> csv;
  if (!csv_path.empty()) csv.emplace(csv_path, std::vector<std::string>{"n", "tau", "error"});
  std::vector<ConvergenceReport> reports;
  for (Index n : ns) {
    SimPlan plan = base;
    plan.n = n;
    const PreparedRun run = prepare_run(plan);
    const Ensemble reference = reference_states(run, reference_tau, {plan.t_end}).front();
    ConvergenceReport rep;
    rep.model = plan.model;
    rep.n = n;
    rep.p = plan.p;
    rep.t_end = plan.t_end;
    rep.reference_tau = reference_tau;
    for (double tau : taus) {
      const Ensemble approx = scheme_states(run, tau, reference_tau, {plan.t_end}).front();
      rep.taus.push_back(tau);
      rep.errors.push_back(trajectory_error(approx, reference));
      if (csv) csv->row({static_cast<double>(n), tau, rep.errors.back()});
    }
    rep.fitted_slope = fit_slope(rep.taus, rep.errors);
    reports.push_back(std::move(rep));
  }
  return reports;
}

ExperimentResult run_experiment(const SimPlan& plan, const std::string& git_describe) {
  ExperimentResult result;
  const fs::path dir(plan.out);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "plan.cfg", std::ios::trunc);
    if (!cfg) throw std::runtime_error("cannot write '" + (dir / "plan.cfg").string() + "'");
    write_config(cfg, plan_to_config(plan),
                 {"git " + (git_describe.empty() ? std::string("unknown") : git_describe),
                  "seed " + std::to_string(plan.seed)});
  }
  result.files.push_back((dir / "plan.cfg").string());
  write_text(dir / "status.txt", "running");

  const PreparedRun run = prepare_run(plan);
  const ReferenceLaw law = reference_law(run);
  const double tau = run.plan.tau;
  const Index steps = step_count(run.plan.t_end, tau);
  const Index every = std::max<Index>(1, steps / run.plan.records);

  // Snapshot step -> label used in the file name.
  std::map<Index, std::string> snaps;
  for (double t : run.plan.snapshots)
    if (t <= run.plan.t_end * (1 + 1e-12)) snaps.emplace(std::min(steps, static_cast<Index>(std::llround(t / tau))), format_double(t));
  if (snaps.empty()) snaps.emplace(steps, format_double(static_cast<double>(steps) * tau));

  std::vector<std::string> header{"time"};
  const DiagnosticRecord first = measure(run, law, run.initial);
  for (const auto& [k, v] : first.metrics) header.push_back(k);
  CsvWriter metrics((dir / "metrics.csv").string(), header);
  result.files.push_back((dir / "metrics.csv").string());
  auto emit = [&](const DiagnosticRecord& r) {
    std::vector<double> row{r.time};
    for (const auto& [k, v] : r.metrics) row.push_back(v);
    metrics.row(row);
    result.last = r;
  };

  const bool trace = run.plan.model == "cluster";
  std::optional<CsvWriter> trace_csv;
  if (trace) {
    std::vector<std::string> cols{"time"};
    for (Index i = 0; i < run.plan.n; ++i) cols.push_back("x" + std::to_string(i));
    trace_csv.emplace((dir / "trace.csv").string(), cols);
    result.files.push_back((dir / "trace.csv").string());
  }
  auto emit_trace = [&](const Ensemble& e) {
    if (!trace_csv) return;
    std::vector<double> row{e.time};
    for (Index i = 0; i < e.size(); ++i) row.push_back(e.positions(i, 0));
    trace_csv->row(row);
  };
  auto snapshot = [&](Index step, const Ensemble& e) {
    const auto it = snaps.find(step);
    if (it == snaps.end()) return;
    const fs::path path = dir / ("hist_t" + it->second + ".csv");
    write_histogram(path.string(), run, law, e);
    result.files.push_back(path.string());
  };

  emit(first);
  emit_trace(run.initial);
  snapshot(0, run.initial);

  const Simulation<double> sim(run.model, run.plan.step_scheme(), tau, run.plan.seed, 1);
  Ensemble terminal = run.initial;
  try {
    terminal = sim.run(run.initial, steps, [&](Index m, const Ensemble& e) {
      const Index done = m + 1;
      result.steps = done;
      if (done % every == 0 || done == steps) {
        emit(measure(run, law, e));
        emit_trace(e);
      }
      snapshot(done, e);
    });
  } catch (const NonFiniteError& err) {
    result.ok = false;
    result.message = err.what();
    write_text(dir / "status.txt", "failed: " + result.message);
    return result;
  }

  if (run.plan.model == "cluster") {
    const Labels labels = labels_from_positions(first_coordinate(terminal));
    write_labels((dir / "labels.txt").string(), labels);
    result.files.push_back((dir / "labels.txt").string());
  }
  write_text(dir / "status.txt", "ok");
  result.files.push_back((dir / "status.txt").string());
  return result;
}

std::vector<TimingRow> timing_benchmark(const std::string& model, const std::vector<Index>& ns, double tau,
                                        const std::vector<SchemeKind>& schemes, std::uint64_t seed,
                                        double min_seconds, Index min_steps, const std::string& csv_path) {
  using Clock = std::chrono::steady_clock;
  std::optional<CsvWriter> csv;
  if (!csv_path.empty()) csv.emplace(csv_path, std::vector<std::string>{"scheme", "n", "steps", "seconds_per_step"});
  std::vector<TimingRow> rows;
  for (Index n : ns) {
    for (SchemeKind kind : schemes) {
      SimPlan plan = plan_defaults(model);
      plan.n = n;
      plan.tau = tau;
      plan.seed = seed;
      plan.scheme = kind;
      if (kind == SchemeKind::full && plan.intra == IntraKind::split_exact) plan.intra = IntraKind::euler;
      const PreparedRun run = prepare_run(plan);
      const Simulation<double> sim(run.model, plan.step_scheme(), tau, seed, 1);
      Ensemble e = sim.run(run.initial, 1);
      Index done = 1;
      // Median of per-step wall times: robust against scheduler hiccups that
      // would inflate a plain average on a shared machine.
      std::vector<double> per_step;
      double elapsed = 0;
      while (static_cast<Index>(per_step.size()) < min_steps || elapsed < min_seconds) {
        const auto start = Clock::now();
        e = sim.run(std::move(e), 1, {}, done);
        per_step.push_back(std::chrono::duration<double>(Clock::now() - start).count());
        elapsed += per_step.back();
        ++done;
      }
      const Index timed = static_cast<Index>(per_step.size());
      const auto mid = per_step.begin() + static_cast<std::ptrdiff_t>(per_step.size() / 2);
      std::nth_element(per_step.begin(), mid, per_step.end());
      TimingRow row{to_string(kind), n, timed, *mid};
      if (csv) csv->row(std::vector<std::string>{row.scheme, std::to_string(n), std::to_string(timed),
                                                 format_csv_double(row.seconds_per_step)});
      rows.push_back(row);
    }
  }
  return rows;
}

ClusterOutcome run_clustering(const PreparedRun& run) {
  if (run.plan.model != "cluster") throw std::invalid_argument("run_clustering needs the cluster model");
  const Simulation<double> sim(run.model, run.plan.step_scheme(), run.plan.tau, run.plan.seed, 1);
  ClusterOutcome out;
  out.terminal = sim.run(run.initial, step_count(run.plan.t_end, run.plan.tau));
  const auto x = first_coordinate(out.terminal);
  out.labels = labels_from_positions(x);
  if (run.truth) out.ari = adjusted_rand_index(out.labels, *run.truth);
  out.permutation = reorder_permutation(x);
  std::vector<Index> identity(out.permutation.size());
  std::iota(identity.begin(), identity.end(), Index{0});
  out.bandwidth_before = weighted_bandwidth(run.model.adjacency->matrix(), std::span<const Index>(identity));
  out.bandwidth_after = weighted_bandwidth(run.model.adjacency->matrix(), std::span<const Index>(out.permutation));
  return out;
}

}  // namespace rbm
