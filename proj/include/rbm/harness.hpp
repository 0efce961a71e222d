#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbm/config.hpp"
#include "rbm/diagnostics.hpp"
#include "rbm/model.hpp"

namespace rbm {

/// A plan resolved into concrete objects: model, initial data and, for
/// clustering, the graph and any ground-truth labels.
struct PreparedRun {
  SimPlan plan;
  Model model;
  Ensemble initial;
  std::optional<Labels> truth;
};

/// Resolves the plan. Cluster graphs come from `plan.matrix` (absolute
/// values, optionally B B^T + I) or from a stochastic block model drawn
/// from the seed's graph stream; `plan.n == 0` adopts the graph size.
PreparedRun prepare_run(const SimPlan& plan);

/// Trajectory errors at each of `times` between the plan's scheme at
/// plan.tau and the fully coupled reference at `reference_tau`. Both runs
/// share initial data and Brownian paths (increments drawn on the
/// reference grid and summed over coarse steps). Times must lie on the
/// plan.tau grid and plan.tau must be a multiple of reference_tau.
std::vector<double> coupled_errors(const SimPlan& plan, double reference_tau, const std::vector<double>& times);

/// Coupled error at plan.t_end.
double run_coupled(const SimPlan& plan, double reference_tau);

struct ConvergenceReport {
  std::string model;
  Index n = 0;
  Index p = 2;
  double t_end = 0;
  double reference_tau = 0;
  std::vector<double> taus;  // strictly decreasing
  std::vector<double> errors;
  /// Least-squares slope of log2(error) against log2(tau); absent with
  /// fewer than two step sizes.
  std::optional<double> fitted_slope;
};

std::optional<double> fit_slope(const std::vector<double>& taus, const std::vector<double>& errors);

/// One report per particle count. The reference run is shared by all step
/// sizes of the same N. Writes a CSV (n, tau, error) when `csv_path` is set.
std::vector<ConvergenceReport> convergence_study(const SimPlan& base, const std::vector<Index>& ns,
                                                 std::vector<double> taus, double reference_tau,
                                                 const std::string& csv_path = {});

struct ExperimentResult {
  bool ok = true;
  std::string message;
  Index steps = 0;
  DiagnosticRecord last;
  std::vector<std::string> files;
};

/// Runs the plan and writes into plan.out:
///   plan.cfg      the plan itself (re-runnable), git revision and seed as comments;
///   metrics.csv   one DiagnosticRecord per line, time first;
///   hist_t<t>.csv histogram of the first coordinate at each snapshot time
///                 within the horizon (the terminal state if there is none);
///   labels.txt, trace.csv   cluster labels and position trace (cluster model);
///   status.txt    "ok", or "failed: <reason>" when the run aborted.
/// A blow-up is reported through `ok` and `message`, not thrown.
ExperimentResult run_experiment(const SimPlan& plan, const std::string& git_describe = {});

struct TimingRow {
  std::string scheme;
  Index n = 0;
  Index steps = 0;
  double seconds_per_step = 0;
};

/// Median wall-clock seconds per physical step for every (N, scheme),
/// timing at least `min_steps` steps and `min_seconds` seconds after one
/// warm-up step.
std::vector<TimingRow> timing_benchmark(const std::string& model, const std::vector<Index>& ns, double tau,
                                        const std::vector<SchemeKind>& schemes, std::uint64_t seed,
                                        double min_seconds = 0.2, Index min_steps = 2,
                                        const std::string& csv_path = {});

/// Labels, permutation and bandwidths produced by clustering a graph.
struct ClusterOutcome {
  Ensemble terminal;
  Labels labels;
  std::optional<double> ari;
  std::vector<Index> permutation;
  double bandwidth_before = 0;
  double bandwidth_after = 0;
};

/// Runs the cluster model of a prepared run to plan.t_end and reads out
/// labels (gap rule) and the sorting permutation.
ClusterOutcome run_clustering(const PreparedRun& run);

}  // namespace rbm
