// Command-line front end: run, converge, bench, cluster, reorder, verify-lemma.
//
// Exit codes: 0 success, 1 runtime failure (blow-up, I/O), 2 bad arguments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbm/batching.hpp"
#include "rbm/config.hpp"
#include "rbm/harness.hpp"
#include "rbm/io.hpp"
#include "rbm/models.hpp"

#ifndef RBM_GIT_DESCRIBE
#define RBM_GIT_DESCRIBE "unknown"
#endif

namespace {

using namespace rbm;

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Plan flags shared by run, converge, cluster and reorder. Each flag maps
/// to the config key of the same name with '-' replaced by '_'.
struct PlanFlags {
  std::string config;
  std::map<std::string, std::string> values;
  bool gram = false;

  void attach(CLI::App* app, const std::string& fixed_model = {}) {
    app->add_option("--config", config, "key = value file; flags override its entries");
    const SimPlan d = plan_defaults(fixed_model.empty() ? "test1d" : fixed_model);
    const ConfigMap dc = plan_to_config(d);
    auto shown = [&](const std::string& key) {
      const auto it = dc.find(key);
      return it == dc.end() ? std::string("none") : it->second;
    };
    struct Spec {
      const char* flag;
      const char* key;
      const char* help;
    };
    const std::vector<Spec> specs{
        {"--model", "model", "test1d | hamiltonian1d | dyson | thomson | wealth | opinion | cluster"},
        {"--scheme", "scheme", "rbm1 | rbm_r | rbm_r_prime | full"},
        {"--intra", "intra", "euler | euler_maruyama | split_exact | verlet"},
        {"--sampler", "sampler", "uniform | edges (cluster model, rbm_r)"},
        {"--tau", "tau", "time step"},
        {"--t-end", "t_end", "time horizon"},
        {"--n", "n", "particle count (cluster: 0 = graph size)"},
        {"--p", "p", "batch size"},
        {"--seed", "seed", "master seed (falls back to $RBM_SEED)"},
        {"--threads", "threads", "worker threads for RBM-1 batches; 1 replays bit-exactly"},
        {"--snapshots", "snapshots", "comma-separated histogram times"},
        {"--records", "records", "approximate number of metric records"},
        {"--out", "out", "output directory"},
        {"--beta", "beta", "confinement (test1d, dyson) or threshold (cluster)"},
        {"--sigma", "sigma", "additive noise (test1d)"},
        {"--kappa", "kappa", "trading rate (wealth)"},
        {"--diffusion", "diffusion", "D (wealth)"},
        {"--alpha", "alpha", "interaction strength (opinion, cluster)"},
        {"--epsilon-exponent", "epsilon_exponent", "noise eps_N = N^-gamma (opinion)"},
        {"--matrix", "matrix", "Matrix Market adjacency (cluster)"},
        {"--labels", "labels", "ground-truth labels file (cluster)"},
        {"--sbm-sizes", "sbm_sizes", "SBM block sizes (cluster)"},
        {"--sbm-p", "sbm_p", "SBM in-block probability"},
        {"--sbm-q", "sbm_q", "SBM cross-block probability"},
    };
    for (const auto& s : specs) {
      if (!fixed_model.empty() && std::string(s.key) == "model") continue;
      std::string help = std::string(s.help) + " [default " + shown(s.key) + (fixed_model.empty() ? ", per model]" : "]");
      app->add_option_function<std::string>(
          s.flag, [this, key = std::string(s.key)](const std::string& v) { values[key] = v; }, help);
    }
    app->add_flag("--gram", gram, "use |B B^T| + I of the matrix (cluster)");
  }

  SimPlan resolve(const std::string& fixed_model = {}) const {
    ConfigMap merged;
    if (!config.empty()) merged = read_config_file(config);
    for (const auto& [k, v] : values) merged[k] = v;
    if (gram) merged["gram"] = "true";
    if (!fixed_model.empty()) {
      if (merged.count("model") && merged["model"] != fixed_model)
        throw ArgumentError("this subcommand only runs the " + fixed_model + " model");
      merged["model"] = fixed_model;
    }
    if (!merged.count("seed"))
      if (const char* env = std::getenv("RBM_SEED")) merged["seed"] = env;
    SimPlan plan = plan_defaults(merged.count("model") ? merged["model"] : "test1d");
    apply_config(plan, merged);
    validate_plan(plan);
    return plan;
  }
};

std::vector<Index> parse_index_list(const std::string& key, const std::string& text) {
  std::vector<Index> out;
  for (double v : parse_double_list(key, text)) {
    if (v != std::floor(v) || v < 1) throw ArgumentError(key + ": expected positive integers");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

int cmd_run(const PlanFlags& flags) {
  const SimPlan plan = flags.resolve();
  const ExperimentResult r = run_experiment(plan, RBM_GIT_DESCRIBE);
  if (!r.ok) {
    std::cerr << "run aborted: " << r.message << '\n';
    return 1;
  }
  std::cout << "steps " << r.steps << '\n';
  for (const auto& [k, v] : r.last.metrics) std::cout << k << ' ' << format_csv_double(v) << '\n';
  std::cout << "wrote " << r.files.size() << " files under " << plan.out << '\n';
  return 0;
}

int cmd_converge(const PlanFlags& flags, const std::string& ns_text, const std::string& taus_text, double ref_tau,
                 const std::string& csv) {
  const SimPlan plan = flags.resolve();
  const auto ns = ns_text.empty() ? std::vector<Index>{plan.n} : parse_index_list("ns", ns_text);
  const auto taus = parse_double_list("taus", taus_text);
  std::filesystem::create_directories(plan.out);
  const std::string path = csv.empty() ? (std::filesystem::path(plan.out) / "convergence.csv").string() : csv;
  const auto reports = convergence_study(plan, ns, taus, ref_tau, path);
  for (const auto& rep : reports) {
    std::cout << "n " << rep.n;
    for (std::size_t k = 0; k < rep.taus.size(); ++k)
      std::cout << "  tau " << format_double(rep.taus[k]) << " error " << format_csv_double(rep.errors[k]);
    std::cout << "  slope " << (rep.fitted_slope ? format_double(*rep.fitted_slope) : std::string("absent")) << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& model, const std::string& ns_text, double tau, const std::string& schemes_text,
              std::uint64_t seed, double min_seconds, const std::string& out) {
  std::vector<SchemeKind> schemes;
  std::string item;
  std::istringstream in(schemes_text);
  while (std::getline(in, item, ',')) schemes.push_back(parse_scheme(item));
  std::filesystem::create_directories(out);
  const auto rows = timing_benchmark(model, parse_index_list("ns", ns_text), tau, schemes, seed, min_seconds, 2,
                                     (std::filesystem::path(out) / "timing.csv").string());
  for (const auto& r : rows)
    std::cout << r.scheme << " n " << r.n << " seconds/step " << format_csv_double(r.seconds_per_step) << '\n';
  return 0;
}

int cmd_cluster(const PlanFlags& flags, bool reorder) {
  SimPlan plan = flags.resolve("cluster");
  if (reorder) {
    if (plan.matrix.empty()) throw ArgumentError("reorder needs --matrix");
    if (!flags.values.count("sampler")) plan.sampler = BatchSampler::edges;
  }
  const PreparedRun run = prepare_run(plan);
  const ClusterOutcome out = run_clustering(run);
  std::filesystem::create_directories(plan.out);
  const std::filesystem::path dir(plan.out);
  write_labels((dir / "labels.txt").string(), out.labels);
  {
    std::ofstream perm(dir / "permutation.txt");
    for (Index i : out.permutation) perm << i << '\n';
  }
  const int clusters = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  std::cout << "clusters " << clusters << '\n';
  if (out.ari) std::cout << "ari " << format_csv_double(*out.ari) << '\n';
  std::cout << "bandwidth_before " << format_double(out.bandwidth_before) << '\n';
  std::cout << "bandwidth_after " << format_double(out.bandwidth_after) << '\n';
  return 0;
}

int cmd_verify_lemma(Index n, Index p, int trials, std::uint64_t seed) {
  const Model m = model_test1d(1.0);
  RngStream rng = derive_stream(seed, 100);
  double worst_mean = 0;
  double worst_var = 0;
  for (int t = 0; t < trials; ++t) {
    CoordMatrix<double> x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = rng.uniform(-3.0, 3.0);
    const Ensemble e(x);
    for (Index i = 0; i < n; ++i) {
      const auto mom = chi_moments_bruteforce(e, m, p, i);
      const double expected =
          (1.0 / static_cast<double>(p - 1) - 1.0 / static_cast<double>(n - 1)) * lambda_i(e, m, i);
      worst_mean = std::max(worst_mean, mom.mean.cwiseAbs().maxCoeff());
      const double scale = std::max(std::abs(expected), 1e-300);
      worst_var = std::max(worst_var, expected == 0 ? std::abs(mom.variance) : std::abs(mom.variance - expected) / scale);
    }
  }
  const bool pass = worst_mean <= 1e-13 && worst_var <= 1e-12;
  std::cout << (pass ? "PASS" : "FAIL") << " n=" << n << " p=" << p << " divisions="
            << enumerate_divisions(n, p).size() << " max|mean|=" << format_csv_double(worst_mean)
            << " max rel var error=" << format_csv_double(worst_var) << '\n';
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random batch simulation of interacting particle systems"};
  app.require_subcommand(1);

  PlanFlags run_flags;
  auto* run = app.add_subcommand("run", "simulate one plan and write metrics, histograms and metadata");
  run_flags.attach(run);

  PlanFlags conv_flags;
  std::string ns_text;
  std::string taus_text = "0.0625,0.03125,0.015625,0.0078125";
  double ref_tau = 1.0 / 4096;
  std::string conv_csv;
  auto* converge = app.add_subcommand("converge", "coupled error against the fully coupled reference");
  conv_flags.attach(converge);
  converge->add_option("--ns", ns_text, "comma-separated particle counts [default: --n]");
  converge->add_option("--taus", taus_text, "comma-separated step sizes")->capture_default_str();
  converge->add_option("--reference-tau", ref_tau, "reference step")->capture_default_str();
  converge->add_option("--csv", conv_csv, "output CSV [default <out>/convergence.csv]");

  std::string bench_model = "test1d";
  std::string bench_ns = "10000,20000";
  double bench_tau = 1e-3;
  std::string bench_schemes = "rbm1,full";
  std::uint64_t bench_seed = 42;
  double bench_seconds = 0.2;
  std::string bench_out = "bench";
  auto* bench = app.add_subcommand("bench", "wall-clock time per step");
  bench->add_option("--model", bench_model, "model")->capture_default_str();
  bench->add_option("--ns", bench_ns, "comma-separated particle counts")->capture_default_str();
  bench->add_option("--tau", bench_tau, "time step")->capture_default_str();
  bench->add_option("--schemes", bench_schemes, "comma-separated schemes")->capture_default_str();
  bench->add_option("--seed", bench_seed, "master seed")->capture_default_str();
  bench->add_option("--min-seconds", bench_seconds, "minimum timed seconds per cell")->capture_default_str();
  bench->add_option("--out", bench_out, "output directory for timing.csv")->capture_default_str();

  PlanFlags cluster_flags;
  auto* cluster = app.add_subcommand("cluster", "cluster a graph and write labels.txt");
  cluster_flags.attach(cluster, "cluster");

  PlanFlags reorder_flags;
  auto* reorder = app.add_subcommand("reorder", "reorder a sparse matrix by terminal cluster positions");
  reorder_flags.attach(reorder, "cluster");

  Index lemma_n = 6;
  Index lemma_p = 2;
  int lemma_trials = 50;
  std::uint64_t lemma_seed = 1;
  auto* lemma = app.add_subcommand("verify-lemma", "exact batch-force mean and variance identities by enumeration");
  lemma->add_option("--n", lemma_n, "particle count (<= 10)")->capture_default_str();
  lemma->add_option("--p", lemma_p, "batch size dividing n")->capture_default_str();
  lemma->add_option("--trials", lemma_trials, "random position sets")->capture_default_str();
  lemma->add_option("--seed", lemma_seed, "master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*converge) return cmd_converge(conv_flags, ns_text, taus_text, ref_tau, conv_csv);
    if (*bench) return cmd_bench(bench_model, bench_ns, bench_tau, bench_schemes, bench_seed, bench_seconds, bench_out);
    if (*cluster) return cmd_cluster(cluster_flags, false);
    if (*reorder) return cmd_cluster(reorder_flags, true);
    if (*lemma) return cmd_verify_lemma(lemma_n, lemma_p, lemma_trials, lemma_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
