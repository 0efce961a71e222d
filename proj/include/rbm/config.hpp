#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rbm/integrators.hpp"

namespace rbm {

/// Model coefficients by name (beta, sigma, kappa, diffusion, alpha, ...).
using ParamMap = std::map<std::string, double>;

/// Raw `key = value` pairs, as read from a config file or collected from flags.
using ConfigMap = std::map<std::string, std::string>;

/// Everything needed to reproduce one run.
struct SimPlan {
  std::string model = "test1d";
  SchemeKind scheme = SchemeKind::rbm1;
  IntraKind intra = IntraKind::euler;
  BatchSampler sampler = BatchSampler::uniform;
  double tau = 0.0078125;
  double t_end = 1.0;
  /// 0 means "take it from the adjacency source" (clustering only).
  Index n = 500;
  Index p = 2;
  std::uint64_t seed = 42;
  int threads = 1;
  ParamMap params;

  std::vector<double> snapshots;
  Index records = 100;
  std::string out = "run";

  // Clustering input: a Matrix Market file, or a stochastic block model.
  std::string matrix;
  bool gram = false;
  std::string labels_file;
  std::vector<Index> sbm_sizes;
  double sbm_p = 0.7;
  double sbm_q = 0.3;

  StepScheme step_scheme() const {
    return {scheme, intra, p, false, sampler, threads};
  }
};

std::string to_string(SchemeKind k);
std::string to_string(IntraKind k);
std::string to_string(BatchSampler k);
SchemeKind parse_scheme(const std::string& s);
/// `euler_maruyama` is accepted as a synonym of `euler`.
IntraKind parse_intra(const std::string& s);
BatchSampler parse_sampler(const std::string& s);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
/// Exactly 17 significant digits, for CSV output.
std::string format_csv_double(double v);
double parse_double(const std::string& key, const std::string& text);
std::int64_t parse_int(const std::string& key, const std::string& text);
std::vector<double> parse_double_list(const std::string& key, const std::string& text);

/// Reads `key = value` lines. Blank lines and text after `#` are ignored;
/// repeated keys keep the last value.
ConfigMap parse_config(std::istream& in);
ConfigMap read_config_file(const std::string& path);
void write_config(std::ostream& out, const ConfigMap& cfg, const std::vector<std::string>& comments = {});

/// Parameter keys each model accepts.
const std::vector<std::string>& model_names();
const std::vector<std::string>& model_parameter_keys(const std::string& model);

/// Defaults that reproduce the model's reference experiment at desk scale.
SimPlan plan_defaults(const std::string& model);

/// Overlays `cfg` on `plan`. A `model` key, if present, is applied first and
/// resets the plan to that model's defaults. Unknown keys throw.
void apply_config(SimPlan& plan, const ConfigMap& cfg);
ConfigMap plan_to_config(const SimPlan& plan);

/// Throws std::invalid_argument when the plan is inconsistent.
void validate_plan(const SimPlan& plan);

}  // namespace rbm
