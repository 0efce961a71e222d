#include "rbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rbm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + text + "'");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

}  // namespace

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::rbm1: return "rbm1";
    case SchemeKind::rbm_r: return "rbm_r";
    case SchemeKind::rbm_r_prime: return "rbm_r_prime";
    case SchemeKind::full: return "full";
  }
  return "?";
}

std::string to_string(IntraKind k) {
  switch (k) {
    case IntraKind::euler: return "euler";
    case IntraKind::split_exact: return "split_exact";
    case IntraKind::verlet: return "verlet";
  }
  return "?";
}

std::string to_string(BatchSampler k) { return k == BatchSampler::edges ? "edges" : "uniform"; }

SchemeKind parse_scheme(const std::string& s) {
  if (s == "rbm1") return SchemeKind::rbm1;
  if (s == "rbm_r") return SchemeKind::rbm_r;
  if (s == "rbm_r_prime") return SchemeKind::rbm_r_prime;
  if (s == "full") return SchemeKind::full;
  throw std::invalid_argument("unknown scheme '" + s + "' (rbm1, rbm_r, rbm_r_prime, full)");
}

IntraKind parse_intra(const std::string& s) {
  if (s == "euler" || s == "euler_maruyama") return IntraKind::euler;
  if (s == "split_exact") return IntraKind::split_exact;
  if (s == "verlet") return IntraKind::verlet;
  throw std::invalid_argument("unknown intra-batch solver '" + s + "' (euler, euler_maruyama, split_exact, verlet)");
}

BatchSampler parse_sampler(const std::string& s) {
  if (s == "uniform") return BatchSampler::uniform;
  if (s == "edges") return BatchSampler::edges;
  throw std::invalid_argument("unknown batch sampler '" + s + "' (uniform, edges)");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_csv_double(double v) {
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::invalid_argument(key + ": expected a number, got '" + text + "'");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::invalid_argument(key + ": expected an integer, got '" + text + "'");
  return v;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  return out;
}

ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ConfigMap& cfg, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& [k, v] : cfg) out << k << " = " << v << '\n';
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"test1d", "hamiltonian1d", "dyson", "thomson",
                                              "wealth", "opinion",       "cluster"};
  return names;
}

const std::vector<std::string>& model_parameter_keys(const std::string& model) {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"test1d", {"beta", "sigma"}},
      {"hamiltonian1d", {}},
      {"dyson", {"beta"}},
      {"thomson", {}},
      {"wealth", {"kappa", "diffusion"}},
      {"opinion", {"alpha", "epsilon_exponent"}},
      {"cluster", {"alpha", "beta"}},
  };
  const auto it = keys.find(model);
  if (it == keys.end()) throw std::invalid_argument("unknown model '" + model + "'");
  return it->second;
}

SimPlan plan_defaults(const std::string& model) {
  model_parameter_keys(model);  // rejects unknown names
  SimPlan p;
  p.model = model;
  if (model == "test1d") {
    p.params = {{"beta", 1.0}};
  } else if (model == "hamiltonian1d") {
    p.intra = IntraKind::verlet;
  } else if (model == "dyson") {
    p.params = {{"beta", 1.0}};
    p.intra = IntraKind::split_exact;
    p.tau = 1e-3;
    p.t_end = 5;
    p.n = 10000;
    p.snapshots = {0.5, 5};
  } else if (model == "thomson") {
    p.scheme = SchemeKind::rbm_r;
    p.intra = IntraKind::split_exact;
    p.tau = 1e-4;
    p.t_end = 3;
    p.n = 60;
  } else if (model == "wealth") {
    p.params = {{"kappa", 1.0}, {"diffusion", 1.0}};
    p.intra = IntraKind::split_exact;
    p.tau = 1e-3;
    p.t_end = 3;
    p.n = 10000;
    p.snapshots = {3};
  } else if (model == "opinion") {
    p.params = {{"alpha", 40.0}};
    p.intra = IntraKind::split_exact;
    p.tau = 1e-4;
    p.t_end = 1;
    p.n = 1000;
  } else if (model == "cluster") {
    p.params = {{"alpha", 40.0}, {"beta", 0.5}};
    p.scheme = SchemeKind::rbm_r;
    p.intra = IntraKind::split_exact;
    p.tau = 1e-3;
    p.t_end = 5;
    p.n = 0;
    p.sbm_sizes = {50, 100, 150};
  }
  return p;
}

void apply_config(SimPlan& plan, const ConfigMap& cfg) {
  if (const auto it = cfg.find("model"); it != cfg.end()) plan = plan_defaults(it->second);
  const auto& param_keys = model_parameter_keys(plan.model);
  for (const auto& [key, value] : cfg) {
    if (key == "model") continue;
    if (key == "scheme") plan.scheme = parse_scheme(value);
    else if (key == "intra") plan.intra = parse_intra(value);
    else if (key == "sampler") plan.sampler = parse_sampler(value);
    else if (key == "tau") plan.tau = parse_double(key, value);
    else if (key == "t_end") plan.t_end = parse_double(key, value);
    else if (key == "n") plan.n = parse_int(key, value);
    else if (key == "p") plan.p = parse_int(key, value);
    else if (key == "seed") plan.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "threads") plan.threads = static_cast<int>(parse_int(key, value));
    else if (key == "snapshots") plan.snapshots = parse_double_list(key, value);
    else if (key == "records") plan.records = parse_int(key, value);
    else if (key == "out") plan.out = value;
    else if (key == "matrix") plan.matrix = value;
    else if (key == "gram") plan.gram = parse_bool(key, value);
    else if (key == "labels") plan.labels_file = value;
    else if (key == "sbm_sizes") {
      plan.sbm_sizes.clear();
      for (const auto& s : split_list(value)) plan.sbm_sizes.push_back(parse_int(key, s));
    } else if (key == "sbm_p") plan.sbm_p = parse_double(key, value);
    else if (key == "sbm_q") plan.sbm_q = parse_double(key, value);
    else if (std::find(param_keys.begin(), param_keys.end(), key) != param_keys.end())
      plan.params[key] = parse_double(key, value);
    else
      throw std::invalid_argument("unknown key '" + key + "' for model '" + plan.model + "'");
  }
}

ConfigMap plan_to_config(const SimPlan& plan) {
  ConfigMap cfg{
      {"model", plan.model},
      {"scheme", to_string(plan.scheme)},
      {"intra", to_string(plan.intra)},
      {"sampler", to_string(plan.sampler)},
      {"tau", format_double(plan.tau)},
      {"t_end", format_double(plan.t_end)},
      {"n", std::to_string(plan.n)},
      {"p", std::to_string(plan.p)},
      {"seed", std::to_string(plan.seed)},
      {"threads", std::to_string(plan.threads)},
      {"records", std::to_string(plan.records)},
      {"out", plan.out},
  };
  if (!plan.snapshots.empty()) cfg["snapshots"] = join(plan.snapshots);
  for (const auto& [k, v] : plan.params) cfg[k] = format_double(v);
  if (plan.model == "cluster") {
    if (!plan.matrix.empty()) {
      cfg["matrix"] = plan.matrix;
      cfg["gram"] = plan.gram ? "true" : "false";
    } else {
      cfg["sbm_sizes"] = join(plan.sbm_sizes);
      cfg["sbm_p"] = format_double(plan.sbm_p);
      cfg["sbm_q"] = format_double(plan.sbm_q);
    }
    if (!plan.labels_file.empty()) cfg["labels"] = plan.labels_file;
  }
  return cfg;
}

void validate_plan(const SimPlan& plan) {
  model_parameter_keys(plan.model);
  if (!(plan.tau > 0) || !std::isfinite(plan.tau)) throw std::invalid_argument("tau must be > 0");
  if (!(plan.t_end >= 0) || !std::isfinite(plan.t_end)) throw std::invalid_argument("t_end must be >= 0");
  if (plan.p < 2) throw std::invalid_argument("p must be >= 2");
  if (plan.n != 0 && plan.p > plan.n) throw std::invalid_argument("p must not exceed n");
  if (plan.n == 0 && plan.model != "cluster") throw std::invalid_argument("n must be >= 2");
  if (plan.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (plan.records < 1) throw std::invalid_argument("records must be >= 1");
  for (double s : plan.snapshots)
    if (!(s >= 0)) throw std::invalid_argument("snapshot times must be >= 0");
  if (plan.model != "cluster" && plan.sampler == BatchSampler::edges)
    throw std::invalid_argument("edge sampling is only available for the cluster model");
}

}  // namespace rbm
