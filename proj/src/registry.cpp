#include "rbm/registry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbm/models.hpp"
#include "rbm/rng.hpp"

namespace rbm {

namespace {

double need(const ParamMap& params, const std::string& model, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw std::invalid_argument(model + ": missing parameter '" + key + "'");
  if (!std::isfinite(it->second)) throw std::invalid_argument(model + ": parameter '" + key + "' is not finite");
  return it->second;
}

std::optional<double> maybe(const ParamMap& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

}  // namespace

Model make_model(const std::string& name, const ParamMap& params, Index n,
                 std::shared_ptr<const AdjacencyMatrix<double>> adjacency) {
  const auto& allowed = model_parameter_keys(name);
  for (const auto& [key, value] : params)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument(name + ": unknown parameter '" + key + "'");

  if (name == "test1d") return model_test1d(need(params, name, "beta"), maybe(params, "sigma").value_or(0.0));
  if (name == "hamiltonian1d") return model_hamiltonian1d();
  if (name == "dyson") return model_dyson(need(params, name, "beta"), n);
  if (name == "thomson") return model_thomson();
  if (name == "wealth") return model_wealth(need(params, name, "kappa"), need(params, name, "diffusion"));
  if (name == "opinion") return model_opinion(need(params, name, "alpha"), n, maybe(params, "epsilon_exponent"));
  // cluster
  if (!adjacency) throw std::invalid_argument("cluster: an adjacency matrix is required");
  if (adjacency->size() != n) throw std::invalid_argument("cluster: adjacency size differs from particle count");
  return model_cluster(std::move(adjacency), need(params, name, "alpha"), need(params, name, "beta"));
}

Ensemble initial_ensemble(const std::string& model, Index n, std::uint64_t seed) {
  model_parameter_keys(model);
  if (n < 1) throw std::invalid_argument("particle count must be >= 1");
  RngStream rng = derive_stream(seed, streams::kInitial);
  CoordMatrix<double> x;
  if (model == "test1d" || model == "hamiltonian1d" || model == "dyson") {
    const auto samples = sample_density_mh(semicircle_radius2_pdf, -2.0, 2.0, static_cast<std::size_t>(n), rng);
    x = Eigen::Map<const Eigen::VectorXd>(samples.data(), n);
  } else if (model == "thomson") {
    x.resize(n, 3);
    for (Index i = 0; i < n; ++i) {
      do {
        for (Index k = 0; k < 3; ++k) x(i, k) = rng.normal();
      } while (x.row(i).norm() == 0);
      x.row(i).normalize();
    }
  } else if (model == "wealth") {
    x.resize(n, 1);
    for (Index i = 0; i < n; ++i) {
      do x(i, 0) = std::abs(rng.normal());
      while (x(i, 0) == 0);
    }
  } else {
    const double hi = model == "opinion" ? 10.0 : 50.0;
    x.resize(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = rng.uniform(0.0, hi);
  }
  Ensemble e(std::move(x));
  if (model == "hamiltonian1d") {
    RngStream vel = rng.split(1);
    CoordMatrix<double> v(n, 1);
    for (Index i = 0; i < n; ++i) v(i, 0) = vel.normal();
    e.velocities = std::move(v);
  }
  validate(e);
  return e;
}

}  // namespace rbm
