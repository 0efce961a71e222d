#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rbm/adjacency.hpp"
#include "rbm/config.hpp"
#include "rbm/model.hpp"

namespace rbm {

/// Builds one of the named models from its coefficients. Every key the
/// model needs must be present (test1d `sigma` and opinion
/// `epsilon_exponent` are optional); keys it does not know are rejected.
/// `n` sizes the N-dependent noise amplitudes; `adjacency` is required for
/// the cluster model and ignored otherwise.
Model make_model(const std::string& name, const ParamMap& params, Index n,
                 std::shared_ptr<const AdjacencyMatrix<double>> adjacency = nullptr);

/// Initial data used by every experiment:
///   test1d, hamiltonian1d, dyson: semicircle of radius 2 (Metropolis-Hastings),
///                                 hamiltonian1d velocities N(0, 1);
///   thomson: uniform on the sphere;  wealth: |N(0, 1)|;
///   opinion: uniform on [0, 10];     cluster: uniform on [0, 50].
Ensemble initial_ensemble(const std::string& model, Index n, std::uint64_t seed);

}  // namespace rbm
