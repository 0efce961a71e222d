#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rbm/diagnostics.hpp"
#include "rbm/models.hpp"
#include "rbm/registry.hpp"

using namespace rbm;

namespace {

using Point = PointT<double>;

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) p(k++) = x;
  return p;
}

std::shared_ptr<const AdjacencyMatrix<double>> tiny_graph() {
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(4, 4);
  a.insert(0, 1) = 1;
  a.insert(1, 0) = 1;
  return std::make_shared<const AdjacencyMatrix<double>>(a);
}

}  // namespace

TEST_CASE("kernels are odd where pair forces must balance") {
  RngStream rng = derive_stream(1, 0);
  const std::vector<Model> models{model_test1d<double>(1), model_dyson<double>(1, 100), model_thomson<double>(),
                                  model_wealth<double>(1, 1), model_opinion<double>(40, 100)};
  for (const Model& m : models) {
    for (int k = 0; k < 200; ++k) {
      Point z(m.dim);
      for (Index c = 0; c < m.dim; ++c) z(c) = rng.uniform(-3, 3);
      CHECK((m.kernel(z) + m.kernel(-z)).norm() <= 1e-15 * std::max(1.0, m.kernel(z).norm()));
    }
  }
}

TEST_CASE("test model coefficients") {
  const Model m = make_model("test1d", {{"beta", 1}}, 10);
  CHECK(m.external(pt({2.5}))(0) == -2.5);
  CHECK(m.kernel(pt({1}))(0) == 0.5);
  CHECK(!m.noise.active());
  for (double z = -10; z <= 10; z += 0.01) CHECK(std::abs(m.kernel(pt({z}))(0)) <= 0.5);
  const Model flat = make_model("test1d", {{"beta", 0}}, 10);
  CHECK(flat.external(pt({7}))(0) == 0.0);
  CHECK(make_model("test1d", {{"beta", 1}, {"sigma", 0.2}}, 10).noise.sigma == 0.2);
}

TEST_CASE("Dyson model") {
  const Model m = make_model("dyson", {{"beta", 1}}, 10000);
  CHECK(static_cast<bool>(m.pair_exact));
  CHECK(m.noise.kind == NoiseKind::additive);
  CHECK(m.noise.sigma == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("Hamiltonian model freezes a coincident resting ensemble") {
  const Model m = make_model("hamiltonian1d", {}, 5);
  CHECK(m.second_order);
  Ensemble e(CoordMatrix<double>::Constant(5, 1, 0.3), CoordMatrix<double>::Zero(5, 1));
  StepScheme s;
  s.intra = IntraKind::verlet;
  RngStream rng = derive_stream(0, 0);
  for (int k = 0; k < 5; ++k) e = rbm1_step(std::move(e), m, s, 0.1, rng);
  CHECK((e.positions.array() == 0.3).all());
}

TEST_CASE("wealth equilibrium has a cubic tail when kappa = D") {
  const double ratio = density_inverse_gamma(2e4, 1, 1, 1) / density_inverse_gamma(1e4, 1, 1, 1);
  CHECK(ratio == doctest::Approx(0.125).epsilon(1e-4));
  CHECK(density_inverse_gamma(0, 1, 1, 1) == 0.0);
  CHECK(density_inverse_gamma(-1, 1, 1, 1) == 0.0);
}

TEST_CASE("opinion pair updates") {
  const Model m = make_model("opinion", {{"alpha", 40}}, 100);
  Point a = pt({0}), b = pt({1.5});
  m.pair_exact(0, 1, a, b, 1e-4);
  CHECK(a(0) == 0.0);
  CHECK(b(0) == 1.5);
  a = pt({0});
  b = pt({0.5});
  m.pair_exact(0, 1, a, b, 1e-4);
  CHECK((b(0) - a(0)) / 0.5 == doctest::Approx(std::exp(-2 * 40 * 1e-4)).epsilon(1e-14));
  CHECK((b(0) - a(0)) / 0.5 == doctest::Approx(0.992032).epsilon(1e-6));
  const Model noisy = make_model("opinion", {{"alpha", 40}, {"epsilon_exponent", 0.5}}, 100);
  CHECK(noisy.noise.kind == NoiseKind::additive_scaled);
  CHECK(noisy.noise.sigma == doctest::Approx(0.1));
}

TEST_CASE("cluster model") {
  const Model m = make_model("cluster", {{"alpha", 40}, {"beta", 0.5}}, 4, tiny_graph());
  Point a = pt({0}), b = pt({1});
  m.pair_exact(0, 1, a, b, 1e-3);
  CHECK(b(0) - a(0) == doctest::Approx(0.960789).epsilon(1e-6));
  CHECK(m.force(0, 1, pt({0}), pt({1}))(0) == doctest::Approx(40 * 0.5));
  CHECK(m.force(0, 2, pt({0}), pt({1}))(0) == doctest::Approx(-40 * 0.5));
  CHECK_THROWS_AS(make_model("cluster", {{"alpha", 40}, {"beta", 0.5}}, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_model("cluster", {{"alpha", 40}, {"beta", 1.5}}, 4, tiny_graph()), std::invalid_argument);
}

TEST_CASE("model construction errors") {
  CHECK_THROWS_AS(make_model("unknown", {}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("test1d", {{"beta", 1}, {"gamma", 2}}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("test1d", {}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("test1d", {{"beta", 1}, {"sigma", -1}}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("wealth", {{"kappa", 1}, {"diffusion", 0}}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("wealth", {{"kappa", 1}}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("dyson", {{"beta", -1}}, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_model("thomson", {{"beta", 1}}, 10), std::invalid_argument);
}

TEST_CASE("stochastic block model") {
  SUBCASE("deterministic limit is block diagonal") {
    RngStream rng = derive_stream(1, 0);
    auto [a, labels] = sbm_generate<double>({3, 2}, 1.0, 0.0, rng);
    CHECK(labels == Labels{0, 0, 0, 1, 1});
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        CHECK(a(i, j) == (i != j && labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0));
  }
  SUBCASE("small shape") {
    RngStream rng = derive_stream(2, 0);
    auto [a, labels] = sbm_generate<double>({2, 2}, 0.7, 0.3, rng);
    CHECK(a.size() == 4);
    CHECK(a.symmetric());
    for (Index i = 0; i < 4; ++i) CHECK(a(i, i) == 0.0);
  }
  SUBCASE("edge densities") {
    RngStream rng = derive_stream(3, 0);
    auto [a, labels] = sbm_generate<double>({200, 400, 600}, 0.7, 0.3, rng);
    double in = 0, in_pairs = 0, out = 0, out_pairs = 0;
    for (Index i = 0; i < 1200; ++i)
      for (Index j = i + 1; j < 1200; ++j) {
        const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
        (same ? in : out) += a(i, j);
        (same ? in_pairs : out_pairs) += 1;
      }
    CHECK(std::abs(in / in_pairs - 0.7) < 0.01);
    CHECK(std::abs(out / out_pairs - 0.3) < 0.01);
  }
  SUBCASE("errors") {
    RngStream rng = derive_stream(4, 0);
    CHECK_THROWS_AS(sbm_generate<double>({}, 0.7, 0.3, rng), std::invalid_argument);
    CHECK_THROWS_AS(sbm_generate<double>({2, 2}, 0.3, 0.7, rng), std::invalid_argument);
  }
}

TEST_CASE("Metropolis-Hastings sampling") {
  RngStream rng = derive_stream(5, 0);
  const auto u = sample_density_mh([](double) { return 1.0; }, 0, 1, 100'000, rng);
  double mean = 0;
  for (double x : u) mean += x;
  CHECK(std::abs(mean / 1e5 - 0.5) < 0.01);

  const auto s = sample_density_mh(semicircle_radius2_pdf, -2, 2, 100'000, rng);
  double m1 = 0, m2 = 0;
  for (double x : s) {
    CHECK(std::abs(x) <= 2);
    m1 += x;
    m2 += x * x;
  }
  m1 /= 1e5;
  CHECK(std::abs(m2 / 1e5 - m1 * m1 - 1) < 0.02);
  CHECK_THROWS_AS(sample_density_mh([](double) { return 0.0; }, 0, 1, 10, rng), std::invalid_argument);
}

TEST_CASE("initial ensembles") {
  const Ensemble t = initial_ensemble("thomson", 50, 1);
  for (Index i = 0; i < 50; ++i) CHECK(std::abs(t.positions.row(i).norm() - 1) < 1e-15);
  CHECK((initial_ensemble("wealth", 100, 1).positions.array() >= 0).all());
  const Ensemble o = initial_ensemble("opinion", 100, 1);
  CHECK(o.positions.minCoeff() >= 0);
  CHECK(o.positions.maxCoeff() <= 10);
  const Ensemble c = initial_ensemble("cluster", 100, 1);
  CHECK(c.positions.maxCoeff() <= 50);
  const Ensemble h = initial_ensemble("hamiltonian1d", 100, 1);
  REQUIRE(h.velocities.has_value());
  CHECK(h.positions.cwiseAbs().maxCoeff() <= 2);
  const Ensemble d1 = initial_ensemble("dyson", 100, 7);
  const Ensemble d2 = initial_ensemble("dyson", 100, 7);
  CHECK(d1.positions == d2.positions);
  CHECK(d1.positions != initial_ensemble("dyson", 100, 8).positions);
  CHECK_THROWS_AS(initial_ensemble("nope", 10, 1), std::invalid_argument);
}
