#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "rbm/diagnostics.hpp"
#include "rbm/integrators.hpp"
#include "rbm/models.hpp"

using namespace rbm;

namespace {

/// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4 : 2);
  return s * h / 3;
}

Ensemble points(std::vector<std::array<double, 3>> rows) {
  CoordMatrix<double> x(static_cast<Index>(rows.size()), 3);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index k = 0; k < 3; ++k) x(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  return Ensemble(x);
}

Ensemble icosahedron() {
  const double g = (1 + std::sqrt(5.0)) / 2;
  std::vector<std::array<double, 3>> v;
  for (double a : {-1.0, 1.0})
    for (double b : {-g, g}) {
      v.push_back({0, a, b});
      v.push_back({a, b, 0});
      v.push_back({b, 0, a});
    }
  return sphere_project(points(v));
}

Ensemble octahedron() {
  return points({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}});
}

Ensemble tetrahedron() {
  return sphere_project(points({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}));
}

}  // namespace

TEST_CASE("trajectory error") {
  const Ensemble a = tetrahedron();
  CHECK(trajectory_error(a, a) == 0.0);
  Ensemble b = a;
  b.positions.array() += 0.25;
  CHECK(trajectory_error(a, b) == doctest::Approx(0.25 * std::sqrt(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(trajectory_error(a, icosahedron()), std::invalid_argument);
}

TEST_CASE("one-dimensional Wasserstein distances") {
  const std::vector<double> a{0.3, -1.2, 2.0, 0.7};
  std::vector<double> shifted = a;
  for (double& x : shifted) x += 0.4;
  for (int order : {1, 2}) {
    CHECK(wasserstein_1d(a, a, order) == 0.0);
    CHECK(wasserstein_1d(a, shifted, order) == doctest::Approx(0.4).epsilon(1e-14));
  }
  const std::vector<double> two{0, 1}, three{0, 0.5, 1};
  CHECK(wasserstein_1d(two, three, 1) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(wasserstein_1d(three, two, 1) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(wasserstein_1d(two, three, 2) == doctest::Approx(std::sqrt(1.0 / 12)).epsilon(1e-14));
  CHECK_THROWS_AS(wasserstein_1d(a, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(wasserstein_1d(a, a, 3), std::invalid_argument);
}

TEST_CASE("Wasserstein metric properties on random samples") {
  RngStream rng = derive_stream(8, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + rng.below(20)), y(1 + rng.below(20)), z(1 + rng.below(20));
    for (auto* v : {&x, &y, &z})
      for (double& s : *v) s = rng.normal();
    for (int order : {1, 2}) {
      const double xy = wasserstein_1d(x, y, order), yx = wasserstein_1d(y, x, order);
      CHECK(xy >= 0);
      CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
      CHECK(wasserstein_1d(x, z, order) <= xy + wasserstein_1d(y, z, order) + 1e-12);
    }
  }
}

TEST_CASE("independent semicircle samples are close") {
  RngStream r1 = derive_stream(1, 0), r2 = derive_stream(2, 0);
  const auto a = sample_density_mh(semicircle_radius2_pdf, -2, 2, 100'000, r1);
  const auto b = sample_density_mh(semicircle_radius2_pdf, -2, 2, 100'000, r2);
  CHECK(wasserstein_1d(a, b, 1) < 0.01);
  CHECK(wasserstein_to_law(a, [](double u) { return dyson_quantile(u, 0); }, 1) < 0.01);
}

TEST_CASE("Dyson reference law") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(density_dyson(0, inf) == doctest::Approx(std::sqrt(2.0) / std::numbers::pi).epsilon(1e-14));
  CHECK(density_dyson(0, inf) == doctest::Approx(0.450158).epsilon(1e-6));
  for (double t : {0.0, 0.5, 5.0}) {
    const double r = std::sqrt(2 * dyson_sigma(t));
    CHECK(density_dyson(r, t) == 0.0);
    CHECK(density_dyson(1.01 * r, t) == 0.0);
    CHECK(simpson([t](double x) { return density_dyson(x, t); }, -r, r) == doctest::Approx(1).epsilon(1e-5));
    CHECK(std::abs(simpson([t](double x) { return x * density_dyson(x, t); }, -r, r)) < 1e-12);
    CHECK(simpson([t](double x) { return x * x * density_dyson(x, t); }, -r, r) ==
          doctest::Approx(dyson_sigma(t) / 2).epsilon(1e-5));
    for (double u : {0.01, 0.3, 0.5, 0.77, 0.999}) {
      const double q = dyson_quantile(u, t);
      CHECK(semicircle_cdf(q, r) == doctest::Approx(u).epsilon(1e-10));
    }
  }
}

TEST_CASE("inverse-Gamma wealth law") {
  CHECK(regularized_gamma_p(1, 2.0) == doctest::Approx(1 - std::exp(-2.0)).epsilon(1e-13));
  CHECK(regularized_gamma_p(0.5, 0.7) == doctest::Approx(std::erf(std::sqrt(0.7))).epsilon(1e-13));
  CHECK(regularized_gamma_p(3, 50.0) == doctest::Approx(1.0).epsilon(1e-13));
  const double eta = std::sqrt(2 / std::numbers::pi);
  for (auto [kappa, d] : std::vector<std::pair<double, double>>{{1, 1}, {2, 0.5}}) {
    // Substituting y = 1/s keeps the heavy tail inside a finite range.
    auto in_s = [&](double power) {
      return [=](double s) {
        s = std::max(s, 1e-12);
        return density_inverse_gamma(1 / s, kappa, d, eta) * std::pow(1 / s, power) / (s * s);
      };
    };
    CHECK(simpson(in_s(0), 0, 60, 200000) == doctest::Approx(1).epsilon(1e-6));
    CHECK(simpson(in_s(1), 0, 60, 200000) == doctest::Approx(eta).epsilon(1e-6));
    for (double u : {0.05, 0.5, 0.95}) {
      const double q = inverse_gamma_quantile(u, kappa, d, eta);
      CHECK(inverse_gamma_cdf(q, kappa, d, eta) == doctest::Approx(u).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(density_inverse_gamma(1, -1, 1, 1), std::invalid_argument);
}

TEST_CASE("histograms") {
  RngStream rng = derive_stream(3, 0);
  std::vector<double> x(10'000);
  for (double& v : x) v = rng.normal();
  const Histogram h = make_histogram(x);
  CHECK(h.bins() == 60);
  CHECK(h.normalized);
  double mass = 0;
  for (std::size_t k = 0; k < h.bins(); ++k) {
    CHECK(h.edges[k] < h.edges[k + 1]);
    mass += h.counts[k] * h.width(k);
  }
  CHECK(std::abs(mass - 1) < 1e-12);
  const Histogram raw = make_histogram(x, 10, -1, 1, false);
  CHECK(!raw.normalized);
  CHECK(std::accumulate(raw.counts.begin(), raw.counts.end(), 0.0) ==
        static_cast<double>(std::count_if(x.begin(), x.end(), [](double v) { return v >= -1 && v <= 1; })));
  CHECK(histogram_l1(h, h) == 0.0);
  CHECK_THROWS_AS(histogram_l1(h, raw), std::invalid_argument);
  CHECK_THROWS_AS(make_histogram(x, 0, 0, 1), std::invalid_argument);
  const std::vector<double> same(5, 2.0);
  CHECK(make_histogram(same).edges.front() < 2.0);
}

TEST_CASE("sphere energy") {
  CHECK(sphere_energy(points({{0, 0, 1}, {0, 0, -1}})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sphere_energy(tetrahedron()) == doctest::Approx(6 / std::sqrt(8.0 / 3) / 3).epsilon(1e-14));
  CHECK(sphere_energy(tetrahedron()) == doctest::Approx(1.224745).epsilon(1e-6));
  Ensemble rotated = icosahedron();
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  rotated.positions = rotated.positions * r.transpose();
  CHECK(sphere_energy(rotated) == doctest::Approx(sphere_energy(icosahedron())).epsilon(1e-13));
  CHECK(std::isinf(sphere_energy(points({{0, 0, 1}, {0, 0, 1}}))));
}

TEST_CASE("neighbour counts") {
  for (int c : neighbor_counts(icosahedron())) CHECK(c == 5);
  // Antipodes sit at 2 < 1.5 * sqrt(2), so they are counted.
  for (int c : neighbor_counts(octahedron())) CHECK(c == 5);
  CHECK(neighbor_counts(points({{0, 0, 1}, {0, 1, 0}})) == std::vector<int>{1, 1});
  RngStream rng = derive_stream(4, 0);
  CoordMatrix<double> x(40, 3);
  for (Index i = 0; i < 40; ++i)
    for (Index k = 0; k < 3; ++k) x(i, k) = rng.normal();
  const Ensemble e = sphere_project(Ensemble(x));
  const auto counts = neighbor_counts(e);
  // Symmetry of the relation: the count total is even and matches the pair tally.
  const double threshold = [&] {
    std::vector<double> nn;
    for (Index i = 0; i < 40; ++i) {
      double best = 1e9;
      for (Index j = 0; j < 40; ++j)
        if (j != i) best = std::min(best, (e.positions.row(i) - e.positions.row(j)).norm());
      nn.push_back(best);
    }
    std::sort(nn.begin(), nn.end());
    return 1.5 * (nn[19] + nn[20]) / 2;
  }();
  int pairs = 0;
  for (Index i = 0; i < 40; ++i)
    for (Index j = i + 1; j < 40; ++j) pairs += (e.positions.row(i) - e.positions.row(j)).norm() <= threshold;
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 2 * pairs);
  CHECK_THROWS_AS(neighbor_counts(points({{0, 0, 1}})), std::invalid_argument);
}

TEST_CASE("adjusted Rand index") {
  CHECK(adjusted_rand_index({0, 0, 1, 1, 2}, {0, 0, 1, 1, 2}) == 1.0);
  CHECK(adjusted_rand_index({1, 1, 0, 0}, {0, 0, 1, 1}) == 1.0);
  CHECK(std::abs(adjusted_rand_index({0, 0, 0, 0, 0, 0}, {0, 0, 0, 1, 1, 1})) < 1e-15);
  // Every cell holds one item: index 0, expected 2/3, maximum 2.
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), std::invalid_argument);
  RngStream rng = derive_stream(6, 0);
  for (int k = 0; k < 100; ++k) {
    Labels a(30), b(30);
    for (auto& v : a) v = static_cast<int>(rng.below(3));
    for (auto& v : b) v = static_cast<int>(rng.below(4));
    const double ari = adjusted_rand_index(a, b);
    CHECK(ari <= 1.0);
    CHECK(ari >= -1.0);
    CHECK(ari == doctest::Approx(adjusted_rand_index(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("gap-rule labels") {
  const std::vector<double> x{10.0, 0.0, 0.1, 10.2, 0.2, 20.0, 10.1, 20.1, 20.3, 0.3};
  const Labels l = labels_from_positions(x);
  CHECK(l == Labels{1, 0, 0, 1, 0, 2, 1, 2, 2, 0});
  CHECK(labels_from_positions(std::vector<double>{1.0}) == Labels{0});
}

TEST_CASE("reordering") {
  const std::vector<double> sorted{0, 1, 2, 3};
  CHECK(reorder_permutation(sorted) == std::vector<Index>{0, 1, 2, 3});
  const std::vector<double> reversed{3, 2, 1, 0};
  CHECK(reorder_permutation(reversed) == std::vector<Index>{3, 2, 1, 0});

  // Banded matrix seen through a random relabelling: ordering by the
  // hidden coordinate restores a narrow band.
  const Index n = 200;
  RngStream rng = derive_stream(7, 0);
  std::vector<Index> hidden(static_cast<std::size_t>(n));
  std::iota(hidden.begin(), hidden.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) std::swap(hidden[static_cast<std::size_t>(i)], hidden[rng.below(static_cast<std::uint64_t>(i + 1))]);
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const auto d = std::abs(hidden[static_cast<std::size_t>(i)] - hidden[static_cast<std::size_t>(j)]);
      if (d <= 3) a.insert(i, j) = 4.0 - static_cast<double>(d);
    }
  std::vector<Index> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), Index{0});
  std::vector<double> coordinate(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) coordinate[static_cast<std::size_t>(i)] = static_cast<double>(hidden[static_cast<std::size_t>(i)]);
  const double before = weighted_bandwidth(a, std::span<const Index>(identity));
  const auto perm = reorder_permutation(coordinate);
  const double after = weighted_bandwidth(a, std::span<const Index>(perm));
  CHECK(after <= 3);
  CHECK(before > 20);
}

TEST_CASE("diagnostic records keep insertion order") {
  DiagnosticRecord r;
  r.set("b", 1);
  r.set("a", 2);
  r.set("b", 3);
  REQUIRE(r.metrics.size() == 2);
  CHECK(r.metrics[0].first == "b");
  CHECK(r.metrics[0].second == 3);
}
