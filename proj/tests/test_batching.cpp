#include <doctest.h>

#include <map>
#include <set>
#include <vector>

#include "rbm/batching.hpp"
#include "rbm/models.hpp"

using namespace rbm;

namespace {

std::vector<std::vector<Index>> batches_of(const BatchSchedule& s) {
  std::vector<std::vector<Index>> out;
  for (std::size_t k = 0; k < s.count(); ++k) {
    auto b = s.batch(k);
    out.emplace_back(b.begin(), b.end());
  }
  return out;
}

Ensemble line(std::vector<double> xs) { return ensemble_from_samples<double>(xs); }

}  // namespace

TEST_CASE("random division covers every index with the right batch sizes") {
  RngStream rng = derive_stream(11, 0);
  for (auto [n, p] : std::vector<std::pair<Index, Index>>{{4, 2}, {10, 3}, {11, 3}, {7, 7}, {9, 2}}) {
    const BatchSchedule s = random_division(n, p, rng);
    CHECK(s.covering());
    CHECK(s.mode() == BatchMode::division);
    std::vector<std::size_t> sizes;
    for (const auto& b : batches_of(s)) {
      sizes.push_back(b.size());
      CHECK(std::is_sorted(b.begin(), b.end()));
    }
    const auto full = static_cast<std::size_t>(n / p);
    if (n % p == 1) {
      REQUIRE(sizes.size() == full);
      CHECK(sizes.back() == static_cast<std::size_t>(p + 1));
    } else {
      CHECK(sizes.size() == full + (n % p ? 1 : 0));
      if (n % p) CHECK(sizes.back() == static_cast<std::size_t>(n % p));
    }
  }
}

TEST_CASE("p = n gives the single batch") {
  RngStream rng = derive_stream(1, 0);
  const auto b = batches_of(random_division(4, 4, rng));
  REQUIRE(b.size() == 1);
  CHECK(b[0] == std::vector<Index>{0, 1, 2, 3});
}

TEST_CASE("invalid batch sizes are rejected") {
  RngStream rng = derive_stream(1, 0);
  CHECK_THROWS_AS(random_division(4, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(random_division(4, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(random_batches_with_replacement(4, 2, 0, rng), std::invalid_argument);
}

TEST_CASE("divisions of four into pairs are uniform") {
  RngStream rng = derive_stream(2024, 0);
  std::map<std::vector<std::vector<Index>>, int> freq;
  const int draws = 300'000;
  for (int k = 0; k < draws; ++k) {
    auto b = batches_of(random_division(4, 2, rng));
    std::sort(b.begin(), b.end());
    ++freq[b];
  }
  CHECK(freq.size() == 3);
  for (const auto& [key, c] : freq) CHECK(std::abs(c / double(draws) - 1.0 / 3) < 0.01);
}

TEST_CASE("same-batch probability is (p-1)/(N-1)") {
  RngStream rng = derive_stream(5, 0);
  for (auto [n, p] : std::vector<std::pair<Index, Index>>{{6, 3}, {8, 2}}) {
    int together = 0;
    const int draws = 100'000;
    for (int k = 0; k < draws; ++k) {
      const auto s = random_division(n, p, rng);
      together += s.find(0) == s.find(n - 1);
    }
    CHECK(std::abs(together / double(draws) - double(p - 1) / double(n - 1)) < 0.01);
  }
}

TEST_CASE("with-replacement batches") {
  RngStream rng = derive_stream(9, 0);
  SUBCASE("each pair of four is equally likely") {
    std::map<std::vector<Index>, int> freq;
    const int sweeps = 100'000;
    for (int k = 0; k < sweeps; ++k)
      for (const auto& b : batches_of(random_batches_with_replacement(4, 2, 2, rng))) ++freq[b];
    CHECK(freq.size() == 6);
    for (const auto& [key, c] : freq) CHECK(std::abs(c / double(2 * sweeps) - 1.0 / 6) < 0.01);
  }
  SUBCASE("two of two is always the pair") {
    for (int k = 0; k < 10; ++k) CHECK(batches_of(random_batches_with_replacement(2, 2, 1, rng))[0] ==
                                       std::vector<Index>{0, 1});
  }
  SUBCASE("distinct inside a batch, overlap allowed across batches") {
    bool overlapped = false;
    for (int k = 0; k < 200; ++k) {
      const auto s = random_batches_with_replacement(5, 2, 3, rng);
      CHECK(s.mode() == BatchMode::replacement);
      CHECK(s.count() == 3);
      std::multiset<Index> all;
      for (const auto& b : batches_of(s)) {
        CHECK(b[0] < b[1]);
        all.insert(b.begin(), b.end());
      }
      overlapped |= std::set<Index>(all.begin(), all.end()).size() < all.size();
    }
    CHECK(overlapped);
    CHECK(random_batches_with_replacement(5, 2, rng).count() == 3);
  }
}

TEST_CASE("enumeration matches the partition count") {
  CHECK(enumerate_divisions(4, 2).size() == 3);
  CHECK(enumerate_divisions(2, 2).size() == 1);
  CHECK(enumerate_divisions(6, 2).size() == 15);
  CHECK(enumerate_divisions(6, 3).size() == 10);
  CHECK(enumerate_divisions(8, 4).size() == 35);
  CHECK(enumerate_divisions(8, 2).size() == 105);
  std::set<std::vector<std::vector<Index>>> seen;
  for (const auto& d : enumerate_divisions(6, 2)) {
    CHECK(d.covering());
    seen.insert(batches_of(d));
  }
  CHECK(seen.size() == 15);
  CHECK_THROWS_AS(enumerate_divisions(5, 2), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_divisions(12, 2), std::invalid_argument);
}

TEST_CASE("chi statistic") {
  const Model m = model_test1d<double>(1);
  const Ensemble e = line({0, 1, 2, 3});

  SUBCASE("single batch gives zero exactly") {
    RngStream rng = derive_stream(0, 0);
    const auto s = random_division(4, 4, rng);
    for (Index i = 0; i < 4; ++i) CHECK(chi_statistic(e, m, s, i)(0) == 0.0);
  }
  SUBCASE("mean over all divisions vanishes, variance follows the identity") {
    for (Index i = 0; i < 4; ++i) {
      const auto mom = chi_moments_bruteforce(e, m, 2, i);
      CHECK(std::abs(mom.mean(0)) < 1e-14);
      const double expected = (1.0 - 1.0 / 3) * lambda_i(e, m, i);
      CHECK(mom.variance == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(chi_moments_bruteforce(e, m, 4, 1).variance == 0.0);
  }
  SUBCASE("coincident particles have no fluctuation") {
    const Ensemble same = line({2, 2, 2, 2});
    RngStream rng = derive_stream(0, 0);
    CHECK(chi_statistic(same, m, random_division(4, 2, rng), 0)(0) == 0.0);
    CHECK(lambda_i(same, m, 0) == 0.0);
  }
  SUBCASE("lambda_i matches direct summation") {
    // Index 1: K(1-0)=1/2, K(1-2)=-1/2, K(1-3)=-2/5.
    const std::vector<double> k{0.5, -0.5, -0.4};
    const double mean = (k[0] + k[1] + k[2]) / 3;
    double sum = 0;
    for (double v : k) sum += (v - mean) * (v - mean);
    CHECK(lambda_i(e, m, 1) == doctest::Approx(sum / 2).epsilon(1e-15));
  }
  SUBCASE("errors") {
    RngStream rng = derive_stream(0, 0);
    const auto s = random_division(4, 2, rng);
    CHECK_THROWS_AS(chi_statistic(e, m, s, 4), std::out_of_range);
    CHECK_THROWS_AS(lambda_i(line({0, 1}), m, 0), std::invalid_argument);
  }
}

TEST_CASE("variance identity holds on random configurations") {
  const Model m = model_test1d<double>(0);
  RngStream rng = derive_stream(77, 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> xs(6);
    for (double& x : xs) x = rng.uniform(-3, 3);
    const Ensemble e = line(xs);
    for (Index p : {2, 3}) {
      const auto mom = chi_moments_bruteforce(e, m, p, 2);
      CHECK(std::abs(mom.mean(0)) < 1e-13);
      const double expected = (1.0 / double(p - 1) - 1.0 / 5) * lambda_i(e, m, 2);
      CHECK(mom.variance == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}
