#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rbm/ensemble.hpp"
#include "rbm/model.hpp"
#include "rbm/rng.hpp"

namespace rbm {

enum class BatchMode { division, replacement };

/// Batches for one step, stored flat: batch k is
/// members[offsets[k], offsets[k+1]). Indices inside a batch are ascending.
class BatchSchedule {
 public:
  BatchSchedule() = default;
  BatchSchedule(BatchMode mode, Index n, std::vector<Index> members, std::vector<Index> offsets)
      : mode_(mode), n_(n), members_(std::move(members)), offsets_(std::move(offsets)) {
    std::vector<int> seen(static_cast<std::size_t>(n_), 0);
    for (Index i : members_) ++seen[static_cast<std::size_t>(i)];
    covering_ = std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

  BatchMode mode() const noexcept { return mode_; }
  Index population() const noexcept { return n_; }
  /// True iff every index 0..n-1 appears exactly once.
  bool covering() const noexcept { return covering_; }
  std::size_t count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  std::span<const Index> batch(std::size_t k) const {
    return {members_.data() + offsets_[k], static_cast<std::size_t>(offsets_[k + 1] - offsets_[k])};
  }

  /// First batch containing i, or -1.
  long long find(Index i) const {
    for (std::size_t k = 0; k < count(); ++k) {
      auto b = batch(k);
      if (std::binary_search(b.begin(), b.end(), i)) return static_cast<long long>(k);
    }
    return -1;
  }

 private:
  BatchMode mode_ = BatchMode::division;
  Index n_ = 0;
  std::vector<Index> members_;
  std::vector<Index> offsets_;
  bool covering_ = false;
};

namespace detail {

inline void check_batch_size(Index n, Index p) {
  if (p < 2) throw std::invalid_argument("batch size p must be >= 2");
  if (p > n) throw std::invalid_argument("batch size p must not exceed the particle count");
}

}  // namespace detail

/// Uniform random partition of {0..n-1}: a Durstenfeld shuffle cut into
/// consecutive groups of p. When p does not divide n the last batch holds
/// the n mod p leftovers; a single leftover joins the last full batch.
inline BatchSchedule random_division(Index n, Index p, RngStream& rng) {
  detail::check_batch_size(n, p);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  std::vector<Index> offsets;
  offsets.reserve(static_cast<std::size_t>(n / p + 2));
  for (Index start = 0; start + p <= n; start += p) offsets.push_back(start);
  if (n % p == 1) {
    offsets.push_back(n);  // leftover absorbed by the last full batch
  } else {
    if (n % p != 0) offsets.push_back(n - n % p);
    offsets.push_back(n);
  }
  for (std::size_t k = 0; k + 1 < offsets.size(); ++k)
    std::sort(perm.begin() + offsets[k], perm.begin() + offsets[k + 1]);
  return BatchSchedule(BatchMode::division, n, std::move(perm), std::move(offsets));
}

/// Uniform p-subset of {0..n-1} (Floyd's algorithm), ascending.
inline void random_subset(Index n, Index p, RngStream& rng, std::vector<Index>& out) {
  const std::size_t start = out.size();
  for (Index j = n - p; j < n; ++j) {
    const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
    const bool taken = std::find(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(), t) != out.end();
    out.push_back(taken ? j : t);
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

/// Default number of with-replacement batches per sweep, ceil(n/p).
inline Index sweep_batch_count(Index n, Index p) { return (n + p - 1) / p; }

/// `count` independent uniform p-subsets; batches may overlap.
inline BatchSchedule random_batches_with_replacement(Index n, Index p, Index count, RngStream& rng) {
  detail::check_batch_size(n, p);
  if (count < 1) throw std::invalid_argument("batch count must be >= 1");
  std::vector<Index> members;
  members.reserve(static_cast<std::size_t>(count * p));
  std::vector<Index> offsets{0};
  for (Index k = 0; k < count; ++k) {
    random_subset(n, p, rng, members);
    offsets.push_back(static_cast<Index>(members.size()));
  }
  return BatchSchedule(BatchMode::replacement, n, std::move(members), std::move(offsets));
}

inline BatchSchedule random_batches_with_replacement(Index n, Index p, RngStream& rng) {
  return random_batches_with_replacement(n, p, sweep_batch_count(n, p), rng);
}

/// Every partition of {0..n-1} into n/p batches of size p, each exactly once
/// (M = n! / ((p!)^(n/p) (n/p)!) of them). Exact-enumeration oracle, so n is
/// capped at 10.
inline std::vector<BatchSchedule> enumerate_divisions(Index n, Index p) {
  if (n > 10) throw std::invalid_argument("enumerate_divisions: n must be <= 10");
  detail::check_batch_size(n, p);
  if (n % p != 0) throw std::invalid_argument("enumerate_divisions: p must divide n");

  std::vector<BatchSchedule> out;
  std::vector<Index> current;
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  // Each batch is opened by the smallest unused index, then completed with
  // p-1 larger unused indices chosen in increasing order.
  auto recurse = [&](auto&& self) -> void {
    auto first = std::find(used.begin(), used.end(), false);
    if (first == used.end()) {
      std::vector<Index> offsets;
      for (Index k = 0; k <= n; k += p) offsets.push_back(k);
      out.emplace_back(BatchMode::division, n, current, std::move(offsets));
      return;
    }
    const auto lead = static_cast<Index>(first - used.begin());
    used[static_cast<std::size_t>(lead)] = true;
    current.push_back(lead);
    auto fill = [&](auto&& fill_self, Index from, Index remaining) -> void {
      if (remaining == 0) {
        self(self);
        return;
      }
      for (Index c = from; c < n; ++c) {
        if (used[static_cast<std::size_t>(c)]) continue;
        used[static_cast<std::size_t>(c)] = true;
        current.push_back(c);
        fill_self(fill_self, c + 1, remaining - 1);
        current.pop_back();
        used[static_cast<std::size_t>(c)] = false;
      }
    };
    fill(fill, lead + 1, p - 1);
    current.pop_back();
    used[static_cast<std::size_t>(lead)] = false;
  };
  recurse(recurse);
  return out;
}

/// Interaction force on particle i from the members of one batch, with the
/// batch prefactor 1/(|batch|-1).
template <class Scalar>
PointT<Scalar> batch_force_on(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& model,
                              std::span<const Index> batch, Index i) {
  PointT<Scalar> f = PointT<Scalar>::Zero(e.dim());
  const PointT<Scalar> xi = e.positions.row(i);
  for (Index j : batch)
    if (j != i) f += model.force(i, j, xi, e.positions.row(j));
  return f / static_cast<Scalar>(batch.size() - 1);
}

/// Fully coupled interaction force on particle i, prefactor 1/(N-1).
template <class Scalar>
PointT<Scalar> full_force_on(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& model, Index i) {
  PointT<Scalar> f = PointT<Scalar>::Zero(e.dim());
  const PointT<Scalar> xi = e.positions.row(i);
  for (Index j = 0; j < e.size(); ++j)
    if (j != i) f += model.force(i, j, xi, e.positions.row(j));
  return f / static_cast<Scalar>(e.size() - 1);
}

/// Batch force minus full force on particle i.
template <class Scalar>
PointT<Scalar> chi_statistic(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& model,
                             const BatchSchedule& schedule, Index i) {
  if (i < 0 || i >= e.size()) throw std::out_of_range("chi_statistic: particle index out of range");
  const long long k = schedule.find(i);
  if (k < 0) throw std::invalid_argument("chi_statistic: particle is not in any batch");
  return batch_force_on(e, model, schedule.batch(static_cast<std::size_t>(k)), i) - full_force_on(e, model, i);
}

/// Variance factor Lambda_i = 1/(N-2) sum_{j != i} |K_ij - mean_k K_ik|^2.
template <class Scalar>
Scalar lambda_i(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& model, Index i) {
  const Index n = e.size();
  if (n < 3) throw std::invalid_argument("lambda_i requires at least 3 particles");
  if (i < 0 || i >= n) throw std::out_of_range("lambda_i: particle index out of range");
  const PointT<Scalar> mean = full_force_on(e, model, i);
  const PointT<Scalar> xi = e.positions.row(i);
  Scalar sum = 0;
  for (Index j = 0; j < n; ++j)
    if (j != i) sum += (model.force(i, j, xi, e.positions.row(j)) - mean).squaredNorm();
  return sum / static_cast<Scalar>(n - 2);
}

template <class Scalar>
struct ChiMoments {
  PointT<Scalar> mean;
  Scalar variance;
};

/// Exact mean and variance of chi_i over all equally likely divisions.
template <class Scalar>
ChiMoments<Scalar> chi_moments_bruteforce(const ParticleEnsemble<Scalar>& e, const InteractionModel<Scalar>& model,
                                          Index p, Index i) {
  const auto divisions = enumerate_divisions(e.size(), p);
  std::vector<PointT<Scalar>> chis;
  chis.reserve(divisions.size());
  PointT<Scalar> mean = PointT<Scalar>::Zero(e.dim());
  for (const auto& d : divisions) {
    chis.push_back(chi_statistic(e, model, d, i));
    mean += chis.back();
  }
  mean /= static_cast<Scalar>(chis.size());
  Scalar var = 0;
  for (const auto& c : chis) var += (c - mean).squaredNorm();
  return {mean, var / static_cast<Scalar>(chis.size())};
}

}  // namespace rbm
