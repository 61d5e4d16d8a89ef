#pragma once

// Brute-force reference implementations. Pseudo-observations are recomputed
// for every window by direct ECDF counting and every copula value by a full
// scan, O(n^3 d) for the statistic. Used to gate the fast paths.

#include "segcop/multiplier_bootstrap.hpp"
#include "segcop/segmented_ranks.hpp"
#include "segcop/seq_process.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace segcop::reference {

/// Pseudo-observations of window `w` (row-major, w.size() x d) by direct
/// evaluation of the sub-window ECDFs.
inline std::vector<double> ecdf_pseudo_observations(const SampleMatrix& x, const BreakSpec& spec, Window w) {
  const std::size_t d = x.d();
  std::vector<double> out(w.size() * d);
  for (const Window sub : spec.sub_windows(w)) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto col = x.column(j, sub);
      for (std::size_t i = sub.begin; i < sub.end; ++i) {
        out[(i - w.begin) * d + j] = segment_ecdf(col, x(i, j));
      }
    }
  }
  return out;
}

/// #{i in w : pseudo-observation_i <= u componentwise}.
inline std::size_t copula_count(const SampleMatrix& x, const BreakSpec& spec, Window w,
                                std::span<const double> u) {
  if (w.empty()) return 0;
  const auto ps = ecdf_pseudo_observations(x, spec, w);
  const std::size_t d = x.d();
  std::size_t count = 0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    bool below = true;
    for (std::size_t j = 0; j < d; ++j) below = below && ps[r * d + j] <= u[j];
    if (below) ++count;
  }
  return count;
}

inline double eval_copula(const SampleMatrix& x, const BreakSpec& spec, Window w, std::span<const double> u) {
  if (w.empty()) return 0.0;
  return static_cast<double>(copula_count(x, spec, w, u)) / static_cast<double>(w.size());
}

/// Triple loop over splits k, evaluation points i, and window rows.
inline StatisticValue cvm_statistic(const SampleMatrix& x, const BreakSpec& spec) {
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  const auto points = ecdf_pseudo_observations(x, spec, {0, n});
  std::vector<double> profile(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const auto left = ecdf_pseudo_observations(x, spec, {0, k});
    const auto right = ecdf_pseudo_observations(x, spec, {k, n});
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t cl = 0;
      for (std::size_t r = 0; r < k; ++r) {
        bool below = true;
        for (std::size_t j = 0; j < d; ++j) below = below && left[r * d + j] <= points[i * d + j];
        cl += below ? 1 : 0;
      }
      std::size_t cr = 0;
      for (std::size_t r = 0; r < n - k; ++r) {
        bool below = true;
        for (std::size_t j = 0; j < d; ++j) below = below && right[r * d + j] <= points[i * d + j];
        cr += below ? 1 : 0;
      }
      const double dv = d_from_counts(n, k, cl, cr);
      acc += dv * dv;
    }
    profile[k - 1] = acc / static_cast<double>(n);
  }
  return detail::finish_profile(std::move(profile));
}

/// One replicate statistic max_k (1/n) sum_i D-check(k/n, U_i)^2 by pointwise
/// evaluation of the resampled process.
inline double bootstrap_replicate(const SampleMatrix& x, const BreakSpec& spec, std::span<const double> xi,
                                  CorrectionScale scale = CorrectionScale::Unit) {
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  const auto points = ecdf_pseudo_observations(x, spec, {0, n});
  double best = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = resampled_d_multi(x, spec, xi, k, std::span<const double>(points.data() + i * d, d), scale);
      acc += v * v;
    }
    best = std::max(best, acc / static_cast<double>(n));
  }
  return best;
}

}  // namespace segcop::reference
