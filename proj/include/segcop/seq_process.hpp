#pragma once

// Two-sided sequential empirical copula processes and the Cramér–von Mises
// statistics S_n (no marginal break) and S_{n,m} (known marginal breaks).
//
// Splits are indexed by k = floor(n s) in {0, ..., n}; the left block is rows
// [0, k) and the right block rows [k, n). All quantities are step functions of
// s, so the supremum over s is a maximum over k in {1, ..., n-1}.

#include "segcop/empirical_copula.hpp"
#include "segcop/segmented_ranks.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace segcop {

/// lambda_n(s, t) = (floor(nt) - floor(ns)) / n on the split lattice.
inline double split_weight(std::size_t n, std::size_t ks, std::size_t kt) {
  return (static_cast<double>(kt) - static_cast<double>(ks)) / static_cast<double>(n);
}

/// D value at split k from dominance counts of the two blocks. Shared by the
/// fast path and the brute-force reference so both round identically.
inline double d_from_counts(std::size_t n, std::size_t k, std::size_t count_left,
                            std::size_t count_right) {
  if (k == 0 || k >= n) return 0.0;
  const double nn = static_cast<double>(n);
  const double left = static_cast<double>(count_left) / static_cast<double>(k);
  const double right = static_cast<double>(count_right) / static_cast<double>(n - k);
  return std::sqrt(nn) * split_weight(n, 0, k) * split_weight(n, k, n) * (left - right);
}

struct StatisticValue {
  double value = 0.0;
  std::size_t argmax_k = 0;     // split index in {1, ..., n-1}
  std::vector<double> profile;  // profile[k-1] = (1/n) sum_i D(k/n, U_i)^2
};

namespace detail {

inline StatisticValue finish_profile(std::vector<double> profile) {
  StatisticValue out;
  out.profile = std::move(profile);
  for (std::size_t k = 1; k <= out.profile.size(); ++k) {
    if (k == 1 || out.profile[k - 1] > out.value) {
      out.value = out.profile[k - 1];
      out.argmax_k = k;
    }
  }
  return out;
}

inline void check_inputs(const SampleMatrix& x, const BreakSpec& spec) {
  if (spec.n() != x.n()) throw std::invalid_argument("break spec length does not match sample");
}

}  // namespace detail

/// Single-break route: C_{k:l,m} as the weighted mixture of the two plain
/// sub-window copulas, then D_{n,m}(k/n, u). Accepts at most one break.
inline double d_process(const SampleMatrix& x, const BreakSpec& spec, std::size_t k,
                        std::span<const double> u) {
  detail::check_inputs(x, spec);
  if (spec.breaks().size() > 1) throw std::invalid_argument("d_process: more than one break");
  const std::size_t n = x.n();
  if (k > n) throw std::out_of_range("d_process: split beyond sample");
  const BreakSpec plain = BreakSpec::none(n);

  auto mixture = [&](Window w) -> double {
    if (w.empty()) {
      return CopulaEval(x, plain, w)(u);
    }
    if (!spec.empty()) {
      const std::size_t m = spec.breaks().front();
      if (m > w.begin && m < w.end) {
        const double len = static_cast<double>(w.size());
        const double c1 = CopulaEval(x, plain, {w.begin, m})(u);
        const double c2 = CopulaEval(x, plain, {m, w.end})(u);
        return (static_cast<double>(m - w.begin) / len) * c1 +
               (static_cast<double>(w.end - m) / len) * c2;
      }
    }
    return CopulaEval(x, plain, w)(u);
  };
  if (k == 0 || k == n) {
    (void)mixture({0, n});  // domain check
    return 0.0;
  }
  const double nn = static_cast<double>(n);
  return std::sqrt(nn) * split_weight(n, 0, k) * split_weight(n, k, n) *
         (mixture({0, k}) - mixture({k, n}));
}

/// General route for any number of breaks: each block is split at every
/// break it contains and the sub-window copulas are mixed by length.
inline double d_process_multi(const SampleMatrix& x, const BreakSpec& spec, std::size_t k,
                              std::span<const double> u) {
  detail::check_inputs(x, spec);
  const std::size_t n = x.n();
  if (k > n) throw std::out_of_range("d_process_multi: split beyond sample");
  const CopulaEval left(x, spec, {0, k});
  const CopulaEval right(x, spec, {k, n});
  if (k == 0 || k == n) {
    (void)left(u);
    return 0.0;
  }
  return d_from_counts(n, k, left.count(u), right.count(u));
}

/// Centered one-sided process sqrt(n) lambda_n(s,t) (C_{ks+1:kt}(u) - reference).
inline double centered_process(const SampleMatrix& x, const BreakSpec& spec, std::size_t ks,
                               std::size_t kt, std::span<const double> u, double reference) {
  detail::check_inputs(x, spec);
  const std::size_t n = x.n();
  const CopulaEval ev(x, spec, {ks, kt});
  return std::sqrt(static_cast<double>(n)) * split_weight(n, ks, kt) * (ev(u) - reference);
}

/// Rank structures for every split of a series: full marginal segments are
/// indexed once, and for split k only the segment cut by k is re-ranked.
class SplitBlocks {
 public:
  SplitBlocks(const SampleMatrix& x, const BreakSpec& spec) : x_(&x), spec_(&spec) {
    for (std::size_t q = 0; q < spec.segment_count(); ++q) full_.emplace_back(x, spec.segment(q));
  }

  [[nodiscard]] std::size_t segment_count() const noexcept { return full_.size(); }
  [[nodiscard]] const RankIndex& full(std::size_t q) const { return full_[q]; }

  struct Split {
    std::size_t cut_segment;  // segment containing row k-1 (left side of the cut)
    RankIndex left_partial;   // rows [segment(cut).begin, k); full segment when k ends it
    RankIndex right_partial;  // rows [k, end of segment holding row k)
    bool left_is_full;
    bool right_is_full;
  };

  /// Blocks for split k in [1, n-1]: left = full segments [0, cut) + left
  /// partial; right = right partial + full segments after it.
  [[nodiscard]] Split split(std::size_t k) const {
    Split s;
    s.cut_segment = spec_->segment_of(k - 1);
    const Window seg = spec_->segment(s.cut_segment);
    s.left_is_full = (k == seg.end);
    if (!s.left_is_full) {
      s.left_partial = RankIndex(*x_, {seg.begin, k});
      s.right_partial = RankIndex(*x_, {k, seg.end});
      s.right_is_full = false;
    } else {
      s.right_is_full = true;
    }
    return s;
  }

 private:
  const SampleMatrix* x_;
  const BreakSpec* spec_;
  std::vector<RankIndex> full_;
};

/// S_{n,m} (or S_n for an empty spec): max over k of (1/n) sum_i D(k/n, U_i)^2,
/// integrated against the n full-window pseudo-observations.
inline StatisticValue cvm_statistic(const SampleMatrix& x, const BreakSpec& spec) {
  detail::check_inputs(x, spec);
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  const PseudoSample points = pseudo_observations(x, spec);
  const SplitBlocks blocks(x, spec);
  const std::size_t segs = blocks.segment_count();

  // Dominance counts of every full segment at every evaluation point, and
  // their running sums from the left and from the right.
  std::vector<std::size_t> full_count(segs * n);
  std::vector<std::size_t> c(d);
  for (std::size_t q = 0; q < segs; ++q) {
    const RankIndex& ri = blocks.full(q);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) c[j] = rank_threshold(points(i, j), ri.size());
      full_count[q * n + i] = ri.count_at(c);
    }
  }
  std::vector<std::size_t> before((segs + 1) * n, 0);  // segments [0, q)
  std::vector<std::size_t> after((segs + 1) * n, 0);   // segments [q, segs)
  for (std::size_t q = 0; q < segs; ++q) {
    for (std::size_t i = 0; i < n; ++i) before[(q + 1) * n + i] = before[q * n + i] + full_count[q * n + i];
  }
  for (std::size_t q = segs; q-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) after[q * n + i] = after[(q + 1) * n + i] + full_count[q * n + i];
  }

  auto partial_count = [&](const RankIndex& ri, std::size_t i) -> std::size_t {
    if (ri.size() == 0) return 0;
    for (std::size_t j = 0; j < d; ++j) c[j] = rank_threshold(points(i, j), ri.size());
    return ri.count_at(c);
  };

  std::vector<double> profile(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const auto s = blocks.split(k);
    const std::size_t q = s.cut_segment;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t cl;
      std::size_t cr;
      if (s.left_is_full) {
        cl = before[(q + 1) * n + i];
        cr = after[(q + 1) * n + i];
      } else {
        cl = before[q * n + i] + partial_count(s.left_partial, i);
        cr = partial_count(s.right_partial, i) + after[(q + 1) * n + i];
      }
      const double dv = d_from_counts(n, k, cl, cr);
      acc += dv * dv;
    }
    profile[k - 1] = acc / static_cast<double>(n);
  }
  return detail::finish_profile(std::move(profile));
}

}  // namespace segcop
