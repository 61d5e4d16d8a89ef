#pragma once

// Sub-sample empirical copulas C_{k:l}, their break-aware mixtures, and the
// divided-difference estimator of the partial derivatives.

#include "segcop/segmented_ranks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace segcop {

/// Largest c in [0, len] with c/len <= u, using the same floating-point
/// quotient a direct comparison of rank/len against u would use.
inline std::size_t rank_threshold(double u, std::size_t len) {
  const double l = static_cast<double>(len);
  auto c = static_cast<std::size_t>(std::clamp(std::floor(u * l), 0.0, l));
  while (c < len && static_cast<double>(c + 1) / l <= u) ++c;
  while (c > 0 && static_cast<double>(c) / l > u) --c;
  return c;
}

/// Rank structure for one block of rows ranked together. For each column j
/// and each c in [0, L] it stores the bitset of rows whose rank is <= c, so a
/// dominance count {r : rank_r <= c componentwise} is a d-way AND + popcount.
class RankIndex {
 public:
  RankIndex() = default;

  RankIndex(const SampleMatrix& x, Window w)
      : window_(w), len_(w.size()), d_(x.d()), words_((w.size() + 63) / 64) {
    if (len_ == 0) return;
    ranks_ = block_ranks(x, w);
    prefix_.assign(d_ * (len_ + 1) * words_, 0);
    std::vector<std::size_t> bucket_start(len_ + 2);
    std::vector<std::size_t> by_rank(len_);
    for (std::size_t j = 0; j < d_; ++j) {
      std::fill(bucket_start.begin(), bucket_start.end(), 0);
      for (std::size_t r = 0; r < len_; ++r) ++bucket_start[ranks_[j * len_ + r] + 1];
      for (std::size_t c = 1; c < bucket_start.size(); ++c) bucket_start[c] += bucket_start[c - 1];
      std::vector<std::size_t> fill = bucket_start;
      for (std::size_t r = 0; r < len_; ++r) by_rank[fill[ranks_[j * len_ + r]]++] = r;
      for (std::size_t c = 1; c <= len_; ++c) {
        std::uint64_t* cur = prefix(j, c);
        const std::uint64_t* prev = prefix(j, c - 1);
        std::copy(prev, prev + words_, cur);
        for (std::size_t t = bucket_start[c]; t < bucket_start[c + 1]; ++t) {
          const std::size_t r = by_rank[t];
          cur[r / 64] |= std::uint64_t{1} << (r % 64);
        }
      }
    }
  }

  [[nodiscard]] Window window() const noexcept { return window_; }
  [[nodiscard]] std::size_t size() const noexcept { return len_; }
  [[nodiscard]] std::size_t words() const noexcept { return words_; }
  [[nodiscard]] std::uint32_t rank(std::size_t r, std::size_t j) const { return ranks_[j * len_ + r]; }

  [[nodiscard]] const std::uint64_t* prefix(std::size_t j, std::size_t c) const {
    return prefix_.data() + (j * (len_ + 1) + c) * words_;
  }

  /// #{r : rank_r/L <= u componentwise}.
  [[nodiscard]] std::size_t count(std::span<const double> u) const {
    if (len_ == 0) return 0;
    std::vector<std::size_t> c(d_);
    for (std::size_t j = 0; j < d_; ++j) c[j] = rank_threshold(u[j], len_);
    return count_at(c);
  }

  /// Dominance count for integer rank thresholds.
  [[nodiscard]] std::size_t count_at(std::span<const std::size_t> c) const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t acc = ~std::uint64_t{0};
      for (std::size_t j = 0; j < d_; ++j) acc &= prefix(j, c[j])[w];
      total += static_cast<std::size_t>(std::popcount(acc));
    }
    return total;
  }

  /// Writes the dominance bitset for thresholds `c` into `out` (words() entries).
  void dominated(std::span<const std::size_t> c, std::span<std::uint64_t> out) const {
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t acc = ~std::uint64_t{0};
      for (std::size_t j = 0; j < d_; ++j) acc &= prefix(j, c[j])[w];
      out[w] = acc;
    }
  }

  /// #{r : rank_rj <= c}.
  [[nodiscard]] std::size_t count_coord(std::size_t j, std::size_t c) const {
    std::size_t total = 0;
    const std::uint64_t* p = prefix(j, c);
    for (std::size_t w = 0; w < words_; ++w) total += static_cast<std::size_t>(std::popcount(p[w]));
    return total;
  }

 private:
  std::uint64_t* prefix(std::size_t j, std::size_t c) {
    return prefix_.data() + (j * (len_ + 1) + c) * words_;
  }

  Window window_;
  std::size_t len_ = 0;
  std::size_t d_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint32_t> ranks_;
  std::vector<std::uint64_t> prefix_;
};

/// Bandwidth of the divided-difference derivative estimator for a window
/// holding `len` observations.
inline double derivative_bandwidth(std::size_t len) {
  return std::min(1.0 / std::sqrt(static_cast<double>(len)), 0.5);
}

/// Break-aware empirical copula of one window. An empty window evaluates to
/// zero everywhere.
class CopulaEval {
 public:
  CopulaEval(const SampleMatrix& x, const BreakSpec& spec, Window w) : window_(w), d_(x.d()) {
    if (spec.n() != x.n()) throw std::invalid_argument("CopulaEval: break spec length mismatch");
    if (w.end > x.n()) throw std::out_of_range("CopulaEval: window beyond sample");
    for (const Window sub : spec.sub_windows(w)) blocks_.emplace_back(x, sub);
  }

  [[nodiscard]] Window window() const noexcept { return window_; }
  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  [[nodiscard]] const std::vector<RankIndex>& blocks() const noexcept { return blocks_; }

  /// Number of window rows whose pseudo-observation is <= u.
  [[nodiscard]] std::size_t count(std::span<const double> u) const {
    check_domain(u);
    std::size_t total = 0;
    for (const auto& b : blocks_) total += b.count(u);
    return total;
  }

  [[nodiscard]] double operator()(std::span<const double> u) const {
    if (window_.empty()) {
      check_domain(u);
      return 0.0;
    }
    return static_cast<double>(count(u)) / static_cast<double>(window_.size());
  }

  /// Divided difference of the copula in coordinate j at bandwidth
  /// min(L^{-1/2}, 1/2).
  [[nodiscard]] double partial(std::size_t j, std::span<const double> u) const {
    check_domain(u);
    if (j >= d_) throw std::out_of_range("CopulaEval::partial: coordinate out of range");
    if (window_.empty()) return 0.0;
    const double h = derivative_bandwidth(window_.size());
    std::vector<double> up(u.begin(), u.end());
    std::vector<double> lo(u.begin(), u.end());
    up[j] = std::min(u[j] + h, 1.0);
    lo[j] = std::max(u[j] - h, 0.0);
    return ((*this)(up) - (*this)(lo)) / (up[j] - lo[j]);
  }

 private:
  void check_domain(std::span<const double> u) const {
    if (u.size() != d_) throw std::invalid_argument("CopulaEval: point has wrong dimension");
    for (const double v : u) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("domain");
    }
  }

  Window window_;
  std::size_t d_;
  std::vector<RankIndex> blocks_;
};

inline double eval_copula(const CopulaEval& ev, std::span<const double> u) { return ev(u); }

inline double copula_partial(const CopulaEval& ev, std::size_t j, std::span<const double> u) {
  return ev.partial(j, u);
}

}  // namespace segcop
