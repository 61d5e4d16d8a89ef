#pragma once

// Observation matrices, marginal break specifications, and the segmented
// rank transform that produces pseudo-observations.
//
// Indexing convention: rows are 0-based internally and windows are half-open
// [begin, end). A break value m means "the first m observations form the
// first marginal regime", which is the same number whether one counts from
// 0 or 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segcop {

/// Contiguous half-open block of rows [begin, end).
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
  [[nodiscard]] bool empty() const noexcept { return end <= begin; }
  [[nodiscard]] bool contains(std::size_t row) const noexcept { return row >= begin && row < end; }

  friend bool operator==(const Window&, const Window&) = default;
};

/// n x d time-ordered observations, row i = observation at time i.
class SampleMatrix {
 public:
  SampleMatrix() = default;

  SampleMatrix(std::size_t n, std::size_t d, std::vector<double> values)
      : n_(n), d_(d), values_(std::move(values)) {
    if (n_ < 2) throw std::invalid_argument("SampleMatrix: need at least 2 observations");
    if (d_ < 1) throw std::invalid_argument("SampleMatrix: need at least 1 column");
    if (values_.size() != n_ * d_) throw std::invalid_argument("SampleMatrix: size mismatch");
    for (const double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("SampleMatrix: non-finite value");
    }
  }

  static SampleMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("SampleMatrix: no rows");
    const std::size_t d = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    for (const auto& r : rows) {
      if (r.size() != d) throw std::invalid_argument("SampleMatrix: ragged rows");
      values.insert(values.end(), r.begin(), r.end());
    }
    return SampleMatrix(rows.size(), d, std::move(values));
  }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * d_ + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  [[nodiscard]] std::vector<double> column(std::size_t j, Window w) const {
    std::vector<double> out;
    out.reserve(w.size());
    for (std::size_t i = w.begin; i < w.end; ++i) out.push_back((*this)(i, j));
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

/// Known marginal break times m_1 < ... < m_p, each in [1, n-1].
/// Segment q (0-based) is rows [m_q, m_{q+1}) with m_0 = 0 and m_{p+1} = n.
class BreakSpec {
 public:
  BreakSpec() = default;

  BreakSpec(std::vector<std::size_t> breaks, std::size_t n) : breaks_(std::move(breaks)), n_(n) {
    if (n_ < 2) throw std::invalid_argument("BreakSpec: series length must be at least 2");
    for (std::size_t q = 0; q < breaks_.size(); ++q) {
      if (breaks_[q] < 1 || breaks_[q] > n_ - 1) {
        throw std::invalid_argument("BreakSpec: break " + std::to_string(breaks_[q]) +
                                    " outside [1, " + std::to_string(n_ - 1) + "]");
      }
      if (q > 0 && breaks_[q] <= breaks_[q - 1]) {
        throw std::invalid_argument("BreakSpec: breaks must be strictly increasing");
      }
    }
  }

  static BreakSpec none(std::size_t n) { return BreakSpec({}, n); }

  /// Break at floor(n * b) for a fraction b in (0,1).
  static BreakSpec at_fraction(double b, std::size_t n) {
    return BreakSpec({static_cast<std::size_t>(std::floor(static_cast<double>(n) * b))}, n);
  }

  [[nodiscard]] const std::vector<std::size_t>& breaks() const noexcept { return breaks_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] bool empty() const noexcept { return breaks_.empty(); }
  [[nodiscard]] std::size_t segment_count() const noexcept { return breaks_.size() + 1; }

  [[nodiscard]] Window segment(std::size_t q) const {
    const std::size_t lo = q == 0 ? 0 : breaks_[q - 1];
    const std::size_t hi = q == breaks_.size() ? n_ : breaks_[q];
    return {lo, hi};
  }

  /// Index of the segment holding `row`.
  [[nodiscard]] std::size_t segment_of(std::size_t row) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), row) -
                                    breaks_.begin());
  }

  /// Non-empty intersections of `w` with the marginal segments, in time order.
  [[nodiscard]] std::vector<Window> sub_windows(Window w) const {
    std::vector<Window> out;
    if (w.empty()) return out;
    std::size_t lo = w.begin;
    for (const std::size_t m : breaks_) {
      if (m <= lo) continue;
      if (m >= w.end) break;
      out.push_back({lo, m});
      lo = m;
    }
    out.push_back({lo, w.end});
    return out;
  }

  /// True when some segment holds a single observation (its pseudo-observation
  /// is forced to 1).
  [[nodiscard]] bool has_singleton_segment() const {
    for (std::size_t q = 0; q < segment_count(); ++q) {
      if (segment(q).size() == 1) return true;
    }
    return false;
  }

 private:
  std::vector<std::size_t> breaks_;
  std::size_t n_ = 0;
};

/// (1/L) #{i : x_i <= t}.
inline double segment_ecdf(std::span<const double> x, double t) {
  if (x.empty()) throw std::invalid_argument("empty segment");
  const auto count = std::count_if(x.begin(), x.end(), [t](double v) { return v <= t; });
  return static_cast<double>(count) / static_cast<double>(x.size());
}

/// Integer ranks #{s in w : X_sj <= X_rj} for every row r of the block `w`,
/// column-major (L entries per column). Tied values share the maximal rank.
inline std::vector<std::uint32_t> block_ranks(const SampleMatrix& x, Window w) {
  const std::size_t len = w.size();
  const std::size_t d = x.d();
  std::vector<std::uint32_t> ranks(len * d);
  std::vector<std::size_t> order(len);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(w.begin + a, j) < x(w.begin + b, j);
    });
    std::size_t pos = 0;
    while (pos < len) {
      std::size_t last = pos;
      while (last + 1 < len && x(w.begin + order[last + 1], j) == x(w.begin + order[pos], j)) ++last;
      for (std::size_t t = pos; t <= last; ++t) {
        ranks[j * len + order[t]] = static_cast<std::uint32_t>(last + 1);
      }
      pos = last + 1;
    }
  }
  return ranks;
}

/// Segmented pseudo-observations of a window: each row is ranked within the
/// intersection of the window and its marginal segment.
class PseudoSample {
 public:
  PseudoSample(Window window, std::size_t d, std::vector<double> values, BreakSpec spec)
      : window_(window), d_(d), values_(std::move(values)), spec_(std::move(spec)) {}

  [[nodiscard]] Window window() const noexcept { return window_; }
  [[nodiscard]] std::size_t n() const noexcept { return window_.size(); }
  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  [[nodiscard]] const BreakSpec& break_spec() const noexcept { return spec_; }
  /// Pseudo-observation of window row `i` (0-based relative to window.begin).
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

 private:
  Window window_;
  std::size_t d_;
  std::vector<double> values_;
  BreakSpec spec_;
};

inline PseudoSample pseudo_observations(const SampleMatrix& x, const BreakSpec& spec, Window w) {
  if (spec.n() != x.n()) throw std::invalid_argument("pseudo_observations: break spec length mismatch");
  if (w.empty()) throw std::invalid_argument("empty window");
  if (w.end > x.n()) throw std::out_of_range("pseudo_observations: window beyond sample");
  const std::size_t d = x.d();
  std::vector<double> values(w.size() * d);
  for (const Window sub : spec.sub_windows(w)) {
    const auto ranks = block_ranks(x, sub);
    const double len = static_cast<double>(sub.size());
    for (std::size_t r = 0; r < sub.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        values[(sub.begin - w.begin + r) * d + j] =
            static_cast<double>(ranks[j * sub.size() + r]) / len;
      }
    }
  }
  return PseudoSample(w, d, std::move(values), spec);
}

inline PseudoSample pseudo_observations(const SampleMatrix& x, const BreakSpec& spec) {
  return pseudo_observations(x, spec, Window{0, x.n()});
}

}  // namespace segcop
