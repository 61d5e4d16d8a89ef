#pragma once

// Multiplier bootstrap for the segmented Cramér–von Mises statistic.
//
// Each replicate beta draws one multiplier sequence xi_1..xi_n (i.i.d. standard
// normal, or a Parzen-weighted moving average of normals for serially
// dependent data) shared by every window. The resampled process is linear in
// xi, so for each split k all replicates are obtained at once as
// Xi (B x L) * A_W (L x n) for the coefficient matrix A_W of each window.

#include "segcop/empirical_copula.hpp"
#include "segcop/rng.hpp"
#include "segcop/segmented_ranks.hpp"
#include "segcop/seq_process.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segcop {

enum class MultiplierMode { Independent, Dependent };

/// Scale applied to the derivative-correction sum of the resampled process.
/// InverseRootN multiplies the sum by n^{-1/2} on top of the n^{-1/2} already
/// inside each resampled term; Unit omits the extra factor.
enum class CorrectionScale { InverseRootN, Unit };

struct MultiplierConfig {
  MultiplierMode mode = MultiplierMode::Independent;
  std::size_t replicates = 1000;
  std::size_t bandwidth = 0;  // dependent mode only; 0 selects default_bandwidth(n)
  std::uint64_t seed = 0;
  CorrectionScale correction = CorrectionScale::Unit;
};

struct BootstrapResult {
  StatisticValue statistic;
  std::vector<double> replicates;
  double p_value = 1.0;
  std::size_t bandwidth = 1;  // moving-average half width actually used
};

/// Smallest l >= 2 with l^3 >= n.
inline std::size_t default_bandwidth(std::size_t n) {
  std::size_t l = 1;
  while (l * l * l < n) ++l;
  return std::max<std::size_t>(2, l);
}

/// Parzen kernel.
inline double parzen(double x) {
  const double a = std::fabs(x);
  if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
  if (a <= 1.0) return 2.0 * (1.0 - a) * (1.0 - a) * (1.0 - a);
  return 0.0;
}

/// Moving-average weights w_1..w_{2l-1} proportional to parzen((r-l)/l),
/// normalised so that sum w_r^2 = 1.
inline std::vector<double> multiplier_weights(std::size_t bandwidth) {
  if (bandwidth == 0) throw std::invalid_argument("multiplier bandwidth must be >= 1");
  const double l = static_cast<double>(bandwidth);
  std::vector<double> w(2 * bandwidth - 1);
  double ss = 0.0;
  for (std::size_t r = 1; r <= w.size(); ++r) {
    w[r - 1] = parzen((static_cast<double>(r) - l) / l);
    ss += w[r - 1] * w[r - 1];
  }
  const double scale = 1.0 / std::sqrt(ss);
  for (double& v : w) v *= scale;
  return w;
}

inline std::size_t effective_bandwidth(const MultiplierConfig& cfg, std::size_t n) {
  if (cfg.mode == MultiplierMode::Independent) return 1;
  return cfg.bandwidth == 0 ? default_bandwidth(n) : cfg.bandwidth;
}

/// Multiplier row for replicate `beta` (stream (seed, beta)).
inline void draw_multiplier_row(const MultiplierConfig& cfg, std::size_t n, std::size_t beta,
                                std::span<double> out) {
  PhiloxStream rng(cfg.seed, beta);
  const std::size_t l = effective_bandwidth(cfg, n);
  if (l == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = rng.normal();
    return;
  }
  const auto w = multiplier_weights(l);
  std::vector<double> z(n + 2 * l - 2);
  for (double& v : z) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r) acc += w[r] * z[i + r];
    out[i] = acc;
  }
}

/// B x n matrix of multipliers, row beta from stream (seed, beta).
inline Eigen::MatrixXd draw_multipliers(const MultiplierConfig& cfg, std::size_t n) {
  if (n == 0) throw std::invalid_argument("draw_multipliers: empty series");
  if (cfg.mode == MultiplierMode::Dependent) {
    const std::size_t l = effective_bandwidth(cfg, n);
    if (l >= n) throw std::invalid_argument("bandwidth exceeds series length");
  }
  Eigen::MatrixXd xi(static_cast<Eigen::Index>(cfg.replicates), static_cast<Eigen::Index>(n));
  std::vector<double> row(n);
  for (std::size_t beta = 0; beta < cfg.replicates; ++beta) {
    draw_multiplier_row(cfg, n, beta, row);
    for (std::size_t i = 0; i < n; ++i) xi(static_cast<Eigen::Index>(beta), static_cast<Eigen::Index>(i)) = row[i];
  }
  return xi;
}

/// (1/B) #{beta : replicate_beta >= statistic}.
inline double p_value(double statistic, std::span<const double> replicates) {
  if (replicates.empty()) throw std::invalid_argument("no replicates");
  const auto hits = std::count_if(replicates.begin(), replicates.end(),
                                  [statistic](double r) { return r >= statistic; });
  return static_cast<double>(hits) / static_cast<double>(replicates.size());
}

inline double correction_factor(CorrectionScale scale, std::size_t n) {
  return scale == CorrectionScale::InverseRootN ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
}

// ---------------------------------------------------------------------------
// Point evaluations of the resampled processes. These follow the defining
// sums directly and are used for testing and for single evaluations; the
// bootstrap itself uses the batched path below.

/// B-check over rows [ks, kt): n^{-1/2} sum_i xi_i (1(U_i <= u) - C_{window}(u)).
inline double resampled_b(const SampleMatrix& x, const BreakSpec& spec, std::span<const double> xi,
                          std::size_t ks, std::size_t kt, std::span<const double> u) {
  const Window w{ks, kt};
  if (w.empty()) return 0.0;
  const PseudoSample ps = pseudo_observations(x, spec, w);
  const double c = CopulaEval(x, spec, w)(u);
  double acc = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    bool below = true;
    for (std::size_t j = 0; j < x.d(); ++j) below = below && ps(r, j) <= u[j];
    acc += xi[w.begin + r] * ((below ? 1.0 : 0.0) - c);
  }
  return acc / std::sqrt(static_cast<double>(x.n()));
}

/// C-check over rows [ks, kt): B-check(u) - f * sum_j dC_j(u) B-check(u^{(j)}),
/// with f set by `scale` and u^{(j)} = (1,..,u_j,..,1).
inline double resampled_c(const SampleMatrix& x, const BreakSpec& spec, std::span<const double> xi,
                          std::size_t ks, std::size_t kt, std::span<const double> u,
                          CorrectionScale scale = CorrectionScale::Unit) {
  const Window w{ks, kt};
  if (w.empty()) return 0.0;
  const CopulaEval ev(x, spec, w);
  double value = resampled_b(x, spec, xi, ks, kt, u);
  const double f = correction_factor(scale, x.n());
  std::vector<double> uj(x.d(), 1.0);
  for (std::size_t j = 0; j < x.d(); ++j) {
    std::fill(uj.begin(), uj.end(), 1.0);
    uj[j] = u[j];
    value -= f * ev.partial(j, u) * resampled_b(x, spec, xi, ks, kt, uj);
  }
  return value;
}

/// D-check at split k for at most one break, by the two-case formula.
inline double resampled_d(const SampleMatrix& x, const BreakSpec& spec, std::span<const double> xi,
                          std::size_t k, std::span<const double> u,
                          CorrectionScale scale = CorrectionScale::Unit) {
  if (spec.breaks().size() > 1) throw std::invalid_argument("resampled_d: more than one break");
  const std::size_t n = x.n();
  if (k == 0 || k >= n) return 0.0;
  const double lam_left = split_weight(n, k, n);
  const double lam_right = split_weight(n, 0, k);
  auto cc = [&](std::size_t a, std::size_t b) { return resampled_c(x, spec, xi, a, b, u, scale); };
  if (spec.empty()) return lam_left * cc(0, k) - lam_right * cc(k, n);
  const std::size_t m = spec.breaks().front();
  if (k >= m) return lam_left * (cc(0, m) + cc(m, k)) - lam_right * cc(k, n);
  return lam_left * cc(0, k) - lam_right * (cc(k, m) + cc(m, n));
}

/// D-check at split k for any number of breaks: the C-check terms run over
/// consecutive segment pieces on each side of the split.
inline double resampled_d_multi(const SampleMatrix& x, const BreakSpec& spec,
                                std::span<const double> xi, std::size_t k,
                                std::span<const double> u,
                                CorrectionScale scale = CorrectionScale::Unit) {
  const std::size_t n = x.n();
  if (k == 0 || k >= n) return 0.0;
  double left = 0.0;
  for (const Window w : spec.sub_windows({0, k})) left += resampled_c(x, spec, xi, w.begin, w.end, u, scale);
  double right = 0.0;
  for (const Window w : spec.sub_windows({k, n})) right += resampled_c(x, spec, xi, w.begin, w.end, u, scale);
  return split_weight(n, k, n) * left - split_weight(n, 0, k) * right;
}

// ---------------------------------------------------------------------------
// Batched bootstrap.

namespace detail {

/// Coefficients A (L x n_eval) with C-check_W(xi, u_i) = sum_r xi_{W.begin+r} A(r, i)
/// for a window ranked as a single block.
inline Eigen::MatrixXd coefficient_matrix(const RankIndex& ri, const PseudoSample& points,
                                          std::size_t n, double correction) {
  const std::size_t len = ri.size();
  const std::size_t d = points.d();
  const std::size_t n_eval = points.n();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(n_eval));
  if (len == 0) return a;
  const double inv_root_n = 1.0 / std::sqrt(static_cast<double>(n));
  const double dl = static_cast<double>(len);
  const double h = derivative_bandwidth(len);
  std::vector<std::size_t> c(d);
  std::vector<std::size_t> shifted(d);
  std::vector<double> deriv(d);
  std::vector<std::uint64_t> bits(ri.words());
  for (std::size_t i = 0; i < n_eval; ++i) {
    for (std::size_t j = 0; j < d; ++j) c[j] = rank_threshold(points(i, j), len);
    const double c_w = static_cast<double>(ri.count_at(c)) / dl;
    double base = -c_w;
    for (std::size_t j = 0; j < d; ++j) {
      const double uj = points(i, j);
      const double up = std::min(uj + h, 1.0);
      const double lo = std::max(uj - h, 0.0);
      shifted = c;
      shifted[j] = rank_threshold(up, len);
      const double c_up = static_cast<double>(ri.count_at(shifted)) / dl;
      shifted[j] = rank_threshold(lo, len);
      const double c_lo = static_cast<double>(ri.count_at(shifted)) / dl;
      deriv[j] = correction * (c_up - c_lo) / (up - lo);
      base += deriv[j] * (static_cast<double>(ri.count_coord(j, c[j])) / dl);
    }
    ri.dominated(c, bits);
    for (std::size_t r = 0; r < len; ++r) {
      double v = base + (((bits[r / 64] >> (r % 64)) & 1u) ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) {
        if (ri.rank(r, j) <= c[j]) v -= deriv[j];
      }
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = inv_root_n * v;
    }
  }
  return a;
}

inline Eigen::MatrixXd window_replicates(const Eigen::MatrixXd& xi, const RankIndex& ri,
                                         const PseudoSample& points, std::size_t n,
                                         double correction) {
  const auto a = coefficient_matrix(ri, points, n, correction);
  Eigen::MatrixXd g(xi.rows(), static_cast<Eigen::Index>(points.n()));
  if (ri.size() == 0) {
    g.setZero();
    return g;
  }
  const Window w = ri.window();
  g.noalias() = xi.middleCols(static_cast<Eigen::Index>(w.begin), static_cast<Eigen::Index>(w.size())) * a;
  return g;
}

}  // namespace detail

/// Replicate statistics max_k (1/n) sum_i D-check_beta(k/n, U_i)^2 for the
/// multiplier rows of `xi` (B x n).
inline std::vector<double> bootstrap_replicates(const SampleMatrix& x, const BreakSpec& spec,
                                                const Eigen::MatrixXd& xi,
                                                CorrectionScale scale = CorrectionScale::Unit) {
  detail::check_inputs(x, spec);
  const std::size_t n = x.n();
  if (static_cast<std::size_t>(xi.cols()) != n) throw std::invalid_argument("multiplier width mismatch");
  const Eigen::Index b = xi.rows();
  const double corr = correction_factor(scale, n);
  const PseudoSample points = pseudo_observations(x, spec);
  const SplitBlocks blocks(x, spec);
  const std::size_t segs = blocks.segment_count();
  const auto ne = static_cast<Eigen::Index>(n);

  std::vector<Eigen::MatrixXd> before(segs + 1, Eigen::MatrixXd::Zero(b, ne));
  std::vector<Eigen::MatrixXd> after(segs + 1, Eigen::MatrixXd::Zero(b, ne));
  {
    std::vector<Eigen::MatrixXd> full;
    full.reserve(segs);
    for (std::size_t q = 0; q < segs; ++q) {
      full.push_back(detail::window_replicates(xi, blocks.full(q), points, n, corr));
    }
    for (std::size_t q = 0; q < segs; ++q) before[q + 1] = before[q] + full[q];
    for (std::size_t q = segs; q-- > 0;) after[q] = after[q + 1] + full[q];
  }

  Eigen::VectorXd best = Eigen::VectorXd::Zero(b);
  Eigen::MatrixXd dmat(b, ne);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 1; k < n; ++k) {
    const auto s = blocks.split(k);
    const std::size_t q = s.cut_segment;
    const double lam_left = split_weight(n, k, n);
    const double lam_right = split_weight(n, 0, k);
    if (s.left_is_full) {
      dmat.noalias() = lam_left * before[q + 1] - lam_right * after[q + 1];
    } else {
      const auto gl = detail::window_replicates(xi, s.left_partial, points, n, corr);
      const auto gr = detail::window_replicates(xi, s.right_partial, points, n, corr);
      dmat.noalias() = lam_left * (before[q] + gl) - lam_right * (gr + after[q + 1]);
    }
    best = best.cwiseMax(dmat.rowwise().squaredNorm() * inv_n);
  }
  return {best.data(), best.data() + best.size()};
}

/// Full test: statistic, B multiplier replicates, and the approximate p-value.
inline BootstrapResult bootstrap_test(const SampleMatrix& x, const BreakSpec& spec,
                                      const MultiplierConfig& cfg) {
  if (x.n() < 4) throw std::invalid_argument("bootstrap_test: need at least 4 observations");
  if (cfg.replicates == 0) throw std::invalid_argument("no replicates");
  BootstrapResult out;
  out.statistic = cvm_statistic(x, spec);
  out.bandwidth = effective_bandwidth(cfg, x.n());
  const auto xi = draw_multipliers(cfg, x.n());
  out.replicates = bootstrap_replicates(x, spec, xi, cfg.correction);
  out.p_value = p_value(out.statistic.value, out.replicates);
  return out;
}

}  // namespace segcop
