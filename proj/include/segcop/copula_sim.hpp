#pragma once

// Archimedean copula samplers (Marshall–Olkin frailty construction), Kendall's
// tau parameterisation, and the scenario generators used by the Monte Carlo
// harness: i.i.d. samples with normal location-scale margins, and AR(1)
// sequences with a variance break and burn-in.

#include "segcop/rng.hpp"
#include "segcop/segmented_ranks.hpp"

#include <cfloat>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segcop {

enum class Family { Independence, Clayton, GumbelHougaard };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Independence: return "indep";
    case Family::Clayton: return "clayton";
    case Family::GumbelHougaard: return "gh";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "clayton" || s == "cl" || s == "Cl") return Family::Clayton;
  if (s == "gh" || s == "GH" || s == "gumbel") return Family::GumbelHougaard;
  if (s == "indep" || s == "independence") return Family::Independence;
  throw std::invalid_argument("unknown copula family '" + s + "'");
}

struct CopulaFamily {
  Family family = Family::Independence;
  double theta = 0.0;

  CopulaFamily() = default;
  CopulaFamily(Family f, double th) : family(f), theta(th) {
    if (f == Family::Clayton && !(th > 0.0)) throw std::invalid_argument("Clayton requires theta > 0");
    if (f == Family::GumbelHougaard && !(th >= 1.0)) throw std::invalid_argument("Gumbel-Hougaard requires theta >= 1");
  }

  friend bool operator==(const CopulaFamily&, const CopulaFamily&) = default;
};

/// Clayton: theta = 2 tau / (1 - tau); Gumbel–Hougaard: theta = 1 / (1 - tau).
inline double tau_to_theta(Family f, double tau) {
  if (!(tau < 1.0)) throw std::invalid_argument("Kendall's tau must be < 1");
  switch (f) {
    case Family::Clayton:
      if (!(tau > 0.0)) throw std::invalid_argument("Clayton requires tau in (0,1)");
      return 2.0 * tau / (1.0 - tau);
    case Family::GumbelHougaard:
      if (!(tau >= 0.0)) throw std::invalid_argument("Gumbel-Hougaard requires tau in [0,1)");
      return 1.0 / (1.0 - tau);
    case Family::Independence:
      return 0.0;
  }
  return 0.0;
}

inline CopulaFamily copula_from_tau(Family f, double tau) {
  if (f == Family::Independence) return {};
  return {f, tau_to_theta(f, tau)};
}

/// Closed-form copula CDF, (sum u_j^{-theta} - d + 1)^{-1/theta} for Clayton and
/// exp(-(sum (-log u_j)^theta)^{1/theta}) for Gumbel–Hougaard.
inline double copula_cdf(const CopulaFamily& c, std::span<const double> u) {
  for (const double v : u) {
    if (v <= 0.0) return 0.0;
  }
  switch (c.family) {
    case Family::Independence: {
      double p = 1.0;
      for (const double v : u) p *= v;
      return p;
    }
    case Family::Clayton: {
      double s = 0.0;
      for (const double v : u) s += std::pow(v, -c.theta);
      s -= static_cast<double>(u.size()) - 1.0;
      return std::pow(s, -1.0 / c.theta);
    }
    case Family::GumbelHougaard: {
      double s = 0.0;
      for (const double v : u) s += std::pow(-std::log(v), c.theta);
      return std::exp(-std::pow(s, 1.0 / c.theta));
    }
  }
  return 0.0;
}

namespace detail {

inline double clamp_open_unit(double u) {
  if (u >= 1.0) return std::nextafter(1.0, 0.0);
  if (u <= 0.0) return DBL_MIN;
  return u;
}

/// log of a positive stable variable with Laplace transform exp(-s^alpha),
/// 0 < alpha < 1 (Kanter's representation).
inline double log_positive_stable(double alpha, PhiloxStream& rng) {
  const double angle = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  return std::log(std::sin(alpha * angle)) - std::log(std::sin(angle)) / alpha +
         (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * angle)) - std::log(w));
}

}  // namespace detail

/// One draw from the copula written into `out` (values in (0,1)).
inline void sample_copula_row(const CopulaFamily& c, std::span<double> out, PhiloxStream& rng) {
  switch (c.family) {
    case Family::Independence:
      for (double& v : out) v = rng.uniform();
      return;
    case Family::Clayton: {
      const double frailty = rng.gamma(1.0 / c.theta);
      for (double& v : out) {
        const double e = rng.exponential();
        v = detail::clamp_open_unit(std::exp(-std::log1p(e / frailty) / c.theta));
      }
      return;
    }
    case Family::GumbelHougaard: {
      if (c.theta == 1.0) {
        for (double& v : out) v = rng.uniform();
        return;
      }
      const double alpha = 1.0 / c.theta;
      const double log_v = detail::log_positive_stable(alpha, rng);
      for (double& v : out) {
        const double e = rng.exponential();
        v = detail::clamp_open_unit(std::exp(-std::exp(alpha * (std::log(e) - log_v))));
      }
      return;
    }
  }
}

/// count x d matrix of copula draws.
inline SampleMatrix sample_copula(const CopulaFamily& c, std::size_t d, std::size_t count,
                                  PhiloxStream& rng) {
  std::vector<double> values(count * d);
  for (std::size_t i = 0; i < count; ++i) sample_copula_row(c, {values.data() + i * d, d}, rng);
  return SampleMatrix(count, d, std::move(values));
}

struct NormalMargin {
  double mean = 0.0;
  double sd = 1.0;
  friend bool operator==(const NormalMargin&, const NormalMargin&) = default;
};

enum class TemporalMode { IID, AR1 };

inline std::string to_string(TemporalMode m) { return m == TemporalMode::IID ? "iid" : "ar1"; }

inline TemporalMode parse_mode(const std::string& s) {
  if (s == "iid") return TemporalMode::IID;
  if (s == "ar1") return TemporalMode::AR1;
  throw std::invalid_argument("unknown temporal mode '" + s + "'");
}

struct ScenarioSpec {
  std::size_t n = 200;
  std::size_t d = 2;
  CopulaFamily copula_before;
  CopulaFamily copula_after;
  double t = 0.0;  // copula break at floor(n t)
  NormalMargin margin_before{2.0, 1.0};
  NormalMargin margin_after{0.0, 1.0};
  double b = 0.5;  // marginal break at floor(n b)
  TemporalMode mode = TemporalMode::IID;
  // AR(1) settings: X_{i+1} = coefficient X_i + eps_{i+1}; eps are
  // noise_scale * Phi^{-1}(U) with U from the copula stream.
  double ar_coefficient = 0.5;
  double noise_before = 1.0;
  double noise_after = 4.0;
  std::size_t burn_in = 100;

  [[nodiscard]] std::size_t marginal_break() const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * b));
  }
  [[nodiscard]] std::size_t copula_break() const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * t));
  }
  [[nodiscard]] bool has_copula_break() const { return !(copula_before == copula_after); }

  void validate() const {
    if (n < 2 || d < 1) throw std::invalid_argument("scenario: need n >= 2 and d >= 1");
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("scenario: b must lie in (0,1)");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("scenario: t must lie in [0,1]");
    const std::size_t m = marginal_break();
    if (m < 1 || m > n - 1) throw std::invalid_argument("scenario: marginal break index outside [1, n-1]");
    if (has_copula_break()) {
      const std::size_t k = copula_break();
      if (k < 1 || k > n - 1) throw std::invalid_argument("scenario: copula break index outside [1, n-1]");
    }
  }
};

/// Runs the two-regime AR(1) recursion over raw innovations (rows of `eps`,
/// length n + 2 burn_in): the recursion starts at row 0 and restarts from the
/// innovation at row m + burn_in; the first burn_in rows of each regime are
/// dropped.
inline SampleMatrix ar1_filter(const std::vector<double>& eps, std::size_t n, std::size_t d,
                               std::size_t m, double coefficient, std::size_t burn_in) {
  const std::size_t raw = n + 2 * burn_in;
  if (eps.size() != raw * d) throw std::invalid_argument("ar1_filter: innovation length mismatch");
  if (m < 1 || m >= n) throw std::invalid_argument("ar1_filter: break outside [1, n-1]");
  const std::size_t restart = m + burn_in;
  std::vector<double> xs(raw * d);
  for (std::size_t p = 0; p < raw; ++p) {
    for (std::size_t j = 0; j < d; ++j) {
      const double e = eps[p * d + j];
      xs[p * d + j] = (p == 0 || p == restart) ? e : coefficient * xs[(p - 1) * d + j] + e;
    }
  }
  std::vector<double> out;
  out.reserve(n * d);
  for (std::size_t p = burn_in; p < restart; ++p) out.insert(out.end(), xs.begin() + p * d, xs.begin() + (p + 1) * d);
  for (std::size_t p = restart + burn_in; p < raw; ++p) out.insert(out.end(), xs.begin() + p * d, xs.begin() + (p + 1) * d);
  return SampleMatrix(n, d, std::move(out));
}

/// Draws one sample of the scenario.
inline SampleMatrix generate_scenario(const ScenarioSpec& s, PhiloxStream& rng) {
  s.validate();
  const std::size_t n = s.n;
  const std::size_t d = s.d;
  const std::size_t m = s.marginal_break();
  const std::size_t k = s.has_copula_break() ? s.copula_break() : n;
  std::vector<double> u(d);

  if (s.mode == TemporalMode::IID) {
    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      sample_copula_row(i < k ? s.copula_before : s.copula_after, u, rng);
      const NormalMargin& mg = i < m ? s.margin_before : s.margin_after;
      for (std::size_t j = 0; j < d; ++j) values[i * d + j] = mg.mean + mg.sd * normal_quantile(u[j]);
    }
    return SampleMatrix(n, d, std::move(values));
  }

  // AR(1): raw positions [0, m + burn_in) feed the first regime, the rest the
  // second. Innovations before the (burn-in shifted) copula break use the
  // first copula.
  const std::size_t burn = s.burn_in;
  const std::size_t raw = n + 2 * burn;
  const std::size_t restart = m + burn;
  const std::size_t copula_cut = (m <= k) ? k + 2 * burn : k + burn;
  std::vector<double> eps(raw * d);
  for (std::size_t p = 0; p < raw; ++p) {
    sample_copula_row(p < copula_cut ? s.copula_before : s.copula_after, u, rng);
    const double scale = p < restart ? s.noise_before : s.noise_after;
    for (std::size_t j = 0; j < d; ++j) eps[p * d + j] = scale * normal_quantile(u[j]);
  }
  return ar1_filter(eps, n, d, m, s.ar_coefficient, burn);
}

}  // namespace segcop
