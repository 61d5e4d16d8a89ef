#include "segcop/copula_sim.hpp"
#include "segcop/rng.hpp"

#include "kendall.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

using namespace segcop;
using Catch::Approx;
using checks::kendall_tau;
using checks::sample_tau;

namespace {

// Kolmogorov-Smirnov distance of a sample to the uniform law.
double ks_uniform(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    dmax = std::max({dmax, static_cast<double>(i + 1) / n - v[i], v[i] - static_cast<double>(i) / n});
  }
  return dmax;
}

}  // namespace

TEST_CASE("kendall tau oracle on small cases", "[sim]") {
  CHECK(kendall_tau({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
  CHECK(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}) == -1.0);
  // one discordant pair out of six
  CHECK(kendall_tau({1, 2, 3, 4}, {1, 2, 4, 3}) == Approx(1.0 - 2.0 / 6.0));
}

TEST_CASE("tau to theta", "[sim]") {
  CHECK(tau_to_theta(Family::Clayton, 0.5) == Approx(2.0));
  CHECK(tau_to_theta(Family::GumbelHougaard, 0.5) == Approx(2.0));
  CHECK(tau_to_theta(Family::GumbelHougaard, 0.0) == 1.0);
  CHECK(tau_to_theta(Family::Clayton, 0.25) == Approx(2.0 / 3.0));
  CHECK(tau_to_theta(Family::GumbelHougaard, 0.75) == Approx(4.0));
  CHECK_THROWS_AS(tau_to_theta(Family::Clayton, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tau_to_theta(Family::GumbelHougaard, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(tau_to_theta(Family::Clayton, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tau_to_theta(Family::GumbelHougaard, -0.1), std::invalid_argument);
}

TEST_CASE("family parameter constraints", "[sim][errors]") {
  CHECK_THROWS_AS(CopulaFamily(Family::Clayton, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(CopulaFamily(Family::GumbelHougaard, 0.9), std::invalid_argument);
  CHECK_NOTHROW(CopulaFamily(Family::Clayton, 0.5));
  CHECK_NOTHROW(CopulaFamily(Family::GumbelHougaard, 1.0));
  CHECK(parse_family("clayton") == Family::Clayton);
  CHECK(parse_family("gh") == Family::GumbelHougaard);
  CHECK(parse_family("indep") == Family::Independence);
  CHECK_THROWS_AS(parse_family("frank"), std::invalid_argument);
  CHECK(to_string(Family::GumbelHougaard) == "gh");
}

TEST_CASE("closed-form copula values", "[sim]") {
  const std::array<double, 2> mid{0.5, 0.5};
  CHECK(copula_cdf(CopulaFamily(Family::GumbelHougaard, 2.0), mid) ==
        Approx(std::exp(-std::sqrt(2.0) * std::log(2.0))));
  CHECK(copula_cdf(CopulaFamily(Family::GumbelHougaard, 2.0), mid) == Approx(0.3752).margin(5e-5));
  CHECK(copula_cdf(CopulaFamily(Family::Clayton, 2.0), mid) == Approx(1.0 / std::sqrt(7.0)));
  CHECK(copula_cdf(CopulaFamily(Family::GumbelHougaard, 1.0), std::array<double, 2>{0.3, 0.6}) ==
        Approx(0.18));
  CHECK(copula_cdf(CopulaFamily{}, std::array<double, 3>{0.5, 0.5, 0.5}) == 0.125);
  CHECK(copula_cdf(CopulaFamily(Family::Clayton, 1.0), std::array<double, 2>{0.0, 0.7}) == 0.0);
  CHECK(copula_cdf(CopulaFamily(Family::Clayton, 1.0), std::array<double, 2>{1.0, 0.7}) == Approx(0.7));
}

TEST_CASE("sampler Kendall tau matches the parameterisation", "[sim]") {
  CHECK(sample_tau(CopulaFamily(Family::Clayton, 2.0), 100000, 1) == Approx(0.5).margin(0.01));
  CHECK(sample_tau(CopulaFamily(Family::GumbelHougaard, 2.0), 100000, 2) == Approx(0.5).margin(0.01));
  CHECK(sample_tau(CopulaFamily{}, 100000, 3) == Approx(0.0).margin(0.01));
  CHECK(sample_tau(copula_from_tau(Family::Clayton, 0.25), 100000, 4) == Approx(0.25).margin(0.01));
  CHECK(sample_tau(copula_from_tau(Family::GumbelHougaard, 0.75), 100000, 5) == Approx(0.75).margin(0.01));
}

TEST_CASE("GH sample at the middle of the square", "[sim]") {
  PhiloxStream rng(9, 0);
  const std::size_t count = 100000;
  const auto s = sample_copula(CopulaFamily(Family::GumbelHougaard, 2.0), 2, count, rng);
  std::size_t below = 0;
  for (std::size_t i = 0; i < count; ++i) below += (s(i, 0) <= 0.5 && s(i, 1) <= 0.5) ? 1 : 0;
  CHECK(static_cast<double>(below) / count == Approx(0.3753).margin(0.01));
}

TEST_CASE("sampled margins are uniform", "[sim]") {
  const std::size_t count = 10000;
  const double crit = 1.36 / std::sqrt(static_cast<double>(count)) * 1.5;
  for (const auto& c : {CopulaFamily(Family::Clayton, 0.5), CopulaFamily(Family::Clayton, 6.0),
                        CopulaFamily(Family::GumbelHougaard, 1.5), CopulaFamily(Family::GumbelHougaard, 4.0),
                        CopulaFamily{}}) {
    PhiloxStream rng(21, static_cast<std::uint64_t>(c.theta * 10));
    const auto s = sample_copula(c, 3, count, rng);
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> col(count);
      for (std::size_t i = 0; i < count; ++i) {
        col[i] = s(i, j);
        REQUIRE(col[i] > 0.0);
        REQUIRE(col[i] < 1.0);
      }
      CHECK(ks_uniform(col) < crit);
    }
  }
}

TEST_CASE("trivariate samples match the closed form", "[sim]") {
  const std::size_t count = 50000;
  for (const auto& c : {CopulaFamily(Family::Clayton, 2.0), CopulaFamily(Family::GumbelHougaard, 2.0)}) {
    PhiloxStream rng(31, 0);
    const auto s = sample_copula(c, 3, count, rng);
    for (const auto& u : {std::array<double, 3>{0.5, 0.5, 0.5}, std::array<double, 3>{0.3, 0.7, 0.9},
                          std::array<double, 3>{0.8, 0.2, 0.6}}) {
      std::size_t below = 0;
      for (std::size_t i = 0; i < count; ++i) {
        below += (s(i, 0) <= u[0] && s(i, 1) <= u[1] && s(i, 2) <= u[2]) ? 1 : 0;
      }
      const double p = copula_cdf(c, u);
      CHECK(static_cast<double>(below) / count == Approx(p).margin(4.0 * std::sqrt(p * (1 - p) / count)));
    }
  }
}

TEST_CASE("iid scenario means follow the marginal break", "[sim]") {
  ScenarioSpec s;
  s.n = 200;
  s.d = 2;
  s.copula_before = s.copula_after = copula_from_tau(Family::Clayton, 0.25);
  s.b = 0.5;
  PhiloxStream rng(4, 0);
  const auto x = generate_scenario(s, rng);
  for (std::size_t j = 0; j < 2; ++j) {
    double first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < 100; ++i) first += x(i, j);
    for (std::size_t i = 100; i < 200; ++i) second += x(i, j);
    CHECK(first / 100.0 == Approx(2.0).margin(0.3));
    CHECK(second / 100.0 == Approx(0.0).margin(0.3));
  }
}

TEST_CASE("copula and marginal breaks can share an index", "[sim]") {
  ScenarioSpec s;
  s.n = 100;
  s.copula_before = copula_from_tau(Family::Clayton, 0.2);
  s.copula_after = copula_from_tau(Family::Clayton, 0.6);
  s.t = 0.5;
  s.b = 0.5;
  CHECK(s.copula_break() == s.marginal_break());
  CHECK(s.has_copula_break());
  PhiloxStream rng(1, 1);
  CHECK(generate_scenario(s, rng).n() == 100);
}

TEST_CASE("scenario validation", "[sim][errors]") {
  ScenarioSpec s;
  s.n = 50;
  s.b = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.b = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.b = 0.01;  // floor(0.5) = 0
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.b = 0.5;
  CHECK_NOTHROW(s.validate());
  s.copula_after = CopulaFamily(Family::Clayton, 1.0);
  s.t = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.t = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.t = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  PhiloxStream rng(1, 1);
  CHECK_THROWS_AS(generate_scenario(s, rng), std::invalid_argument);
}

TEST_CASE("AR(1) filter of zero innovations is zero", "[sim]") {
  const std::size_t n = 30, d = 2, burn = 100;
  const std::vector<double> eps((n + 2 * burn) * d, 0.0);
  const auto x = ar1_filter(eps, n, d, 12, 0.5, burn);
  for (const double v : x.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(ar1_filter(std::vector<double>(5, 0.0), n, d, 12, 0.5, burn), std::invalid_argument);
}

TEST_CASE("AR(1) recursion and restart", "[sim]") {
  const std::size_t n = 6, d = 1, burn = 2;
  // raw positions 0..9; break m = 3 so the restart is at raw position 5
  const std::vector<double> eps{1, 0, 0, 0, 0, 8, 0, 0, 0, 0};
  const auto x = ar1_filter(eps, n, d, 3, 0.5, burn);
  // kept: raw 2,3,4 then raw 7,8,9
  CHECK(x.values() == std::vector<double>{0.25, 0.125, 0.0625, 2.0, 1.0, 0.5});
}

TEST_CASE("post-break block ignores pre-break innovations", "[sim]") {
  const std::size_t n = 40, d = 2, burn = 100, m = 15;
  PhiloxStream rng(8, 0);
  std::vector<double> eps((n + 2 * burn) * d);
  for (double& v : eps) v = rng.normal();
  auto changed = eps;
  for (std::size_t p = 0; p < m + burn; ++p)
    for (std::size_t j = 0; j < d; ++j) changed[p * d + j] += 3.0;
  const auto a = ar1_filter(eps, n, d, m, 0.5, burn);
  const auto b = ar1_filter(changed, n, d, m, 0.5, burn);
  for (std::size_t i = m; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) CHECK(a(i, j) == b(i, j));
  CHECK(a(0, 0) != b(0, 0));
}

TEST_CASE("AR(1) stationary variance", "[sim]") {
  // a long pre-break regime with unit noise: variance 1 / (1 - 0.25) = 4/3
  ScenarioSpec s;
  s.n = 100002;
  s.d = 2;
  s.copula_before = s.copula_after = copula_from_tau(Family::Clayton, 0.25);
  s.b = 0.99999;
  s.mode = TemporalMode::AR1;
  PhiloxStream rng(12, 0);
  const auto x = generate_scenario(s, rng);
  for (std::size_t j = 0; j < 2; ++j) {
    double sum = 0.0, sq = 0.0;
    const std::size_t m = s.marginal_break();
    for (std::size_t i = 0; i < m; ++i) {
      sum += x(i, j);
      sq += x(i, j) * x(i, j);
    }
    const double mean = sum / static_cast<double>(m);
    const double var = sq / static_cast<double>(m) - mean * mean;
    CHECK(var == Approx(4.0 / 3.0).epsilon(0.02));
  }
}

TEST_CASE("AR(1) post-break regime has the larger noise", "[sim]") {
  ScenarioSpec s;
  s.n = 4000;
  s.d = 2;
  s.copula_before = s.copula_after = copula_from_tau(Family::GumbelHougaard, 0.25);
  s.b = 0.5;
  s.mode = TemporalMode::AR1;
  PhiloxStream rng(13, 0);
  const auto x = generate_scenario(s, rng);
  double v1 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) v1 += x(i, 0) * x(i, 0);
  for (std::size_t i = 2000; i < 4000; ++i) v2 += x(i, 0) * x(i, 0);
  // stationary variances 4/3 and 64/3
  CHECK(v1 / 2000.0 == Approx(4.0 / 3.0).epsilon(0.15));
  CHECK(v2 / 2000.0 == Approx(64.0 / 3.0).epsilon(0.15));
}

TEST_CASE("scenario generation is reproducible", "[sim]") {
  ScenarioSpec s;
  s.n = 50;
  s.d = 3;
  s.copula_before = copula_from_tau(Family::GumbelHougaard, 0.4);
  s.copula_after = copula_from_tau(Family::GumbelHougaard, 0.6);
  s.t = 0.3;
  s.mode = TemporalMode::AR1;
  PhiloxStream a(5, 5), b(5, 5);
  CHECK(generate_scenario(s, a).values() == generate_scenario(s, b).values());
}
