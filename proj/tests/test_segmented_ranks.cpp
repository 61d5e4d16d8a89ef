#include "segcop/reference.hpp"
#include "segcop/rng.hpp"
#include "segcop/segmented_ranks.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace segcop;

namespace {

std::vector<double> column_of(const PseudoSample& ps, std::size_t j, std::size_t from, std::size_t to) {
  std::vector<double> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(ps(i, j));
  return out;
}

SampleMatrix random_sample(std::size_t n, std::size_t d, std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  std::vector<double> v(n * d);
  for (double& x : v) x = rng.normal();
  return SampleMatrix(n, d, std::move(v));
}

}  // namespace

TEST_CASE("segment ecdf counts values at or below t", "[ranks]") {
  const std::vector<double> x{3.0, 1.0, 2.0};
  CHECK(segment_ecdf(x, 2.0) == 2.0 / 3.0);
  const std::vector<double> one{5.0};
  CHECK(segment_ecdf(one, 5.0) == 1.0);
  const std::vector<double> two{1.0, 2.0};
  CHECK(segment_ecdf(two, 0.0) == 0.0);
  CHECK(segment_ecdf(two, 10.0) == 1.0);
}

TEST_CASE("segment ecdf of an empty column is an error", "[ranks][errors]") {
  const std::vector<double> none;
  CHECK_THROWS_WITH(segment_ecdf(none, 1.0), "empty segment");
}

TEST_CASE("pseudo-observations rank within each marginal segment", "[ranks]") {
  const SampleMatrix x(4, 1, {4, 2, 9, 7});
  const auto ps = pseudo_observations(x, BreakSpec({2}, 4), {0, 4});
  CHECK(ps.values() == std::vector<double>{1.0, 0.5, 1.0, 0.5});
}

TEST_CASE("pseudo-observations without breaks are ranks over n", "[ranks]") {
  const SampleMatrix x(3, 1, {4, 2, 9});
  const auto ps = pseudo_observations(x, BreakSpec::none(3));
  CHECK(ps.values() == std::vector<double>{2.0 / 3.0, 1.0 / 3.0, 1.0});
}

TEST_CASE("comonotone pairs give equal coordinate ranks", "[ranks]") {
  const SampleMatrix x(2, 2, {1, 1, 2, 2});
  const auto ps = pseudo_observations(x, BreakSpec::none(2));
  CHECK(ps.values() == std::vector<double>{0.5, 0.5, 1.0, 1.0});
}

TEST_CASE("windows are split at the breaks they contain", "[ranks]") {
  // window rows [1,6) with breaks at 3 and 5: sub-windows [1,3), [3,5), [5,6)
  const SampleMatrix x(7, 1, {0, 5, 1, 8, 3, 2, 6});
  const BreakSpec spec({3, 5}, 7);
  const auto subs = spec.sub_windows({1, 6});
  REQUIRE(subs.size() == 3);
  CHECK(subs[0] == Window{1, 3});
  CHECK(subs[1] == Window{3, 5});
  CHECK(subs[2] == Window{5, 6});
  const auto ps = pseudo_observations(x, spec, {1, 6});
  CHECK(ps.values() == std::vector<double>{1.0, 0.5, 1.0, 0.5, 1.0});
  CHECK(ps.window() == Window{1, 6});
}

TEST_CASE("ties take the maximal rank", "[ranks]") {
  const SampleMatrix x(4, 1, {1, 2, 2, 3});
  const auto ps = pseudo_observations(x, BreakSpec::none(4));
  CHECK(ps.values() == std::vector<double>{0.25, 0.75, 0.75, 1.0});
  CHECK(block_ranks(x, {0, 4}) == std::vector<std::uint32_t>{1, 3, 3, 4});
}

TEST_CASE("a one-row segment maps to 1", "[ranks]") {
  const SampleMatrix x(3, 2, {5, 1, 2, 2, 3, 0});
  const BreakSpec spec({1}, 3);
  CHECK(spec.has_singleton_segment());
  const auto ps = pseudo_observations(x, spec);
  CHECK(ps(0, 0) == 1.0);
  CHECK(ps(0, 1) == 1.0);
}

TEST_CASE("pseudo-observation window errors", "[ranks][errors]") {
  const SampleMatrix x(4, 1, {4, 2, 9, 7});
  CHECK_THROWS_WITH(pseudo_observations(x, BreakSpec::none(4), {2, 2}), "empty window");
  CHECK_THROWS_WITH(pseudo_observations(x, BreakSpec::none(4), {3, 1}), "empty window");
  CHECK_THROWS_AS(pseudo_observations(x, BreakSpec::none(4), {0, 5}), std::out_of_range);
  CHECK_THROWS_AS(pseudo_observations(x, BreakSpec::none(5)), std::invalid_argument);
}

TEST_CASE("sample matrix validation", "[ranks][errors]") {
  CHECK_THROWS_AS(SampleMatrix(1, 2, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(SampleMatrix(2, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(SampleMatrix(2, 2, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(SampleMatrix(2, 1, {1, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(SampleMatrix(2, 1, {1, INFINITY}), std::invalid_argument);
  CHECK_THROWS_AS(SampleMatrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
  CHECK_NOTHROW(SampleMatrix::from_rows({{1, 2}, {3, 4}}));
}

TEST_CASE("break spec validation", "[ranks][errors]") {
  CHECK_THROWS_AS(BreakSpec({0}, 10), std::invalid_argument);
  CHECK_THROWS_AS(BreakSpec({10}, 10), std::invalid_argument);
  CHECK_THROWS_AS(BreakSpec({4, 4}, 10), std::invalid_argument);
  CHECK_THROWS_AS(BreakSpec({5, 3}, 10), std::invalid_argument);
  CHECK_NOTHROW(BreakSpec({1, 9}, 10));
  const BreakSpec spec({3, 7}, 10);
  CHECK(spec.segment_count() == 3);
  CHECK(spec.segment(0) == Window{0, 3});
  CHECK(spec.segment(1) == Window{3, 7});
  CHECK(spec.segment(2) == Window{7, 10});
  CHECK(spec.segment_of(2) == 0);
  CHECK(spec.segment_of(3) == 1);
  CHECK(spec.segment_of(9) == 2);
  CHECK_FALSE(spec.has_singleton_segment());
  CHECK(BreakSpec::at_fraction(0.5, 200).breaks() == std::vector<std::size_t>{100});
  CHECK(BreakSpec::at_fraction(0.1, 50).breaks() == std::vector<std::size_t>{5});
}

TEST_CASE("tie-free segments are permutations of 1/L..L/L", "[ranks][property]") {
  const SampleMatrix x = random_sample(37, 3, 5);
  const BreakSpec spec({9, 20}, 37);
  const auto ps = pseudo_observations(x, spec);
  for (std::size_t q = 0; q < spec.segment_count(); ++q) {
    const Window seg = spec.segment(q);
    const double len = static_cast<double>(seg.size());
    for (std::size_t j = 0; j < 3; ++j) {
      auto col = column_of(ps, j, seg.begin, seg.end);
      std::sort(col.begin(), col.end());
      for (std::size_t r = 0; r < col.size(); ++r) CHECK(col[r] == static_cast<double>(r + 1) / len);
    }
  }
}

TEST_CASE("rank transform matches direct ecdf evaluation", "[ranks][property]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PhiloxStream rng(seed, 1);
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform() * 40);
    SampleMatrix x = random_sample(n, 2, seed + 100);
    // introduce ties in column 1
    for (std::size_t i = 0; i < n; ++i) x(i, 1) = std::round(x(i, 1) * 2.0);
    std::vector<std::size_t> br;
    if (seed % 3 >= 1) br.push_back(n / 3);
    if (seed % 3 == 2) br.push_back(2 * n / 3);
    const BreakSpec spec(br, n);
    const Window w{seed % 4, n - seed % 3};
    CHECK(pseudo_observations(x, spec, w).values() == reference::ecdf_pseudo_observations(x, spec, w));
  }
}

TEST_CASE("monotone transforms within segments leave pseudo-observations unchanged", "[ranks][property]") {
  const SampleMatrix x = random_sample(40, 2, 17);
  const BreakSpec spec({15}, 40);
  SampleMatrix y = x;
  for (std::size_t i = 0; i < 15; ++i) {
    y(i, 0) = std::exp(x(i, 0));
    y(i, 1) = 3.0 * x(i, 1) - 7.0;
  }
  for (std::size_t i = 15; i < 40; ++i) y(i, 0) = x(i, 0) * x(i, 0) * x(i, 0);
  CHECK(pseudo_observations(x, spec).values() == pseudo_observations(y, spec).values());
}
