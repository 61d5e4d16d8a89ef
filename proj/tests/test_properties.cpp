#include "property_checks.hpp"

#include <catch_amalgamated.hpp>

using namespace segcop;

TEST_CASE("optimized statistic equals the triple-loop oracle on 100 instances", "[property][oracle]") {
  CHECK(checks::oracle_equivalence(100) == "");
}

TEST_CASE("statistic is rank invariant within segments", "[property]") {
  CHECK(checks::rank_invariance() == "");
}

TEST_CASE("break-aware copula is the length-weighted mixture", "[property]") {
  CHECK(checks::mixture_identity() == "");
}

TEST_CASE("resampled processes vanish at the corner and for zero multipliers", "[property]") {
  CHECK(checks::resampled_zeros() == "");
}

TEST_CASE("single-break and multi-break routes agree", "[property]") {
  CHECK(checks::single_vs_multi() == "");
}

TEST_CASE("p-value counting identities", "[property]") {
  CHECK(checks::p_value_identities() == "");
}

TEST_CASE("results are reproducible across thread counts", "[property]") {
  CHECK(checks::determinism() == "");
}

TEST_CASE("random instances cover the intended shapes", "[property]") {
  std::size_t with_p[3] = {0, 0, 0};
  std::size_t d3 = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto in = checks::random_instance(seed);
    CHECK(in.x.n() >= 4);
    CHECK(in.x.n() <= 64);
    ++with_p[in.spec.breaks().size()];
    d3 += in.x.d() == 3 ? 1 : 0;
  }
  CHECK(with_p[0] > 10);
  CHECK(with_p[1] > 10);
  CHECK(with_p[2] > 10);
  CHECK(d3 > 20);
}
