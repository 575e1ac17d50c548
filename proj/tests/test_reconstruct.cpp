#include <doctest.h>

#include "tensamp/error.hpp"
#include "tensamp/reconstruct.hpp"

using namespace tensamp;

namespace {

double run(const SamplingPlan& p, std::size_t rank, std::uint64_t seed, RecoveryReport* out = nullptr, bool force = false) {
  const Tensor3 x = cpd_reconstruct(random_factors(p.dims(), rank, seed));
  SolverConfig cfg;
  cfg.seed = seed;
  RecoveryReport r = recover(p, apply(p, x), rank, cfg, force);
  const double e = nre(r.estimate, x);
  if (out) *out = std::move(r);
  return e;
}

}  // namespace

TEST_CASE("slab recovery, both alternatives") {
  const Dims d{10, 10, 10};
  RecoveryReport r;
  const SamplingPlan p1 = make_regular_plan(PlanKind::slab, d, {3, 1, 3});
  CHECK(run(p1, 3, 1, &r) < 1e-8);
  CHECK(r.converged);
  CHECK(r.generic.alternative == 1);
  const SamplingPlan p2 = SamplingPlan::slab(d, {SelectionSet({0, 5}, 10), SelectionSet::strided(10, 2)});
  REQUIRE(check_generic(p2, 5).alternative == 2);
  CHECK(run(p2, 5, 2, &r) < 1e-8);
  CHECK(r.generic.alternative == 2);
  CHECK(r.step1.size() == 1);
}

TEST_CASE("fiber and entry recovery") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    CHECK(run(make_regular_plan(PlanKind::fiber, {15, 15, 12}, {3, 3, 1}), 3, s) < 1e-8);
    CHECK(run(make_regular_plan(PlanKind::entry, {16, 16, 16}, {2, 2, 2}), 4, s) < 1e-8);
  }
  RecoveryReport r;
  CHECK(run(make_regular_plan(PlanKind::entry, {12, 12, 12}, {3, 3, 3}), 2, 9, &r) < 1e-8);
  CHECK(r.step1.size() == 3);
  CHECK(r.seconds.size() == 4);
}

TEST_CASE("single-pattern plans reduce to one CPD") {
  const Dims d{6, 6, 6};
  const SamplingPlan p = SamplingPlan::entry(d, {{SelectionSet::all(6), SelectionSet::all(6), SelectionSet::all(6)}});
  CHECK(run(p, 2, 4) < 1e-8);
}

TEST_CASE("refusals") {
  const Dims d{10, 10, 10};
  const SamplingPlan thin = make_regular_plan(PlanKind::slab, d, {5, 1, 5});
  REQUIRE(!check_generic(thin, 8).recoverable);
  CHECK_THROWS_AS(run(thin, 8, 1), ValidationError);
  RecoveryReport r;
  run(thin, 8, 1, &r, true);
  CHECK(r.forced);
  CHECK(!r.notes.empty());

  const std::vector<FiberPattern> disjoint{{SelectionSet({0, 1}, 4), SelectionSet({0, 1}, 4)},
                                           {SelectionSet({2, 3}, 4), SelectionSet({2, 3}, 4)}};
  const SamplingPlan bad = SamplingPlan::fiber({4, 4, 4}, disjoint);
  const Tensor3 x = cpd_reconstruct(random_factors({4, 4, 4}, 1, 1));
  CHECK_THROWS_WITH_AS(recover(bad, apply(bad, x), 1, SolverConfig{}, true), doctest::Contains("7c"), ValidationError);

  const SamplingPlan ok = make_regular_plan(PlanKind::slab, d, {3, 1, 3});
  auto ys = apply(ok, cpd_reconstruct(random_factors(d, 2, 1)));
  ys.pop_back();
  CHECK_THROWS_AS(recover(ok, ys, 2, SolverConfig{}), ShapeError);
}
