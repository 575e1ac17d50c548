#include <doctest.h>

#include <sstream>

#include "tensamp/error.hpp"
#include "tensamp/sweep.hpp"

using namespace tensamp;

TEST_CASE("plan_for_ratio picks the densest plan under the bound") {
  const Dims d{50, 50, 50};
  const auto p = plan_for_ratio(PlanKind::slab, d, 0.5);
  REQUIRE(p);
  CHECK(p->slab_plan().horizontal.size() == 13);  // stride 4
  CHECK(sampling_ratio(*p) <= 0.5);
  CHECK(sampling_ratio(*plan_for_ratio(PlanKind::slab, d, 0.2)) == doctest::Approx(0.19).epsilon(1e-9));
  CHECK(!plan_for_ratio(PlanKind::slab, d, 0.05));
  CHECK(sampling_ratio(*plan_for_ratio(PlanKind::slab, d, 1.0)) == 1.0);
  for (double r : {0.5, 0.2, 0.05}) {
    for (PlanKind k : {PlanKind::fiber, PlanKind::entry}) {
      const auto q = plan_for_ratio(k, d, r);
      if (q) CHECK(sampling_ratio(*q) <= r + 1e-12);
    }
  }
}

TEST_CASE("cell seeds depend only on their inputs") {
  CHECK(cell_seed(1, 2, 0.5, 0) == cell_seed(1, 2, 0.5, 0));
  CHECK(cell_seed(1, 2, 0.5, 0) != cell_seed(1, 2, 0.5, 1));
  CHECK(cell_seed(1, 2, 0.5, 0) != cell_seed(1, 3, 0.5, 0));
  CHECK(cell_seed(1, 2, 0.5, 0) != cell_seed(2, 2, 0.5, 0));
}

TEST_CASE("sweep output is deterministic and records infeasible cells") {
  SweepConfig cfg;
  cfg.dims = {20, 20, 20};
  cfg.ranks = {2, 9};
  cfg.ratios = {0.5, 0.05};
  cfg.seed = 3;
  cfg.jobs = 2;
  const auto a = run_sweep(cfg);
  REQUIRE(a.size() == 4);
  CHECK(a[0].rank == 2);
  CHECK(a[0].nre < 1e-6);
  CHECK(a[0].converged);
  CHECK(a[0].ratio == sampling_ratio(*plan_for_ratio(PlanKind::slab, cfg.dims, 0.5)));
  CHECK(!a[1].feasible);
  CHECK(a[1].nre == 1.0);
  CHECK(!a[1].converged);
  std::ostringstream x, y;
  write_sweep_csv(x, a, false);
  cfg.jobs = 1;
  write_sweep_csv(y, run_sweep(cfg), false);
  CHECK(x.str() == y.str());
  CHECK(x.str().rfind("mechanism,F,r,NRE,converged,seconds,seed\n", 0) == 0);
}

TEST_CASE("sweep config validation") {
  SweepConfig cfg;
  cfg.ratios = {0.5};
  CHECK_THROWS_AS(run_sweep(cfg), ValidationError);
  cfg.ranks = {2};
  cfg.ratios = {1.5};
  CHECK_THROWS_AS(run_sweep(cfg), ValidationError);
}
