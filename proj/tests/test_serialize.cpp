#include <doctest.h>

#include "tensamp/error.hpp"
#include "tensamp/serialize.hpp"

using namespace tensamp;

TEST_CASE("plans round-trip through JSON with one-based indices") {
  for (PlanKind k : {PlanKind::slab, PlanKind::fiber, PlanKind::entry}) {
    const SamplingPlan p = make_regular_plan(k, {9, 9, 9}, {3, 3, 3});
    const json j = to_json(p);
    CHECK(j["one_based"] == true);
    const SamplingPlan q = plan_from_json(j);
    CHECK(to_json(q) == j);
    CHECK(plan_from_json(to_json(p, false)).footprints().size() == p.footprints().size());
  }
  const json fig = json::parse(R"({"kind":"fiber","dims":[12,8,5],"patterns":[
      {"rows":[1,4,7,10],"cols":[1,4,7]},{"rows":[2,5,8,11],"cols":[2,5,7,8]},{"rows":[3,6,9,12],"cols":[3,6,8]}]})");
  const SamplingPlan p = plan_from_json(fig);
  CHECK(p.fiber_patterns()[0].rows.indices() == std::vector<std::size_t>{0, 3, 6, 9});
  CHECK(validate(p).valid());
}

TEST_CASE("plan JSON shorthands and errors") {
  const SamplingPlan p = plan_from_json(json::parse(R"({"kind":"slab","dims":[6,4,6],"patterns":[{"rows":{"start":1,"stride":2},"fibers":"all"}]})"));
  CHECK(p.slab_plan().horizontal.indices() == std::vector<std::size_t>{0, 2, 4});
  CHECK(p.slab_plan().frontal.is_all());
  const SamplingPlan r = plan_from_json(json::parse(R"({"kind":"entry","dims":[8,8,6],"strides":[2,2,3]})"));
  CHECK(r.entry_patterns().size() == 3);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"kind":"slab","dims":[6,4,6],"patterns":[{"rows":[0,2],"fibers":[1,2]}]})")), ValidationError);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"kind":"cube","dims":[6,4,6],"patterns":[]})")), ValidationError);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"kind":"slab","dims":[6,4],"patterns":[]})")), ValidationError);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"kind":"slab","dims":[6,4,6],"patterns":[{"rows":[3,2],"fibers":[1,2]}]})")), ValidationError);
}

TEST_CASE("solver config, accel plan and factors") {
  SolverConfig c;
  c.seed = 42;
  c.init = InitKind::random;
  const SolverConfig d = solver_config_from_json(to_json(c));
  CHECK(d.seed == 42);
  CHECK(d.init == InitKind::random);
  CHECK_THROWS_AS(solver_config_from_json(json{{"max_iters", 0}}), ValidationError);

  const AccelPlan a = accel_plan_from_json(json::parse(R"({"n":3,"geometry":{"mx":8,"my":8,"mc":4}})"));
  CHECK(a.n() == 3);
  CHECK(!a.multi_slice);
  const AccelPlan m = accel_plan_from_json(json::parse(R"({"r":2,"s":2,"geometry":{"mx":8,"my":8,"ms":2,"mc":4}})"));
  CHECK(m.multi_slice);
  CHECK(m.n() == 4);
  CHECK(accel_plan_from_json(to_json(m)).n() == 4);
  CHECK_THROWS_AS(accel_plan_from_json(json::parse(R"({"n":3})")), ValidationError);

  const FactorTriple f = random_factors({3, 4, 5}, 2, 1);
  const FactorTriple g = factors_from_json(to_json(f));
  CHECK(g.A == f.A);
  CHECK(g.C == f.C);
}
