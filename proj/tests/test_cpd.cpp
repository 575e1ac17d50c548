#include <doctest.h>

#include "tensamp/cpd.hpp"
#include "tensamp/error.hpp"

using namespace tensamp;

namespace {

double rel_err(const Tensor3& a, const Tensor3& b) { return nre(a, b); }

std::vector<CoupledTerm> two_terms(const Tensor3& x) {
  const Dims d = x.dims();
  const SelectionSet h = SelectionSet::strided(d[0], 2), f = SelectionSet::strided(d[2], 2);
  const SelectionSet aj = SelectionSet::all(d[1]);
  return {{gather(x, h, aj, SelectionSet::all(d[2])), h, aj, SelectionSet::all(d[2])},
          {gather(x, SelectionSet::all(d[0]), aj, f), SelectionSet::all(d[0]), aj, f}};
}

}  // namespace

TEST_CASE("cpd recovers an exact low-rank tensor") {
  for (InitKind init : {InitKind::algebraic, InitKind::random}) {
    SolverConfig cfg;
    cfg.init = init;
    const Tensor3 x = cpd_reconstruct(random_factors({8, 7, 6}, 3, 21));
    const CpdResult r = cpd(x, 3, cfg);
    CHECK(r.converged);
    CHECK(r.relative_residual < 1e-8);
    CHECK(rel_err(cpd_reconstruct(r.factors), x) < 1e-8);
  }
}

TEST_CASE("cpd of a rank-1 tensor and of the zero tensor") {
  const Tensor3 x = cpd_reconstruct(random_factors({3, 3, 3}, 1, 4));
  CHECK(cpd(x, 1, SolverConfig{}).relative_residual < 1e-10);
  const CpdResult z = cpd(Tensor3({3, 3, 3}), 2, SolverConfig{});
  CHECK(z.relative_residual < 1e-10);
}

TEST_CASE("algebraic_init is exact on noiseless data and checks its preconditions") {
  const FactorTriple f = random_factors({6, 5, 4}, 4, 2);
  const Tensor3 x = cpd_reconstruct(f);
  CHECK(rel_err(cpd_reconstruct(algebraic_init(x, 4, 1)), x) < 1e-8);
  CHECK_THROWS_AS(algebraic_init(x, 6, 1), ValidationError);
  CHECK_THROWS_AS(algebraic_init(cpd_reconstruct(random_factors({6, 5, 1}, 2, 1)), 2, 1), ValidationError);
}

TEST_CASE("als_step does not increase the objective") {
  const Tensor3 x = cpd_reconstruct(random_factors({6, 6, 6}, 3, 8));
  FactorTriple f = random_factors(x.dims(), 3, 99);
  const std::vector<CoupledTerm> full{{x, SelectionSet::all(6), SelectionSet::all(6), SelectionSet::all(6)}};
  double prev = coupled_objective(full, f);
  for (int it = 0; it < 20; ++it) {
    f = als_step(x, f);
    const double now = coupled_objective(full, f);
    CHECK(now <= prev * (1 + 1e-12) + 1e-14);
    prev = now;
  }
}

TEST_CASE("coupled_gradient matches central finite differences") {
  const Tensor3 x = cpd_reconstruct(random_factors({5, 4, 6}, 2, 3));
  const auto terms = two_terms(x);
  const FactorTriple f = random_factors(x.dims(), 2, 17);
  const FactorTriple g = coupled_gradient(terms, f);
  const double h = 1e-6;
  for (Mode m : kAllModes) {
    for (Eigen::Index i = 0; i < f.factor(m).rows(); ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        for (cplx dir : {cplx(1, 0), cplx(0, 1)}) {
          FactorTriple p = f, q = f;
          p.factor(m)(i, c) += h * dir;
          q.factor(m)(i, c) -= h * dir;
          const double fd = (coupled_objective(terms, p) - coupled_objective(terms, q)) / (2 * h);
          const double an = dir.real() != 0 ? g.factor(m)(i, c).real() : g.factor(m)(i, c).imag();
          CHECK(fd == doctest::Approx(an).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("coupled_cpd on a slab-sampled tensor") {
  const FactorTriple truth = random_factors({8, 6, 8}, 3, 5);
  const Tensor3 x = cpd_reconstruct(truth);
  const auto terms = two_terms(x);
  SolverConfig cfg;
  // Start near the truth: the coupled solver is a local method.
  FactorTriple init = truth;
  init.A += 0.05 * random_factors(x.dims(), 3, 6).A;
  const CpdResult r = coupled_cpd(terms, x.dims(), 3, init, cfg);
  CHECK(r.converged);
  CHECK(rel_err(cpd_reconstruct(r.factors), x) < 1e-8);
}

TEST_CASE("coverage and fixed modes") {
  const Tensor3 x = cpd_reconstruct(random_factors({6, 4, 4}, 2, 5));
  const SelectionSet some = SelectionSet::strided(6, 2);
  const std::vector<CoupledTerm> t{{gather(x, some, SelectionSet::all(4), SelectionSet::all(4)), some, SelectionSet::all(4), SelectionSet::all(4)}};
  CHECK_THROWS_WITH_AS(check_coverage(t, x.dims()), doctest::Contains("rows index 1"), ValidationError);
  CHECK_NOTHROW(check_coverage(t, x.dims(), Mode::rows));

  const FactorTriple truth = random_factors(x.dims(), 2, 5);
  FactorTriple warm = random_factors(x.dims(), 2, 77);
  warm.C = truth.C;
  SolverConfig cfg;
  cfg.init = InitKind::provided;
  const CpdResult r = cpd(cpd_reconstruct(truth), 2, cfg, warm, Mode::fibers);
  CHECK(r.factors.C == truth.C);
  CHECK(r.relative_residual < 1e-8);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolverConfig{};
  c.tol = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK_THROWS_AS(cpd(Tensor3({2, 2, 2}), 0, SolverConfig{}), ValidationError);
}
