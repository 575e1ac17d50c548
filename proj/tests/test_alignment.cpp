#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tensamp/alignment.hpp"
#include "tensamp/error.hpp"

using namespace tensamp;

TEST_CASE("hungarian matches exhaustive search") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = trial % 5 == 0 ? std::floor(u(g) / 3) : u(g);  // ties every fifth
    const auto [best, lex] = oracle::brute_force_assignment(c);
    const auto got = hungarian(c);
    CAPTURE(trial);
    CHECK(oracle::assignment_cost(c, got) == doctest::Approx(best).epsilon(1e-12));
    CHECK(got == lex);
  }
}

TEST_CASE("hungarian edge cases") {
  CHECK(hungarian(Eigen::MatrixXd::Constant(1, 1, 5.0)) == std::vector<std::size_t>{0});
  CHECK(hungarian(Eigen::MatrixXd::Zero(3, 3)) == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(hungarian(Eigen::MatrixXd::Zero(2, 3)), ShapeError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(hungarian(bad), NumericalError);
}

namespace {

struct Planted {
  SubFactors ref, other;
  std::vector<std::size_t> perm;  // other column q = ref column perm^-1 ...
  std::array<std::vector<cplx>, 3> lambda;
};

// other(:, pi[f]) = lambda_m[f] * ref(:, f) with lambda_1 lambda_2 lambda_3 = 1.
Planted plant(std::uint64_t seed, std::size_t F) {
  std::mt19937_64 g(seed);
  const FactorTriple f = random_factors({6, 5, 4}, F, seed);
  Planted p;
  p.ref = {0, f.A, f.B, f.C, SelectionSet::all(6), SelectionSet::all(5), SelectionSet::all(4)};
  std::vector<std::size_t> pi(F);
  std::iota(pi.begin(), pi.end(), 0);
  std::shuffle(pi.begin(), pi.end(), g);
  std::uniform_real_distribution<double> u(0.5, 2.0), ph(-3.0, 3.0);
  for (auto& l : p.lambda) l.resize(F);
  for (std::size_t c = 0; c < F; ++c) {
    p.lambda[0][c] = std::polar(u(g), ph(g));
    p.lambda[1][c] = std::polar(u(g), ph(g));
    p.lambda[2][c] = 1.0 / (p.lambda[0][c] * p.lambda[1][c]);
  }
  p.other = p.ref;
  for (std::size_t c = 0; c < F; ++c)
    for (Mode m : kAllModes) p.other.factor(m).col(static_cast<Eigen::Index>(pi[c])) = p.lambda[index(m)][c] * p.ref.factor(m).col(static_cast<Eigen::Index>(c));
  p.perm = pi;
  return p;
}

}  // namespace

TEST_CASE("alignment inverts a planted permutation and scaling") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Planted p = plant(s, 1 + s % 6);
    std::vector<std::size_t> shared(5);
    std::iota(shared.begin(), shared.end(), 0);
    const auto perm = match_permutation(p.ref, p.other, Mode::cols, shared);
    CHECK(perm == p.perm);
    const Assignment a = resolve_scaling(p.ref, p.other, perm, Mode::cols);
    const SubFactors fixed = apply_assignment(p.other, a);
    for (Mode m : kAllModes) CHECK((fixed.factor(m) - p.ref.factor(m)).norm() <= 1e-8 * p.ref.factor(m).norm());
    for (std::size_t c = 0; c < perm.size(); ++c) {
      for (Mode m : kAllModes) CHECK(std::abs(a.scales[index(m)][c] * p.lambda[index(m)][c] - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("match_permutation needs two shared indices") {
  const Planted p = plant(1, 3);
  CHECK_THROWS_AS(match_permutation(p.ref, p.other, Mode::rows, {2}), ValidationError);
  SubFactors zero = p.other;
  zero.A.setZero();
  CHECK_THROWS_AS(match_permutation(p.ref, zero, Mode::rows, {0, 1, 2}), NumericalError);
}

TEST_CASE("align_all and stitch rebuild global factors from overlapping pieces") {
  const FactorTriple f = random_factors({8, 6, 5}, 3, 9);
  const SelectionSet r0({0, 1, 2, 3, 4}, 8), r1({3, 4, 5, 6, 7}, 8);
  const SelectionSet c0({0, 1, 2, 3}, 6), c1({2, 3, 4, 5}, 6);
  const SelectionSet k = SelectionSet::all(5);
  std::vector<SubFactors> subs{{0, select_rows(f.A, r0), select_rows(f.B, c0), f.C, r0, c0, k},
                               {1, select_rows(f.A, r1), select_rows(f.B, c1), f.C, r1, c1, k}};
  // Scramble the second piece.
  std::vector<std::size_t> pi{2, 0, 1};
  SubFactors s = subs[1];
  for (std::size_t c = 0; c < 3; ++c) {
    const auto e = static_cast<Eigen::Index>(c), q = static_cast<Eigen::Index>(pi[c]);
    s.A.col(q) = 2.0 * subs[1].A.col(e);
    s.B.col(q) = cplx(0, 1) * subs[1].B.col(e);
    s.C.col(q) = cplx(0, -0.5) * subs[1].C.col(e);
  }
  subs[1] = s;
  const FactorTriple g = stitch(align_all(subs), {8, 6, 5}, 3);
  CHECK(nre(cpd_reconstruct(g), cpd_reconstruct(f)) < 1e-10);

  // Drop row 7 from coverage.
  subs[1].rows = SelectionSet({3, 4, 5, 6}, 8);
  subs[1].A.conservativeResize(4, 3);
  CHECK_THROWS_AS(stitch(align_all(subs), {8, 6, 5}, 3), ValidationError);

  // A piece that shares fewer than two indices in every mode cannot be reached.
  std::vector<SubFactors> far{subs[0], {1, select_rows(f.A, SelectionSet({4, 5}, 8)), select_rows(f.B, SelectionSet({3, 4}, 6)),
                                        select_rows(f.C, SelectionSet({0}, 5)), SelectionSet({4, 5}, 8), SelectionSet({3, 4}, 6),
                                        SelectionSet({0}, 5)}};
  CHECK_THROWS_AS(align_all(far), ValidationError);
}
