// Acceptance run: one PASS/FAIL line per criterion, details indented below.
#include <chrono>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "tensamp/alignment.hpp"
#include "tensamp/error.hpp"
#include "tensamp/reconstruct.hpp"
#include "tensamp/retsina.hpp"
#include "tensamp/sweep.hpp"

using namespace tensamp;

namespace {

int failures = 0;

void verdict(bool ok, const char* id, const std::string& what) {
  std::printf("%s %s %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... Args>
void detail(const char* fmt, Args... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

// ---------------------------------------------------------------------------
void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dims d{512, 512, 513};
  bool ok = true;
  auto slab = [&](std::size_t i1, std::size_t k2) {
    return SamplingPlan::slab(d, {SelectionSet::strided(512, 512 / i1), SelectionSet::strided(513, 513 / k2 + 1)});
  };
  auto smallest_i1 = [&](std::size_t rank, std::size_t k2) {
    for (std::size_t i1 = 2; i1 <= 512; i1 *= 2) {
      if (check_generic(slab(i1, k2), rank).recoverable) return i1;
    }
    return std::size_t{0};
  };
  const std::size_t i1 = smallest_i1(1000, 2);
  const double r_slab = sampling_ratio(slab(8, 2));
  ok = ok && i1 == 8 && near(r_slab, 0.019, 0.001) && !check_generic(slab(4, 2), 1000).recoverable;
  detail("slab F=1000: smallest I1 with K2=2 is %zu (want 8); I1=4 provable: %s; r = %.5f (want 0.019 +- 0.001)", i1,
         check_generic(slab(4, 2), 1000).recoverable ? "yes" : "no", r_slab);

  // Entry: every pattern must satisfy min{I_d J_d, J_d K_d, I_d K_d} >= 4*ceil_pow2(F),
  // i.e. cubes of side sqrt(4*ceil_pow2(F)); D = 512 / side patterns cover the rows.
  auto entry_count = [](std::size_t rank) {
    const std::size_t need = 4 * ceil_pow2(rank);
    std::size_t side = 1;
    while (side * side < need) ++side;
    const std::size_t D = 512 / side;
    return std::pair{side, D * side * side * side + 512};
  };
  const auto [side, count] = entry_count(1000);
  const double r_entry = static_cast<double>(count) / (512.0 * 512.0 * 513.0);
  ok = ok && side == 64 && count == 2097664 && near(r_entry, 0.016, 0.001);
  detail("entry F=1000: pattern side %zu, count %zu (want 2,097,664), r = %.5f (want 0.016 +- 0.001)", side, count, r_entry);
  const SamplingPlan e8 = make_regular_plan(PlanKind::entry, d, {8, 8, 8});
  const GenericVerdict v8 = check_generic(e8, 1000);
  ok = ok && v8.recoverable && near(sampling_ratio(e8), 0.016, 0.001);
  detail("entry F=1000, regular stride-8 plan: %zu entries, r = %.5f, generic %s", observed_count(e8), sampling_ratio(e8),
         v8.recoverable ? "recoverable" : "NOT recoverable");

  const std::size_t i1_250 = smallest_i1(250, 2);
  const double r_slab_250 = sampling_ratio(slab(i1_250, 2));
  const SamplingPlan e16 = make_regular_plan(PlanKind::entry, d, {16, 16, 16});
  const double r_entry_250_formula = static_cast<double>(entry_count(250).second - 512) / (512.0 * 512.0 * 513.0);
  ok = ok && near(r_slab_250, 0.008, 0.001) && check_generic(e16, 250).recoverable && near(sampling_ratio(e16), 0.004, 0.001) &&
       near(r_entry_250_formula, 0.004, 0.001);
  detail("F=250: slab I1=%zu K2=2 r = %.5f (want 0.008); entry side-32 count r = %.5f, regular stride-16 plan r = %.5f (want 0.004)",
         i1_250, r_slab_250, r_entry_250_formula, sampling_ratio(e16));

  const SamplingPlan fib = make_regular_plan(PlanKind::fiber, d, {8, 8, 1});
  const std::size_t fibers = observed_count(fib) / 513;
  detail("fiber F=1000 (informational): regular stride-8 plan observes %zu fibers, r = %.4f; the text quotes 33,280 and 0.13",
         fibers, sampling_ratio(fib));
  const double secs = seconds_since(t0);
  detail("runtime %.3f s", secs);
  verdict(ok, "1", "identifiability arithmetic on the 512x512x513 example");
}

// ---------------------------------------------------------------------------
void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  bool all = true;
  for (PlanKind kind : {PlanKind::slab, PlanKind::fiber, PlanKind::entry}) {
    int good = 0, flagged_failures = 0, failures_seen = 0;
    for (int t = 0; t < 30; ++t) {
      std::mt19937_64 g(1000 + 97 * t + static_cast<int>(kind));
      std::uniform_int_distribution<std::size_t> dim(20, 50);
      const Dims d{dim(g), dim(g), dim(g)};
      const std::size_t rank = 1 + static_cast<std::size_t>(t % 8);
      std::optional<SamplingPlan> plan;
      for (std::size_t s = 6; s >= 2 && !plan; --s) {
        try {
          SamplingPlan p = make_regular_plan(kind, d, {s, kind == PlanKind::slab ? 1 : s, kind == PlanKind::fiber ? 1 : s});
          if (check_generic(p, rank).recoverable) plan = p;
        } catch (const ValidationError&) {
        }
      }
      if (!plan) {
        detail("%s trial %d: no provable plan found", kind_name(kind), t);
        continue;
      }
      const Tensor3 x = cpd_reconstruct(random_factors(d, rank, 5000 + t));
      SolverConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(t);
      double e = 1.0;
      bool conv = false;
      try {
        const RecoveryReport r = recover(*plan, apply(*plan, x), rank, cfg);
        e = nre(r.estimate, x);
        conv = r.converged;
      } catch (const Error& err) {
        detail("%s trial %d: %s", kind_name(kind), t, err.what());
      }
      if (e < 1e-6) {
        ++good;
      } else {
        ++failures_seen;
        if (!conv) ++flagged_failures;
        detail("%s trial %d dims %zux%zux%zu F=%zu: NRE %.3e (%s)", kind_name(kind), t, d[0], d[1], d[2], rank, e,
               conv ? "NOT flagged" : "flagged non-converged");
      }
    }
    const bool ok = good >= 28 && flagged_failures == failures_seen;
    all = all && ok;
    detail("%s: %d/30 with NRE < 1e-6, %d/%d failures flagged", kind_name(kind), good, flagged_failures, failures_seen);
  }
  const double secs = seconds_since(t0);
  detail("runtime %.1f s (target < 300 s)", secs);
  verdict(all && secs < 300.0, "2", "desk-scale exact recovery, 30 instances per mechanism");
}

// ---------------------------------------------------------------------------
void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.dims = {50, 50, 50};
  cfg.ranks = {2, 5, 10};
  cfg.ratios = {0.5, 0.2, 0.05};
  cfg.trials = 3;
  cfg.seed = 2024;
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto rec = run_sweep(cfg);
  auto at = [&](std::size_t fi, std::size_t ri) { return rec[fi * 3 + ri]; };
  bool ok = true;
  for (std::size_t fi = 0; fi < 3; ++fi) {
    for (std::size_t ri = 0; ri < 3; ++ri) {
      const auto& c = at(fi, ri);
      detail("F=%2zu requested r=%.2f actual r=%.4f NRE %.3e %s", c.rank, cfg.ratios[ri], c.ratio, c.nre,
             c.feasible ? (c.converged ? "converged" : "not converged") : "infeasible");
      // Ratios are listed in decreasing order, ranks in increasing order.
      if (ri > 0) ok = ok && c.nre >= at(fi, ri - 1).nre - 1e-6;
      if (fi > 0) ok = ok && c.nre >= at(fi - 1, ri).nre - 1e-6;
    }
  }
  detail("runtime %.1f s", seconds_since(t0));
  verdict(ok, "3", "sweep NRE nonincreasing in r and nondecreasing in F (slab, 50^3, 3 trials)");
}

// ---------------------------------------------------------------------------
void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  RetsinaConfig cfg;
  cfg.init_iters = 200;
  cfg.refine_iters = 200;
  cfg.final_iters = 200;
  detail("budgets: %d initialization sweeps, %d refinement sweeps, %d Gauss-Newton iterations", cfg.init_iters, cfg.refine_iters,
         cfg.final_iters);
  bool ok = true;
  for (int multi = 0; multi < 2; ++multi) {
    const Dims d = multi ? Dims{64, 49, 8} : Dims{64, 31, 4};
    const std::size_t rank = multi ? 4 : 5;
    const AccelPlan plan = multi ? AccelPlan::multi(2, 2, 8, 8, 2, 4) : AccelPlan::single(3, 8, 8, 4);
    int good = 0;
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
      const Tensor3 x = cpd_reconstruct(random_factors(d, rank, 700 + t));
      cfg.solver.seed = static_cast<std::uint64_t>(t);
      const Tensor3 obs = apply_mask(x, accel_mask(plan, d));
      const RecoveryReport r = multi ? ms_retsina(obs, plan, rank, cfg) : retsina(obs, plan, rank, cfg);
      const double e = nre(r.estimate, x);
      worst = std::max(worst, e);
      good += e < 1e-5;
      if (e >= 1e-5) detail("%s trial %d: NRE %.3e (%s)", r.mechanism.c_str(), t, e, r.converged ? "converged" : "flagged");
    }
    detail("%s %zux%zux%zu rank %zu: %d/10 with NRE < 1e-5, worst %.3e", multi ? "ms-retsina r=s=2" : "retsina n=3", d[0], d[1], d[2],
           rank, good, worst);
    ok = ok && good >= 9;
  }
  detail("runtime %.1f s", seconds_since(t0));
  verdict(ok, "4", "RETSINA and MS-RETSINA synthetic oracle (>= 9/10 trials each with NRE < 1e-5)");
}

// ---------------------------------------------------------------------------
void criterion5() {
  const std::size_t n = max_acceleration({10816, 490, 32}, 100);
  bool ok = n >= 3;
  detail("max_acceleration(10816, 490, 32, F=100) = %zu (want >= 3)", n);
  int checked = 0, bad = 0;
  for (std::size_t r = 1; r <= 4; ++r) {
    for (std::size_t s = 1; s <= 4; ++s) {
      const std::size_t mx = 2, my = 8, ms = 4, mc = 3;
      const AccelPlan p = AccelPlan::multi(r, s, mx, my, ms, mc);
      const Dims d{mx * my, 1 + 2 * r * s, ms * mc};
      const Mask m = accel_mask(p, d);
      for (std::size_t i = 0; i < d[0]; ++i)
        for (std::size_t k = 0; k < d[2]; ++k) bad += !m(i, 0, k);
      for (std::size_t period = 0; period < 2; ++period) {
        std::vector<int> hits(d[0] * d[2], 0);
        for (std::size_t j = 1 + period * r * s; j <= (period + 1) * r * s; ++j)
          for (std::size_t k = 0; k < d[2]; ++k)
            for (std::size_t i = 0; i < d[0]; ++i) hits[i + d[0] * k] += m(i, j, k);
        for (int h : hits) bad += h != 1;
      }
      ++checked;
    }
  }
  detail("mask coverage: %d (r, s) pairs, %d coordinates not seen exactly once per period", checked, bad);
  ok = ok && bad == 0 && checked == 16;
  verdict(ok, "5", "acceleration bound at the single-slice scan geometry and exhaustive mask coverage");
}

// ---------------------------------------------------------------------------
void criterion6() {
  bool ok = true;
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int exact = 0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + t % 7;
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = t % 4 == 0 ? std::floor(u(g) / 4) : u(g);
    const auto [best, lex] = oracle::brute_force_assignment(c);
    const auto got = hungarian(c);
    exact += std::abs(oracle::assignment_cost(c, got) - best) <= 1e-12 * (1 + std::abs(best)) && got == lex;
  }
  detail("hungarian vs exhaustive search: %d/200 exact", exact);
  ok = ok && exact == 200;

  double worst_grad = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t rank = 1 + static_cast<std::size_t>(t % 3);
    const Dims d{4, 4, 4};
    const Tensor3 x = cpd_reconstruct(random_factors(d, rank, 300 + t));
    const SamplingPlan p = t % 2 == 0 ? make_regular_plan(PlanKind::slab, d, {2, 1, 2}) : make_regular_plan(PlanKind::entry, d, {2, 2, 2});
    std::vector<CoupledTerm> terms;
    const auto ys = apply(p, x);
    const auto fps = p.footprints();
    for (std::size_t q = 0; q < ys.size(); ++q) terms.push_back({ys[q], fps[q].rows, fps[q].cols, fps[q].fibers});
    const FactorTriple f = random_factors(d, rank, 900 + t);
    worst_grad = std::max(worst_grad, oracle::rel_diff(coupled_gradient(terms, f), oracle::fd_gradient(terms, f)));
  }
  detail("coupled gradient vs central differences: worst relative error %.2e over 20 instances (tol 1e-5)", worst_grad);
  ok = ok && worst_grad <= 1e-5;

  double worst_unfold = 0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<std::size_t> dim(1, 7), rk(1, 5);
    const Dims d{dim(g), dim(g), dim(g)};
    const FactorTriple f = random_factors(d, rk(g), 400 + t);
    const Tensor3 x = oracle::triple_loop(f);
    auto rel = [](const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); };
    worst_unfold = std::max({worst_unfold, rel(unfold(x, Mode::rows), oracle::khatri_rao_loop(f.C, f.B) * f.A.transpose()),
                             rel(unfold(x, Mode::cols), oracle::khatri_rao_loop(f.C, f.A) * f.B.transpose()),
                             rel(unfold(x, Mode::fibers), oracle::khatri_rao_loop(f.B, f.A) * f.C.transpose()),
                             rel(khatri_rao(f.B, f.A), oracle::khatri_rao_loop(f.B, f.A))});
  }
  detail("unfold / Khatri-Rao identities: worst relative error %.2e over 100 triples (tol 1e-12)", worst_unfold);
  ok = ok && worst_unfold <= 1e-12;

  int kr_ok = 0;
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index rows = 2 + t % 5, cols = 1 + t % 6;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = {nd(g), nd(g)};
    if (t % 4 == 1 && cols > 1) m.col(cols - 1) = cplx(0.5, 2.0) * m.col(0);
    if (t % 5 == 2 && cols > 2) m.col(2) = m.col(0) - m.col(1);
    kr_ok += kruskal_rank(m) == oracle::kruskal_rank(m);
  }
  detail("kruskal_rank vs definition-level brute force: %d/50 agree", kr_ok);
  ok = ok && kr_ok == 50;
  verdict(ok, "6", "oracle equivalence suites");
}

// ---------------------------------------------------------------------------
void criterion7() {
  int good = 0;
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    std::mt19937_64 g(7000 + t);
    const std::size_t F = 1 + static_cast<std::size_t>(t % 8);
    const FactorTriple f = random_factors({7, 6, 5}, F, 7000 + t);
    SubFactors ref{0, f.A, f.B, f.C, SelectionSet::all(7), SelectionSet::all(6), SelectionSet::all(5)};
    std::vector<std::size_t> pi(F);
    std::iota(pi.begin(), pi.end(), 0);
    std::shuffle(pi.begin(), pi.end(), g);
    std::uniform_real_distribution<double> mag(0.3, 3.0), ph(-3.1, 3.1);
    std::array<std::vector<cplx>, 3> lambda;
    for (auto& l : lambda) l.resize(F);
    SubFactors other = ref;
    for (std::size_t c = 0; c < F; ++c) {
      lambda[0][c] = std::polar(mag(g), ph(g));
      lambda[1][c] = std::polar(mag(g), ph(g));
      lambda[2][c] = 1.0 / (lambda[0][c] * lambda[1][c]);
      for (Mode m : kAllModes) other.factor(m).col(static_cast<Eigen::Index>(pi[c])) = lambda[index(m)][c] * ref.factor(m).col(static_cast<Eigen::Index>(c));
    }
    const Mode mode = kAllModes[static_cast<std::size_t>(t % 3)];
    std::vector<std::size_t> shared(ref.factor(mode).rows());
    std::iota(shared.begin(), shared.end(), 0);
    const auto perm = match_permutation(ref, other, mode, shared);
    const Assignment a = resolve_scaling(ref, other, perm, mode);
    double err = 0;
    for (std::size_t c = 0; c < F; ++c)
      for (Mode m : kAllModes) err = std::max(err, std::abs(a.scales[index(m)][c] * lambda[index(m)][c] - 1.0));
    worst = std::max(worst, err);
    good += perm == pi && err <= 1e-8;
  }
  detail("%d/50 planted (permutation, scaling) pairs inverted; worst scale error %.2e (tol 1e-8)", good, worst);
  verdict(good == 50, "7", "alignment inverts planted permutation and scaling");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
