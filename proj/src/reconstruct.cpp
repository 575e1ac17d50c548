#include "tensamp/reconstruct.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "logging.hpp"
#include "tensamp/alignment.hpp"
#include "tensamp/error.hpp"

namespace tensamp {
namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void gate(RecoveryReport& r, const SamplingPlan& plan, std::size_t rank, bool force) {
  r.rules = validate(plan);
  if (!r.rules.valid()) throw ValidationError("sampling plan rejected: " + r.rules.summary());
  r.generic = check_generic(plan, rank);
  if (!r.generic.recoverable) {
    if (!force) throw ValidationError("rank " + std::to_string(rank) + " is not provably recoverable: " + r.generic.summary());
    r.forced = true;
    r.notes.push_back("forced run: " + r.generic.summary());
  }
}

SolverConfig step_config(const SolverConfig& cfg, std::size_t d) {
  SolverConfig c = cfg;
  c.seed = cfg.seed + 7919 * d;
  return c;
}

void finish(RecoveryReport& r, const std::vector<CoupledTerm>& terms, const Dims& dims, std::size_t rank,
            const FactorTriple& init, const SolverConfig& cfg, Stopwatch& sw) {
  CpdResult res = coupled_cpd(terms, dims, rank, init, cfg);
  r.factors = std::move(res.factors);
  r.step3 = std::move(res.history);
  r.relative_residual = res.relative_residual;
  r.converged = res.converged;
  r.seconds.emplace_back("step3", sw.lap());
  r.estimate = cpd_reconstruct(r.factors);
  if (!r.converged) {
    r.notes.push_back("coupled solve ended with relative residual " + std::to_string(r.relative_residual) +
                      (r.step3.stopped ? "" : " (iteration budget exhausted)"));
  }
}

/// Least-squares solve of kr * X^T = rhs for X; refuses a rank-deficient kr
/// unless forced.
Matrix solve_kr(const Matrix& kr, const Matrix& rhs, bool force, RecoveryReport& r) {
  Eigen::JacobiSVD<Matrix> svd(kr, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  std::ostringstream os;
  os << "Khatri-Rao system " << kr.rows() << "x" << kr.cols() << ", condition estimate " << cond;
  r.notes.push_back(os.str());
  if (!(cond < 1e12)) {
    if (!force) throw NumericalError("slab recovery: " + os.str() + " (numerically rank-deficient)");
    svd.setThreshold(1e-12);
  }
  return svd.solve(rhs).transpose();
}

}  // namespace

RecoveryReport recover_slab(const Tensor3& y1, const Tensor3& y2, const SlabPlan& plan, std::size_t rank,
                            const SolverConfig& cfg, bool force) {
  cfg.validate();
  Stopwatch sw;
  const Dims dims{plan.horizontal.ambient(), y1.dims()[1], plan.frontal.ambient()};
  const SamplingPlan sp = SamplingPlan::slab(dims, plan);
  if (y1.dims() != Dims{plan.horizontal.size(), dims[1], dims[2]} || y2.dims() != Dims{dims[0], dims[1], plan.frontal.size()}) {
    throw ShapeError("recover_slab: sub-tensor shapes do not match the plan");
  }
  RecoveryReport r;
  r.mechanism = "slab";
  gate(r, sp, rank, force);
  r.seconds.emplace_back("checks", sw.lap());

  FactorTriple init;
  if (r.generic.alternative == 1) {
    // Y1 = [[P1 A, B, C]]; A then follows from Y2^(1) = (P3 C kr B) A^T.
    CpdResult c = cpd(y1, rank, step_config(cfg, 0));
    r.step1.push_back(c.history);
    if (!c.converged) r.notes.push_back("step 1 CPD of Y1 did not converge");
    r.seconds.emplace_back("step1", sw.lap());
    const Matrix kr = khatri_rao(select_rows(c.factors.C, plan.frontal), c.factors.B);
    Matrix A = solve_kr(kr, unfold(y2, Mode::rows), force, r);
    init = FactorTriple(std::move(A), c.factors.B, c.factors.C);
  } else {
    // Y2 = [[A, B, P3 C]]; C then follows from Y1^(3) = (B kr P1 A) C^T.
    CpdResult c = cpd(y2, rank, step_config(cfg, 0));
    r.step1.push_back(c.history);
    if (!c.converged) r.notes.push_back("step 1 CPD of Y2 did not converge");
    r.seconds.emplace_back("step1", sw.lap());
    const Matrix kr = khatri_rao(c.factors.B, select_rows(c.factors.A, plan.horizontal));
    Matrix C = solve_kr(kr, unfold(y1, Mode::fibers), force, r);
    init = FactorTriple(c.factors.A, c.factors.B, std::move(C));
  }
  r.seconds.emplace_back("step2", sw.lap());
  const std::vector<CoupledTerm> terms{{y1, plan.horizontal, SelectionSet::all(dims[1]), SelectionSet::all(dims[2])},
                                       {y2, SelectionSet::all(dims[0]), SelectionSet::all(dims[1]), plan.frontal}};
  finish(r, terms, dims, rank, init, cfg, sw);
  return r;
}

namespace {

RecoveryReport recover_patterns(const std::string& mechanism, const SamplingPlan& plan, const std::vector<Tensor3>& ys,
                                std::size_t rank, const SolverConfig& cfg, bool force) {
  cfg.validate();
  Stopwatch sw;
  RecoveryReport r;
  r.mechanism = mechanism;
  gate(r, plan, rank, force);
  const auto fps = plan.footprints();
  if (ys.size() != fps.size()) throw ShapeError(mechanism + " recovery: expected " + std::to_string(fps.size()) + " sub-tensors");
  std::vector<CoupledTerm> terms;
  for (std::size_t d = 0; d < fps.size(); ++d) {
    terms.push_back({ys[d], fps[d].rows, fps[d].cols, fps[d].fibers});
    terms.back().validate(plan.dims());
  }
  r.seconds.emplace_back("checks", sw.lap());

  std::vector<SubFactors> subs;
  for (std::size_t d = 0; d < fps.size(); ++d) {
    CpdResult c = cpd(ys[d], rank, step_config(cfg, d));
    if (!c.converged) r.notes.push_back("step 1 CPD of pattern " + std::to_string(d) + " did not converge");
    r.step1.push_back(std::move(c.history));
    subs.push_back({d, std::move(c.factors.A), std::move(c.factors.B), std::move(c.factors.C), fps[d].rows, fps[d].cols,
                    fps[d].fibers});
  }
  r.seconds.emplace_back("step1", sw.lap());
  const FactorTriple init = stitch(align_all(subs), plan.dims(), rank);
  r.seconds.emplace_back("step2", sw.lap());
  finish(r, terms, plan.dims(), rank, init, cfg, sw);
  return r;
}

Dims dims_from(const std::vector<Tensor3>& ys, std::size_t I, std::size_t J) {
  if (ys.empty()) throw ShapeError("no sub-tensors supplied");
  return {I, J, ys[0].dims()[2]};
}

}  // namespace

RecoveryReport recover_fiber(const std::vector<Tensor3>& ys, const std::vector<FiberPattern>& patterns, std::size_t rank,
                             const SolverConfig& cfg, bool force) {
  if (patterns.empty()) throw ValidationError("fiber plan has no patterns");
  const Dims dims = dims_from(ys, patterns[0].rows.ambient(), patterns[0].cols.ambient());
  return recover_patterns("fiber", SamplingPlan::fiber(dims, patterns), ys, rank, cfg, force);
}

RecoveryReport recover_entry(const std::vector<Tensor3>& ys, const std::vector<EntryPattern>& patterns, std::size_t rank,
                             const SolverConfig& cfg, bool force) {
  if (patterns.empty()) throw ValidationError("entry plan has no patterns");
  const Dims dims{patterns[0].rows.ambient(), patterns[0].cols.ambient(), patterns[0].fibers.ambient()};
  return recover_patterns("entry", SamplingPlan::entry(dims, patterns), ys, rank, cfg, force);
}

RecoveryReport recover(const SamplingPlan& plan, const std::vector<Tensor3>& ys, std::size_t rank, const SolverConfig& cfg,
                       bool force) {
  switch (plan.kind()) {
    case PlanKind::slab:
      if (ys.size() != 2) throw ShapeError("slab recovery needs exactly two sub-tensors");
      return recover_slab(ys[0], ys[1], plan.slab_plan(), rank, cfg, force);
    case PlanKind::fiber: return recover_patterns("fiber", plan, ys, rank, cfg, force);
    case PlanKind::entry: return recover_patterns("entry", plan, ys, rank, cfg, force);
  }
  throw ValidationError("unknown plan kind");
}

}  // namespace tensamp
