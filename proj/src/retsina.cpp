#include "tensamp/retsina.hpp"

#include <chrono>
#include <cmath>

#include "linalg.hpp"
#include "logging.hpp"
#include "tensamp/error.hpp"

namespace tensamp {

AccelPlan AccelPlan::single(std::size_t n, std::size_t mx, std::size_t my, std::size_t mc) {
  AccelPlan p;
  p.r = n;
  p.mx = mx;
  p.my = my;
  p.mc = mc;
  return p;
}

AccelPlan AccelPlan::multi(std::size_t r, std::size_t s, std::size_t mx, std::size_t my, std::size_t ms, std::size_t mc) {
  AccelPlan p;
  p.r = r;
  p.s = s;
  p.multi_slice = true;
  p.mx = mx;
  p.my = my;
  p.ms = ms;
  p.mc = mc;
  return p;
}

void AccelPlan::validate(const Dims& dims) const {
  if (r < 1 || s < 1) throw ValidationError("acceleration factors must be >= 1");
  if (mx < 1 || my < 1 || ms < 1 || mc < 1) throw ValidationError("scan geometry must be positive");
  if (!multi_slice && (s != 1 || ms != 1)) throw ValidationError("single-slice plan with s or ms != 1");
  if (dims[0] != mx * my) {
    throw ValidationError("geometry mismatch: I = " + std::to_string(dims[0]) + " but mx*my = " + std::to_string(mx * my));
  }
  if (dims[2] != ms * mc) {
    throw ValidationError("geometry mismatch: K = " + std::to_string(dims[2]) + " but ms*mc = " + std::to_string(ms * mc));
  }
  if (r > my) throw ValidationError("k_y residue classes outnumber the " + std::to_string(my) + " k_y lines");
  if (s > ms) throw ValidationError("slice groups outnumber the " + std::to_string(ms) + " slices");
  if (n() > 1 && dims[1] < n() + 1) {
    throw ValidationError("frame count " + std::to_string(dims[1]) + " leaves some residue class unobserved; need >= " +
                          std::to_string(n() + 1));
  }
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto b : bits) c += b;
  return c;
}

Mask accel_mask(const AccelPlan& plan, const Dims& dims) {
  plan.validate(dims);
  Mask m{dims, std::vector<std::uint8_t>(dims[0] * dims[1] * dims[2], 0)};
  for (std::size_t k = 0; k < dims[2]; ++k) {
    const std::size_t group = (k / plan.mc) % plan.s;
    for (std::size_t j = 0; j < dims[1]; ++j) {
      const bool full = j == 0 ? plan.first_frame_full : false;
      if (!full && j == 0) continue;
      if (!full && plan.slice_group(j) != group) continue;
      for (std::size_t i = 0; i < dims[0]; ++i) {
        if (full || (i / plan.mx) % plan.r == plan.residue(j)) m.bits[i + dims[0] * (j + dims[1] * k)] = 1;
      }
    }
  }
  return m;
}

Tensor3 apply_mask(const Tensor3& t, const Mask& m) {
  if (t.dims() != m.dims) throw ShapeError("mask shape differs from tensor shape");
  Tensor3 out(t.dims());
  for (std::size_t p = 0; p < t.size(); ++p) {
    if (m.bits[p]) out.data()[p] = t.data()[p];
  }
  return out;
}

std::size_t max_acceleration(const Dims& dims, std::size_t rank) {
  if (rank < 1) throw ValidationError("rank must be >= 1");
  const double P = 4.0 * static_cast<double>(ceil_pow2(rank));
  const double I = static_cast<double>(dims[0]), J = static_cast<double>(dims[1]), K = static_cast<double>(dims[2]);
  const double bound = std::min({std::sqrt(I * J / P), J * K / P, I * K / P});
  return static_cast<std::size_t>(std::floor(bound));
}

bool multi_slice_feasible(const Dims& dims, std::size_t rank, std::size_t r, std::size_t s) {
  if (rank < 1 || r < 1 || s < 1) return false;
  const double P = 4.0 * static_cast<double>(ceil_pow2(rank));
  const double I = static_cast<double>(dims[0]), J = static_cast<double>(dims[1]), K = static_cast<double>(dims[2]);
  const double rd = static_cast<double>(r), sd = static_cast<double>(s);
  return rd * sd * P <= std::min({I * K, J * K / sd, I * J / rd});
}

std::size_t max_multi_r(const Dims& dims, std::size_t rank, std::size_t s) {
  std::size_t best = 0;
  for (std::size_t r = 1; r <= dims[0] && multi_slice_feasible(dims, rank, r, s); ++r) best = r;
  return best;
}

void RetsinaConfig::validate() const {
  solver.validate();
  if (init_iters < 1 || refine_iters < 1) throw ValidationError("RETSINA ALS budgets must be >= 1");
  if (final_iters < 0) throw ValidationError("final_iters must be >= 0");
}

namespace {

/// Sub-tensor layout: pattern d = rho + r*g sees k_y class rho, slice group g
/// and frames {0} plus every frame scheduled for d.
struct Layout {
  std::vector<SelectionSet> rows, frames, fibers;
  std::vector<std::size_t> pattern_of_frame;  ///< entry 0 unused
};

Layout make_layout(const AccelPlan& p, const Dims& dims) {
  const std::size_t n = p.n();
  std::vector<std::vector<std::size_t>> rows(p.r), fibers(p.s), frames(n, std::vector<std::size_t>{0});
  for (std::size_t i = 0; i < dims[0]; ++i) rows[(i / p.mx) % p.r].push_back(i);
  for (std::size_t k = 0; k < dims[2]; ++k) fibers[(k / p.mc) % p.s].push_back(k);
  Layout l;
  l.pattern_of_frame.assign(dims[1], 0);
  for (std::size_t j = 1; j < dims[1]; ++j) {
    const std::size_t d = p.residue(j) + p.r * p.slice_group(j);
    l.pattern_of_frame[j] = d;
    frames[d].push_back(j);
  }
  for (std::size_t d = 0; d < n; ++d) {
    l.rows.emplace_back(rows[d % p.r], dims[0]);
    l.fibers.emplace_back(fibers[d / p.r], dims[2]);
    l.frames.emplace_back(frames[d], dims[1]);
  }
  return l;
}

/// Sums every n consecutive frames after frame 0; trailing frames join the
/// last block.
Tensor3 frame_sum(const Tensor3& x, std::size_t n) {
  const auto [I, J, K] = x.dims();
  const std::size_t blocks = (J - 1) / n;
  Tensor3 out({I, blocks, K});
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 1; j < J; ++j) {
      const std::size_t b = std::min((j - 1) / n, blocks - 1);
      for (std::size_t i = 0; i < I; ++i) out(i, b, k) += x(i, j, k);
    }
  }
  return out;
}

/// Row j of B by least squares with A and C fixed, over the observed rows and
/// fibers of that frame.
void solve_frame(const Tensor3& x, std::size_t j, const SelectionSet& rows, const SelectionSet& fibers, const Matrix& A,
                 const Matrix& C, Matrix& B) {
  const Matrix Ar = select_rows(A, rows);
  const Matrix Cf = select_rows(C, fibers);
  const Matrix G = (Ar.adjoint() * Ar).cwiseProduct(Cf.adjoint() * Cf);
  Matrix xj(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fibers.size()));
  for (std::size_t q = 0; q < fibers.size(); ++q) {
    for (std::size_t p = 0; p < rows.size(); ++p) xj(p, q) = x(rows[p], j, fibers[q]);
  }
  const Matrix W = Ar.adjoint() * xj;  // F x |fibers|
  Matrix rhs(A.cols(), 1);
  for (Eigen::Index f = 0; f < A.cols(); ++f) rhs(f, 0) = (W.row(f) * Cf.col(f).conjugate())(0, 0);
  B.row(static_cast<Eigen::Index>(j)) = detail::HermitianSolver(G).solve(rhs).transpose();
}

void scatter_rows(Matrix& dst, const SelectionSet& s, const Matrix& src, bool skip_first = false) {
  for (std::size_t p = skip_first ? 1 : 0; p < s.size(); ++p) dst.row(static_cast<Eigen::Index>(s[p])) = src.row(static_cast<Eigen::Index>(p));
}

RecoveryReport run(const Tensor3& x, const AccelPlan& plan, std::size_t rank, const RetsinaConfig& cfg, bool refine,
                   const char* name) {
  cfg.validate();
  plan.validate(x.dims());
  if (rank < 1) throw ValidationError("rank must be >= 1");
  if (!plan.first_frame_full) throw ValidationError(std::string(name) + " needs a fully sampled first frame");
  auto last = std::chrono::steady_clock::now();
  auto lap = [&last] {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last).count();
    last = now;
    return s;
  };

  RecoveryReport rep;
  rep.mechanism = name;
  const Mask mask = accel_mask(plan, x.dims());
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (!mask.bits[p] && x.data()[p] != cplx(0.0, 0.0)) {
      rep.notes.push_back("nonzero values at unobserved coordinates were ignored");
      break;
    }
  }
  const Tensor3 xo = apply_mask(x, mask);
  if (plan.n() == 1) {
    rep.estimate = xo;
    rep.converged = true;
    rep.notes.push_back("acceleration 1: pass-through");
    return rep;
  }
  const Dims dims = x.dims();
  const std::size_t n = plan.n();
  const Layout lay = make_layout(plan, dims);
  if ((dims[1] - 1) % n != 0) {
    rep.notes.push_back(std::to_string((dims[1] - 1) % n) + " trailing frames summed into the last initialization block");
  }

  // Initialization.
  SolverConfig init_cfg = cfg.solver;
  init_cfg.max_iters = cfg.init_iters;
  init_cfg.gn_iters = 0;
  init_cfg.restarts = 0;
  if (init_cfg.init == InitKind::provided) init_cfg.init = InitKind::algebraic;
  const Tensor3 xn = frame_sum(xo, n);
  const std::size_t generic_n = max_acceleration(xn.dims(), rank);
  if (generic_n < 1) rep.notes.push_back("frame-sum tensor is below the generic uniqueness bound for this rank");
  CpdResult c0 = cpd(xn, rank, init_cfg);
  rep.step1.push_back(c0.history);
  Matrix A = c0.factors.A, C = c0.factors.C;
  Matrix B(static_cast<Eigen::Index>(dims[1]), static_cast<Eigen::Index>(rank));
  const SelectionSet all_rows = SelectionSet::all(dims[0]), all_fibers = SelectionSet::all(dims[2]);
  solve_frame(xo, 0, all_rows, all_fibers, A, C, B);
  for (std::size_t j = 1; j < dims[1]; ++j) {
    const std::size_t d = lay.pattern_of_frame[j];
    solve_frame(xo, j, lay.rows[d], lay.fibers[d], A, C, B);
  }
  rep.seconds.emplace_back("initialization", lap());

  std::vector<CoupledTerm> terms;
  for (std::size_t d = 0; d < n; ++d) terms.push_back({gather(xo, lay.rows[d], lay.frames[d], lay.fibers[d]), lay.rows[d], lay.frames[d], lay.fibers[d]});

  if (refine) {
    SolverConfig rc = cfg.solver;
    rc.max_iters = cfg.refine_iters;
    rc.gn_iters = 0;
    rc.restarts = 0;
    rc.init = InitKind::provided;
    {
      FactorTriple warm(select_rows(A, lay.rows[0]), select_rows(B, lay.frames[0]), C);
      CpdResult r0 = cpd(terms[0].y, rank, rc, warm);
      if (!r0.converged) rep.notes.push_back("refinement CPD of pattern 0 not converged (residual " + std::to_string(r0.relative_residual) + ")");
      rep.step1.push_back(r0.history);
      scatter_rows(A, lay.rows[0], r0.factors.A);
      scatter_rows(B, lay.frames[0], r0.factors.B);
      C = r0.factors.C;
    }
    for (std::size_t d = 1; d < n; ++d) {
      FactorTriple warm(select_rows(A, lay.rows[d]), select_rows(B, lay.frames[d]), C);
      CpdResult rd = cpd(terms[d].y, rank, rc, warm, Mode::fibers);
      if (!rd.converged) rep.notes.push_back("refinement CPD of pattern " + std::to_string(d) + " not converged (residual " + std::to_string(rd.relative_residual) + ")");
      rep.step1.push_back(rd.history);
      // With C frozen only A diag(mu) / B diag(1/mu) remains; frame 0 pins it.
      Matrix Ad = rd.factors.A, Bd = rd.factors.B;
      for (Eigen::Index f = 0; f < Ad.cols(); ++f) {
        const cplx b0 = Bd(0, f);
        if (std::abs(b0) <= 1e-12 * std::max(1.0, std::abs(B(0, f)))) continue;
        const cplx mu = B(0, f) / b0;
        Bd.col(f) *= mu;
        Ad.col(f) /= mu;
      }
      scatter_rows(A, lay.rows[d], Ad);
      scatter_rows(B, lay.frames[d], Bd, true);
    }
    rep.seconds.emplace_back("refinement", lap());
  }

  SolverConfig fc = cfg.solver;
  fc.max_iters = 1;
  fc.gn_iters = cfg.final_iters;
  CpdResult fin = coupled_cpd(terms, dims, rank, FactorTriple(A, B, C), fc);
  rep.step3 = fin.history;
  rep.relative_residual = fin.relative_residual;
  rep.converged = fin.relative_residual <= cfg.solver.fit_tol;
  if (!rep.converged) rep.notes.push_back("coupled solve residual " + std::to_string(fin.relative_residual) + " above fit_tol");
  rep.factors = std::move(fin.factors);
  rep.estimate = cpd_reconstruct(rep.factors);
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (mask.bits[p]) rep.estimate.data()[p] = xo.data()[p];
  }
  rep.seconds.emplace_back("final", lap());
  detail::log().info("{}: relative residual {:.3e}", name, rep.relative_residual);
  return rep;
}

}  // namespace

RecoveryReport retsina(const Tensor3& x_obs, const AccelPlan& plan, std::size_t rank, const RetsinaConfig& cfg) {
  if (plan.multi_slice) throw ValidationError("retsina needs a single-slice plan; use ms_retsina");
  return run(x_obs, plan, rank, cfg, cfg.refine, "retsina");
}

RecoveryReport ms_retsina(const Tensor3& x_obs, const AccelPlan& plan, std::size_t rank, const RetsinaConfig& cfg) {
  AccelPlan p = plan;
  p.multi_slice = true;
  return run(x_obs, p, rank, cfg, false, "ms-retsina");
}

}  // namespace tensamp
