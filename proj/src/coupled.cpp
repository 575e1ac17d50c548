#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coupled_model.hpp"
#include "linalg.hpp"
#include "logging.hpp"
#include "tensamp/error.hpp"
#include "tensamp/kernels.hpp"

namespace tensamp {

void CoupledTerm::validate(const Dims& dims) const {
  if (rows.ambient() != dims[0] || cols.ambient() != dims[1] || fibers.ambient() != dims[2]) {
    throw ShapeError("coupled term selections do not match the ambient dims");
  }
  const Dims want{rows.size(), cols.size(), fibers.size()};
  if (y.dims() != want) throw ShapeError("coupled term tensor shape does not match its selections");
}

void check_coverage(const std::vector<CoupledTerm>& terms, const Dims& dims, std::optional<Mode> fixed) {
  for (const Mode m : kAllModes) {
    if (fixed && *fixed == m) continue;
    std::vector<bool> seen(dims[static_cast<std::size_t>(index(m))], false);
    for (const auto& t : terms) {
      const SelectionSet& s = m == Mode::rows ? t.rows : m == Mode::cols ? t.cols : t.fibers;
      for (const auto i : s) seen[i] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw ValidationError(std::string("plan coverage: ") + mode_name(m) + " index " + std::to_string(i) +
                              " is observed by no term, so that factor row is unidentifiable");
      }
    }
  }
}

namespace detail {
namespace {

double inner(const FactorTriple& x, const FactorTriple& y) {
  double s = 0.0;
  for (const Mode m : kAllModes) {
    const Matrix& a = x.factor(m);
    s += kernels::dotc(a.data(), y.factor(m).data(), static_cast<std::size_t>(a.size())).real();
  }
  return s;
}

void axpy(FactorTriple& y, double alpha, const FactorTriple& x) {
  for (const Mode m : kAllModes) {
    Matrix& a = y.factor(m);
    kernels::axpy(a.data(), cplx(alpha, 0.0), x.factor(m).data(), static_cast<std::size_t>(a.size()));
  }
}

FactorTriple zeros_like(const Dims& dims, std::size_t rank) {
  FactorTriple z;
  const auto F = static_cast<Eigen::Index>(rank);
  z.A = Matrix::Zero(static_cast<Eigen::Index>(dims[0]), F);
  z.B = Matrix::Zero(static_cast<Eigen::Index>(dims[1]), F);
  z.C = Matrix::Zero(static_cast<Eigen::Index>(dims[2]), F);
  return z;
}

}  // namespace

CoupledModel::CoupledModel(const std::vector<CoupledTerm>& terms, const Dims& dims, std::size_t rank,
                           std::optional<Mode> fixed)
    : terms_(terms), dims_(dims), rank_(rank), fixed_(fixed) {
  if (rank == 0) throw ValidationError("rank must be >= 1");
  if (terms.empty()) throw ValidationError("coupled CPD needs at least one term");
  for (const auto& t : terms) {
    t.validate(dims);
    data_norm2_ += kernels::sqnorm(t.y.data().data(), t.y.size());
  }
  check_coverage(terms, dims, fixed);
  for (const Mode m : kAllModes) {
    const auto mi = static_cast<std::size_t>(index(m));
    std::vector<std::vector<std::size_t>> sig(dims[mi]);
    for (std::size_t d = 0; d < terms.size(); ++d)
      for (const auto g : selection(d, m)) sig[g].push_back(d);
    std::map<std::vector<std::size_t>, std::size_t> where;
    for (std::size_t g = 0; g < sig.size(); ++g) {
      auto [it, inserted] = where.try_emplace(sig[g], groups_[mi].size());
      if (inserted) groups_[mi].push_back({sig[g], {}});
      groups_[mi][it->second].rows.push_back(g);
    }
  }
}

const SelectionSet& CoupledModel::selection(std::size_t d, Mode m) const {
  const auto& t = terms_[d];
  return m == Mode::rows ? t.rows : m == Mode::cols ? t.cols : t.fibers;
}

CoupledModel::Sub CoupledModel::sub(const FactorTriple& f, std::size_t d) const {
  const auto& t = terms_[d];
  return {t.rows.is_all() ? f.A : select_rows(f.A, t.rows), t.cols.is_all() ? f.B : select_rows(f.B, t.cols),
          t.fibers.is_all() ? f.C : select_rows(f.C, t.fibers)};
}

Matrix CoupledModel::residual(std::size_t d, const Sub& s) const {
  const Tensor3& y = terms_[d].y;
  const Eigen::Map<const Matrix> y3(y.data().data(), s.A.rows() * s.B.rows(), s.C.rows());
  return y3 - khatri_rao(s.B, s.A) * s.C.transpose();
}

double CoupledModel::objective(const FactorTriple& f) const {
  double total = 0.0;
  for (std::size_t d = 0; d < terms_.size(); ++d) {
    const Sub s = sub(f, d);
    const Matrix model = khatri_rao(s.B, s.A) * s.C.transpose();
    total += kernels::diff_sqnorm(terms_[d].y.data().data(), model.data(), static_cast<std::size_t>(model.size()));
  }
  return total;
}

std::vector<Matrix> CoupledModel::term_grams(const std::vector<Sub>& subs, Mode m) const {
  std::vector<Matrix> out;
  out.reserve(subs.size());
  for (const auto& s : subs) {
    const Matrix ga = s.A.adjoint() * s.A, gb = s.B.adjoint() * s.B, gc = s.C.adjoint() * s.C;
    switch (m) {
      case Mode::rows: out.push_back(gb.cwiseProduct(gc)); break;
      case Mode::cols: out.push_back(ga.cwiseProduct(gc)); break;
      case Mode::fibers: out.push_back(ga.cwiseProduct(gb)); break;
    }
  }
  return out;
}

void CoupledModel::add_mttkrp(std::size_t d, const Matrix& w, const Sub& s, Mode m, Matrix& out) const {
  const Eigen::Index I = s.A.rows(), J = s.B.rows(), K = s.C.rows();
  Matrix local;
  switch (m) {
    case Mode::rows: {
      // The mode-3 layout reinterpreted as I x JK is the transposed mode-1 unfolding.
      const Eigen::Map<const Matrix> w1t(w.data(), I, J * K);
      local = w1t * khatri_rao(s.C, s.B).conjugate();
      break;
    }
    case Mode::cols: {
      local = Matrix::Zero(J, s.A.cols());
      const Matrix ac = s.A.conjugate();
      for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::Map<const Matrix> wk(w.data() + k * I * J, I, J);
        local.noalias() += (wk.transpose() * ac) * s.C.row(k).conjugate().asDiagonal();
      }
      break;
    }
    case Mode::fibers: local = w.transpose() * khatri_rao(s.B, s.A).conjugate(); break;
  }
  const SelectionSet& sel = selection(d, m);
  for (std::size_t p = 0; p < sel.size(); ++p) out.row(static_cast<Eigen::Index>(sel[p])) += local.row(static_cast<Eigen::Index>(p));
}

bool CoupledModel::als_sweep(FactorTriple& f) const {
  bool truncated = false;
  for (const Mode m : kAllModes) {
    if (!is_free(m)) continue;
    std::vector<Sub> subs;
    subs.reserve(terms_.size());
    for (std::size_t d = 0; d < terms_.size(); ++d) subs.push_back(sub(f, d));
    const std::vector<Matrix> grams = term_grams(subs, m);
    Matrix rhs = Matrix::Zero(f.factor(m).rows(), f.factor(m).cols());
    for (std::size_t d = 0; d < terms_.size(); ++d) {
      const Tensor3& y = terms_[d].y;
      const Eigen::Map<const Matrix> y3(y.data().data(), subs[d].A.rows() * subs[d].B.rows(), subs[d].C.rows());
      add_mttkrp(d, y3, subs[d], m, rhs);
    }
    Matrix& target = f.factor(m);
    for (const auto& grp : groups_[static_cast<std::size_t>(index(m))]) {
      Matrix g = Matrix::Zero(static_cast<Eigen::Index>(rank_), static_cast<Eigen::Index>(rank_));
      for (const auto d : grp.terms) g += grams[d];
      const HermitianSolver solver(g);
      truncated = truncated || solver.truncated();
      Matrix b(static_cast<Eigen::Index>(rank_), static_cast<Eigen::Index>(grp.rows.size()));
      for (std::size_t p = 0; p < grp.rows.size(); ++p)
        b.col(static_cast<Eigen::Index>(p)) = rhs.row(static_cast<Eigen::Index>(grp.rows[p])).transpose();
      const Matrix x = solver.solve(b);
      for (std::size_t p = 0; p < grp.rows.size(); ++p)
        target.row(static_cast<Eigen::Index>(grp.rows[p])) = x.col(static_cast<Eigen::Index>(p)).transpose();
    }
  }
  return truncated;
}

void CoupledModel::run_als(FactorTriple& f, const SolverConfig& cfg, History& h) const {
  const double floor = 1e-28 * data_norm2_;
  double obj = objective(f);
  if (!std::isfinite(obj)) throw NumericalError("objective is non-finite at the starting point");
  h.als.push_back(obj);
  h.stopped = false;
  if (obj <= floor) {
    h.stopped = true;
    return;
  }
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const bool truncated = als_sweep(f);
    const double next = objective(f);
    if (!std::isfinite(next)) throw NumericalError("objective became non-finite at ALS iteration " + std::to_string(it));
    h.als.push_back(next);
    if (truncated) {
      h.flagged.push_back(it);
      log().debug("ALS iteration {}: rank-deficient normal matrix, truncated pseudo-inverse used", it);
    }
    const double change = obj - next;
    obj = next;
    if (obj <= floor || change <= cfg.tol * h.als[h.als.size() - 2]) {
      h.stopped = true;
      break;
    }
  }
}

Matrix CoupledModel::jv(const Sub& s, const Sub& v) const {
  Matrix out = Matrix::Zero(s.A.rows() * s.B.rows(), s.C.rows());
  if (is_free(Mode::rows) || is_free(Mode::cols)) {
    Matrix kr = Matrix::Zero(out.rows(), s.A.cols());
    if (is_free(Mode::rows)) kr += khatri_rao(s.B, v.A);
    if (is_free(Mode::cols)) kr += khatri_rao(v.B, s.A);
    out.noalias() += kr * s.C.transpose();
  }
  if (is_free(Mode::fibers)) out.noalias() += khatri_rao(s.B, s.A) * v.C.transpose();
  return out;
}

FactorTriple CoupledModel::jh(const std::vector<Sub>& subs, const std::vector<Matrix>& w) const {
  FactorTriple out = zeros_like(dims_, rank_);
  for (const Mode m : kAllModes) {
    if (!is_free(m)) continue;
    for (std::size_t d = 0; d < terms_.size(); ++d) add_mttkrp(d, w[d], subs[d], m, out.factor(m));
  }
  return out;
}

FactorTriple CoupledModel::jh_residual(const FactorTriple& f) const {
  std::vector<Sub> subs;
  std::vector<Matrix> r;
  for (std::size_t d = 0; d < terms_.size(); ++d) {
    subs.push_back(sub(f, d));
    r.push_back(residual(d, subs.back()));
  }
  return jh(subs, r);
}

void CoupledModel::run_gn(FactorTriple& f, const SolverConfig& cfg, History& h) const {
  const double floor = 1e-28 * data_norm2_;
  double obj = objective(f);
  h.gn.push_back(obj);
  if (obj <= floor) {
    h.stopped = true;
    return;
  }
  h.stopped = false;
  double lambda = -1.0, nu = 2.0;
  for (int it = 1; it <= cfg.gn_iters; ++it) {
    std::vector<Sub> subs;
    std::vector<Matrix> r;
    for (std::size_t d = 0; d < terms_.size(); ++d) {
      subs.push_back(sub(f, d));
      r.push_back(residual(d, subs.back()));
    }
    const FactorTriple g = jh(subs, r);

    // Block-Jacobi preconditioner: the exact per-row diagonal blocks of J^H J.
    std::array<std::vector<Matrix>, 3> blocks;
    double diag_sum = 0.0;
    std::size_t diag_count = 0;
    for (const Mode m : kAllModes) {
      if (!is_free(m)) continue;
      const auto mi = static_cast<std::size_t>(index(m));
      const std::vector<Matrix> grams = term_grams(subs, m);
      for (const auto& grp : groups_[mi]) {
        Matrix b = Matrix::Zero(static_cast<Eigen::Index>(rank_), static_cast<Eigen::Index>(rank_));
        for (const auto d : grp.terms) b += grams[d];
        diag_sum += b.trace().real() * static_cast<double>(grp.rows.size());
        diag_count += rank_ * grp.rows.size();
        blocks[mi].push_back(std::move(b));
      }
    }
    if (lambda < 0.0) lambda = std::max(cfg.damping * diag_sum / static_cast<double>(std::max<std::size_t>(diag_count, 1)), 1e-300);

    std::array<std::vector<Eigen::LLT<Matrix>>, 3> chol;
    for (const Mode m : kAllModes) {
      const auto mi = static_cast<std::size_t>(index(m));
      for (const auto& b : blocks[mi])
        chol[mi].emplace_back(b + lambda * Matrix::Identity(b.rows(), b.cols()));
    }
    auto precond = [&](const FactorTriple& x) {
      FactorTriple z = x;
      for (const Mode m : kAllModes) {
        const auto mi = static_cast<std::size_t>(index(m));
        if (!is_free(m)) continue;
        for (std::size_t q = 0; q < groups_[mi].size(); ++q) {
          const auto& rows = groups_[mi][q].rows;
          Matrix b(static_cast<Eigen::Index>(rank_), static_cast<Eigen::Index>(rows.size()));
          for (std::size_t p = 0; p < rows.size(); ++p)
            b.col(static_cast<Eigen::Index>(p)) = x.factor(m).row(static_cast<Eigen::Index>(rows[p])).transpose();
          const Matrix sol = chol[mi][q].solve(b);
          for (std::size_t p = 0; p < rows.size(); ++p)
            z.factor(m).row(static_cast<Eigen::Index>(rows[p])) = sol.col(static_cast<Eigen::Index>(p)).transpose();
        }
      }
      return z;
    };
    auto jv_all = [&](const FactorTriple& v) {
      std::vector<Matrix> out;
      for (std::size_t d = 0; d < terms_.size(); ++d) out.push_back(jv(subs[d], sub(v, d)));
      return out;
    };
    auto normal_op = [&](const FactorTriple& v) {
      FactorTriple out = jh(subs, jv_all(v));
      axpy(out, lambda, v);
      return out;
    };

    // Preconditioned CG on (J^H J + lambda I) delta = J^H r.
    FactorTriple delta = zeros_like(dims_, rank_);
    FactorTriple res = g;
    FactorTriple z = precond(res);
    FactorTriple p = z;
    double rz = inner(res, z);
    const double bnorm = std::sqrt(inner(g, g));
    for (int cg = 0; cg < 200 && rz > 0.0; ++cg) {
      const FactorTriple ap = normal_op(p);
      const double pap = inner(p, ap);
      if (pap <= 0.0) break;
      const double alpha = rz / pap;
      axpy(delta, alpha, p);
      axpy(res, -alpha, ap);
      if (std::sqrt(inner(res, res)) <= 1e-10 * bnorm) break;
      z = precond(res);
      const double rz_next = inner(res, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (const Mode m : kAllModes) p.factor(m) = z.factor(m) + beta * p.factor(m);
    }

    double jd2 = 0.0;
    for (const auto& m : jv_all(delta)) jd2 += kernels::sqnorm(m.data(), static_cast<std::size_t>(m.size()));
    const double predicted = 2.0 * inner(delta, g) - jd2;

    FactorTriple trial = f;
    axpy(trial, 1.0, delta);
    const double next = objective(trial);
    if (std::isfinite(next) && next < obj) {
      const double rho = predicted > 0.0 ? (obj - next) / predicted : 1.0;
      const double change = obj - next;
      f = std::move(trial);
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      h.gn.push_back(next);
      const double prev = obj;
      obj = next;
      if (obj <= floor || change <= cfg.tol * prev) {
        h.stopped = true;
        return;
      }
    } else {
      ++h.gn_rejected;
      lambda *= nu;
      nu *= 2.0;
      if (!std::isfinite(lambda) || lambda > 1e30 * std::max(diag_sum, 1e-300)) {
        log().debug("Gauss-Newton: damping saturated after {} iterations, no further decrease possible", it);
        h.stopped = true;
        return;
      }
    }
  }
}

}  // namespace detail

double coupled_objective(const std::vector<CoupledTerm>& terms, const FactorTriple& f) {
  return detail::CoupledModel(terms, f.dims(), f.rank(), std::nullopt).objective(f);
}

FactorTriple coupled_gradient(const std::vector<CoupledTerm>& terms, const FactorTriple& f) {
  FactorTriple g = detail::CoupledModel(terms, f.dims(), f.rank(), std::nullopt).jh_residual(f);
  for (const Mode m : kAllModes) g.factor(m) *= -2.0;
  return g;
}

CpdResult coupled_cpd(const std::vector<CoupledTerm>& terms, const Dims& dims, std::size_t rank,
                      const FactorTriple& init, const SolverConfig& cfg, std::optional<Mode> fixed) {
  cfg.validate();
  if (init.dims() != dims || init.rank() != rank) throw ShapeError("coupled_cpd: initial factors do not match dims/rank");
  const detail::CoupledModel model(terms, dims, rank, fixed);
  CpdResult out;
  out.factors = init;
  model.run_als(out.factors, cfg, out.history);
  if (cfg.gn_iters > 0) model.run_gn(out.factors, cfg, out.history);
  const double obj = model.objective(out.factors);
  out.relative_residual = model.data_norm2() > 0.0 ? std::sqrt(obj / model.data_norm2()) : std::sqrt(obj);
  out.converged = out.history.stopped && out.relative_residual <= cfg.fit_tol;
  detail::log().debug("coupled_cpd: {} ALS sweeps, {} GN steps, relative residual {:.3e}", out.history.als.size() - 1,
                      out.history.gn.empty() ? 0 : out.history.gn.size() - 1, out.relative_residual);
  return out;
}

}  // namespace tensamp
