#include "tensamp/cpd.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "coupled_model.hpp"
#include "logging.hpp"
#include "tensamp/error.hpp"

namespace tensamp {

void SolverConfig::validate() const {
  if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  if (!(damping >= 0.0)) throw ValidationError("damping must be >= 0");
  if (gn_iters < 0) throw ValidationError("gn_iters must be >= 0");
  if (restarts < 0) throw ValidationError("restarts must be >= 0");
  if (!(fit_tol > 0.0)) throw ValidationError("fit_tol must be > 0");
}

FactorTriple random_factors(const Dims& dims, std::size_t rank, std::uint64_t seed, bool complex_valued) {
  if (rank == 0) throw ValidationError("rank must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t rows) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rank));
    for (Eigen::Index f = 0; f < m.cols(); ++f)
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double re = normal(rng);
        const double im = complex_valued ? normal(rng) : 0.0;
        m(i, f) = cplx(re, im);
      }
    return m;
  };
  Matrix a = draw(dims[0]);
  Matrix b = draw(dims[1]);
  Matrix c = draw(dims[2]);
  return {std::move(a), std::move(b), std::move(c)};
}

FactorTriple als_step(const Tensor3& t, const FactorTriple& f, bool* flagged) {
  if (f.dims() != t.dims()) throw ShapeError("als_step: factor dims do not match the tensor");
  const std::vector<CoupledTerm> terms{{t, SelectionSet::all(t.dims()[0]), SelectionSet::all(t.dims()[1]),
                                        SelectionSet::all(t.dims()[2])}};
  const detail::CoupledModel model(terms, t.dims(), f.rank(), std::nullopt);
  FactorTriple out = f;
  const bool truncated = model.als_sweep(out);
  if (flagged != nullptr) *flagged = truncated;
  return out;
}

FactorTriple algebraic_init(const Tensor3& t, std::size_t rank, std::uint64_t seed) {
  const auto [I, J, K] = t.dims();
  if (rank == 0) throw ValidationError("algebraic_init: rank must be >= 1");
  if (rank > std::min(I, J)) {
    throw ValidationError("algebraic_init: rank " + std::to_string(rank) + " exceeds min(I, J) = " +
                          std::to_string(std::min(I, J)));
  }
  if (K < 2) throw ValidationError("algebraic_init: needs at least two frontal slabs");
  const auto F = static_cast<Eigen::Index>(rank);

  // Orthonormal bases of range(A) and range(B).
  const Matrix m1 = unfold(t, Mode::rows).transpose();  // I x JK = A (C kr B)^T
  const Matrix m2 = unfold(t, Mode::cols).transpose();  // J x IK = B (C kr A)^T
  const Matrix U = Eigen::BDCSVD<Matrix>(m1, Eigen::ComputeThinU).matrixU().leftCols(F);
  const Matrix V = Eigen::BDCSVD<Matrix>(m2, Eigen::ComputeThinU).matrixU().leftCols(F);

  std::mt19937_64 rng(seed ^ 0x5851F42D4C957F2DULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J));
  Matrix q = p;
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::Map<const Matrix> slab(t.slab(k).data(), static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J));
    const cplx w1(normal(rng), normal(rng)), w2(normal(rng), normal(rng));
    p += w1 * slab;
    q += w2 * slab;
  }
  const Matrix t1 = U.adjoint() * p * V.conjugate();
  const Matrix t2 = U.adjoint() * q * V.conjugate();
  const Eigen::FullPivLU<Matrix> lu(t2);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) throw NumericalError("algebraic_init: slab pencil is singular");
  Eigen::ComplexEigenSolver<Matrix> eig(t1 * lu.inverse());
  if (eig.info() != Eigen::Success) throw NumericalError("algebraic_init: eigendecomposition failed");
  Matrix A = U * eig.eigenvectors();

  // (C kr B) from the mode-1 unfolding, then a rank-1 split of every column.
  const Matrix krt = A.colPivHouseholderQr().solve(m1);  // F x JK = (C kr B)^T
  Matrix B(static_cast<Eigen::Index>(J), F), C(static_cast<Eigen::Index>(K), F);
  for (Eigen::Index f = 0; f < F; ++f) {
    const Matrix col = krt.row(f).transpose();
    const Eigen::Map<const Matrix> jk(col.data(), static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(K));
    Eigen::JacobiSVD<Matrix> svd(jk, Eigen::ComputeThinU | Eigen::ComputeThinV);
    B.col(f) = svd.singularValues()(0) * svd.matrixU().col(0);
    C.col(f) = svd.matrixV().col(0).conjugate();
  }
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) throw NumericalError("algebraic_init: non-finite factors");
  return {std::move(A), std::move(B), std::move(C)};
}

namespace {

/// t permuted so that new mode m is old mode perm[m].
Tensor3 permute(const Tensor3& t, const std::array<std::size_t, 3>& perm) {
  const Dims& d = t.dims();
  const Dims nd{d[perm[0]], d[perm[1]], d[perm[2]]};
  Tensor3 out(nd);
  std::array<std::size_t, 3> idx{};
  for (idx[2] = 0; idx[2] < d[2]; ++idx[2])
    for (idx[1] = 0; idx[1] < d[1]; ++idx[1])
      for (idx[0] = 0; idx[0] < d[0]; ++idx[0]) out(idx[perm[0]], idx[perm[1]], idx[perm[2]]) = t(idx[0], idx[1], idx[2]);
  return out;
}

/// algebraic_init on whichever mode ordering satisfies its preconditions,
/// preferring the largest pencil mode.
FactorTriple algebraic_init_any_order(const Tensor3& t, std::size_t rank, std::uint64_t seed) {
  static constexpr std::array<std::array<std::size_t, 3>, 3> kOrders{{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  const Dims& d = t.dims();
  const std::array<std::size_t, 3>* best = nullptr;
  for (const auto& o : kOrders) {
    if (d[o[0]] >= rank && d[o[1]] >= rank && d[o[2]] >= 2 && (best == nullptr || d[o[2]] > d[(*best)[2]])) best = &o;
  }
  if (best == nullptr) throw ValidationError("algebraic_init: no mode ordering has two modes >= rank and a pencil mode >= 2");
  const FactorTriple g = algebraic_init(permute(t, *best), rank, seed);
  std::array<const Matrix*, 3> src{&g.A, &g.B, &g.C};
  std::array<Matrix, 3> out;
  for (std::size_t m = 0; m < 3; ++m) out[(*best)[m]] = *src[m];
  return {std::move(out[0]), std::move(out[1]), std::move(out[2])};
}

std::uint64_t restart_seed(std::uint64_t seed, int attempt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CpdResult cpd(const Tensor3& t, std::size_t rank, const SolverConfig& cfg, const std::optional<FactorTriple>& warm,
              std::optional<Mode> fixed) {
  cfg.validate();
  if (rank == 0) throw ValidationError("rank must be >= 1");
  if (warm && (warm->dims() != t.dims() || warm->rank() != rank)) {
    throw ShapeError("cpd: warm-start factors do not match the tensor dims/rank");
  }
  if ((cfg.init == InitKind::provided || fixed) && !warm) {
    throw ValidationError("cpd: provided initialization (or a fixed factor) needs warm-start factors");
  }
  const Dims& dims = t.dims();
  const std::vector<CoupledTerm> terms{{t, SelectionSet::all(dims[0]), SelectionSet::all(dims[1]), SelectionSet::all(dims[2])}};
  const detail::CoupledModel model(terms, dims, rank, fixed);

  auto start = [&](int attempt) -> FactorTriple {
    FactorTriple f;
    if (attempt == 0 && cfg.init == InitKind::provided) {
      f = *warm;
    } else if (attempt == 0 && cfg.init == InitKind::algebraic && !fixed) {
      try {
        f = algebraic_init_any_order(t, rank, cfg.seed);
      } catch (const Error& e) {
        detail::log().info("cpd: algebraic initialization unavailable ({}), using a random start", e.what());
        f = random_factors(dims, rank, restart_seed(cfg.seed, attempt));
      }
    } else {
      f = random_factors(dims, rank, restart_seed(cfg.seed, attempt));
    }
    if (fixed) f.factor(*fixed) = warm->factor(*fixed);
    return f;
  };

  CpdResult best;
  bool have_best = false;
  const double norm2 = model.data_norm2();
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    CpdResult r;
    r.factors = start(attempt);
    model.run_als(r.factors, cfg, r.history);
    if (cfg.gn_iters > 0) model.run_gn(r.factors, cfg, r.history);
    const double obj = model.objective(r.factors);
    r.relative_residual = norm2 > 0.0 ? std::sqrt(obj / norm2) : std::sqrt(obj);
    r.converged = r.history.stopped && r.relative_residual <= cfg.fit_tol;
    if (!have_best || r.relative_residual < best.relative_residual) {
      const int attempts = attempt + 1;
      best = std::move(r);
      best.history.attempts = attempts;
      have_best = true;
    } else {
      best.history.attempts = attempt + 1;
    }
    if (best.relative_residual <= cfg.fit_tol) break;
    detail::log().debug("cpd attempt {}: relative residual {:.3e}, restarting", attempt, best.relative_residual);
  }
  return best;
}

}  // namespace tensamp
