#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tensamp/tensor.hpp"

namespace tensamp {

enum class InitKind { random, algebraic, provided };

struct SolverConfig {
  int max_iters = 500;  ///< ALS sweep budget
  double tol = 1e-10;   ///< relative objective change that stops a phase
  double damping = 1e-3;  ///< initial Levenberg parameter, relative to the mean curvature
  std::uint64_t seed = 0;
  InitKind init = InitKind::algebraic;
  int gn_iters = 50;  ///< Gauss-Newton (Levenberg-Marquardt) budget; 0 disables refinement
  int restarts = 3;   ///< extra random starts when a solve ends above fit_tol
  double fit_tol = 1e-6;  ///< relative residual under which a solve counts as converged

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

struct History {
  std::vector<double> als;  ///< objective after each ALS sweep; [0] is the starting value
  std::vector<double> gn;   ///< objective after each accepted Gauss-Newton step; [0] is the start
  std::vector<int> flagged;  ///< ALS sweeps that needed a truncated pseudo-inverse
  int gn_rejected = 0;
  bool stopped = false;  ///< a stopping rule fired before the budgets ran out
  int attempts = 1;
};

struct CpdResult {
  FactorTriple factors;
  History history;
  double relative_residual = 0.0;  ///< ||t - [[A,B,C]]|| / ||t|| (absolute when t = 0)
  bool converged = false;          ///< stopped AND relative_residual <= fit_tol
};

/// One observed sub-tensor y = t(rows, cols, fibers) of the coupled model.
struct CoupledTerm {
  Tensor3 y;
  SelectionSet rows, cols, fibers;

  /// Throws ShapeError when ambients differ from `dims` or y has the wrong shape.
  void validate(const Dims& dims) const;
};

/// I.i.d. zero-mean unit-variance Gaussian factors; complex_valued draws the
/// real and imaginary parts independently.
FactorTriple random_factors(const Dims& dims, std::size_t rank, std::uint64_t seed, bool complex_valued = true);

/// Rank-F CPD of a complete tensor: ALS to tolerance, then Levenberg-Marquardt
/// refinement. `fixed` freezes one factor at its value in `warm`. Keeps the
/// best of up to 1 + cfg.restarts attempts. Throws NumericalError on divergence.
CpdResult cpd(const Tensor3& t, std::size_t rank, const SolverConfig& cfg,
              const std::optional<FactorTriple>& warm = std::nullopt, std::optional<Mode> fixed = std::nullopt);

/// One ALS sweep (A, then B, then C). `flagged` reports a truncated solve.
FactorTriple als_step(const Tensor3& t, const FactorTriple& f, bool* flagged = nullptr);

/// Simultaneous diagonalization of two random frontal-slab pencils in the
/// compressed (F x F) domain. Needs F <= min(I, J) and K >= 2; throws
/// ValidationError otherwise and NumericalError for a singular pencil.
FactorTriple algebraic_init(const Tensor3& t, std::size_t rank, std::uint64_t seed = 0);

/// sum_d ||Y_d - [[A(rows_d), B(cols_d), C(fibers_d)]]||^2
double coupled_objective(const std::vector<CoupledTerm>& terms, const FactorTriple& f);

/// Wirtinger gradient of coupled_objective laid out like the factors:
/// d/dRe + i d/dIm = -2 J^H r.
FactorTriple coupled_gradient(const std::vector<CoupledTerm>& terms, const FactorTriple& f);

/// Throws ValidationError naming the first factor row that no term observes.
void check_coverage(const std::vector<CoupledTerm>& terms, const Dims& dims, std::optional<Mode> fixed = std::nullopt);

/// Coupled CPD: row-wise ALS over the union of coupled normal equations, then
/// Levenberg-Marquardt. `relative_residual` is measured over all observations.
CpdResult coupled_cpd(const std::vector<CoupledTerm>& terms, const Dims& dims, std::size_t rank,
                      const FactorTriple& init, const SolverConfig& cfg, std::optional<Mode> fixed = std::nullopt);

}  // namespace tensamp
