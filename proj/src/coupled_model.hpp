#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tensamp/cpd.hpp"

namespace tensamp::detail {

/// Shared machinery behind cpd() and coupled_cpd(): the coupled objective,
/// row-wise ALS, and matrix-free Levenberg-Marquardt over a fixed set of terms.
class CoupledModel {
 public:
  CoupledModel(const std::vector<CoupledTerm>& terms, const Dims& dims, std::size_t rank, std::optional<Mode> fixed);

  double objective(const FactorTriple& f) const;
  double data_norm2() const { return data_norm2_; }

  /// One sweep over the free modes; returns true if any solve was truncated.
  bool als_sweep(FactorTriple& f) const;
  void run_als(FactorTriple& f, const SolverConfig& cfg, History& h) const;
  void run_gn(FactorTriple& f, const SolverConfig& cfg, History& h) const;

  /// J^H r with r = Y - model (the negative half-gradient).
  FactorTriple jh_residual(const FactorTriple& f) const;

 private:
  struct Group {
    std::vector<std::size_t> terms;
    std::vector<std::size_t> rows;
  };
  struct Sub {
    Matrix A, B, C;
  };

  Sub sub(const FactorTriple& f, std::size_t d) const;
  const SelectionSet& selection(std::size_t d, Mode m) const;
  bool is_free(Mode m) const { return !fixed_ || *fixed_ != m; }
  /// Per-term Gram products (the diagonal blocks of J^H J) for mode m.
  std::vector<Matrix> term_grams(const std::vector<Sub>& subs, Mode m) const;
  /// Residual Y_d - model as an I_d J_d x K_d matrix (mode-3 layout).
  Matrix residual(std::size_t d, const Sub& s) const;
  Matrix jv(const Sub& s, const Sub& v) const;
  /// Adds the mode-m MTTKRP of w (mode-3 layout) into out's selected rows.
  void add_mttkrp(std::size_t d, const Matrix& w, const Sub& s, Mode m, Matrix& out) const;
  FactorTriple jh(const std::vector<Sub>& subs, const std::vector<Matrix>& w) const;

  const std::vector<CoupledTerm>& terms_;
  Dims dims_;
  std::size_t rank_;
  std::optional<Mode> fixed_;
  double data_norm2_ = 0.0;
  std::array<std::vector<Group>, 3> groups_;
};

}  // namespace tensamp::detail
