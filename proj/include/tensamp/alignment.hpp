#pragma once

#include <array>
#include <vector>

#include "tensamp/tensor.hpp"

namespace tensamp {

/// CPD factors of one observed sub-tensor together with where its rows live.
struct SubFactors {
  std::size_t pattern = 0;
  Matrix A, B, C;
  SelectionSet rows, cols, fibers;

  const Matrix& factor(Mode m) const { return m == Mode::rows ? A : m == Mode::cols ? B : C; }
  Matrix& factor(Mode m) { return m == Mode::rows ? A : m == Mode::cols ? B : C; }
  const SelectionSet& selection(Mode m) const { return m == Mode::rows ? rows : m == Mode::cols ? cols : fibers; }
  /// Throws ShapeError when row counts and selections disagree.
  void validate() const;
};

/// permutation[f]: the column of `other` that matches column f of the reference.
/// scales[m][f]: multiplier applied to that column in mode m; the three
/// multipliers of every column multiply to one.
struct Assignment {
  std::vector<std::size_t> permutation;
  std::array<std::vector<cplx>, 3> scales;
};

/// Minimum-cost perfect assignment; result[r] is the column given to row r.
/// Among optimal assignments the lexicographically smallest is returned.
/// Throws ShapeError for a non-square matrix and NumericalError for non-finite costs.
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

/// Matches other's columns to ref's using the rows both observe in `mode`.
/// Columns are normalized by an anchor row (the shared row with the largest
/// minimum column magnitude) and compared by squared Euclidean distance.
/// Needs >= 2 shared indices; throws ValidationError otherwise and
/// NumericalError when every candidate anchor is degenerate.
std::vector<std::size_t> match_permutation(const SubFactors& ref, const SubFactors& other, Mode mode,
                                           const std::vector<std::size_t>& shared);

/// Column scales that make other (already permuted) agree with ref on shared
/// rows. Solves the matched mode and the best-covered other mode by least
/// squares and fixes the third by the unit-product constraint. Throws
/// NumericalError when fewer than two modes have usable equations.
Assignment resolve_scaling(const SubFactors& ref, const SubFactors& other, const std::vector<std::size_t>& permutation,
                           Mode matched_mode);

/// other with columns permuted and scaled: column f becomes scales[m][f] * other(:, permutation[f]).
SubFactors apply_assignment(const SubFactors& other, const Assignment& a);

/// Aligns every sub-factor to pattern 0 breadth-first over pairs that share
/// >= 2 indices in one mode and >= 1 in another. Throws ValidationError when
/// some pattern cannot be reached.
std::vector<SubFactors> align_all(const std::vector<SubFactors>& subs);

/// Writes aligned rows into global factors, averaging rows seen more than
/// once. Throws ValidationError naming the first uncovered (mode, index).
FactorTriple stitch(const std::vector<SubFactors>& aligned, const Dims& dims, std::size_t rank);

}  // namespace tensamp
