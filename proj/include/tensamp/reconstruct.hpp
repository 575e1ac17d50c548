#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tensamp/cpd.hpp"
#include "tensamp/sampling.hpp"

namespace tensamp {

struct RecoveryReport {
  std::string mechanism;
  FactorTriple factors;
  Tensor3 estimate;                ///< cpd_reconstruct(factors), except for pass-through runs
  std::vector<History> step1;      ///< one per decomposed sub-tensor
  History step3;
  std::vector<std::pair<std::string, double>> seconds;  ///< wall time per step
  RuleVerdict rules;
  GenericVerdict generic;
  bool forced = false;             ///< ran although check_generic did not prove recoverability
  double relative_residual = 0.0;  ///< over all observed entries after Step 3
  bool converged = false;
  std::vector<std::string> notes;
};

/// Slab pipeline: CPD of the sub-tensor the deciding alternative names, the
/// remaining factor from its Khatri-Rao system, then the coupled solve.
/// Refuses (ValidationError) plans that fail validation, or check_generic
/// unless `force`.
RecoveryReport recover_slab(const Tensor3& y1, const Tensor3& y2, const SlabPlan& plan, std::size_t rank,
                            const SolverConfig& cfg, bool force = false);

/// Fiber pipeline: CPD of every Y_d, alignment on the shared C, stitching,
/// then the coupled solve. dims[2] is taken from the sub-tensors.
RecoveryReport recover_fiber(const std::vector<Tensor3>& ys, const std::vector<FiberPattern>& patterns, std::size_t rank,
                             const SolverConfig& cfg, bool force = false);

/// Entry pipeline: as recover_fiber with permutation matched on the mode that
/// carries the >= 2-index overlap.
RecoveryReport recover_entry(const std::vector<Tensor3>& ys, const std::vector<EntryPattern>& patterns, std::size_t rank,
                             const SolverConfig& cfg, bool force = false);

/// Dispatches on plan.kind(); ys in apply() order.
RecoveryReport recover(const SamplingPlan& plan, const std::vector<Tensor3>& ys, std::size_t rank, const SolverConfig& cfg,
                       bool force = false);

}  // namespace tensamp
