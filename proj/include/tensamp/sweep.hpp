#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tensamp/cpd.hpp"
#include "tensamp/sampling.hpp"

namespace tensamp {

struct SweepRecord {
  std::string mechanism;
  std::size_t rank = 0;
  double ratio = 0.0;  ///< of the plan actually used; the requested ratio for cells without a plan
  double nre = 1.0;    ///< median over trials; 1 for infeasible cells
  bool converged = false;
  double seconds = 0.0;
  std::uint64_t seed = 0;  ///< seed of trial 0
  bool feasible = false;
};

struct SweepConfig {
  Dims dims{50, 50, 50};
  PlanKind mechanism = PlanKind::slab;
  std::vector<std::size_t> ranks;
  std::vector<double> ratios;
  int trials = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool force = false;  ///< run cells check_generic cannot prove
  SolverConfig solver;

  void validate() const;
};

/// Densest make_regular_plan at ratio <= r: stride s is the smallest with a
/// valid plan under the bound (slab (s,.,s), fiber (s,s,.), entry (s,s,s)).
std::optional<SamplingPlan> plan_for_ratio(PlanKind kind, const Dims& dims, double r);

/// Seed of one trial, derived from (master, F, r, trial) only.
std::uint64_t cell_seed(std::uint64_t master, std::size_t rank, double ratio, int trial);

/// One record per (rank, ratio) cell, ranks outermost, in input order.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

/// Header mechanism,F,r,NRE,converged,seconds,seed. With timing off the
/// seconds column is written as 0 so reruns are byte-identical.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records, bool timing = true);

}  // namespace tensamp
