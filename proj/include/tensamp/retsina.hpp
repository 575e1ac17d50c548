#pragma once

#include <cstdint>
#include <vector>

#include "tensamp/reconstruct.hpp"

namespace tensamp {

/// Frame-wise equispaced k_y undersampling. Frame 0 is fully sampled; frame
/// j >= 1 observes the k_y residue class (j-1) mod r and, for multi-slice
/// plans, the slice group floor((j-1)/r) mod s. A single-slice plan is r = n,
/// s = 1. Tensor index i = kx + mx*ky, coil-slice index k = c + mc*slice.
struct AccelPlan {
  std::size_t r = 1;
  std::size_t s = 1;
  bool multi_slice = false;
  bool first_frame_full = true;
  std::size_t mx = 0, my = 0;
  std::size_t ms = 1, mc = 1;

  static AccelPlan single(std::size_t n, std::size_t mx, std::size_t my, std::size_t mc);
  static AccelPlan multi(std::size_t r, std::size_t s, std::size_t mx, std::size_t my, std::size_t ms, std::size_t mc);

  /// Acceleration factor n = r*s.
  std::size_t n() const { return r * s; }
  std::size_t residue(std::size_t frame) const { return (frame - 1) % r; }
  std::size_t slice_group(std::size_t frame) const { return ((frame - 1) / r) % s; }
  /// Throws ValidationError when the geometry does not match dims or some
  /// residue class or slice group is empty.
  void validate(const Dims& dims) const;
};

struct Mask {
  Dims dims{0, 0, 0};
  std::vector<std::uint8_t> bits;  ///< column-major like Tensor3

  bool operator()(std::size_t i, std::size_t j, std::size_t k) const { return bits[i + dims[0] * (j + dims[1] * k)] != 0; }
  std::size_t count() const;
};

Mask accel_mask(const AccelPlan& plan, const Dims& dims);
/// Zeroes the unobserved entries.
Tensor3 apply_mask(const Tensor3& t, const Mask& m);

/// floor(min{sqrt(IJ/P), JK/P, IK/P}) with P = 4 * ceil_pow2(rank); 0 when infeasible.
std::size_t max_acceleration(const Dims& dims, std::size_t rank);
/// r*s <= min{IK, JK/s, IJ/r} / (4 * ceil_pow2(rank)).
bool multi_slice_feasible(const Dims& dims, std::size_t rank, std::size_t r, std::size_t s);
/// Largest feasible r for a fixed s (0 if none).
std::size_t max_multi_r(const Dims& dims, std::size_t rank, std::size_t s);

struct RetsinaConfig {
  SolverConfig solver;
  int init_iters = 50;   ///< ALS sweeps on the frame-sum tensor
  int refine_iters = 2;  ///< ALS sweeps per refinement CPD
  int final_iters = 5;   ///< Gauss-Newton iterations of the coupled solve
  bool refine = true;    ///< ignored by ms_retsina

  void validate() const;
};

/// Single-slice completion of x_obs (zeros at unobserved entries). n = 1 is a
/// pass-through. Observed entries of the estimate equal x_obs exactly.
RecoveryReport retsina(const Tensor3& x_obs, const AccelPlan& plan, std::size_t rank, const RetsinaConfig& cfg);

/// Multi-slice variant: same initialization with n = r*s, no refinement.
RecoveryReport ms_retsina(const Tensor3& x_obs, const AccelPlan& plan, std::size_t rank, const RetsinaConfig& cfg);

}  // namespace tensamp
