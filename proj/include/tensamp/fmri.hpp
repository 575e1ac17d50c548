#pragma once

#include "tensamp/tns_io.hpp"

namespace tensamp {

struct ScanGeometry {
  std::size_t mx = 0, my = 0;
  std::size_t mc = 1;  ///< coils
  std::size_t ms = 1;  ///< slices
  std::size_t frames = 0;

  /// Throws ValidationError unless every field is positive.
  void validate() const;
  Dims tensor_dims() const { return {mx * my, frames, ms * mc}; }
};

/// mx x my x mc x J array to the (mx*my, J, mc) tensor; i = kx + mx*ky.
Tensor3 reshape_single(const NArray& x4);
NArray unreshape_single(const Tensor3& t, const ScanGeometry& g);

/// mx x my x mc x J x ms array to the (mx*my, J, ms*mc) tensor; k = c + mc*slice.
Tensor3 reshape_multi(const NArray& x5);
NArray unreshape_multi(const Tensor3& t, const ScanGeometry& g);

/// Orthonormal 2-D inverse DFT of an mx x my k-space frame.
Matrix idft2(const Matrix& kframe);
Eigen::MatrixXd idft2_magnitude(const Matrix& kframe);

/// NRE between the magnitude images |IDFT2| of every (frame, coil) column.
double nre2(const Tensor3& estimate, const Tensor3& truth, const ScanGeometry& g);

}  // namespace tensamp
