#include "tensamp/fmri.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

#include "tensamp/error.hpp"

namespace tensamp {

void ScanGeometry::validate() const {
  if (mx == 0 || my == 0 || mc == 0 || ms == 0 || frames == 0) throw ValidationError("scan geometry fields must be positive");
}

namespace {

void check_order(const NArray& a, std::size_t order) {
  if (a.dims.size() != order) {
    throw ShapeError("expected a " + std::to_string(order) + "-way array, got " + std::to_string(a.dims.size()) + "-way");
  }
}

void check_geometry(const Tensor3& t, const ScanGeometry& g) {
  g.validate();
  if (t.dims() != g.tensor_dims()) throw ValidationError("tensor dims do not match the scan geometry");
}

}  // namespace

Tensor3 reshape_single(const NArray& x4) {
  check_order(x4, 4);
  const std::size_t mx = x4.dims[0], my = x4.dims[1], mc = x4.dims[2], J = x4.dims[3];
  Tensor3 t({mx * my, J, mc});
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t c = 0; c < mc; ++c)
      for (std::size_t ky = 0; ky < my; ++ky)
        for (std::size_t kx = 0; kx < mx; ++kx) t(kx + mx * ky, j, c) = x4.at({kx, ky, c, j});
  return t;
}

NArray unreshape_single(const Tensor3& t, const ScanGeometry& g) {
  check_geometry(t, g);
  if (g.ms != 1) throw ValidationError("single-slice layout needs ms = 1");
  NArray a({g.mx, g.my, g.mc, g.frames});
  for (std::size_t j = 0; j < g.frames; ++j)
    for (std::size_t c = 0; c < g.mc; ++c)
      for (std::size_t ky = 0; ky < g.my; ++ky)
        for (std::size_t kx = 0; kx < g.mx; ++kx) a.at({kx, ky, c, j}) = t(kx + g.mx * ky, j, c);
  return a;
}

Tensor3 reshape_multi(const NArray& x5) {
  check_order(x5, 5);
  const std::size_t mx = x5.dims[0], my = x5.dims[1], mc = x5.dims[2], J = x5.dims[3], ms = x5.dims[4];
  Tensor3 t({mx * my, J, ms * mc});
  for (std::size_t s = 0; s < ms; ++s)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t c = 0; c < mc; ++c)
        for (std::size_t ky = 0; ky < my; ++ky)
          for (std::size_t kx = 0; kx < mx; ++kx) t(kx + mx * ky, j, c + mc * s) = x5.at({kx, ky, c, j, s});
  return t;
}

NArray unreshape_multi(const Tensor3& t, const ScanGeometry& g) {
  check_geometry(t, g);
  NArray a({g.mx, g.my, g.mc, g.frames, g.ms});
  for (std::size_t s = 0; s < g.ms; ++s)
    for (std::size_t j = 0; j < g.frames; ++j)
      for (std::size_t c = 0; c < g.mc; ++c)
        for (std::size_t ky = 0; ky < g.my; ++ky)
          for (std::size_t kx = 0; kx < g.mx; ++kx) a.at({kx, ky, c, j, s}) = t(kx + g.mx * ky, j, c + g.mc * s);
  return a;
}

Matrix idft2(const Matrix& kframe) {
  Eigen::FFT<double> fft;
  const Eigen::Index mx = kframe.rows(), my = kframe.cols();
  Matrix out = kframe;
  std::vector<cplx> in, res;
  // Eigen's kissfft crashes on length-1 transforms, which are the identity anyway.
  for (Eigen::Index y = 0; y < my && mx > 1; ++y) {
    in.assign(kframe.col(y).data(), kframe.col(y).data() + mx);
    fft.inv(res, in);
    for (Eigen::Index x = 0; x < mx; ++x) out(x, y) = res[static_cast<std::size_t>(x)];
  }
  for (Eigen::Index x = 0; x < mx && my > 1; ++x) {
    in.resize(static_cast<std::size_t>(my));
    for (Eigen::Index y = 0; y < my; ++y) in[static_cast<std::size_t>(y)] = out(x, y);
    fft.inv(res, in);
    for (Eigen::Index y = 0; y < my; ++y) out(x, y) = res[static_cast<std::size_t>(y)];
  }
  // fft.inv divides by the length; rescale to the unitary convention.
  out *= std::sqrt(static_cast<double>(mx * my));
  return out;
}

Eigen::MatrixXd idft2_magnitude(const Matrix& kframe) { return idft2(kframe).cwiseAbs(); }

double nre2(const Tensor3& estimate, const Tensor3& truth, const ScanGeometry& g) {
  check_geometry(truth, g);
  if (estimate.dims() != truth.dims()) throw ShapeError("nre2: estimate and truth dims differ");
  const auto [I, J, K] = truth.dims();
  Tensor3 we(truth.dims()), wt(truth.dims());
  Matrix frame(static_cast<Eigen::Index>(g.mx), static_cast<Eigen::Index>(g.my));
  auto image = [&](const Tensor3& src, Tensor3& dst, std::size_t j, std::size_t k) {
    for (std::size_t i = 0; i < I; ++i) frame(static_cast<Eigen::Index>(i % g.mx), static_cast<Eigen::Index>(i / g.mx)) = src(i, j, k);
    const Eigen::MatrixXd m = idft2_magnitude(frame);
    for (std::size_t i = 0; i < I; ++i) dst(i, j, k) = m(static_cast<Eigen::Index>(i % g.mx), static_cast<Eigen::Index>(i / g.mx));
  };
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      image(estimate, we, j, k);
      image(truth, wt, j, k);
    }
  }
  return nre(we, wt);
}

}  // namespace tensamp
