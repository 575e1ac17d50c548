#include "tensamp/kernels.hpp"

namespace tensamp::kernels {
namespace {

// Reference kernels. Written with explicit real arithmetic so the compiler
// does not route through the NaN-checking std::complex multiply.

void scale_scalar(cplx* out, cplx alpha, const cplx* x, std::size_t n) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    out[i] = cplx(ar * xr - ai * xi, ar * xi + ai * xr);
  }
}

void axpy_scalar(cplx* y, cplx alpha, const cplx* x, std::size_t n) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cplx(y[i].real() + (ar * xr - ai * xi), y[i].imag() + (ar * xi + ai * xr));
  }
}

double sqnorm_scalar(const cplx* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

double diff_sqnorm_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = x[i].real() - y[i].real();
    const double di = x[i].imag() - y[i].imag();
    s += dr * dr + di * di;
  }
  return s;
}

cplx dotc_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

constexpr KernelTable kScalar{"scalar", scale_scalar, axpy_scalar, sqnorm_scalar, diff_sqnorm_scalar,
                              dotc_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace tensamp::kernels
