// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "tensamp/kernels.hpp"

namespace tensamp::kernels {
namespace {

// One __m256d holds two interleaved complex values [r0, i0, r1, i1].

inline __m256d cmul(__m256d a_re, __m256d a_im, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);  // [i0, r0, i1, r1]
  return _mm256_fmaddsub_pd(a_re, x, _mm256_mul_pd(a_im, xs));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void scale_avx2(cplx* out, cplx alpha, const cplx* x, std::size_t n) {
  const __m256d a_re = _mm256_set1_pd(alpha.real());
  const __m256d a_im = _mm256_set1_pd(alpha.imag());
  auto* po = reinterpret_cast<double*>(out);
  const auto* px = reinterpret_cast<const double*>(x);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) _mm256_storeu_pd(po + 2 * i, cmul(a_re, a_im, _mm256_loadu_pd(px + 2 * i)));
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    out[i] = cplx(alpha.real() * xr - alpha.imag() * xi, alpha.real() * xi + alpha.imag() * xr);
  }
}

void axpy_avx2(cplx* y, cplx alpha, const cplx* x, std::size_t n) {
  const __m256d a_re = _mm256_set1_pd(alpha.real());
  const __m256d a_im = _mm256_set1_pd(alpha.imag());
  auto* py = reinterpret_cast<double*>(y);
  const auto* px = reinterpret_cast<const double*>(x);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d prod = cmul(a_re, a_im, _mm256_loadu_pd(px + 2 * i));
    _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(_mm256_loadu_pd(py + 2 * i), prod));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] += cplx(alpha.real() * xr - alpha.imag() * xi, alpha.real() * xi + alpha.imag() * xr);
  }
}

double sqnorm_avx2(const cplx* x, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(px + 2 * i);
    const __m256d b = _mm256_loadu_pd(px + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

double diff_sqnorm_avx2(const cplx* x, const cplx* y, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  const auto* py = reinterpret_cast<const double*>(y);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_sub_pd(_mm256_loadu_pd(px + 2 * i), _mm256_loadu_pd(py + 2 * i));
    const __m256d b = _mm256_sub_pd(_mm256_loadu_pd(px + 2 * i + 4), _mm256_loadu_pd(py + 2 * i + 4));
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double dr = x[i].real() - y[i].real();
    const double di = x[i].imag() - y[i].imag();
    s += dr * dr + di * di;
  }
  return s;
}

cplx dotc_avx2(const cplx* x, const cplx* y, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  const auto* py = reinterpret_cast<const double*>(y);
  __m256d acc_re = _mm256_setzero_pd();  // lanes [xr*yr, xi*yi, ...]
  __m256d acc_im = _mm256_setzero_pd();  // lanes [xr*yi, xi*yr, ...]
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d a = _mm256_loadu_pd(px + 2 * i);
    const __m256d b = _mm256_loadu_pd(py + 2 * i);
    acc_re = _mm256_fmadd_pd(a, b, acc_re);
    acc_im = _mm256_fmadd_pd(a, _mm256_permute_pd(b, 0b0101), acc_im);
  }
  alignas(32) double im_lanes[4];
  _mm256_store_pd(im_lanes, acc_im);
  double re = hsum(acc_re);
  double im = (im_lanes[0] + im_lanes[2]) - (im_lanes[1] + im_lanes[3]);
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

constexpr KernelTable kAvx2{"avx2", scale_avx2, axpy_avx2, sqnorm_avx2, diff_sqnorm_avx2, dotc_avx2};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace tensamp::kernels
