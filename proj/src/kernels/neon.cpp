// aarch64 only. Each float64x2_t holds one complex value [re, im].
#include <arm_neon.h>

#include "tensamp/kernels.hpp"

namespace tensamp::kernels {
namespace {

inline float64x2_t cmul(double ar, double ai, float64x2_t x) {
  const float64x2_t swapped = vextq_f64(x, x, 1);  // [im, re]
  const float64x2_t sign = {-ai, ai};
  return vfmaq_f64(vmulq_n_f64(x, ar), swapped, sign);
}

void scale_neon(cplx* out, cplx alpha, const cplx* x, std::size_t n) {
  auto* po = reinterpret_cast<double*>(out);
  const auto* px = reinterpret_cast<const double*>(x);
  for (std::size_t i = 0; i < n; ++i) vst1q_f64(po + 2 * i, cmul(alpha.real(), alpha.imag(), vld1q_f64(px + 2 * i)));
}

void axpy_neon(cplx* y, cplx alpha, const cplx* x, std::size_t n) {
  auto* py = reinterpret_cast<double*>(y);
  const auto* px = reinterpret_cast<const double*>(x);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t prod = cmul(alpha.real(), alpha.imag(), vld1q_f64(px + 2 * i));
    vst1q_f64(py + 2 * i, vaddq_f64(vld1q_f64(py + 2 * i), prod));
  }
}

double sqnorm_neon(const cplx* x, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vld1q_f64(px + 2 * i);
    const float64x2_t b = vld1q_f64(px + 2 * i + 2);
    acc0 = vfmaq_f64(acc0, a, a);
    acc1 = vfmaq_f64(acc1, b, b);
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

double diff_sqnorm_neon(const cplx* x, const cplx* y, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  const auto* py = reinterpret_cast<const double*>(y);
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t d = vsubq_f64(vld1q_f64(px + 2 * i), vld1q_f64(py + 2 * i));
    acc = vfmaq_f64(acc, d, d);
  }
  return vaddvq_f64(acc);
}

cplx dotc_neon(const cplx* x, const cplx* y, std::size_t n) {
  const auto* px = reinterpret_cast<const double*>(x);
  const auto* py = reinterpret_cast<const double*>(y);
  float64x2_t acc_re = vdupq_n_f64(0.0), acc_im = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t a = vld1q_f64(px + 2 * i);
    const float64x2_t b = vld1q_f64(py + 2 * i);
    acc_re = vfmaq_f64(acc_re, a, b);
    acc_im = vfmaq_f64(acc_im, a, vextq_f64(b, b, 1));
  }
  return {vaddvq_f64(acc_re), vgetq_lane_f64(acc_im, 0) - vgetq_lane_f64(acc_im, 1)};
}

constexpr KernelTable kNeon{"neon", scale_neon, axpy_neon, sqnorm_neon, diff_sqnorm_neon, dotc_neon};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace tensamp::kernels
