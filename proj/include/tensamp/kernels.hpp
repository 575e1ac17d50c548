#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

namespace tensamp::kernels {

using cplx = std::complex<double>;

/// Function table for the data-parallel inner loops. Every entry operates on
/// interleaved (re, im) complex doubles and accepts unaligned pointers.
struct KernelTable {
  std::string_view name;
  /// out[i] = alpha * x[i]
  void (*scale)(cplx* out, cplx alpha, const cplx* x, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(cplx* y, cplx alpha, const cplx* x, std::size_t n);
  /// sum |x[i]|^2
  double (*sqnorm)(const cplx* x, std::size_t n);
  /// sum |x[i] - y[i]|^2
  double (*diff_sqnorm)(const cplx* x, const cplx* y, std::size_t n);
  /// sum conj(x[i]) * y[i]
  cplx (*dotc)(const cplx* x, const cplx* y, std::size_t n);
};

const KernelTable& scalar_table();

/// Every variant that is compiled in AND supported by the running CPU,
/// scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library. Picks the widest supported variant on
/// first call; TNS_SIMD=scalar forces the reference kernels.
const KernelTable& active();

// Thin wrappers over active().
inline void scale(cplx* out, cplx alpha, const cplx* x, std::size_t n) { active().scale(out, alpha, x, n); }
inline void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t n) { active().axpy(y, alpha, x, n); }
inline double sqnorm(const cplx* x, std::size_t n) { return active().sqnorm(x, n); }
inline double diff_sqnorm(const cplx* x, const cplx* y, std::size_t n) { return active().diff_sqnorm(x, y, n); }
inline cplx dotc(const cplx* x, const cplx* y, std::size_t n) { return active().dotc(x, y, n); }

namespace detail {
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace tensamp::kernels
