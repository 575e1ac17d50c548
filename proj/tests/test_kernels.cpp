#include <doctest.h>

#include <random>

#include "tensamp/kernels.hpp"

using namespace tensamp;
using kernels::cplx;

namespace {

std::vector<cplx> noise(std::size_t n, std::mt19937_64& g) {
  std::normal_distribution<double> d;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {d(g), d(g)};
  return v;
}

double close(cplx a, cplx b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

TEST_CASE("active table is one of the available ones") {
  const auto tables = kernels::available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front()->name == "scalar");
  bool found = false;
  for (const auto* t : tables) found = found || t == &kernels::active();
  CHECK(found);
  MESSAGE("active kernels: " << kernels::active().name);
}

TEST_CASE("every variant matches the scalar kernels for lengths 0..67") {
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 g(7);
  for (const auto* t : kernels::available_tables()) {
    CAPTURE(t->name);
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      // Offset by one element to exercise unaligned loads.
      auto xs = noise(n + 1, g), ys = noise(n + 1, g);
      const cplx* x = xs.data() + 1;
      const cplx* y = ys.data() + 1;
      const cplx alpha{0.7, -1.3};

      std::vector<cplx> a(n), b(n);
      ref.scale(a.data(), alpha, x, n);
      t->scale(b.data(), alpha, x, n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(b[i], a[i]) < 1e-14);

      a.assign(y, y + n);
      b.assign(y, y + n);
      ref.axpy(a.data(), alpha, x, n);
      t->axpy(b.data(), alpha, x, n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(b[i], a[i]) < 1e-14);

      CHECK(std::abs(t->sqnorm(x, n) - ref.sqnorm(x, n)) <= 1e-12 * (1.0 + ref.sqnorm(x, n)));
      CHECK(std::abs(t->diff_sqnorm(x, y, n) - ref.diff_sqnorm(x, y, n)) <= 1e-12 * (1.0 + ref.diff_sqnorm(x, y, n)));
      CHECK(close(t->dotc(x, y, n), ref.dotc(x, y, n)) < 1e-12 * (1.0 + n));
    }
  }
}

TEST_CASE("scalar kernels against direct formulas") {
  const std::vector<cplx> x{{1, 2}, {3, -1}, {0, 0.5}};
  const std::vector<cplx> y{{2, 0}, {-1, 1}, {4, 4}};
  const auto& s = kernels::scalar_table();
  CHECK(s.sqnorm(x.data(), 3) == doctest::Approx(1 + 4 + 9 + 1 + 0.25));
  CHECK(s.diff_sqnorm(x.data(), y.data(), 3) == doctest::Approx(1 + 4 + 16 + 4 + 16 + 12.25));
  cplx d{0, 0};
  for (int i = 0; i < 3; ++i) d += std::conj(x[i]) * y[i];
  CHECK(close(s.dotc(x.data(), y.data(), 3), d) < 1e-15);
  CHECK(s.sqnorm(x.data(), 0) == 0.0);
}
