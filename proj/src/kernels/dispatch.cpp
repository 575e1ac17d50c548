#include <cstdlib>
#include <string_view>

#include "tensamp/kernels.hpp"

namespace tensamp::kernels {

namespace detail {
#ifndef TENSAMP_WITH_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef TENSAMP_WITH_NEON
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(TENSAMP_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& pick() {
  if (const char* env = std::getenv("TNS_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return scalar_table();
  }
  const auto tables = available_tables();
  return *tables.back();
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = detail::avx2_table(); t != nullptr && cpu_has_avx2()) out.push_back(t);
  if (const auto* t = detail::neon_table(); t != nullptr) out.push_back(t);
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = pick();
  return table;
}

}  // namespace tensamp::kernels
