#include <atomic>
#include <cstdlib>
#include <string_view>

#include "cml/kernels.hpp"

namespace cml::kernels {

#if defined(CML_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_table() {
#if defined(CML_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* auto_table() {
  if (const char* env = std::getenv("CML_KERNELS"); env && std::string_view(env) == "scalar")
    return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{auto_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* table = nullptr;
  if (name == "scalar") {
    table = &scalar_table();
  } else if (name == "avx2") {
    table = avx2_table();
  } else if (name == "auto") {
    table = auto_table();
  }
  if (!table) return false;
  current().store(table, std::memory_order_release);
  return true;
}

}  // namespace cml::kernels
