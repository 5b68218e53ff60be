#include "edgesim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "edgesim/errors.hpp"

namespace edgesim::kernels {

#ifdef EDGESIM_HAVE_AVX2
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#ifdef EDGESIM_HAVE_AVX2
  return &avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(EDGESIM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

const KernelTable* select_default() {
  if (const char* env = std::getenv("EDGESIM_ISA")) {
    if (std::string(env) == "scalar") return &scalar_table();
  }
  if (cpu_supports(Isa::avx2)) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_default()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void force_isa(Isa isa) {
  if (!cpu_supports(isa)) {
    throw DomainError("kernel variant '" + std::string(isa_name(isa)) + "' is not available");
  }
  current().store(isa == Isa::avx2 ? avx2_table() : &scalar_table(), std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace edgesim::kernels
