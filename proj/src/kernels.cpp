#include "metacde/kernels.hpp"

#include <stdexcept>

namespace metacde::kernels {

bool avx2_lane_compiled();  // defined in kernels_avx2.cpp

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return avx2_lane_compiled() && __builtin_cpu_supports("avx2") &&
         __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {
const KernelTable* g_active = nullptr;
}

void select_lane(Lane lane) {
  switch (lane) {
    case Lane::scalar:
      g_active = &scalar_table();
      break;
    case Lane::avx2:
      if (!avx2_available()) throw std::runtime_error("avx2 kernels not available on this machine");
      g_active = &avx2_table();
      break;
    case Lane::autodetect:
      g_active = avx2_available() ? &avx2_table() : &scalar_table();
      break;
  }
}

const KernelTable& active() {
  if (!g_active) select_lane(Lane::autodetect);
  return *g_active;
}

}  // namespace metacde::kernels
