#include <cstdlib>
#include <cstring>

#include "modeflux/kernels.hpp"

namespace modeflux::kernels {

std::vector<const Ops*> all_available() {
  std::vector<const Ops*> v{&scalar()};
  if (const Ops* o = avx2()) v.push_back(o);
  if (const Ops* o = neon()) v.push_back(o);
  return v;
}

const Ops& active() {
  static const Ops* chosen = [] {
    if (const char* env = std::getenv("MODEFLUX_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) return &scalar();
      if (std::strcmp(env, "avx2") == 0 && avx2()) return avx2();
      if (std::strcmp(env, "neon") == 0 && neon()) return neon();
    }
    if (const Ops* o = avx2()) return o;
    if (const Ops* o = neon()) return o;
    return &scalar();
  }();
  return *chosen;
}

}  // namespace modeflux::kernels
