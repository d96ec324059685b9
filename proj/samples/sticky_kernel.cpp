// Tabulates the sticky Brownian motion kernel and its mass decomposition.

#include <cstdio>

#include "ssep/sticky_walk.hpp"

int main() {
  const double x = 1.0, t = 1.0;
  std::printf("y, density\n");
  for (double y = -2.0; y <= 4.0; y += 0.5) std::printf("%g, %.8f\n", y, ssep::sticky_bm_kernel(x, y, t).density);
  const double atom = ssep::sticky_bm_kernel(x, 1.0, t).atom;
  std::printf("atom at 1: %.8f\ntotal mass: %.15f\nmass below 0: %.8f\n", atom, ssep::sticky_bm_total_mass(x, t),
              ssep::sticky_bm_lower_mass(x, t, 0.0));
}
