// Relaxation of a full left reservoir into an empty channel: prints the
// expected density at a few times next to a KMC ensemble estimate.

#include <cstdio>
#include <vector>

#include "ssep/ssep.hpp"

int main() {
  const int n = 20;
  const auto params = ssep::SystemParams::from_alpha(n, 0.5);
  const ssep::InitialCondition init{ssep::parse_profile("const:0"), {1.0, 0.0}};
  const std::vector<double> times{50.0, 400.0, 2000.0};

  ssep::EnsembleOptions opts;
  opts.seed = 7;
  const auto kmc = ssep::ensemble_snapshots(init, params, times, 400, opts);

  auto profile = ssep::DensityProfile::from_initial(init, n);
  for (std::size_t i = 0; i < times.size(); ++i) {
    profile = ssep::evolve(profile, params, times[i] - profile.t);
    std::printf("t = %g (M = %ld)\n  x   ode       kmc\n", times[i], params.m());
    for (int x = 0; x <= n + 1; x += 3) {
      const auto ux = static_cast<std::size_t>(x);
      std::printf("%3d   %.4f   %.4f +- %.4f\n", x, profile.rho[ux], kmc[i].mean[ux], kmc[i].std_error[ux]);
    }
  }
}
