// Simulated clay experiment: a neck phantom is measured n times as is and n
// times with a 60 ml spherical cap stuck to its front, and the mean volume
// difference is compared with the cap's true volume.
//
// usage: neckvol_demo [n] [master_seed]

#include <cstdio>
#include <string>

#include "neckvol/neckvol.hpp"

using namespace neckvol;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 10;
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;

  PhantomSpec base;
  base.neck_radius_mm = 60.0;
  base.noise_sigma_mm = 2.0;
  base.spike_rate = 0.005;
  PhantomSpec clay = base;
  clay.bump = BumpSpec{60.0, 31.0, solve_bump_protrusion(31.0, 60.0)};

  ExperimentOptions opt;
  opt.master_seed = seed;
  try {
    const auto r = run_experiment(base, clay, n, PipelineConfig{}, opt);
    std::printf("gap %.3f mm, %zu frames per capture\n\n", r.gap_mm, opt.frames_per_capture);
    std::printf("run   without clay (L)   with clay (L)\n");
    for (std::size_t i = 0; i < n; ++i) {
      std::printf("%3zu   %16.5f   %13.5f\n", i + 1, r.baseline_volumes[i], r.augmented_volumes[i]);
    }
    std::printf("\nmean  %16.5f   %13.5f\n", mean_of(r.baseline_volumes), mean_of(r.augmented_volumes));
    std::printf("std   %16.5f   %13.5f\n\n", r.std_baseline_liters, r.std_augmented_liters);
    std::printf("clay volume      %.1f ml\n", 1000.0 * r.true_delta_liters);
    std::printf("measured delta   %.1f ml\n", 1000.0 * r.mean_delta_liters);
    std::printf("error            %.1f %%\n", r.delta_error_percent);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
