// Regenerates frozen_objectives.hpp: long-run primal-dual objective values for
// the acceptance instances. Independent of the ADMM solver.

#include <cstdio>

#include "instances.hpp"
#include "primal_dual.hpp"

int main(int argc, char** argv) {
  const int count = argc > 1 ? std::atoi(argv[1]) : 50;
  const int iterations = argc > 2 ? std::atoi(argv[2]) : 400000;
  std::printf("#pragma once\n\n");
  std::printf("// Generated by freeze_oracle (%d primal-dual iterations per instance).\n\n", iterations);
  std::printf("namespace oracle {\n\n");
  std::printf("inline constexpr int kFrozenIterations = %d;\n", iterations);
  std::printf("inline constexpr double kFrozenObjectives[%d] = {\n", count);
  for (int s = 0; s < count; ++s) {
    const oracle::JadeProblem pr = oracle::random_instance(static_cast<std::uint64_t>(s));
    const oracle::OracleResult r = oracle::primal_dual_solve(pr, iterations);
    std::printf("    %.17g,\n", r.objective);
    std::fflush(stdout);
  }
  std::printf("};\n\n}  // namespace oracle\n");
  return 0;
}
