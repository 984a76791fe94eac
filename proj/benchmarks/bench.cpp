#include "bearing/integrators.hpp"
#include "bearing/oracle.hpp"
#include "bearing/planar.hpp"
#include "bearing/spherical.hpp"
#include "bearing/verification.hpp"

#include <benchmark/benchmark.h>

using namespace bearing;

namespace {

spherical::SphericalParams spherical_params(std::size_t n) {
  spherical::SphericalParams p;
  p.R = 2.0;
  p.r = 0.5;
  p.A = 2.0;
  p.B = 3.0;
  p.C = 4.0;
  for (std::size_t i = 0; i < n; ++i) p.balls.push_back({0.05 + 0.02 * i, 1.0 + 0.3 * i, 0.1 * i});
  return p;
}

planar::PlanarParams planar_params(std::size_t n) {
  planar::PlanarParams p;
  p.r = 0.5;
  p.m = 2.0;
  p.I = 1.5;
  for (std::size_t i = 0; i < n; ++i) p.balls.push_back({1.0 + 0.25 * i, 0.1 + 0.05 * i});
  return p;
}

void BM_SphericalRk4Step(benchmark::State& st) {
  const auto p = spherical_params(static_cast<std::size_t>(st.range(0)));
  verification::Rng rng(1);
  const spherical::ExtendedField field(p);
  State x = spherical::pack(verification::random_spherical_state(p, rng));
  for (auto _ : st) {
    x = rk4_step(field, x, 1e-3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SphericalRk4Step)->Arg(1)->Arg(3)->Arg(8);

void BM_SphericalFullRk4Step(benchmark::State& st) {
  const auto p = spherical_params(static_cast<std::size_t>(st.range(0)));
  verification::Rng rng(2);
  const auto s = verification::random_spherical_state(p, rng);
  spherical::FullSphericalState f{s, RotMat3(), std::vector<RotMat3>(p.balls.size())};
  const spherical::FullField field(p);
  State x = spherical::pack(f);
  for (auto _ : st) {
    x = rk4_step(field, x, 1e-3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SphericalFullRk4Step)->Arg(1)->Arg(3);

void BM_PlanarRk4Step(benchmark::State& st) {
  const auto p = planar_params(static_cast<std::size_t>(st.range(0)));
  verification::Rng rng(3);
  const planar::ReducedField field(p);
  State x = planar::pack(planar::reduce(p, verification::random_planar_state(p, rng)));
  for (auto _ : st) {
    x = rk4_step(field, x, 1e-3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_PlanarRk4Step)->Arg(2)->Arg(3)->Arg(8);

void BM_OracleSolve(benchmark::State& st) {
  const auto p = planar_params(static_cast<std::size_t>(st.range(0)));
  verification::Rng rng(4);
  const auto f = verification::random_planar_state(p, rng);
  for (auto _ : st) benchmark::DoNotOptimize(oracle::full_oracle_rhs(p, f));
}
BENCHMARK(BM_OracleSolve)->Arg(2)->Arg(3)->Arg(8);

void BM_TangentFlow(benchmark::State& st) {
  const auto p = spherical_params(3);
  verification::Rng rng(5);
  const spherical::ExtendedField field(p);
  const State x = spherical::pack(verification::random_spherical_state(p, rng));
  for (auto _ : st) benchmark::DoNotOptimize(tangent_flow(field, x, {1e-3, 0.1, 100}));
}
BENCHMARK(BM_TangentFlow);

}  // namespace
BENCHMARK_MAIN();
