#include <benchmark/benchmark.h>

#include <random>

#include "ephs/geom.hpp"

using namespace ephs::geom;

namespace {

GroupElement some_element() {
  GroupElement q;
  q.R = exp_so3(Vec3(0.3, -0.8, 0.5));
  q.r = Vec3(1.0, -2.0, 0.25);
  q.convention = Convention::SemidirectProduct;
  return q;
}

void BM_compose(benchmark::State& state) {
  const GroupElement a = some_element(), b = inverse(some_element());
  for (auto _ : state) benchmark::DoNotOptimize(compose(a, b));
}
BENCHMARK(BM_compose);

void BM_exp_map(benchmark::State& state) {
  const Twist xi{Vec3(0.1, 0.2, -0.3), Vec3(1, 2, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(exp_map(xi, Convention::SemidirectProduct));
}
BENCHMARK(BM_exp_map);

void BM_log_map(benchmark::State& state) {
  const GroupElement q = some_element();
  for (auto _ : state) benchmark::DoNotOptimize(log_map(q));
}
BENCHMARK(BM_log_map);

void BM_Ad(benchmark::State& state) {
  const GroupElement q = some_element();
  const Twist u{Vec3(0.1, 0.2, -0.3), Vec3(1, 2, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(Ad(q, u));
}
BENCHMARK(BM_Ad);

void BM_ad_star(benchmark::State& state) {
  const Twist u{Vec3(0.1, 0.2, -0.3), Vec3(1, 2, 3)};
  const Wrench p{Vec3(2, 0, 1), Vec3(0.5, 0.5, 0)};
  for (auto _ : state)
    benchmark::DoNotOptimize(ad_star(u, p, Convention::SemidirectProduct));
}
BENCHMARK(BM_ad_star);

void BM_se3_left_jacobian(benchmark::State& state) {
  const Twist xi{Vec3(0.1, 0.2, -0.3), Vec3(1, 2, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(left_jacobian_se3(xi));
}
BENCHMARK(BM_se3_left_jacobian);

}  // namespace

BENCHMARK_MAIN();
