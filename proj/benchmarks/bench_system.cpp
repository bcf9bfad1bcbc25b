#include <benchmark/benchmark.h>

#include "ephs/models.hpp"
#include "ephs/sim.hpp"

using namespace ephs;

namespace {

struct MbsFixture {
  models::MbsDemo demo = models::default_mbs_demo();
  assemble::DAESystem sys =
      assemble::assemble(core::flatten(demo.model.pattern, demo.model.binding));
  sim::SystemState st;

  MbsFixture() {
    st = sim::make_initial_state(sys);
    sys.set_pose_state(st.x, "b1.q", demo.q1);
    sys.set_pose_state(st.x, "b2.q", demo.q2);
    sys.set_pose_state(st.x, "j.qr", demo.qr);
    sys.set_vector_state(st.x, "b1.p", demo.p1);
    sys.set_vector_state(st.x, "b2.p", demo.p2);
    sim::IntegratorConfig cfg;
    st = sim::project_initial(sys, st, cfg);
    st.rates = sys.implied_rates(st.x, st.z);
  }
};

void BM_flatten_mbs(benchmark::State& state) {
  const auto demo = models::default_mbs_demo();
  for (auto _ : state)
    benchmark::DoNotOptimize(core::flatten(demo.model.pattern, demo.model.binding));
}
BENCHMARK(BM_flatten_mbs);

void BM_assemble_mbs(benchmark::State& state) {
  const auto demo = models::default_mbs_demo();
  const auto flat = core::flatten(demo.model.pattern, demo.model.binding);
  for (auto _ : state) benchmark::DoNotOptimize(assemble::assemble(flat));
}
BENCHMARK(BM_assemble_mbs);

void BM_residual_mbs(benchmark::State& state) {
  MbsFixture f;
  const Eigen::VectorXd x = f.st.x, xd = f.st.rates, z = f.st.z;
  for (auto _ : state) benchmark::DoNotOptimize(f.sys.residual(x, xd, z));
}
BENCHMARK(BM_residual_mbs);

void BM_step_mbs_midpoint(benchmark::State& state) {
  MbsFixture f;
  sim::IntegratorConfig cfg;  // LieMidpoint, h = 1e-3
  for (auto _ : state) benchmark::DoNotOptimize(sim::step(f.sys, f.st, cfg));
}
BENCHMARK(BM_step_mbs_midpoint);

void BM_audit_mbs(benchmark::State& state) {
  MbsFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(f.sys.audit(f.st.x, f.st.rates, f.st.z));
}
BENCHMARK(BM_audit_mbs);

}  // namespace
