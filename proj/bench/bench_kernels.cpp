// Serial reference vs OpenMP kernels on a 14x14x256 feature tensor with 30%
// per-channel-row loss. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include "tcomp/channel.hpp"
#include "tcomp/completion.hpp"
#include "tcomp/dataset.hpp"
#include "tcomp/kernels.hpp"

namespace {

using namespace tcomp;

struct Fixture {
  FeatureTensor clean;
  DamagedTensor damaged;
  ALTeCWeights weights;
  std::array<ModeMatrix, 3> unfolded;
  kernels::CpFactors factors;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    auto set = synthetic_low_rank_set(9, {14, 14, 256}, 4, 11, 0.01);
    out.clean = set.front().tensor;
    std::vector<FeatureTensor> train;
    for (std::size_t i = 1; i < set.size(); ++i) train.push_back(set[i].tensor);
    out.weights = train_altec(train, 1e-3, Exec::serial);
    const PacketizationScheme scheme;
    const auto pattern = draw_loss(packet_count(out.clean.dims(), scheme), {0.3, 5});
    out.damaged = apply_loss(out.clean, pattern, scheme);
    for (int m = 1; m <= 3; ++m) out.unfolded[static_cast<std::size_t>(m - 1)] = unfold(out.damaged.tensor, m);
    const auto& d = out.clean.dims();
    out.factors.a = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(d.height), 8).cwiseAbs();
    out.factors.b = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(d.width), 8).cwiseAbs();
    out.factors.c = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(d.channels), 8).cwiseAbs();
    return out;
  }();
  return f;
}

Exec policy(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_SvtModes(benchmark::State& state) {
  const auto& f = fixture();
  std::array<kernels::SvtJob, 3> jobs;
  for (std::size_t i = 0; i < 3; ++i) jobs[i] = {&f.unfolded[i], 5.0, nullptr};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::svt_modes(jobs, SvdBackend::gram_eigen, policy(state)));
}

void BM_AltecPredict(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<float> out(f.damaged.tensor.data().begin(), f.damaged.tensor.data().end());
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::altec_predict(f.damaged.tensor, f.damaged.mask, f.weights, out, policy(state)));
  }
}

void BM_AlsUpdate(benchmark::State& state) {
  const auto& f = fixture();
  const kernels::AlsData data{&f.damaged.tensor, &f.damaged.mask, 0.1, true};
  auto factors = f.factors;
  for (auto _ : state) {
    for (int m = 1; m <= 3; ++m) benchmark::DoNotOptimize(kernels::als_update_mode(m, data, factors, policy(state)));
  }
}

void BM_CpReconstruct(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> out(f.clean.dims().size());
  for (auto _ : state) {
    kernels::cp_reconstruct(f.factors, f.clean.dims(), out, policy(state));
    benchmark::ClobberMemory();
  }
}

void BM_Complete(benchmark::State& state, const char* method) {
  const auto& f = fixture();
  const auto cfg = default_method_config(method, std::make_shared<const ALTeCWeights>(f.weights));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        complete(cfg, f.damaged.tensor, f.damaged.mask, IterationBudget::fixed(1), policy(state)));
  }
}

}  // namespace

BENCHMARK(BM_SvtModes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AltecPredict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlsUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CpReconstruct)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Complete, silrtc_1iter, "silrtc")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Complete, halrtc_1iter, "halrtc")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Complete, fcp_1iter, "fcp")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Complete, altec, "altec")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
