// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <benchmark/benchmark.h>

#include <vector>

#include <spdlog/spdlog.h>

#include "psdalign/fading.hpp"
#include "psdalign/kernels.hpp"
#include "psdalign/pilots.hpp"
#include "psdalign/simkit.hpp"
#include "psdalign/toeplitz.hpp"

using namespace psdalign;
using kernels::Execution;

namespace {

Execution mode(const benchmark::State& state) {
    return state.range(1) == 0 ? Execution::serial : Execution::parallel;
}

struct Scene {
    std::vector<ChannelCovariance> covariances;
    std::vector<PilotSequence> pilots;
    std::vector<kernels::ModulatedTerm> terms;
};

Scene make_scene(std::size_t length, std::size_t users) {
    Scene s;
    for (std::size_t k = 0; k < users; ++k) {
        s.covariances.push_back(build_covariance(DopplerSpectrum::clarke(0.002 * static_cast<double>(k + 1)), length));
        s.pilots.push_back(fft_pilot(k * length / users, length));
    }
    for (std::size_t k = 0; k < users; ++k) {
        s.terms.push_back({1.0, s.pilots[k].entries(), &s.covariances[k].autocorrelation()});
    }
    return s;
}

void BM_AssembleSystemMatrix(benchmark::State& state) {
    const auto length = static_cast<std::size_t>(state.range(0));
    const Scene s = make_scene(length, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::assemble_system_matrix(s.terms, 1.0, length, mode(state)));
    }
}

void BM_ApplyToeplitz(benchmark::State& state) {
    const auto length = static_cast<std::size_t>(state.range(0));
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.002), length);
    const ToeplitzOperator op(cov);
    const CMatrix x = CMatrix::Random(static_cast<Eigen::Index>(length), 16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::apply_toeplitz(op, x, mode(state)));
    }
}

void BM_ModulatedProductNorm(benchmark::State& state) {
    const auto length = static_cast<std::size_t>(state.range(0));
    const auto rk = build_covariance(DopplerSpectrum::clarke(0.002), length);
    const auto rg = build_covariance(DopplerSpectrum::clarke(0.004), length);
    const ToeplitzOperator op(rk);
    const auto pilot = fft_pilot(length / 2, length);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            kernels::modulated_product_norm(op, rg.autocorrelation(), pilot.entries(), mode(state)));
    }
}

void BM_RunUplink(benchmark::State& state) {
    ExperimentConfig config = default_config();
    config.length = static_cast<std::size_t>(state.range(0));
    config.antennas = 4;
    config.trials = 8;
    RunOptions options;
    options.execution = mode(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_uplink(config, PilotScheme::psd_align, options));
    }
}

void arguments(benchmark::internal::Benchmark* b) {
    b->ArgNames({"P", "parallel"});
    for (long p : {256, 1024}) {
        b->Args({p, 0});
        b->Args({p, 1});
    }
    b->Unit(benchmark::kMillisecond);
}

} // namespace

BENCHMARK(BM_AssembleSystemMatrix)->Apply(arguments);
BENCHMARK(BM_ApplyToeplitz)->Apply(arguments);
BENCHMARK(BM_ModulatedProductNorm)->Apply(arguments);
BENCHMARK(BM_RunUplink)->Apply(arguments);

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) {
        return 1;
    }
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
