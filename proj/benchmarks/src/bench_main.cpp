#include <algorithm>
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "evtrack/embedding.hpp"
#include "evtrack/net/correlation.hpp"
#include "evtrack/net/inference.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/tracker.hpp"

using namespace evtrack;

namespace {

constexpr SensorGeometry kSensor{346, 260};

std::vector<Event> random_events(std::size_t count, TimeUs t0, TimeUs t1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<TimeUs> t(t0, t1 - 1);
    std::uniform_int_distribution<int> x(0, kSensor.width - 1), y(0, kSensor.height - 1), p(0, 1);
    std::vector<Event> events(count);
    for (Event& e : events) e = {t(rng), static_cast<std::uint16_t>(x(rng)), static_cast<std::uint16_t>(y(rng)),
                                 static_cast<std::int8_t>(p(rng) ? 1 : -1)};
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

Tensor3<float> random_tensor(int c, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor3<float> t(c, h, w);
    for (float& v : t.values()) v = u(rng);
    return t;
}

std::shared_ptr<const net::SiameseModel<float>> full_model() {
    static const auto model = [] {
        auto m = std::make_shared<net::SiameseModel<float>>(net::Architecture::alexnet_scaled(18, 1.0));
        m->initialize(0);
        return m;
    }();
    return model;
}

void BM_Embedding(benchmark::State& state) {
    const auto method = static_cast<EmbeddingMethod>(state.range(0));
    const EventWindow window(random_events(static_cast<std::size_t>(state.range(1)), 0, 40000, 1), 0, 40000, kSensor);
    const EmbeddingConfig config{method, 9};
    for (auto _ : state) benchmark::DoNotOptimize(embed(window, config));
    state.SetItemsProcessed(state.iterations() * state.range(1));
    state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_Embedding)
    ->ArgsProduct({{static_cast<int>(EmbeddingMethod::Est), static_cast<int>(EmbeddingMethod::OneChannelImage),
                    static_cast<int>(EmbeddingMethod::TwoChannelImage), static_cast<int>(EmbeddingMethod::TwoChannelVoxel)},
                   {10000, 50000}})
    ->Unit(benchmark::kMicrosecond);

void BM_CrossCorrelate(benchmark::State& state) {
    const auto z = random_tensor(256, 6, 6, 2);
    const auto x = random_tensor(256, 22, 22, 3);
    for (auto _ : state) benchmark::DoNotOptimize(net::cross_correlate(z, x));
}
BENCHMARK(BM_CrossCorrelate)->Unit(benchmark::kMicrosecond);

void BM_BackboneForward(benchmark::State& state) {
    const auto model = full_model();
    const int size = static_cast<int>(state.range(0));
    const auto input = random_tensor(18, size, size, 4);
    const bool engine = state.range(1) != 0;
    const net::InferenceEngine inference(model->backbone);
    for (auto _ : state) {
        if (engine) benchmark::DoNotOptimize(inference.forward(input));
        else benchmark::DoNotOptimize(model->backbone.forward(input));
    }
    state.SetLabel(engine ? "engine" : "reference");
}
BENCHMARK(BM_BackboneForward)->ArgsProduct({{127, 255}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_TrackerStep(benchmark::State& state) {
    const Tracker tracker(full_model(), TrackerConfig{});
    const BoundingBox box{173.0, 130.0, 32.0, 32.0};
    const TrackerState initial = tracker.init_target(EventWindow(random_events(5000, 0, 40000, 5), 0, 40000, kSensor), box);
    const EventWindow window(random_events(static_cast<std::size_t>(state.range(0)), 40000, 80000, 6), 40000, 80000,
                             kSensor);
    for (auto _ : state) {
        TrackerState s = initial;
        benchmark::DoNotOptimize(tracker.step(s, window));
    }
}
BENCHMARK(BM_TrackerStep)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_Simulator(benchmark::State& state) {
    SyntheticSpec spec;
    spec.geometry = kSensor;
    spec.textured_background = true;
    spec.duration_us = 200000;
    spec.trajectory = {{0, 100.0, 100.0}, {200000, 140.0, 120.0}};
    const SyntheticSequence seq = make_synthetic_sequence(spec);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_events(seq.frames));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.frames.frames.size()));
}
BENCHMARK(BM_Simulator)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
