#include <benchmark/benchmark.h>

#include "spinepatch/classifier.hpp"
#include "spinepatch/raster.hpp"
#include "spinepatch/rng.hpp"
#include "spinepatch/tiling.hpp"

using namespace spinepatch;

namespace {

GrayImage noise_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (std::uint8_t& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

void BM_resize_bilinear(benchmark::State& state) {
    GrayImage img = noise_image(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(resize_bilinear(img, 224, 224));
    }
}
BENCHMARK(BM_resize_bilinear)->Arg(128)->Arg(512)->Arg(1024);

void BM_rotate(benchmark::State& state) {
    GrayImage img = noise_image(224, 224, 2);
    double degrees = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(rotate(img, degrees));
    }
}
BENCHMARK(BM_rotate)->Arg(15)->Arg(30)->Arg(90);

void BM_equalize(benchmark::State& state) {
    GrayImage img = noise_image(224, 224, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(equalize_histogram(img));
    }
}
BENCHMARK(BM_equalize);

void BM_extract_features(benchmark::State& state) {
    GrayImage img = noise_image(224, 224, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_features(img));
    }
}
BENCHMARK(BM_extract_features);

void BM_tile_labeling(benchmark::State& state) {
    Rng rng(5);
    TilingConfig cfg;
    ScanRecord scan;
    scan.scan_id = "bench";
    for (int i = 0; i < 8; ++i) {
        scan.osteophytes.push_back({{rng.uniform(0.0, 1024.0), rng.uniform(0.0, 1243.0)},
                                    std::nullopt});
    }
    auto tiles = tile_grid(1024, 1243, cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(label_tiles(tiles, scan.osteophytes, cfg, scan));
    }
}
BENCHMARK(BM_tile_labeling);

void BM_trace_contour(benchmark::State& state) {
    BinaryMask mask(128, 128);
    for (int y = 20; y < 100; ++y) {
        for (int x = 30; x < 90; ++x) mask.set(x, y, true);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(trace_mask_contour(mask));
    }
}
BENCHMARK(BM_trace_contour);

}  // namespace

BENCHMARK_MAIN();
