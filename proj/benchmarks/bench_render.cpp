#include <benchmark/benchmark.h>

#include "medvp/render.hpp"
#include "medvp/seed.hpp"

using namespace medvp;

namespace {

Image gradient(int w, int h) {
  Image img(w, h, {0, 0, 0});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y), static_cast<std::uint8_t>(x ^ y)});
    }
  }
  return img;
}

VisualPrompt prompt_for(Shape shape, int side) {
  ShapeSpec spec;
  spec.shapes = {shape};
  const BoundingBox box{side / 4, side / 4, side * 3 / 4, side * 3 / 4, 1.0, "lesion"};
  return sample_prompt(box, 7, spec, {side, side});
}

}  // namespace

static void BM_Rasterize(benchmark::State& state) {
  const auto shape = static_cast<Shape>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const VisualPrompt vp = prompt_for(shape, side);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(vp, {side, side}));
  state.SetLabel(std::string(to_string(shape)));
}
BENCHMARK(BM_Rasterize)->ArgsProduct({{0, 1, 2}, {256, 512, 1024}});

static void BM_AlphaBlend(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Image img = gradient(side, side);
  const PromptLayer layer = rasterize(prompt_for(Shape::kRectangle, side), {side, side});
  for (auto _ : state) benchmark::DoNotOptimize(alpha_blend(img, layer, 0.75));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_AlphaBlend)->Arg(256)->Arg(512)->Arg(1024);

static void BM_CompositeThreePrompts(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Image img = gradient(side, side);
  std::vector<VisualPrompt> prompts;
  for (Shape s : kAllShapes) prompts.push_back(prompt_for(s, side));
  for (auto _ : state) benchmark::DoNotOptimize(composite(img, prompts));
}
BENCHMARK(BM_CompositeThreePrompts)->Arg(256)->Arg(512);

static void BM_SamplePrompt(benchmark::State& state) {
  const ShapeSpec spec;
  const BoundingBox box{40, 30, 200, 180, 1.0, "lesion"};
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_prompt(box, prompt_seed(11, i++), spec, {256, 256}));
}
BENCHMARK(BM_SamplePrompt);
