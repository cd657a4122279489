#include <benchmark/benchmark.h>

#include <sstream>

#include "medvp/grounding.hpp"
#include "medvp/manifest.hpp"
#include "medvp/render.hpp"
#include "medvp/seed.hpp"

using namespace medvp;

static void BM_DeriveSeed(benchmark::State& state) {
  const std::string id = "slake-" + std::string(static_cast<std::size_t>(state.range(0)), '7');
  for (auto _ : state) benchmark::DoNotOptimize(derive_seed(42, id));
}
BENCHMARK(BM_DeriveSeed)->Arg(8)->Arg(64);

static void BM_Giou(benchmark::State& state) {
  Rng rng(5);
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 1024; ++i) {
    const int x = rng.uniform_int(0, 400), y = rng.uniform_int(0, 400);
    boxes.push_back({x, y, x + rng.uniform_int(1, 100), y + rng.uniform_int(1, 100), 1.0, ""});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(giou(boxes[i & 1023], boxes[(i * 7 + 3) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Giou);

namespace {

Manifest synthetic_manifest(std::size_t n) {
  Manifest m;
  m.header.stage = Stage::kRendered;
  m.header.master_seed = 42;
  const ShapeSpec spec;
  for (std::size_t i = 0; i < n; ++i) {
    PromptedRecord r;
    r.base.id = "bench-" + std::to_string(i);
    r.base.image_path = "images/" + r.base.id + ".png";
    r.base.question = "Is there a lesion in the left kidney?";
    r.base.answer = "yes";
    r.base.answer_type = AnswerType::kClosed;
    r.entities = {"lesion", "left kidney"};
    r.image_size = {256, 256};
    r.seed = derive_seed(42, r.base.id);
    r.boxes = {{20, 30, 120, 140, 0.9, "lesion"}, {130, 40, 220, 200, 0.8, "left kidney"}};
    for (std::size_t b = 0; b < r.boxes.size(); ++b) {
      r.prompts.push_back(sample_prompt(r.boxes[b], prompt_seed(r.seed, b), spec, r.image_size));
    }
    r.prompted_image_path = "out/" + rendered_file_name(r.base.id);
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace

static void BM_ManifestWrite(benchmark::State& state) {
  const Manifest m = synthetic_manifest(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    std::ostringstream out;
    write_manifest(m, out);
    benchmark::DoNotOptimize(out.str());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ManifestWrite)->Arg(1000);

static void BM_ManifestParse(benchmark::State& state) {
  std::ostringstream out;
  write_manifest(synthetic_manifest(static_cast<std::size_t>(state.range(0))), out);
  const std::string text = out.str();
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(parse_manifest(in));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ManifestParse)->Arg(1000);
