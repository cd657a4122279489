#include <benchmark/benchmark.h>

#include "medvp/harness.hpp"
#include "medvp/manifest.hpp"

using namespace medvp;

static void BM_TokenRecall(benchmark::State& state) {
  const std::string truth = "small round hypodense lesion in the right hepatic lobe";
  const std::string pred = "There is a hypodense lesion in the right lobe of the liver, small and round.";
  for (auto _ : state) benchmark::DoNotOptimize(token_recall(truth, pred));
}
BENCHMARK(BM_TokenRecall);

static void BM_Score(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Manifest ref;
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < n; ++i) {
    PromptedRecord r;
    r.base.id = "q" + std::to_string(i);
    r.base.image_path = "x.png";
    r.base.question = "What is shown?";
    if (i % 2) {
      r.base.answer = "yes";
      r.base.answer_type = AnswerType::kClosed;
      preds.push_back({r.base.id, i % 3 ? "Yes." : "no"});
    } else {
      r.base.answer = "mass in the left lung";
      preds.push_back({r.base.id, "a mass in the lung"});
    }
    ref.records.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(score(preds, ref));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Score)->Arg(1000)->Arg(10000);
