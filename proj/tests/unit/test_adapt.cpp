#include <gtest/gtest.h>

#include "medvp/adapt.hpp"
#include "medvp/render.hpp"
#include "testkit.hpp"

using namespace medvp;
using testkit::TempDir;

namespace {

VisualPrompt marker(Shape shape, const std::string& color, BoundingBox box) {
  VisualPrompt p;
  p.shape = shape;
  p.color = palette_color(color);
  p.alpha = 0.7;
  p.thickness = 2;
  p.source_box = box;
  p.geometry_box = box;
  return p;
}

PromptedRecord with_marker(const std::string& id, const std::string& question, BoundingBox box,
                           ImageSize size = {200, 200}) {
  PromptedRecord r = testkit::plain_record(id, question, "yes", AnswerType::kClosed);
  r.image_size = size;
  r.boxes = {box};
  r.prompts = {marker(Shape::kRectangle, "red", box)};
  return r;
}

std::vector<LintCategory> categories(const PromptedRecord& r) {
  std::vector<LintCategory> out;
  for (const auto& w : lint(r)) out.push_back(w.category);
  return out;
}

}  // namespace

TEST(Templates, FillHandlesSlotsAndEscapes) {
  EXPECT_EQ(fill_template("{a} and {{b}} {a}", {{"a", "x"}}), "x and {b} x");
  EXPECT_THROW(fill_template("{missing}", {}), Error);
  EXPECT_THROW(fill_template("open {slot", {{"slot", "v"}}), Error);
}

TEST(Templates, DefaultsAreComplete) {
  const auto t = InstructionTemplates::defaults();
  EXPECT_EQ(t.version, "1");
  for (const auto* s : {&t.prompted_open, &t.prompted_closed, &t.prompted_choice, &t.plain_open, &t.plain_closed,
                        &t.plain_choice}) {
    EXPECT_NE(s->find("{question}"), std::string::npos);
  }
  EXPECT_NE(t.prompted_open.find("{markers}"), std::string::npos);
  EXPECT_NE(t.marker.find("{color}"), std::string::npos);
}

TEST(Templates, LoadOverridesOnlyPresentFiles) {
  TempDir dir;
  testkit::write_file(dir / "plain_open.txt", "Q: {question}\n");
  testkit::write_file(dir / "VERSION.txt", "custom\n");
  const auto t = InstructionTemplates::load(dir.path());
  EXPECT_EQ(t.plain_open, "Q: {question}");
  EXPECT_EQ(t.version, "custom");
  EXPECT_EQ(t.prompted_open, InstructionTemplates::defaults().prompted_open);
}

TEST(Describe, NamesEveryMarkerInOrder) {
  const auto t = InstructionTemplates::defaults();
  const BoundingBox b{0, 0, 10, 10};
  EXPECT_EQ(describe_markers({}, t), "");
  EXPECT_EQ(describe_markers({marker(Shape::kRectangle, "red", b)}, t), "the red rectangle");
  EXPECT_EQ(describe_markers({marker(Shape::kRectangle, "red", b), marker(Shape::kEllipse, "blue", b)}, t),
            "the red rectangle and the blue ellipse");
  EXPECT_EQ(describe_markers({marker(Shape::kScribble, "green", b), marker(Shape::kEllipse, "blue", b),
                              marker(Shape::kRectangle, "yellow", b)},
                             t),
            "the green scribble, the blue ellipse and the yellow rectangle");
}

TEST(AdaptText, PromptedRecordsNameMarkersAndKeepTheQuestion) {
  const auto t = InstructionTemplates::defaults();
  PromptedRecord r = with_marker("a", "Is the liver normal?", {0, 0, 50, 50});
  r.prompts.push_back(marker(Shape::kEllipse, "cyan", {0, 0, 50, 50}));
  r.boxes.push_back({0, 0, 50, 50});
  const std::string text = adapt_text(r, t);
  EXPECT_NE(text.find("the red rectangle and the cyan ellipse"), std::string::npos) << text;
  EXPECT_NE(text.find("Is the liver normal?"), std::string::npos);
  EXPECT_EQ(text, fill_template(t.prompted_closed, {{"markers", describe_markers(r.prompts, t)},
                                                    {"question", r.base.question},
                                                    {"options", ""}}));
}

TEST(AdaptText, ChoicesAndPlainRecords) {
  const auto t = InstructionTemplates::defaults();
  PromptedRecord r = testkit::plain_record("b", "Which modality?", "MRI", AnswerType::kClosed);
  r.base.options = {"CT", "MRI"};
  const std::string plain = adapt_text(r, t);
  EXPECT_NE(plain.find("A. CT\nB. MRI"), std::string::npos);
  for (const auto& word : marker_vocabulary()) EXPECT_EQ(plain.find(" " + word + " "), std::string::npos) << word;
  PromptedRecord open = testkit::plain_record("c", "What is seen?", "edema");
  EXPECT_EQ(adapt_text(open, t), fill_template(t.plain_open, {{"question", "What is seen?"}}));
  InstructionTemplates broken = t;
  broken.plain_open = "no question here";
  EXPECT_THROW(adapt_text(open, broken), Error);
}

TEST(AdaptManifest, RequiresRenderedStage) {
  Manifest m;
  m.header.stage = Stage::kRendered;
  m.records.push_back(with_marker("a", "Is the liver normal?", {0, 0, 50, 50}));
  const Manifest out = adapt_manifest(m, InstructionTemplates::defaults());
  EXPECT_EQ(out.stage(), Stage::kAdapted);
  EXPECT_FALSE(out.records[0].instruction_text.empty());
  EXPECT_EQ(out.header.config["templates_version"], "1");
  EXPECT_THROW(adapt_manifest(out, InstructionTemplates::defaults()), Error);
}

TEST(Lint, TinyMarkerFixtureTriggersOnlyTiny) {
  const auto r = with_marker("tiny", "What organ is highlighted?", {10, 10, 15, 15}, {512, 512});
  EXPECT_EQ(categories(r), (std::vector<LintCategory>{LintCategory::kTinyPrompt}));
}

TEST(Lint, CountingFixtureTriggersOnlyCount) {
  const auto r = with_marker("count", "How many lesions are visible?", {0, 0, 100, 100});
  EXPECT_EQ(categories(r), (std::vector<LintCategory>{LintCategory::kCountQuestion}));
}

TEST(Lint, ExistenceFixtureTriggersOnlyExistence) {
  const auto r = with_marker("exist", "Is there a nodule in this image?", {0, 0, 100, 100});
  EXPECT_EQ(categories(r), (std::vector<LintCategory>{LintCategory::kExistenceQuestion}));
  PromptedRecord unmarked = r;
  unmarked.prompts.clear();
  EXPECT_TRUE(categories(unmarked).empty()) << "existence only matters with a marker present";
}

TEST(Lint, LateralityFixtureTriggersOnlyLaterality) {
  auto r = with_marker("side", "What abnormality is seen in the left kidney?", {0, 0, 100, 100});
  EXPECT_EQ(categories(r), (std::vector<LintCategory>{LintCategory::kLaterality}));
  PromptedRecord by_entity = with_marker("side2", "What abnormality is seen here?", {0, 0, 100, 100});
  by_entity.entities = {"right lung"};
  EXPECT_EQ(categories(by_entity), (std::vector<LintCategory>{LintCategory::kLaterality}));
}

TEST(Lint, ReportCountsEveryCategoryAndLeavesRecordsAlone) {
  const auto r = with_marker("all", "How many cysts are there in the left kidney?", {0, 0, 2, 2});
  const PromptedRecord before = r;
  const auto warnings = lint(r);
  EXPECT_EQ(warnings.size(), 4u);
  EXPECT_EQ(r, before);
  const Json j = lint_report_to_json(warnings, 1);
  EXPECT_EQ(j["counts"]["TINY_PROMPT"], 1);
  EXPECT_EQ(j["counts"]["LATERALITY"], 1);
  EXPECT_EQ(j["warnings"].size(), 4u);
  LintConfig loose;
  loose.tiny_area_ratio = 0.0;
  EXPECT_EQ(lint(r, loose).size(), 3u);
}
