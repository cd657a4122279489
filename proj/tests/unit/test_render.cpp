#include <gtest/gtest.h>

#include <set>

#include "medvp/colormap.hpp"
#include "medvp/image.hpp"
#include "medvp/render.hpp"
#include "medvp/seed.hpp"
#include "testkit.hpp"

using namespace medvp;
using testkit::TempDir;

namespace {

std::set<std::pair<int, int>> covered(const PromptLayer& layer) {
  std::set<std::pair<int, int>> out;
  for (int y = 0; y < layer.size().height; ++y) {
    for (int x = 0; x < layer.size().width; ++x) {
      if (layer.covered(x, y)) out.insert({x, y});
    }
  }
  return out;
}

VisualPrompt prompt_for(Shape shape, BoundingBox box, int thickness, Rgb ink = {255, 0, 0}) {
  VisualPrompt p;
  p.shape = shape;
  p.color = {"red", ink};
  p.alpha = 0.7;
  p.thickness = thickness;
  p.source_box = box;
  p.geometry_box = box;
  return p;
}

}  // namespace

TEST(Blend, ExactIntegerGoldens) {
  // From tests/oracles/oracles.py (exact rational arithmetic).
  EXPECT_EQ(blend_channel(10, 250, alpha_permille(0.5)), 130);
  EXPECT_EQ(blend_channel(0, 255, alpha_permille(0.6)), 153);
  EXPECT_EQ(blend_channel(255, 0, alpha_permille(0.6)), 102);
  EXPECT_EQ(blend_channel(100, 101, alpha_permille(0.5)), 101);
  EXPECT_EQ(blend_channel(7, 200, alpha_permille(0.333)), 71);
}

TEST(Blend, EndpointsAndBoundsHoldForEveryChannelPair) {
  for (int in = 0; in < 256; in += 5) {
    for (int ink = 0; ink < 256; ink += 3) {
      const auto a = static_cast<std::uint8_t>(in);
      const auto b = static_cast<std::uint8_t>(ink);
      ASSERT_EQ(blend_channel(a, b, 0), a);
      ASSERT_EQ(blend_channel(a, b, 1000), b);
      for (int w = 0; w <= 1000; w += 37) {
        const int v = blend_channel(a, b, w);
        ASSERT_GE(v, std::min(in, ink));
        ASSERT_LE(v, std::max(in, ink));
      }
    }
  }
}

TEST(Blend, OnlyCoveredPixelsChange) {
  Rng rng(8);
  const Image img = testkit::random_image(rng, 40, 30);
  const auto p = prompt_for(Shape::kRectangle, {5, 6, 20, 25}, 2);
  const PromptLayer layer = rasterize(p, img.size());
  const Image out = alpha_blend(img, layer, 0.0);
  EXPECT_EQ(out, img);
  const Image full = alpha_blend(img, layer, 1.0);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (layer.covered(x, y)) {
        ASSERT_EQ(full.at(x, y), (Rgb{255, 0, 0}));
      } else {
        ASSERT_EQ(full.at(x, y), img.at(x, y));
      }
    }
  }
  EXPECT_THROW(alpha_blend(img, layer, 1.5), Error);
  EXPECT_THROW(alpha_blend(img, PromptLayer({4, 4}), 0.5), Error);
}

TEST(Rasterize, ThicknessOneRectangleIsTheBorder) {
  const BoundingBox box{2, 3, 7, 6};
  std::set<std::pair<int, int>> expected;
  for (int x = 2; x <= 6; ++x) {
    expected.insert({x, 3});
    expected.insert({x, 5});
  }
  expected.insert({2, 4});
  expected.insert({6, 4});
  EXPECT_EQ(covered(rasterize(prompt_for(Shape::kRectangle, box, 1), {10, 10})), expected);
}

TEST(Rasterize, ThickRectangleFillsSmallBox) {
  const BoundingBox box{0, 0, 4, 4};
  EXPECT_EQ(rasterize(prompt_for(Shape::kRectangle, box, 2), {4, 4}).covered_count(), 16u);
  EXPECT_EQ(rasterize(prompt_for(Shape::kRectangle, box, 1), {4, 4}).covered_count(), 12u);
}

TEST(Rasterize, EllipseIsSymmetricAndHollow) {
  const BoundingBox box{10, 10, 41, 31};
  const PromptLayer layer = rasterize(prompt_for(Shape::kEllipse, box, 3), {60, 50});
  for (int y = box.y_min; y < box.y_max; ++y) {
    for (int x = box.x_min; x < box.x_max; ++x) {
      const int mx = box.x_min + box.x_max - 1 - x;
      const int my = box.y_min + box.y_max - 1 - y;
      ASSERT_EQ(layer.covered(x, y), layer.covered(mx, y));
      ASSERT_EQ(layer.covered(x, y), layer.covered(x, my));
    }
  }
  EXPECT_FALSE(layer.covered(25, 20)) << "centre must be hollow";
  EXPECT_TRUE(layer.covered(10, 20)) << "left extreme";
  EXPECT_TRUE(layer.covered(25, 10)) << "top extreme";
  EXPECT_FALSE(layer.covered(10, 10)) << "corner is outside the ellipse";
}

TEST(Rasterize, EveryShapeStaysInsideItsBox) {
  Rng rng(2024);
  const ImageSize size{97, 71};
  for (Shape shape : kAllShapes) {
    ShapeSpec spec;
    spec.shapes = {shape};
    for (int i = 0; i < 1000; ++i) {
      const BoundingBox box = testkit::random_box(rng, size);
      const VisualPrompt p = sample_prompt(box, rng.next_u64(), spec, size);
      ASSERT_EQ(p.shape, shape);
      const PromptLayer layer = rasterize(p, size);
      for (const auto& [x, y] : covered(layer)) {
        ASSERT_TRUE(box.contains_pixel(x, y)) << to_string(shape) << " pixel " << x << "," << y;
      }
      if (box.width() >= 3 && box.height() >= 3 && shape != Shape::kScribble) {
        ASSERT_GT(layer.covered_count(), 0u);
      }
    }
  }
}

TEST(Rasterize, ScribbleInksAlongItsControlPoints) {
  ShapeSpec spec;
  spec.shapes = {Shape::kScribble};
  const BoundingBox box{10, 10, 90, 60};
  const VisualPrompt p = sample_prompt(box, 77, spec, {100, 100});
  ASSERT_EQ(p.control_points.size(), 5u);
  const PromptLayer layer = rasterize(p, {100, 100});
  for (const auto& pt : p.control_points) {
    EXPECT_TRUE(box.contains_pixel(pt.x, pt.y));
    EXPECT_TRUE(layer.covered(pt.x, pt.y));
  }
  for (std::size_t i = 1; i < p.control_points.size(); ++i) {
    EXPECT_GE(p.control_points[i].x, p.control_points[i - 1].x - box.width() / 4);
  }
}

TEST(SamplePrompt, DeterministicAndWithinSpec) {
  const BoundingBox box{3, 4, 60, 50};
  ShapeSpec spec;
  const VisualPrompt a = sample_prompt(box, 123, spec, {100, 80});
  EXPECT_EQ(a, sample_prompt(box, 123, spec, {100, 80}));
  std::set<Shape> shapes;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const VisualPrompt p = sample_prompt(box, s, spec, {100, 80});
    shapes.insert(p.shape);
    ASSERT_GE(p.alpha, 0.6);
    ASSERT_LE(p.alpha, 0.9);
    ASSERT_GE(p.thickness, 2);
    ASSERT_LE(p.thickness, 5);
    ASSERT_EQ(p.source_box, box);
  }
  EXPECT_EQ(shapes.size(), 3u);
}

TEST(SamplePrompt, RestrictingShapeKeepsOtherAttributes) {
  const BoundingBox box{0, 0, 50, 50};
  for (std::uint64_t s = 0; s < 100; ++s) {
    const VisualPrompt mixed = sample_prompt(box, s, {}, {50, 50});
    ShapeSpec only;
    only.shapes = {Shape::kEllipse};
    const VisualPrompt forced = sample_prompt(box, s, only, {50, 50});
    ASSERT_EQ(forced.color, mixed.color);
    ASSERT_EQ(forced.alpha, mixed.alpha);
    ASSERT_EQ(forced.thickness, mixed.thickness);
  }
}

TEST(SamplePrompt, ThicknessShrinksForTinyBoxesWithWarning) {
  ShapeSpec spec;
  spec.thickness_choices = {5};
  std::string warning;
  const VisualPrompt p = sample_prompt({0, 0, 4, 30}, 1, spec, {50, 50}, &warning);
  EXPECT_EQ(p.thickness, 2);
  EXPECT_FALSE(warning.empty());
}

TEST(SamplePrompt, ThicknessScalesWithLargeImages) {
  ShapeSpec spec;
  spec.thickness_choices = {3};
  EXPECT_EQ(sample_prompt({0, 0, 400, 400}, 1, spec, {600, 600}).thickness, 6);
  EXPECT_EQ(sample_prompt({0, 0, 100, 100}, 1, spec, {200, 200}).thickness, 3);
}

TEST(SamplePrompt, RejectsBadSpecs) {
  ShapeSpec spec;
  spec.shapes.clear();
  EXPECT_THROW(sample_prompt({0, 0, 5, 5}, 1, spec, {5, 5}), Error);
  spec = {};
  spec.alpha_min_permille = 950;
  EXPECT_THROW(sample_prompt({0, 0, 5, 5}, 1, spec, {5, 5}), Error);
  EXPECT_THROW(sample_prompt({3, 0, 3, 5}, 1, {}, {5, 5}), Error);
}

TEST(Composite, AppliesPromptsInOrder) {
  Image img(20, 20, {0, 0, 0});
  std::vector<VisualPrompt> ps = {prompt_for(Shape::kRectangle, {0, 0, 20, 20}, 10, {200, 0, 0}),
                                  prompt_for(Shape::kRectangle, {0, 0, 20, 20}, 10, {0, 0, 200})};
  ps[0].alpha = 1.0;
  ps[1].alpha = 0.5;
  const Image out = composite(img, ps);
  EXPECT_EQ(out.at(3, 3), (Rgb{100, 0, 100}));
}

TEST(Image, PngRoundTripIsLosslessAndStable) {
  TempDir dir;
  Rng rng(4);
  const Image img = testkit::random_image(rng, 33, 17);
  write_png(img, dir / "a.png");
  EXPECT_EQ(read_image(dir / "a.png"), img);
  EXPECT_EQ(read_image_size(dir / "a.png"), (ImageSize{33, 17}));
  write_png(read_image(dir / "a.png"), dir / "b.png");
  EXPECT_EQ(testkit::read_file(dir / "a.png"), testkit::read_file(dir / "b.png"));
}

TEST(Image, CorruptFilesThrow) {
  TempDir dir;
  testkit::write_file(dir / "bad.png", "\x89PNG\r\n\x1a\nnot really");
  EXPECT_THROW(read_image(dir / "bad.png"), Error);
  testkit::write_file(dir / "bad.txt", "hello");
  EXPECT_THROW(read_image(dir / "bad.txt"), Error);
  EXPECT_THROW(read_image(dir / "absent.png"), Error);
}

TEST(RenderRecord, WritesCompositeAndFlagsMissingImages) {
  TempDir dir;
  Rng rng(6);
  write_png(testkit::random_image(rng, 30, 30), dir / "src" / "a.png");
  PromptedRecord r = testkit::plain_record("rec/1", "q", "a");
  r.base.image_path = "a.png";
  r.boxes = {{2, 2, 20, 20}, {25, 25, 40, 40}, {40, 40, 50, 50}};
  RenderConfig cfg;
  cfg.master_seed = 7;
  cfg.image_root = dir / "src";
  cfg.out_dir = dir / "out";
  std::vector<std::string> warnings;
  const PromptedRecord out = render_record(r, cfg, &warnings);
  EXPECT_EQ(out.seed, derive_seed(7, "rec/1"));
  ASSERT_EQ(out.boxes.size(), 2u) << "box fully outside the image is dropped";
  EXPECT_EQ(out.boxes[1], (BoundingBox{25, 25, 30, 30}));
  ASSERT_EQ(out.prompts.size(), 2u);
  EXPECT_TRUE(record_violations(out).empty());
  EXPECT_FALSE(warnings.empty());
  const std::string name = rendered_file_name("rec/1");
  EXPECT_EQ(name.rfind("rec_1-", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / name));
  EXPECT_EQ(read_image(out.prompted_image_path), composite(read_image(dir / "src" / "a.png"), out.prompts));

  r.base.missing_image = true;
  const PromptedRecord failed = render_record(r, cfg);
  EXPECT_TRUE(failed.has_flag("render_failed"));
  EXPECT_TRUE(failed.prompts.empty());
}

TEST(Heatmap, NormalizesAndRejectsBadGrids) {
  AttentionGrid g{2, 2, {0.0, 1.0, 2.0, 4.0}};
  EXPECT_EQ(heatmap_indices(g), (std::vector<int>{0, 64, 128, 255}));
  AttentionGrid flat{1, 3, {2.0, 2.0, 2.0}};
  EXPECT_EQ(heatmap_indices(flat), (std::vector<int>{0, 0, 0}));
  Image img(4, 4, {0, 0, 0});
  const Image out = heatmap_overlay(img, g, 1.0);
  EXPECT_EQ(out.at(0, 0), viridis_table()[0]);
  EXPECT_EQ(out.at(3, 3), viridis_table()[255]);
  EXPECT_EQ(out.at(2, 1), viridis_table()[64]);
  for (double bad : {std::nan(""), -1.0, std::numeric_limits<double>::infinity()}) {
    AttentionGrid b{1, 2, {0.0, bad}};
    EXPECT_THROW(heatmap_overlay(img, b), Error);
  }
  AttentionGrid ragged{2, 2, {0.0, 1.0, 2.0}};
  EXPECT_THROW(heatmap_indices(ragged), Error);
}

TEST(Colormap, EndsAreDarkPurpleAndYellow) {
  const auto& t = viridis_table();
  EXPECT_LT(t[0].r + t[0].g, 150);
  EXPECT_GT(t[255].r, 200);
  EXPECT_GT(t[255].g, 200);
  EXPECT_LT(t[255].b, 100);
}
