#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "medvp/image.hpp"
#include "medvp/types.hpp"

namespace medvp {

/// Sampling ranges for visual prompts. Alpha is sampled on a 1/1000 grid
/// so that stored values round-trip exactly through JSON.
struct ShapeSpec {
  std::vector<Shape> shapes{kAllShapes.begin(), kAllShapes.end()};
  std::vector<NamedColor> palette = default_palette();
  int alpha_min_permille = 600;
  int alpha_max_permille = 900;
  std::vector<int> thickness_choices = {2, 3, 4, 5};
  /// Thickness is multiplied by max(1, min(width, height) / this).
  int thickness_reference = 256;
};

/// Throws Error if the spec has empty sets or out-of-range values.
void validate_shape_spec(const ShapeSpec& spec);

/// Draws one prompt for `box`. Shape, color, alpha and thickness are drawn
/// in that order from Rng(seed), so restricting the shape set to a single
/// shape leaves the other attributes unchanged. If the box is thinner than
/// twice the thickness, the thickness is reduced to fit and `warning`
/// (when given) receives a message.
VisualPrompt sample_prompt(const BoundingBox& box, std::uint64_t seed, const ShapeSpec& spec,
                           ImageSize image, std::string* warning = nullptr);

/// Seed of the prompt drawn for the `box_index`-th box of a record.
std::uint64_t prompt_seed(std::uint64_t record_seed, std::size_t box_index);

/// Binary-coverage ink layer with the same size as the target image.
class PromptLayer {
 public:
  PromptLayer(ImageSize size);

  [[nodiscard]] ImageSize size() const { return size_; }
  [[nodiscard]] bool covered(int x, int y) const { return mask_[index(x, y)] != 0; }
  [[nodiscard]] Rgb ink(int x, int y) const { return ink_[index(x, y)]; }
  void paint(int x, int y, Rgb c) {
    mask_[index(x, y)] = 1;
    ink_[index(x, y)] = c;
  }
  [[nodiscard]] std::size_t covered_count() const;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) + static_cast<std::size_t>(x);
  }

  ImageSize size_;
  std::vector<std::uint8_t> mask_;
  std::vector<Rgb> ink_;
};

/// Binary rasterization (no anti-aliasing) of one prompt:
///  - rectangle: border band of `thickness` pixels inside the box;
///  - ellipse: band between the inscribed ellipse and one shrunk by
///    `thickness`, evaluated exactly in integers at pixel centers;
///  - scribble: uniform Catmull-Rom curve through the control points,
///    stamped with a square brush of side `thickness`.
/// Every covered pixel lies inside prompt.source_box.
PromptLayer rasterize(const VisualPrompt& prompt, ImageSize image);

/// Blend weight actually applied: alpha rounded to the nearest 1/1000.
int alpha_permille(double alpha);

/// round_half_up((w * ink + (1000 - w) * in) / 1000) in exact integers.
std::uint8_t blend_channel(std::uint8_t in, std::uint8_t ink, int weight_permille);

/// Where the layer has ink: out = round(alpha * ink + (1 - alpha) * in)
/// per channel, with alpha taken as alpha_permille(alpha) / 1000.
/// Elsewhere the input pixel is copied unchanged. Throws Error on size mismatch or alpha outside [0,1].
Image alpha_blend(const Image& image, const PromptLayer& layer, double alpha);

/// Rasterizes and blends each prompt in order.
Image composite(const Image& original, std::span<const VisualPrompt> prompts);

struct RenderConfig {
  ShapeSpec spec;
  std::uint64_t master_seed = 0;
  std::filesystem::path image_root;
  std::filesystem::path out_dir;
};

/// File name used for a record's rendered image.
std::string rendered_file_name(std::string_view record_id);

/// Path of a record's source image under `image_root`.
std::filesystem::path original_image_path(const PromptedRecord& r, const std::filesystem::path& image_root);

/// One prompt per box, each with its own seed, composited and written as
/// PNG to out_dir. Records flagged missing_image, or whose image cannot be
/// decoded, come back flagged "render_failed" with no prompts.
PromptedRecord render_record(const PromptedRecord& record, const RenderConfig& config,
                             std::vector<std::string>* warnings = nullptr);

/// Re-composites the record's existing prompts onto its original image and
/// writes the result to out_dir (used after prompts are dropped or
/// replaced). With no prompts the image path reverts to the original.
PromptedRecord recomposite_record(const PromptedRecord& record, const std::filesystem::path& image_root,
                                  const std::filesystem::path& out_dir);

/// Row-major attention grid of non-negative finite values.
struct AttentionGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
};

/// Min-max normalizes the grid (a constant grid maps to 0), maps it through
/// the 256-entry colormap, upsamples nearest-neighbour to the image size
/// and blends the result over the whole image at `alpha`.
/// Throws Error on NaN, infinite or negative cells, or a malformed grid.
Image heatmap_overlay(const Image& image, const AttentionGrid& grid, double alpha = 0.5);

/// Colormap index of each cell after normalization.
std::vector<int> heatmap_indices(const AttentionGrid& grid);

}  // namespace medvp
