#include "medvp/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "medvp/colormap.hpp"
#include "medvp/seed.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

using Wide = __int128;

struct Painter {
  PromptLayer& layer;
  const BoundingBox& clip;
  Rgb color;

  void operator()(int x, int y) const {
    if (!clip.contains_pixel(x, y)) return;
    if (x < 0 || y < 0 || x >= layer.size().width || y >= layer.size().height) return;
    layer.paint(x, y, color);
  }
};

void draw_rectangle(const BoundingBox& b, int t, const Painter& paint) {
  for (int y = b.y_min; y < b.y_max; ++y) {
    bool edge_row = y < b.y_min + t || y >= b.y_max - t;
    for (int x = b.x_min; x < b.x_max; ++x) {
      if (edge_row || x < b.x_min + t || x >= b.x_max - t) paint(x, y);
    }
  }
}

// Coordinates are doubled so pixel centres (x + 0.5) become odd integers.
bool inside_ellipse(Wide dx2, Wide dy2, Wide w, Wide h, bool strict) {
  Wide lhs = dx2 * dx2 * h * h + dy2 * dy2 * w * w;
  Wide rhs = w * w * h * h;
  return strict ? lhs < rhs : lhs <= rhs;
}

void draw_ellipse(const BoundingBox& b, int t, const Painter& paint) {
  const Wide w = b.width();
  const Wide h = b.height();
  const Wide wi = w - 2 * static_cast<Wide>(t);
  const Wide hi = h - 2 * static_cast<Wide>(t);
  const bool hollow = wi > 0 && hi > 0;
  const int sx = b.x_min + b.x_max;
  const int sy = b.y_min + b.y_max;
  for (int y = b.y_min; y < b.y_max; ++y) {
    Wide dy2 = 2 * static_cast<Wide>(y) + 1 - sy;
    for (int x = b.x_min; x < b.x_max; ++x) {
      Wide dx2 = 2 * static_cast<Wide>(x) + 1 - sx;
      if (!inside_ellipse(dx2, dy2, w, h, false)) continue;
      if (hollow && inside_ellipse(dx2, dy2, wi, hi, true)) continue;
      paint(x, y);
    }
  }
}

struct Vec2 {
  double x;
  double y;
};

Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  auto eval = [&](double a, double b, double c, double d) {
    return 0.5 * ((2.0 * b) + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                  (-a + 3.0 * b - 3.0 * c + d) * t3);
  };
  return {eval(p0.x, p1.x, p2.x, p3.x), eval(p0.y, p1.y, p2.y, p3.y)};
}

void stamp(double fx, double fy, int t, const Painter& paint) {
  const int cx = static_cast<int>(std::floor(fx));
  const int cy = static_cast<int>(std::floor(fy));
  const int lo = -(t - 1) / 2;
  const int hi = t / 2;
  for (int dy = lo; dy <= hi; ++dy) {
    for (int dx = lo; dx <= hi; ++dx) paint(cx + dx, cy + dy);
  }
}

void draw_scribble(const std::vector<Point>& pts, int t, const Painter& paint) {
  if (pts.empty()) return;
  std::vector<Vec2> c;
  c.reserve(pts.size() + 2);
  c.push_back({pts.front().x + 0.5, pts.front().y + 0.5});
  for (const auto& p : pts) c.push_back({p.x + 0.5, p.y + 0.5});
  c.push_back({pts.back().x + 0.5, pts.back().y + 0.5});
  if (pts.size() == 1) {
    stamp(c[1].x, c[1].y, t, paint);
    return;
  }
  for (std::size_t i = 1; i + 2 < c.size(); ++i) {
    // Manhattan length of the local control polygon bounds the arc length.
    double reach = 0.0;
    for (std::size_t k = i - 1; k < i + 2; ++k) {
      reach += std::abs(c[k + 1].x - c[k].x) + std::abs(c[k + 1].y - c[k].y);
    }
    const int steps = 2 * static_cast<int>(std::ceil(reach)) + 4;
    for (int s = 0; s <= steps; ++s) {
      Vec2 q = catmull_rom(c[i - 1], c[i], c[i + 1], c[i + 2], static_cast<double>(s) / steps);
      stamp(q.x, q.y, t, paint);
    }
  }
}

std::string hex8(std::uint64_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(v & 0xffffffffU));
  return buf;
}

}  // namespace

void validate_shape_spec(const ShapeSpec& spec) {
  if (spec.shapes.empty()) throw Error("shape set is empty");
  if (spec.palette.empty()) throw Error("palette is empty");
  if (spec.thickness_choices.empty()) throw Error("thickness choices are empty");
  for (int t : spec.thickness_choices) {
    if (t < 1) throw Error("thickness must be >= 1");
  }
  if (spec.alpha_min_permille < 0 || spec.alpha_max_permille > 1000 ||
      spec.alpha_min_permille > spec.alpha_max_permille) {
    throw Error("alpha range must satisfy 0 <= min <= max <= 1");
  }
  if (spec.thickness_reference < 1) throw Error("thickness reference must be >= 1");
}

std::uint64_t prompt_seed(std::uint64_t record_seed, std::size_t box_index) {
  return derive_seed(record_seed, "prompt/" + std::to_string(box_index));
}

VisualPrompt sample_prompt(const BoundingBox& box, std::uint64_t seed, const ShapeSpec& spec, ImageSize image,
                           std::string* warning) {
  validate_shape_spec(spec);
  if (auto v = box_violation(box)) throw Error("sample_prompt: invalid box: " + *v);

  Rng rng(seed);
  VisualPrompt p;
  p.shape = spec.shapes[rng.below(spec.shapes.size())];
  p.color = spec.palette[rng.below(spec.palette.size())];
  p.alpha = rng.uniform_int(spec.alpha_min_permille, spec.alpha_max_permille) / 1000.0;
  const int base = spec.thickness_choices[rng.below(spec.thickness_choices.size())];
  const int short_side = std::min(image.width, image.height);
  const int scale = std::max(1, short_side / spec.thickness_reference);
  int thickness = base * scale;
  const int fit = std::max(1, std::min(box.width(), box.height()) / 2);
  if (thickness > fit) {
    if (warning) {
      *warning = "box " + std::to_string(box.width()) + "x" + std::to_string(box.height()) +
                 " too small for thickness " + std::to_string(thickness) + "; reduced to " +
                 std::to_string(fit);
    }
    thickness = fit;
  }
  p.thickness = thickness;
  p.source_box = box;
  p.geometry_box = box;

  if (p.shape == Shape::kScribble) {
    // Five jittered points left to right inside a 10%-inset box.
    const int x0 = box.x_min + box.width() / 10;
    const int x1 = box.x_max - box.width() / 10;
    const int y0 = box.y_min + box.height() / 10;
    const int y1 = box.y_max - box.height() / 10;
    const int span = x1 - x0;
    const int jitter = span / 8;
    for (int i = 0; i < 5; ++i) {
      const int bx = x0 + (i * (span - 1)) / 4;
      const int x = std::clamp(bx + rng.uniform_int(-jitter, jitter), x0, x1 - 1);
      const int y = rng.uniform_int(y0, y1 - 1);
      p.control_points.push_back({x, y});
    }
  }
  return p;
}

PromptLayer::PromptLayer(ImageSize size) : size_(size) {
  if (size.width <= 0 || size.height <= 0) throw Error("layer dimensions must be positive");
  const auto n = static_cast<std::size_t>(size.width) * static_cast<std::size_t>(size.height);
  mask_.assign(n, 0);
  ink_.assign(n, Rgb{});
}

std::size_t PromptLayer::covered_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

PromptLayer rasterize(const VisualPrompt& prompt, ImageSize image) {
  PromptLayer layer(image);
  const Painter paint{layer, prompt.source_box, prompt.color.rgb};
  const int t = std::max(1, prompt.thickness);
  switch (prompt.shape) {
    case Shape::kRectangle:
      draw_rectangle(prompt.geometry_box, t, paint);
      break;
    case Shape::kEllipse:
      draw_ellipse(prompt.geometry_box, t, paint);
      break;
    case Shape::kScribble:
      draw_scribble(prompt.control_points, t, paint);
      break;
  }
  return layer;
}

int alpha_permille(double alpha) {
  return static_cast<int>(std::lround(std::clamp(alpha, 0.0, 1.0) * 1000.0));
}

std::uint8_t blend_channel(std::uint8_t in, std::uint8_t ink, int w) {
  const int num = w * ink + (1000 - w) * in;
  return static_cast<std::uint8_t>((2 * num + 1000) / 2000);
}

Image alpha_blend(const Image& image, const PromptLayer& layer, double alpha) {
  if (image.size() != layer.size()) throw Error("alpha_blend: image and layer dimensions differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha_blend: alpha must be in [0,1]");
  const int w = alpha_permille(alpha);
  Image out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!layer.covered(x, y)) continue;
      const Rgb in = image.at(x, y);
      const Rgb ink = layer.ink(x, y);
      out.set(x, y, {blend_channel(in.r, ink.r, w), blend_channel(in.g, ink.g, w), blend_channel(in.b, ink.b, w)});
    }
  }
  return out;
}

Image composite(const Image& original, std::span<const VisualPrompt> prompts) {
  Image out = original;
  for (const auto& p : prompts) out = alpha_blend(out, rasterize(p, out.size()), p.alpha);
  return out;
}

std::string rendered_file_name(std::string_view id) {
  std::string safe;
  bool changed = false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_' || c == '.';
    safe += ok ? c : '_';
    changed |= !ok;
  }
  if (safe.empty() || safe.front() == '.') {
    safe.insert(safe.begin(), '_');
    changed = true;
  }
  if (changed) safe += "-" + hex8(derive_seed(0, id));
  return safe + ".png";
}

fs::path original_image_path(const PromptedRecord& r, const fs::path& image_root) {
  fs::path p(r.base.image_path);
  if (p.is_absolute() || image_root.empty()) return p;
  return image_root / p;
}

PromptedRecord render_record(const PromptedRecord& record, const RenderConfig& config,
                             std::vector<std::string>* warnings) {
  PromptedRecord out = record;
  out.seed = derive_seed(config.master_seed, record.base.id);
  out.prompts.clear();
  out.prompted_image_path.clear();
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(record.base.id + ": " + msg);
  };
  if (record.base.missing_image) {
    out.add_flag("render_failed");
    warn("image missing; skipped");
    return out;
  }
  Image img;
  try {
    img = read_image(original_image_path(record, config.image_root));
  } catch (const Error& e) {
    out.add_flag("render_failed");
    warn(e.what());
    return out;
  }
  out.image_size = img.size();

  std::vector<BoundingBox> boxes;
  for (const auto& box : record.boxes) {
    if (auto clipped = clip_box(box, img.size())) {
      boxes.push_back(*clipped);
    } else {
      warn("box outside image dropped");
    }
  }
  out.boxes = boxes;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    std::string w;
    out.prompts.push_back(sample_prompt(boxes[i], prompt_seed(out.seed, i), config.spec, img.size(), &w));
    if (!w.empty()) warn(w);
  }
  const fs::path dest = config.out_dir / rendered_file_name(record.base.id);
  write_png(composite(img, out.prompts), dest);
  out.prompted_image_path = dest.generic_string();
  return out;
}

PromptedRecord recomposite_record(const PromptedRecord& record, const fs::path& image_root,
                                  const fs::path& out_dir) {
  PromptedRecord out = record;
  const fs::path src = original_image_path(record, image_root);
  if (record.prompts.empty()) {
    out.prompted_image_path = src.generic_string();
    return out;
  }
  Image img = read_image(src);
  out.image_size = img.size();
  const fs::path dest = out_dir / rendered_file_name(record.base.id);
  write_png(composite(img, out.prompts), dest);
  out.prompted_image_path = dest.generic_string();
  return out;
}

std::vector<int> heatmap_indices(const AttentionGrid& grid) {
  if (grid.rows <= 0 || grid.cols <= 0 ||
      grid.values.size() != static_cast<std::size_t>(grid.rows) * static_cast<std::size_t>(grid.cols)) {
    throw Error("attention grid must be a non-empty rows x cols matrix");
  }
  for (double v : grid.values) {
    if (std::isnan(v)) throw Error("attention grid contains NaN");
    if (!std::isfinite(v)) throw Error("attention grid contains an infinite value");
    if (v < 0.0) throw Error("attention grid contains a negative value");
  }
  const auto [lo_it, hi_it] = std::minmax_element(grid.values.begin(), grid.values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<int> idx(grid.values.size(), 0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double v = (grid.values[i] - lo) / range;
      idx[i] = std::min(255, static_cast<int>(v * 256.0));
    }
  }
  return idx;
}

Image heatmap_overlay(const Image& image, const AttentionGrid& grid, double alpha) {
  const std::vector<int> idx = heatmap_indices(grid);
  const auto& cmap = viridis_table();
  PromptLayer layer(image.size());
  for (int y = 0; y < image.height(); ++y) {
    const int r = static_cast<int>(static_cast<long long>(y) * grid.rows / image.height());
    for (int x = 0; x < image.width(); ++x) {
      const int c = static_cast<int>(static_cast<long long>(x) * grid.cols / image.width());
      layer.paint(x, y, cmap[static_cast<std::size_t>(idx[static_cast<std::size_t>(r * grid.cols + c)])]);
    }
  }
  return alpha_blend(image, layer, alpha);
}

}  // namespace medvp
