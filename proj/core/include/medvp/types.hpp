#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace medvp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AnswerType { kOpen, kClosed };
enum class DatasetKind { kSlake, kVqaRad, kPmcVqa, kGeneric };
enum class Shape { kScribble, kRectangle, kEllipse };
enum class Split { kTrain, kTest };

/// Pipeline stages in the order they are produced.
enum class Stage { kIngested, kExtracted, kGrounded, kRendered, kAdapted };

std::string_view to_string(AnswerType t);
std::string_view to_string(DatasetKind k);
std::string_view to_string(Shape s);
std::string_view to_string(Split s);
std::string_view to_string(Stage s);

AnswerType parse_answer_type(std::string_view s);
DatasetKind parse_dataset_kind(std::string_view s);
Shape parse_shape(std::string_view s);
Split parse_split(std::string_view s);
Stage parse_stage(std::string_view s);

inline constexpr std::array<Shape, 3> kAllShapes = {Shape::kScribble, Shape::kRectangle,
                                                    Shape::kEllipse};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct NamedColor {
  std::string name;
  Rgb rgb;
  friend bool operator==(const NamedColor&, const NamedColor&) = default;
};

/// The frozen marker palette: red, green, blue, yellow, magenta, cyan.
const std::vector<NamedColor>& default_palette();
/// Looks up a palette entry by name; throws Error for unknown names.
const NamedColor& palette_color(std::string_view name);

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Half-open pixel box: covers columns [x_min, x_max) and rows [y_min, y_max).
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  double score = 1.0;
  std::string entity;

  [[nodiscard]] int width() const { return x_max - x_min; }
  [[nodiscard]] int height() const { return y_max - y_min; }
  [[nodiscard]] long long area() const {
    return static_cast<long long>(width()) * static_cast<long long>(height());
  }
  [[nodiscard]] bool contains_pixel(int x, int y) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Checks the BoundingBox invariants. Returns a description of the first
/// violation, or nullopt if the box is valid. Bounds are only checked when
/// `bounds` has a positive size.
std::optional<std::string> box_violation(const BoundingBox& box, ImageSize bounds = {});

/// Clips to [0,w]x[0,h]. Returns nullopt when the clipped box is empty.
std::optional<BoundingBox> clip_box(BoundingBox box, ImageSize bounds);

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct VisualPrompt {
  Shape shape = Shape::kRectangle;
  NamedColor color;
  double alpha = 1.0;
  int thickness = 1;
  /// Rectangle and ellipse: the box the marker is drawn on / inscribed in.
  BoundingBox geometry_box;
  /// Scribble only: ordered control points of the curve.
  std::vector<Point> control_points;
  BoundingBox source_box;
  friend bool operator==(const VisualPrompt&, const VisualPrompt&) = default;
};

struct VQARecord {
  std::string id;
  std::string image_path;
  std::string question;
  std::string answer;
  AnswerType answer_type = AnswerType::kOpen;
  std::vector<std::string> options;
  DatasetKind dataset = DatasetKind::kGeneric;
  /// Original option letter for multiple-choice sources ("" otherwise).
  std::string answer_letter;
  /// Source language tag, when the dataset provides one.
  std::string lang;
  bool missing_image = false;
  friend bool operator==(const VQARecord&, const VQARecord&) = default;
};

/// Letter ("A", "B", ...) of `answer` among `options`, or "" when absent.
std::string option_letter_of(const VQARecord& r);

struct PromptedRecord {
  VQARecord base;
  std::vector<std::string> entities;
  std::vector<BoundingBox> boxes;
  std::vector<VisualPrompt> prompts;
  std::string prompted_image_path;
  std::string instruction_text;
  std::uint64_t seed = 0;
  ImageSize image_size;
  /// Processing flags such as "render_failed"; never removed once set.
  std::vector<std::string> flags;

  [[nodiscard]] bool has_flag(std::string_view f) const;
  void add_flag(std::string_view f);
  friend bool operator==(const PromptedRecord&, const PromptedRecord&) = default;
};

/// Every invariant violation of a record, as human-readable strings.
std::vector<std::string> record_violations(const PromptedRecord& r);

}  // namespace medvp
