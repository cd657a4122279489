#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medvp/http_client.hpp"
#include "medvp/manifest.hpp"
#include "medvp/types.hpp"

namespace medvp {

/// Default detector score cut-off.
inline constexpr double kDefaultScoreThreshold = 0.2;

double iou(const BoundingBox& a, const BoundingBox& b);

/// IoU minus the fraction of the smallest enclosing box not covered by the
/// union. Range (-1, 1].
double giou(const BoundingBox& a, const BoundingBox& b);

struct GroundingRequest {
  std::string image_id;
  std::filesystem::path image_path;
  ImageSize image_size;
  std::vector<std::string> entities;
  double threshold = kDefaultScoreThreshold;
};

/// Raw detector output for one entity, before clipping and filtering.
struct EntityDetections {
  std::string entity;
  std::vector<BoundingBox> boxes;
};

/// Anything that can turn (image, entities) into raw detections.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<EntityDetections> detect(const GroundingRequest& request) = 0;
};

/// Offline detector driven by a rule file:
///
///   { "<image id>": { "<entity>": [ {"box": [x0, y0, x1, y1], "score": 0.9}, ... ] } }
///
/// The image id is matched against the record's image_path first, then its
/// file name, then its file stem. Missing rules yield no detections.
class StubDetector final : public Detector {
 public:
  using Rules = std::map<std::string, std::map<std::string, std::vector<BoundingBox>>>;

  explicit StubDetector(Rules rules) : rules_(std::move(rules)) {}
  static StubDetector from_json(const Json& j);
  static StubDetector load(const std::filesystem::path& path);

  std::vector<EntityDetections> detect(const GroundingRequest& request) override;

 private:
  Rules rules_;
};

/// JSON-over-HTTP client for an external open-vocabulary detector.
///
/// Request:  {"image": {"path": "..."} | {"base64": "..."},
///            "entities": [...], "threshold": 0.2}
/// Response: {"results": [{"entity": "liver",
///                         "boxes": [{"box": [x0, y0, x1, y1], "score": 0.9}]}]}
/// Box coordinates may be real-valued; they are rounded to whole pixels.
class HttpDetector final : public Detector {
 public:
  HttpDetector(std::string url, std::shared_ptr<HttpTransport> transport, RetryPolicy retry, bool send_base64);

  std::vector<EntityDetections> detect(const GroundingRequest& request) override;

  [[nodiscard]] Json build_request(const GroundingRequest& request) const;
  static std::vector<EntityDetections> parse_response(const std::string& body);

 private:
  std::string url_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  bool send_base64_;
};

/// Clips raw detections to the image, drops boxes below `threshold` or
/// empty after clipping, sorts each entity's boxes by descending score
/// (ties by y_min then x_min) and keeps `top_k` per entity. Output groups
/// follow the order of `entities`.
std::vector<BoundingBox> select_boxes(const std::vector<std::string>& entities,
                                      const std::vector<EntityDetections>& detections, ImageSize image,
                                      double threshold, int top_k);

/// Grounds every entity of one image. Empty entity lists short-circuit to
/// an empty result without calling the detector.
std::vector<BoundingBox> ground(Detector& detector, const GroundingRequest& request, int top_k = 1);

struct GroundingMatch {
  std::string record_id;
  std::string entity;
  BoundingBox gold;
  std::optional<BoundingBox> predicted;
  double iou = 0.0;
  double giou = -1.0;
};

struct GroundingReport {
  std::vector<GroundingMatch> matches;
  double mean_iou = 0.0;
  double mean_giou = 0.0;
  double hit_rate = 0.0;
  /// Per-entity means, keyed by entity.
  std::map<std::string, std::array<double, 3>> per_entity;
};

/// Scores predicted boxes against gold boxes record by record. Each gold box
/// is paired with the same-entity prediction of highest IoU; a gold box
/// without any prediction scores IoU 0 and GIoU -1. A hit is IoU >= 0.5.
/// Throws Error listing ids present in only one of the manifests.
GroundingReport eval_grounding(const Manifest& predicted, const Manifest& gold);

Json grounding_report_to_json(const GroundingReport& report);

}  // namespace medvp
