#include "medvp/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <openssl/evp.h>

#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const long long w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const long long h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0 && h > 0) ? w * h : 0;
}

void require_valid(const BoundingBox& b, const char* who) {
  if (auto v = box_violation(b)) throw Error(std::string(who) + ": invalid box: " + *v);
}

BoundingBox parse_detection(const Json& j, const std::string& entity) {
  const Json& coords = j.at("box");
  if (!coords.is_array() || coords.size() != 4) throw Error("detection box must be [x0, y0, x1, y1]");
  BoundingBox b;
  b.x_min = static_cast<int>(std::lround(coords[0].get<double>()));
  b.y_min = static_cast<int>(std::lround(coords[1].get<double>()));
  b.x_max = static_cast<int>(std::lround(coords[2].get<double>()));
  b.y_max = static_cast<int>(std::lround(coords[3].get<double>()));
  b.score = j.value("score", 1.0);
  b.entity = entity;
  return b;
}

std::string base64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read image " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double giou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a, "giou");
  require_valid(b, "giou");
  const long long inter = intersection_area(a, b);
  const long long uni = a.area() + b.area() - inter;
  const long long enclosing = static_cast<long long>(std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min)) *
                              (std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min));
  return static_cast<double>(inter) / static_cast<double>(uni) -
         static_cast<double>(enclosing - uni) / static_cast<double>(enclosing);
}

StubDetector StubDetector::from_json(const Json& j) {
  if (!j.is_object()) throw Error("stub rules must be a JSON object keyed by image id");
  Rules rules;
  for (const auto& [image_id, per_entity] : j.items()) {
    if (!per_entity.is_object()) throw Error("stub rules for '" + image_id + "' must be an object");
    for (const auto& [entity, list] : per_entity.items()) {
      auto& boxes = rules[image_id][entity];
      for (const auto& det : list) boxes.push_back(parse_detection(det, entity));
    }
  }
  return StubDetector(std::move(rules));
}

StubDetector StubDetector::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stub rules " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw Error("malformed stub rules " + path.string() + ": " + e.what());
  }
}

std::vector<EntityDetections> StubDetector::detect(const GroundingRequest& request) {
  const fs::path p(request.image_id);
  const Rules::mapped_type* per_entity = nullptr;
  for (const std::string& key : {request.image_id, p.filename().string(), p.stem().string()}) {
    if (auto it = rules_.find(key); it != rules_.end()) {
      per_entity = &it->second;
      break;
    }
  }
  std::vector<EntityDetections> out;
  for (const auto& entity : request.entities) {
    EntityDetections d{entity, {}};
    if (per_entity) {
      if (auto it = per_entity->find(entity); it != per_entity->end()) d.boxes = it->second;
    }
    out.push_back(std::move(d));
  }
  return out;
}

HttpDetector::HttpDetector(std::string url, std::shared_ptr<HttpTransport> transport, RetryPolicy retry,
                           bool send_base64)
    : url_(std::move(url)), transport_(std::move(transport)), retry_(retry), send_base64_(send_base64) {}

Json HttpDetector::build_request(const GroundingRequest& request) const {
  Json j;
  Json image;
  if (send_base64_) {
    image["base64"] = base64_file(request.image_path);
  } else {
    image["path"] = request.image_path.generic_string();
  }
  j["image"] = std::move(image);
  j["entities"] = request.entities;
  j["threshold"] = request.threshold;
  return j;
}

std::vector<EntityDetections> HttpDetector::parse_response(const std::string& body) {
  std::vector<EntityDetections> out;
  try {
    const Json j = Json::parse(body);
    for (const auto& r : j.at("results")) {
      EntityDetections d;
      d.entity = r.at("entity").get<std::string>();
      for (const auto& det : r.at("boxes")) d.boxes.push_back(parse_detection(det, d.entity));
      out.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed grounding response: ") + e.what());
  }
  return out;
}

std::vector<EntityDetections> HttpDetector::detect(const GroundingRequest& request) {
  const std::string body = build_request(request).dump();
  return parse_response(post_json_with_retry(*transport_, url_, body, {}, retry_));
}

std::vector<BoundingBox> select_boxes(const std::vector<std::string>& entities,
                                      const std::vector<EntityDetections>& detections, ImageSize image,
                                      double threshold, int top_k) {
  std::vector<BoundingBox> out;
  std::set<std::string> done;
  for (const auto& entity : entities) {
    if (!done.insert(entity).second) continue;
    std::vector<BoundingBox> kept;
    for (const auto& d : detections) {
      if (d.entity != entity) continue;
      for (const auto& raw : d.boxes) {
        if (!(raw.score >= threshold) || raw.score > 1.0) continue;
        auto clipped = clip_box(raw, image);
        if (!clipped) continue;
        clipped->entity = entity;
        kept.push_back(*clipped);
      }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const BoundingBox& a, const BoundingBox& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.y_min != b.y_min) return a.y_min < b.y_min;
      return a.x_min < b.x_min;
    });
    if (top_k >= 0 && kept.size() > static_cast<std::size_t>(top_k)) kept.resize(static_cast<std::size_t>(top_k));
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

std::vector<BoundingBox> ground(Detector& detector, const GroundingRequest& request, int top_k) {
  if (request.entities.empty()) return {};
  return select_boxes(request.entities, detector.detect(request), request.image_size, request.threshold, top_k);
}

GroundingReport eval_grounding(const Manifest& predicted, const Manifest& gold) {
  std::map<std::string, std::size_t> pred_ids;
  std::set<std::string> gold_ids;
  for (std::size_t i = 0; i < predicted.records.size(); ++i) pred_ids.emplace(predicted.records[i].base.id, i);
  for (const auto& r : gold.records) gold_ids.insert(r.base.id);
  std::vector<std::string> mismatched;
  for (const auto& [id, i] : pred_ids) {
    if (!gold_ids.contains(id)) mismatched.push_back(id);
  }
  for (const auto& id : gold_ids) {
    if (!pred_ids.contains(id)) mismatched.push_back(id);
  }
  std::sort(mismatched.begin(), mismatched.end());
  if (!mismatched.empty()) throw Error("record ids do not align: " + join(mismatched, ", "));

  GroundingReport report;
  std::map<std::string, std::array<double, 4>> sums;  // iou, giou, hits, count
  for (const auto& g : gold.records) {
    const auto& p = predicted.records[pred_ids.at(g.base.id)];
    for (const auto& gb : g.boxes) {
      GroundingMatch m{g.base.id, gb.entity, gb, std::nullopt, 0.0, -1.0};
      for (const auto& pb : p.boxes) {
        if (pb.entity != gb.entity) continue;
        const double v = iou(pb, gb);
        if (!m.predicted || v > m.iou) {
          m.predicted = pb;
          m.iou = v;
          m.giou = giou(pb, gb);
        }
      }
      auto& s = sums[gb.entity];
      s[0] += m.iou;
      s[1] += m.giou;
      s[2] += m.iou >= 0.5 ? 1.0 : 0.0;
      s[3] += 1.0;
      report.matches.push_back(std::move(m));
    }
  }
  if (!report.matches.empty()) {
    double si = 0.0, sg = 0.0, sh = 0.0;
    for (const auto& m : report.matches) {
      si += m.iou;
      sg += m.giou;
      sh += m.iou >= 0.5 ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(report.matches.size());
    report.mean_iou = si / n;
    report.mean_giou = sg / n;
    report.hit_rate = sh / n;
  }
  for (const auto& [entity, s] : sums) {
    report.per_entity[entity] = {s[0] / s[3], s[1] / s[3], s[2] / s[3]};
  }
  return report;
}

Json grounding_report_to_json(const GroundingReport& report) {
  Json j;
  j["mean_iou"] = report.mean_iou;
  j["mean_giou"] = report.mean_giou;
  j["hit_rate"] = report.hit_rate;
  j["gold_boxes"] = report.matches.size();
  Json per = Json::object();
  for (const auto& [entity, v] : report.per_entity) {
    per[entity] = {{"mean_iou", v[0]}, {"mean_giou", v[1]}, {"hit_rate", v[2]}};
  }
  j["per_entity"] = std::move(per);
  Json rows = Json::array();
  for (const auto& m : report.matches) {
    Json r;
    r["id"] = m.record_id;
    r["entity"] = m.entity;
    r["gold"] = box_to_json(m.gold);
    r["predicted"] = m.predicted ? box_to_json(*m.predicted) : Json(nullptr);
    r["iou"] = m.iou;
    r["giou"] = m.giou;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace medvp
