#include <gtest/gtest.h>

#include <atomic>

#include <httplib.h>

#include "medvp/grounding.hpp"
#include "medvp/http_client.hpp"
#include "testkit.hpp"

using namespace medvp;
using testkit::MockServer;
using testkit::TempDir;

namespace {

// Brute force over unit cells of a small grid.
std::pair<double, double> cell_oracle(const BoundingBox& a, const BoundingBox& b) {
  long long ia = 0, ua = 0;
  for (int y = -2; y < 40; ++y) {
    for (int x = -2; x < 40; ++x) {
      const bool in_a = a.contains_pixel(x, y);
      const bool in_b = b.contains_pixel(x, y);
      ia += in_a && in_b;
      ua += in_a || in_b;
    }
  }
  const long long cw = std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min);
  const long long ch = std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min);
  const double i = static_cast<double>(ia) / static_cast<double>(ua);
  return {i, i - static_cast<double>(cw * ch - ua) / static_cast<double>(cw * ch)};
}

BoundingBox named(BoundingBox b, const std::string& entity, double score = 1.0) {
  b.entity = entity;
  b.score = score;
  return b;
}

RetryPolicy fast_retry(int attempts) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.max_backoff = std::chrono::milliseconds(2);
  return p;
}

}  // namespace

TEST(Iou, ExactValues) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 4, 4}, {0, 0, 4, 4}), 1.0);
  EXPECT_DOUBLE_EQ(giou({0, 0, 4, 4}, {0, 0, 4, 4}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 4, 4}, {2, 2, 6, 6}), 4.0 / 28.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);
}

TEST(Giou, MatchesOracleGoldens) {
  // Rational values from tests/oracles/oracles.py.
  EXPECT_NEAR(giou({0, 0, 1, 1}, {2, 0, 3, 1}), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(giou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0, 1e-12);
  EXPECT_NEAR(giou({0, 0, 4, 4}, {2, 2, 6, 6}), -5.0 / 63.0, 1e-12);
  EXPECT_NEAR(giou({0, 0, 2, 2}, {3, 3, 5, 5}), -17.0 / 25.0, 1e-12);
}

TEST(Giou, AgreesWithCellCountingOnRandomBoxes) {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const BoundingBox a = testkit::random_box(rng, {30, 30});
    const BoundingBox b = testkit::random_box(rng, {30, 30});
    const auto [oi, og] = cell_oracle(a, b);
    ASSERT_NEAR(iou(a, b), oi, 1e-12);
    ASSERT_NEAR(giou(a, b), og, 1e-12);
    ASSERT_LE(giou(a, b), iou(a, b) + 1e-15);
    ASSERT_GT(giou(a, b), -1.0);
    ASSERT_DOUBLE_EQ(giou(a, b), giou(b, a));
  }
}

TEST(Giou, RejectsEmptyBoxes) {
  EXPECT_THROW(giou({0, 0, 0, 5}, {0, 0, 1, 1}), Error);
  EXPECT_THROW(iou({0, 0, 1, 1}, {3, 3, 2, 4}), Error);
}

TEST(SelectBoxes, FiltersClipsSortsAndTruncates) {
  std::vector<EntityDetections> dets = {
      {"liver", {named({0, 0, 10, 10}, "liver", 0.5), named({5, 5, 50, 50}, "liver", 0.9),
                 named({1, 1, 3, 3}, "liver", 0.1), named({60, 60, 70, 70}, "liver", 0.95)}},
      {"kidney", {named({2, 8, 4, 9}, "kidney", 0.7), named({2, 3, 4, 9}, "kidney", 0.7)}},
  };
  const auto top1 = select_boxes({"liver", "kidney", "liver"}, dets, {20, 20}, 0.2, 1);
  ASSERT_EQ(top1.size(), 2u);
  EXPECT_EQ(top1[0], named({5, 5, 20, 20}, "liver", 0.9));
  EXPECT_EQ(top1[1], named({2, 3, 4, 9}, "kidney", 0.7)) << "ties broken by y_min";
  const auto all = select_boxes({"kidney", "liver"}, dets, {20, 20}, 0.2, 10);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0].entity, "kidney");
  EXPECT_EQ(all[3], named({0, 0, 10, 10}, "liver", 0.5));
}

TEST(StubDetector, MatchesByPathNameOrStem) {
  const Json rules = {{"scan1", {{"liver", {{{"box", {1, 2, 8.6, 9.4}}, {"score", 0.8}}}}}},
                      {"b.png", {{"heart", {{{"box", {0, 0, 3, 3}}}}}}}};
  StubDetector det = StubDetector::from_json(rules);
  GroundingRequest req;
  req.image_id = "imgs/scan1.png";
  req.image_size = {20, 20};
  req.entities = {"liver", "spleen"};
  const auto boxes = ground(det, req);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0], named({1, 2, 9, 9}, "liver", 0.8));
  req.image_id = "x/b.png";
  req.entities = {"heart"};
  EXPECT_EQ(ground(det, req).size(), 1u);
  req.image_id = "nothing.png";
  EXPECT_TRUE(ground(det, req).empty());
  EXPECT_THROW(StubDetector::from_json(Json::array()), Error);
}

TEST(HttpDetector, RoundTripsThroughLocalServer) {
  TempDir dir;
  testkit::write_file(dir / "img.png", "abc");
  std::atomic<int> calls{0};
  Json seen;
  MockServer server([&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    seen = Json::parse(req.body);
    const Json box = {{"box", {2.4, 3.6, 10.0, 12.0}}, {"score", 0.75}};
    const Json result = {{"entity", "liver"}, {"boxes", Json::array({box})}};
    const Json out = {{"results", Json::array({result})}};
    res.set_content(out.dump(), "application/json");
  });
  std::shared_ptr<HttpTransport> transport = make_http_transport(std::chrono::seconds(5));
  HttpDetector det(server.url("/ground"), transport, fast_retry(3), true);
  GroundingRequest req;
  req.image_path = dir / "img.png";
  req.image_size = {64, 64};
  req.entities = {"liver"};
  const auto boxes = ground(det, req);
  EXPECT_EQ(calls.load(), 2);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0], named({2, 4, 10, 12}, "liver", 0.75));
  EXPECT_EQ(seen["image"]["base64"], "YWJj");
  EXPECT_EQ(seen["entities"], Json::array({"liver"}));
}

TEST(HttpDetector, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  std::shared_ptr<HttpTransport> transport = make_http_transport(std::chrono::seconds(5));
  HttpDetector det(server.url("/"), transport, fast_retry(3), false);
  GroundingRequest req;
  req.image_path = "/nonexistent.png";
  req.image_size = {8, 8};
  req.entities = {"liver"};
  try {
    ground(det, req);
    FAIL() << "expected HttpError";
  } catch (const HttpError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpDetector, MalformedResponsesAndRefusedConnections) {
  EXPECT_THROW(HttpDetector::parse_response("{\"nope\": 1}"), Error);
  EXPECT_THROW(HttpDetector::parse_response("not json"), Error);
  auto transport = make_http_transport(std::chrono::milliseconds(500));
  EXPECT_THROW(post_json_with_retry(*transport, "http://127.0.0.1:1/x", "{}", {}, fast_retry(2)), HttpError);
}

TEST(Backoff, DoublesAndCaps) {
  RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(100);
  p.max_backoff = std::chrono::milliseconds(350);
  EXPECT_EQ(backoff_delay(p, 1).count(), 100);
  EXPECT_EQ(backoff_delay(p, 2).count(), 200);
  EXPECT_EQ(backoff_delay(p, 3).count(), 350);
  EXPECT_EQ(backoff_delay(p, 30).count(), 350);
}

TEST(SplitUrl, SeparatesHostAndPath) {
  EXPECT_EQ(split_url("http://h:81/a/b"), (std::pair<std::string, std::string>{"http://h:81", "/a/b"}));
  EXPECT_EQ(split_url("https://h"), (std::pair<std::string, std::string>{"https://h", "/"}));
}

TEST(EvalGrounding, PairsByEntityAndAveragesPerEntity) {
  Manifest gold;
  Manifest pred;
  PromptedRecord g = testkit::plain_record("a", "q", "x");
  g.boxes = {named({0, 0, 4, 4}, "liver"), named({10, 10, 12, 12}, "heart")};
  PromptedRecord p = g;
  p.boxes = {named({2, 2, 6, 6}, "liver"), named({0, 0, 4, 4}, "liver"), named({0, 0, 2, 2}, "lung")};
  gold.records.push_back(g);
  pred.records.push_back(p);
  const GroundingReport r = eval_grounding(pred, gold);
  ASSERT_EQ(r.matches.size(), 2u);
  EXPECT_DOUBLE_EQ(r.matches[0].iou, 1.0);
  EXPECT_FALSE(r.matches[1].predicted);
  EXPECT_DOUBLE_EQ(r.matches[1].giou, -1.0);
  EXPECT_DOUBLE_EQ(r.mean_iou, 0.5);
  EXPECT_DOUBLE_EQ(r.mean_giou, 0.0);
  EXPECT_DOUBLE_EQ(r.hit_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.per_entity.at("liver")[0], 1.0);
  const Json j = grounding_report_to_json(r);
  EXPECT_EQ(j["gold_boxes"], 2);
  EXPECT_TRUE(j["rows"][1]["predicted"].is_null());

  pred.records[0].base.id = "b";
  EXPECT_THROW(eval_grounding(pred, gold), Error);
}
