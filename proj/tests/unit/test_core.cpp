#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "medvp/manifest.hpp"
#include "medvp/seed.hpp"
#include "medvp/text.hpp"
#include "medvp/types.hpp"
#include "testkit.hpp"

using namespace medvp;
using testkit::TempDir;

// Values from tests/oracles/oracles.py.
TEST(DeriveSeed, MatchesFrozenGoldens) {
  EXPECT_EQ(derive_seed(0, "a"), 952744179923471490ULL);
  EXPECT_EQ(derive_seed(0, "b"), 2051724570904403688ULL);
  EXPECT_EQ(derive_seed(1, "a"), 12873573467346133277ULL);
  EXPECT_EQ(derive_seed(42, "slake-000001"), 17897166036871508667ULL);
  EXPECT_EQ(derive_seed(~0ULL, "x"), 11763932451118704935ULL);
}

TEST(DeriveSeed, DistinguishesIdsAndMasters) {
  EXPECT_EQ(derive_seed(0, "a"), derive_seed(0, "a"));
  EXPECT_NE(derive_seed(0, "a"), derive_seed(0, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(0, "a"));
}

TEST(DeriveSeed, RejectsEmptyId) { EXPECT_THROW(derive_seed(0, ""), Error); }

TEST(DeriveSeed, IndependentOfProcessingOrder) {
  std::vector<std::string> ids;
  for (int i = 0; i < 200; ++i) ids.push_back("rec-" + std::to_string(i));
  std::map<std::string, std::uint64_t> forward;
  for (const auto& id : ids) forward[id] = derive_seed(9, id);
  std::mt19937 shuffle_rng(3);
  std::shuffle(ids.begin(), ids.end(), shuffle_rng);
  for (const auto& id : ids) EXPECT_EQ(derive_seed(9, id), forward[id]);
}

TEST(Rng, EngineIsTheStandardMt19937_64) {
  // The standard fixes the 10000th output of a default-seeded engine.
  std::mt19937_64 reference;
  reference.discard(9999);
  EXPECT_EQ(reference(), 9981545732273789042ULL);
  Rng rng(std::mt19937_64::default_seed);
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  EXPECT_EQ(rng.next_u64(), 9981545732273789042ULL);
}

TEST(Rng, BelowAndUniformIntStayInRange) {
  Rng rng(5);
  std::array<int, 7> hist{};
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    hist[v]++;
    const int u = rng.uniform_int(-3, 3);
    ASSERT_GE(u, -3);
    ASSERT_LE(u, 3);
    const double f = rng.uniform01();
    ASSERT_GE(f, 0.0);
    ASSERT_LT(f, 1.0);
  }
  for (int h : hist) EXPECT_GT(h, 800);
  EXPECT_THROW(rng.below(0), Error);
  EXPECT_THROW(rng.uniform_int(2, 1), Error);
}

TEST(Rng, ShuffleIsAPermutationAndSeeded) {
  std::vector<int> a(50);
  std::iota(a.begin(), a.end(), 0);
  auto b = a;
  Rng r1(11);
  Rng r2(11);
  r1.shuffle(a);
  r2.shuffle(b);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Types, EnumsRoundTripAndRejectUnknown) {
  for (Shape s : kAllShapes) EXPECT_EQ(parse_shape(to_string(s)), s);
  for (auto k : {DatasetKind::kSlake, DatasetKind::kVqaRad, DatasetKind::kPmcVqa, DatasetKind::kGeneric}) {
    EXPECT_EQ(parse_dataset_kind(to_string(k)), k);
  }
  for (auto s : {Stage::kIngested, Stage::kExtracted, Stage::kGrounded, Stage::kRendered, Stage::kAdapted}) {
    EXPECT_EQ(parse_stage(to_string(s)), s);
  }
  EXPECT_EQ(parse_split("train"), Split::kTrain);
  EXPECT_EQ(parse_answer_type("closed"), AnswerType::kClosed);
  EXPECT_THROW(parse_shape("triangle"), Error);
  EXPECT_THROW(parse_answer_type("maybe"), Error);
  EXPECT_THROW(palette_color("ochre"), Error);
  EXPECT_EQ(palette_color("red").rgb, (Rgb{255, 0, 0}));
}

TEST(Types, BoxInvariants) {
  EXPECT_FALSE(box_violation({0, 0, 1, 1}));
  EXPECT_TRUE(box_violation({3, 0, 3, 1}));
  EXPECT_TRUE(box_violation({4, 0, 3, 1}));
  EXPECT_TRUE(box_violation({0, 2, 1, 1}));
  BoundingBox scored{0, 0, 2, 2};
  scored.score = 1.5;
  EXPECT_TRUE(box_violation(scored));
  EXPECT_TRUE(box_violation({0, 0, 11, 5}, {10, 10}));
  EXPECT_TRUE(box_violation({-1, 0, 5, 5}, {10, 10}));
  EXPECT_FALSE(box_violation({0, 0, 10, 10}, {10, 10}));
}

TEST(Types, ClipBox) {
  auto c = clip_box({-5, -5, 5, 20}, {10, 10});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->x_min, 0);
  EXPECT_EQ(c->y_min, 0);
  EXPECT_EQ(c->x_max, 5);
  EXPECT_EQ(c->y_max, 10);
  EXPECT_FALSE(clip_box({10, 0, 20, 5}, {10, 10}));
  EXPECT_FALSE(clip_box({-4, -4, 0, 3}, {10, 10}));
}

TEST(Types, RecordViolations) {
  Rng rng(2);
  PromptedRecord r = testkit::random_record(rng, "ok");
  r.base.options = {"a", "b"};
  r.base.answer_type = AnswerType::kClosed;
  r.base.answer = "b";
  EXPECT_TRUE(record_violations(r).empty());
  r.base.answer = "B";
  EXPECT_TRUE(record_violations(r).empty());
  r.base.answer = "c";
  EXPECT_FALSE(record_violations(r).empty());

  PromptedRecord p = testkit::plain_record("p", "q", "a");
  p.image_size = {20, 20};
  p.boxes.push_back({0, 0, 10, 10});
  EXPECT_TRUE(record_violations(p).empty());
  VisualPrompt vp;
  vp.source_box = {0, 0, 10, 10};
  vp.geometry_box = {0, 0, 10, 10};
  vp.thickness = 0;
  p.prompts.push_back(vp);
  EXPECT_FALSE(record_violations(p).empty());
  p.prompts[0].thickness = 2;
  p.prompts[0].alpha = 1.2;
  EXPECT_FALSE(record_violations(p).empty());
  p.prompts[0].alpha = 0.5;
  p.prompts[0].source_box = {0, 0, 9, 10};
  EXPECT_FALSE(record_violations(p).empty());
  p.prompts[0].source_box = {0, 0, 10, 10};
  p.prompts[0].geometry_box = {0, 0, 11, 10};
  EXPECT_FALSE(record_violations(p).empty());
  p.prompts[0].geometry_box = {0, 0, 10, 10};
  EXPECT_TRUE(record_violations(p).empty());
  p.prompts.push_back(p.prompts[0]);
  EXPECT_FALSE(record_violations(p).empty()) << "more prompts than boxes";
}

TEST(Text, Tokens) {
  EXPECT_EQ(alnum_tokens("X-ray of the Left lung!"),
            (std::vector<std::string>{"x", "ray", "of", "the", "left", "lung"}));
  EXPECT_TRUE(alnum_tokens("  ...  ").empty());
}

TEST(Text, Singularize) {
  EXPECT_EQ(singularize("kidneys"), "kidney");
  EXPECT_EQ(singularize("arteries"), "artery");
  EXPECT_EQ(singularize("masses"), "mass");
  EXPECT_EQ(singularize("lungs"), "lung");
  EXPECT_EQ(singularize("pancreas"), "pancreas");
  EXPECT_EQ(singularize("uterus"), "uterus");
  EXPECT_EQ(singularize("metastasis"), "metastasis");
  EXPECT_EQ(singularize("abscesses"), "abscess");
  EXPECT_EQ(singularize("gas"), "gas");
}

TEST(Text, NormalizeAnswer) {
  EXPECT_EQ(normalize_answer("  The Left-Lung. "), "left lung");
  EXPECT_EQ(normalize_answer("An X-ray"), "x ray");
  EXPECT_EQ(normalize_answer("Yes!"), "yes");
  EXPECT_EQ(canonical_entity("  Left   Kidneys "), "left kidney");
}

namespace {

Manifest three_records() {
  Manifest m;
  m.header.stage = Stage::kRendered;
  m.header.master_seed = 17;
  m.header.image_root = "data";
  m.header.config = {{"alpha_min", 0.6}};
  Rng rng(99);
  for (int i = 0; i < 3; ++i) m.records.push_back(testkit::random_record(rng, "r" + std::to_string(i)));
  return m;
}

std::string to_text(const Manifest& m) {
  std::ostringstream out;
  write_manifest(m, out);
  return out.str();
}

}  // namespace

TEST(Manifest, EmptyFileHasNoRecords) {
  TempDir dir;
  testkit::write_file(dir / "empty.jsonl", "");
  const Manifest m = read_manifest(dir / "empty.jsonl");
  EXPECT_TRUE(m.records.empty());
  EXPECT_EQ(m.stage(), Stage::kIngested);
}

TEST(Manifest, RoundTripIsByteIdentical) {
  TempDir dir;
  const Manifest m = three_records();
  write_manifest(m, dir / "a.jsonl");
  const Manifest back = read_manifest(dir / "a.jsonl");
  EXPECT_EQ(back.header, m.header);
  EXPECT_EQ(back.records, m.records);
  write_manifest(back, dir / "b.jsonl");
  EXPECT_EQ(testkit::read_file(dir / "a.jsonl"), testkit::read_file(dir / "b.jsonl"));
}

TEST(Manifest, RoundTripPropertyOverRandomRecords) {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    Manifest m;
    m.header.stage = static_cast<Stage>(rng.below(5));
    m.header.master_seed = rng.next_u64();
    const int n = rng.uniform_int(0, 12);
    for (int i = 0; i < n; ++i) m.records.push_back(testkit::random_record(rng, "id" + std::to_string(i)));
    const std::string text = to_text(m);
    std::istringstream in(text);
    const Manifest back = parse_manifest(in);
    ASSERT_EQ(back.records, m.records) << "trial " << trial;
    ASSERT_EQ(to_text(back), text);
  }
}

TEST(Manifest, FieldOrderIsFixed) {
  const std::string text = to_text(three_records());
  const auto first = text.find('\n');
  const std::string header = text.substr(0, first);
  EXPECT_EQ(header.rfind("{\"schema_version\":1,\"stage\":\"rendered\"", 0), 0u) << header;
  const std::string rec = text.substr(first + 1, text.find('\n', first + 1) - first - 1);
  EXPECT_EQ(rec.rfind("{\"base\":{\"id\":\"r0\"", 0), 0u) << rec;
}

TEST(Manifest, TruncatedLineReportsItsNumber) {
  std::string text = to_text(three_records());
  // Header is line 1; cut the first record (line 2) short.
  const auto l2 = text.find('\n') + 1;
  const auto l2_end = text.find('\n', l2);
  text = text.substr(0, l2 + (l2_end - l2) / 2) + text.substr(l2_end);
  std::istringstream in(text);
  try {
    parse_manifest(in);
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Manifest, DuplicateIdIsNamed) {
  Manifest m = three_records();
  m.records[2].base.id = "r0";
  std::istringstream in(to_text(m));
  try {
    parse_manifest(in);
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("'r0'"), std::string::npos) << e.what();
  }
}

TEST(Manifest, InvariantViolationsRejectedUnlessLenient) {
  Manifest m = three_records();
  m.records[1].boxes = {{5, 5, 3, 9}};
  m.records[1].prompts.clear();
  const std::string text = to_text(m);
  std::istringstream strict(text);
  EXPECT_THROW(parse_manifest(strict), ManifestError);
  std::istringstream lenient(text);
  ReadOptions opts;
  opts.check_invariants = false;
  EXPECT_EQ(parse_manifest(lenient, opts).records.size(), 3u);
}

TEST(Manifest, HeaderlessFlatRecordsAreAccepted) {
  std::istringstream in(
      "{\"id\":\"a\",\"image_path\":\"a.png\",\"question\":\"q?\",\"answer\":\"yes\",\"answer_type\":\"closed\"}\n"
      "\n"
      "{\"id\":\"b\",\"image_path\":\"b.png\",\"question\":\"q2?\",\"answer\":\"x\",\"answer_type\":\"open\"}\n");
  const Manifest m = parse_manifest(in);
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].base.answer_type, AnswerType::kClosed);
  EXPECT_EQ(m.records[1].base.id, "b");
  EXPECT_EQ(m.find("b"), std::optional<std::size_t>(1));
  EXPECT_FALSE(m.find("zz"));
}

TEST(Manifest, StreamingReaderMatchesBulkRead) {
  TempDir dir;
  const Manifest m = three_records();
  write_manifest(m, dir / "m.jsonl");
  ManifestReader reader(dir / "m.jsonl");
  EXPECT_EQ(reader.header().master_seed, 17u);
  std::vector<PromptedRecord> got;
  while (auto r = reader.next()) got.push_back(*r);
  EXPECT_EQ(got, m.records);
}

TEST(Manifest, WriteLeavesNoTemporaryFiles) {
  TempDir dir;
  write_manifest(three_records(), dir / "m.jsonl");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}
