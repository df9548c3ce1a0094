#include <fstream>

#include <gtest/gtest.h>

#include "dsd/error.h"
#include "dsd/store.h"
#include "fixtures.h"
#include "test_paths.h"

namespace dsd {
namespace {

TEST(StoreTest, ParsesRecordsAndDefaultsTokens) {
  auto posts = ParseDataset(
      R"({"id":"a","text":"so tired today","labels":[4],"provenance":"seed-train","source":"seed-human"})"
      "\n\n"
      R"({"id":"b","text":"x y","tokens":["x","y"]})"
      "\n");
  ASSERT_EQ(posts.size(), 2u);
  EXPECT_EQ(posts[0].tokens, (std::vector<std::string>{"so", "tired", "today"}));
  EXPECT_EQ(posts[0].labels, LabelSet{4});
  EXPECT_EQ(posts[0].provenance, "seed-train");
  EXPECT_FALSE(posts[1].labels.has_value());
}

TEST(StoreTest, RejectsBadRecordsWithLocation) {
  EXPECT_THROW(ParseDataset(R"({"id":"a","text":""})" "\n" R"({"id":"a","text":""})"), Error);
  EXPECT_THROW(ParseDataset(R"({"id":"a","text":"","labels":[12,3]})"), Error);
  EXPECT_THROW(ParseDataset(R"({"text":"no id"})"), Error);
  try {
    ParseDataset("{}\nnot json\n", "f.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:"), std::string::npos) << e.what();
  }
}

TEST(StoreTest, FormatRoundTripsThroughFile) {
  auto dir = test::ScratchDir("store-roundtrip");
  Dataset posts = fixture::Posts("p", 3, LabelSet{2, 6});
  posts[1].labels.reset();
  posts[2].source = "external";
  WriteDataset(dir / "nested" / "d.jsonl", posts);
  auto back = ReadDataset(dir / "nested" / "d.jsonl");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, posts[i].id);
    EXPECT_EQ(back[i].tokens, posts[i].tokens);
    EXPECT_EQ(back[i].labels, posts[i].labels);
    EXPECT_EQ(back[i].source, posts[i].source);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "nested" / "d.jsonl.tmp"));
}

TEST(StoreTest, UnionOfDisjointSetsAddsSizes) {
  auto a = fixture::Posts("seed-", 377, LabelSet{1});
  auto b = fixture::Posts("harvest-", 2491, LabelSet{2});
  EXPECT_EQ(Union(a, b).size(), 2868u);
}

TEST(StoreTest, UnionKeepsFirstRecordAndDetectsConflicts) {
  auto a = fixture::Posts("p", 3, LabelSet{2});
  auto b = fixture::Posts("p", 5);
  b[0].provenance = "other";
  auto u = Union(a, b);
  ASSERT_EQ(u.size(), 5u);
  EXPECT_EQ(u[0].provenance, a[0].provenance);
  EXPECT_EQ(u[0].labels, LabelSet{2});

  auto c = fixture::Posts("p", 2, LabelSet{3});
  try {
    Union(a, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kConflict);
    EXPECT_NE(e.detail().find("p0"), std::string::npos);
    EXPECT_NE(e.detail().find("p1"), std::string::npos);
  }
  auto same = fixture::Posts("p", 2, LabelSet{2});
  EXPECT_EQ(Union(a, same).size(), 3u);
}

TEST(StoreTest, SizeLawAndSubtract) {
  auto a = fixture::Posts("p", 10);
  auto b = fixture::Posts("p", 14);
  b.erase(b.begin(), b.begin() + 6);  // p6..p13, overlaps a in p6..p9
  EXPECT_EQ(Union(a, b).size(), a.size() + b.size() - 4);
  EXPECT_TRUE(Subtract(a, a).empty());
  auto diff = Subtract(a, b);
  EXPECT_EQ(diff.size(), 6u);
  EXPECT_EQ(Ids(Union(diff, b)), Ids(Union(a, b)));
}

TEST(StoreTest, SampleControlsIsSeededAndExhaustive) {
  auto pool = fixture::Posts("c", 100);
  auto all = SampleControls(pool, 100, 3);
  EXPECT_EQ(Ids(all), Ids(pool));
  auto x = SampleControls(pool, 10, 9), y = SampleControls(pool, 10, 9);
  ASSERT_EQ(x.size(), 10u);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].id, y[i].id);
  EXPECT_NE(Ids(SampleControls(pool, 10, 10)), Ids(x));
  EXPECT_THROW(SampleControls(pool, 101, 1), Error);
}

TEST(StoreTest, LabelsOrEmpty) {
  auto posts = fixture::Posts("p", 2, LabelSet{5});
  posts[1].labels.reset();
  auto labels = LabelsOrEmpty(posts);
  EXPECT_EQ(labels[0], LabelSet{5});
  EXPECT_TRUE(labels[1].empty());
}

}  // namespace
}  // namespace dsd
