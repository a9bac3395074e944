// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "helmetkit/sampler.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/reference_tables.hpp"

namespace helmetkit {
namespace {

Detection at(const std::string& site, int frame) { return {site, frame, {0, 0, 10, 10}, parse_class("DHelmet"), 0.9}; }

TEST(SegmentTest, Counts) {
  const auto c = segment(1000, 100, "S");
  ASSERT_EQ(c.size(), 10u);
  EXPECT_EQ(c[3].start_frame, 300);
  EXPECT_EQ(c[3].site_id, "S");
  EXPECT_TRUE(segment(99).empty());
  EXPECT_TRUE(segment(0).empty());
  EXPECT_EQ(segment(frames_for_hours(254, 10)).size(), 91440u);
  EXPECT_THROW(segment(10, 0), ValidationError);
}

TEST(ScoreTest, MeanMotorcyclesPerFrame) {
  auto cands = segment(300, 100, "S");
  std::vector<Detection> dets;
  for (int f = 100; f < 200; ++f) {
    for (int k = 0; k < 3; ++k) dets.push_back(at("S", f));
  }
  for (int f = 200; f < 300; ++f) dets.push_back(at("S", f));
  dets.push_back(at("Other", 5));
  const auto scored = score(cands, dets);
  EXPECT_EQ(scored[0].score, 0.0);
  EXPECT_EQ(scored[1].score, 3.0);
  EXPECT_EQ(scored[2].score, 1.0);
}

TEST(AllocateTest, PublishedSitesWithinOne) {
  const auto alloc = allocate(testing::published_site_hours(), 1000);
  const auto published = testing::published_sampled_clips();
  std::int64_t total = 0;
  for (const auto& [site, n] : alloc) {
    EXPECT_LE(std::abs(n - published.at(site)), 1) << site;
    total += n;
  }
  EXPECT_EQ(total, 1000);
  EXPECT_EQ(alloc.at("Mandalay_1"), 228);
  EXPECT_LE(std::abs(alloc.at("Bago_highway") - 35), 1);
}

TEST(AllocateTest, EdgeCases) {
  const auto two = allocate({{"A", 1.0}, {"B", 1.0}}, 3);
  EXPECT_EQ(two.at("A"), 2);  // tie goes to the first site
  EXPECT_EQ(two.at("B"), 1);
  const auto zero = allocate({{"A", 1.0}, {"B", 0.0}}, 0);
  EXPECT_EQ(zero.at("A"), 0);
  EXPECT_EQ(allocate({{"A", 0.0}, {"B", 2.0}}, 5).at("A"), 0);
  EXPECT_THROW(allocate({{"A", 0.0}, {"B", 0.0}}, 5), ValidationError);
  EXPECT_THROW(allocate({{"A", -1.0}}, 5), ValidationError);
  EXPECT_THROW(allocate({{"A", 1.0}}, -1), ValidationError);
}

TEST(AllocateTest, SumsToQuotaAndIsProportional) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    std::map<std::string, double> hours;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    double total = 0;
    for (int i = 0; i < n; ++i) {
      const double h = std::uniform_int_distribution<int>(0, 60)(rng) + 1;
      hours["s" + std::to_string(i)] = h;
      total += h;
    }
    const std::int64_t quota = std::uniform_int_distribution<std::int64_t>(0, 2000)(rng);
    const auto alloc = allocate(hours, quota);
    std::int64_t sum = 0;
    for (const auto& [site, k] : alloc) {
      sum += k;
      EXPECT_LT(std::abs(static_cast<double>(k) - quota * hours.at(site) / total), 1.0);
    }
    EXPECT_EQ(sum, quota);
  }
}

TEST(SelectTest, TopScoresPerSite) {
  std::vector<ClipCandidate> c = {{"A", 0, 5}, {"A", 100, 3}, {"A", 200, 3}, {"A", 300, 1}, {"B", 0, 9}};
  const auto chosen = select(c, {{"A", 2}, {"B", 0}});
  ASSERT_EQ(chosen.size(), 2u);
  EXPECT_EQ(chosen[0].start_frame, 0);
  EXPECT_EQ(chosen[1].start_frame, 100);  // tie resolved by earliest start

  std::vector<ClipCandidate> flat;
  for (int i = 0; i < 10; ++i) flat.push_back({"A", (9 - i) * 100, 2.0});
  const auto first = select(flat, {{"A", 3}});
  EXPECT_EQ(first[0].start_frame, 0);
  EXPECT_EQ(first[2].start_frame, 200);
}

TEST(SelectTest, InsufficientCandidatesNamesShortfall) {
  const std::vector<ClipCandidate> c = {{"A", 0, 1}, {"A", 100, 1}};
  try {
    select(c, {{"A", 5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.rule(), Rule::kInsufficientCandidates);
    EXPECT_NE(std::string(e.what()).find("shortfall 3"), std::string::npos);
  }
}

TEST(SelectTest, MonotoneInAllocation) {
  std::mt19937_64 rng(11);
  std::vector<ClipCandidate> c;
  for (int i = 0; i < 50; ++i) c.push_back({"A", i * 100, std::uniform_int_distribution<int>(0, 5)(rng) / 2.0});
  for (std::int64_t k = 0; k < 50; ++k) {
    const auto small = select(c, {{"A", k}});
    const auto large = select(c, {{"A", k + 1}});
    for (const auto& s : small) EXPECT_NE(std::find(large.begin(), large.end(), s), large.end());
    double min_in = 1e9, max_out = -1;
    for (const auto& x : c) {
      const bool in = std::find(small.begin(), small.end(), x) != small.end();
      if (in) min_in = std::min(min_in, x.score); else max_out = std::max(max_out, x.score);
    }
    if (!small.empty()) {
      EXPECT_GE(min_in, max_out);
    }
  }
}

TEST(SelectTest, ExcludeRemovesAnnotatedClips) {
  const auto c = exclude(segment(500, 100, "A"), {{"A", 100}, {"A", 300}});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].start_frame, 200);
}

TEST(ManifestTest, RoundTrip) {
  const std::vector<ClipCandidate> c = {{"B", 100, 0.25}, {"A", 300, 1.5}};
  const std::string text = format_manifest(c);
  EXPECT_EQ(text, "A 300 1.500000\nB 100 0.250000\n");
  const auto back = parse_manifest(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], (ClipCandidate{"A", 300, 1.5}));
  EXPECT_EQ(format_manifest(back), text);
  EXPECT_TRUE(format_manifest({}).empty());
  EXPECT_THROW(parse_manifest("A 1\n"), ParseError);
}

}  // namespace
}  // namespace helmetkit
