#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cfl/data.hpp"

namespace cfl {
namespace {

std::size_t sum(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{0});
}

TEST(ProfileC10, FiveThree) {
  const auto p = profile_c10(ProfileKind::FiveThree);
  const std::vector<std::size_t> expected{490, 470, 450, 430, 410, 390, 370, 350, 330, 310};
  EXPECT_EQ(p.counts, expected);
  EXPECT_EQ(p.total(), 4000u);
  EXPECT_EQ(p.kind, ProfileKind::FiveThree);
}

TEST(ProfileC10, SixTwo) {
  const auto p = profile_c10(ProfileKind::SixTwo);
  const std::vector<std::size_t> expected{580, 540, 500, 460, 420, 380, 340, 300, 260, 220};
  EXPECT_EQ(p.counts, expected);
  EXPECT_EQ(p.total(), 4000u);
}

TEST(ProfileC10, ConstantStep) {
  for (auto [kind, step] : {std::pair{ProfileKind::FiveThree, 20u}, std::pair{ProfileKind::SixTwo, 40u}}) {
    const auto p = profile_c10(kind);
    for (std::size_t c = 1; c < p.counts.size(); ++c) EXPECT_EQ(p.counts[c - 1] - p.counts[c], step);
  }
  EXPECT_THROW(profile_c10(ProfileKind::Balanced), ValidationError);
}

TEST(ProfileC100, BaseCounts) {
  const auto five = profile_c100_base(ProfileKind::FiveThree);
  const auto six = profile_c100_base(ProfileKind::SixTwo);
  ASSERT_EQ(five.size(), 100u);
  EXPECT_EQ(five[0], 50u);
  EXPECT_EQ(five[99], 30u);
  EXPECT_EQ(five[2], 50u);   // round(0.4)
  EXPECT_EQ(five[3], 49u);   // round(0.6)
  EXPECT_EQ(six[0], 60u);
  EXPECT_EQ(six[1], 60u);    // round(0.4)
  EXPECT_EQ(six[2], 59u);    // round(0.8)
  EXPECT_EQ(six[99], 20u);
  EXPECT_EQ(sum(five), 4010u);
  EXPECT_EQ(sum(six), 4020u);
}

TEST(ProfileC100, AdjustedToExactTotal) {
  for (auto kind : {ProfileKind::FiveThree, ProfileKind::SixTwo}) {
    const auto base = profile_c100_base(kind);
    const auto p = profile_c100(kind);
    ASSERT_EQ(p.num_classes(), 100u);
    EXPECT_EQ(p.total(), 4000u);
    const std::size_t moved = sum(base) - 4000;
    for (std::size_t c = 0; c < 100; ++c) {
      const std::size_t delta = c >= 100 - moved ? 1 : 0;
      EXPECT_EQ(p.counts[c] + delta, base[c]) << "class " << c;
    }
    for (std::size_t c = 1; c < 100; ++c) EXPECT_LE(p.counts[c], p.counts[c - 1]);
  }
  EXPECT_EQ(profile_c100(ProfileKind::FiveThree).counts[99], 29u);
  EXPECT_EQ(profile_c100(ProfileKind::SixTwo).counts[99], 19u);
}

TEST(Profile, JsonExportIsPlainArray) {
  const auto j = profile_c10(ProfileKind::SixTwo).to_json();
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j.size(), 10u);
  EXPECT_EQ(j[0], 580);
  EXPECT_EQ(parse_profile_kind("six_two"), ProfileKind::SixTwo);
  EXPECT_THROW(parse_profile_kind("6/2"), ValidationError);
}

// Pool with `per_class` samples per class, interleaved by class, where the
// single feature records the sample's pool index.
SampleBatch indexed_pool(std::size_t classes, std::size_t per_class) {
  SampleBatch pool;
  pool.dim = 1;
  pool.num_classes = classes;
  for (std::size_t n = 0; n < per_class; ++n)
    for (std::size_t c = 0; c < classes; ++c) {
      const double index = static_cast<double>(pool.size());
      pool.push_back(std::vector<double>{index}, c);
    }
  return pool;
}

TEST(ApplyProfile, FiveThreeTakesPrefixOfEachClass) {
  const auto pool = indexed_pool(10, 500);
  const auto profile = profile_c10(ProfileKind::FiveThree);
  const auto out = apply_profile(pool, profile);
  EXPECT_EQ(out.size(), 4000u);
  EXPECT_EQ(out.class_counts(), profile.counts);

  // Expected indices by brute force: walk the pool and collect the first
  // counts[c] indices of every class.
  std::vector<std::vector<double>> expected(10), got(10);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& v = expected[pool.labels[i]];
    if (v.size() < profile.counts[pool.labels[i]]) v.push_back(pool.row(i)[0]);
  }
  for (std::size_t i = 0; i < out.size(); ++i) got[out.labels[i]].push_back(out.row(i)[0]);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got[0].size(), 490u);
  EXPECT_EQ(got[0].back(), 10.0 * 489);
  for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LT(out.row(i - 1)[0], out.row(i)[0]);
}

TEST(ApplyProfile, SingleClassProfile) {
  const auto pool = indexed_pool(4, 5);
  ImbalanceProfile p{ProfileKind::Custom, {0, 3, 0, 0}};
  const auto out = apply_profile(pool, p);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t label : out.labels) EXPECT_EQ(label, 1u);
}

TEST(ApplyProfile, FullBalancedProfileIsIdentity) {
  const auto pool = indexed_pool(3, 7);
  EXPECT_EQ(apply_profile(pool, ImbalanceProfile::balanced(3, 7)), pool);
}

TEST(ApplyProfile, ShortfallNamesClass) {
  const auto pool = indexed_pool(3, 4);
  try {
    apply_profile(pool, ImbalanceProfile{ProfileKind::Custom, {4, 4, 6}});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("class 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("short by 2"), std::string::npos) << msg;
  }
  EXPECT_THROW(apply_profile(pool, ImbalanceProfile::balanced(2, 1)), ValidationError);
}

TEST(GaussianMixture, CountsMatchProfile) {
  const auto counts = profile_c10(ProfileKind::FiveThree).counts;
  const auto batch = gaussian_mixture(10, counts, 4, 3.0, 11);
  EXPECT_EQ(batch.class_counts(), counts);
  EXPECT_EQ(batch.dim, 4u);
  EXPECT_NO_THROW(batch.validate());
}

TEST(GaussianMixture, DeterministicPerSeedAndSplit) {
  const std::vector<std::size_t> counts(3, 20);
  const auto a = gaussian_mixture(3, counts, 5, 2.0, 42);
  EXPECT_EQ(a, gaussian_mixture(3, counts, 5, 2.0, 42));
  EXPECT_NE(a.features, gaussian_mixture(3, counts, 5, 2.0, 43).features);
  EXPECT_NE(a.features, gaussian_mixture(3, counts, 5, 2.0, 42, 1).features);
}

TEST(GaussianMixture, ClassMeansFollowDirections) {
  const std::vector<std::size_t> counts(3, 4000);
  const std::size_t dim = 3;
  const auto batch = gaussian_mixture(3, counts, dim, 5.0, 9);
  const auto dirs = class_directions(3, dim, 9);
  std::vector<std::vector<double>> mean(3, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) mean[batch.labels[i]][d] += batch.row(i)[d] / 4000.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double norm = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      norm += dirs[c][d] * dirs[c][d];
      EXPECT_NEAR(mean[c][d], 5.0 * dirs[c][d], 0.08);
    }
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(GaussianMixture, ZeroScaleGivesIdenticalClassDistributions) {
  const std::vector<std::size_t> counts(2, 5000);
  const auto batch = gaussian_mixture(2, counts, 2, 0.0, 3);
  std::vector<double> mean(2, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) mean[batch.labels[i]] += batch.row(i)[0] / 5000.0;
  EXPECT_NEAR(mean[0], 0.0, 0.06);
  EXPECT_NEAR(mean[1], 0.0, 0.06);
}

TEST(GaussianMixture, RejectsBadArguments) {
  const std::vector<std::size_t> counts(2, 5);
  EXPECT_THROW(gaussian_mixture(1, std::vector<std::size_t>{5}, 2, 1.0, 0), ValidationError);
  EXPECT_THROW(gaussian_mixture(2, counts, 1, 1.0, 0), ValidationError);
  EXPECT_THROW(gaussian_mixture(2, std::vector<std::size_t>{5, 0}, 2, 1.0, 0), ValidationError);
  EXPECT_THROW(gaussian_mixture(2, counts, 2, NAN, 0), ValidationError);
}

TEST(GaussianBlobs, ClassMajorOrder) {
  const std::vector<std::size_t> counts{3, 2};
  const auto b = gaussian_blobs({{2.0, 2.0}, {-2.0, -2.0}}, counts, 1);
  EXPECT_EQ(b.labels, (std::vector<std::size_t>{0, 0, 0, 1, 1}));
  EXPECT_EQ(b.features.size(), 10u);
}

TEST(Csv, ParsesHeaderAndRows) {
  std::istringstream in("label,f0,f1\n0,1.5,-2\n1,3e-1,+4.25\n");
  const auto b = parse_csv(in);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.dim, 2u);
  EXPECT_EQ(b.num_classes, 2u);
  EXPECT_EQ(b.features, (std::vector<double>{1.5, -2.0, 0.3, 4.25}));
}

TEST(Csv, AcceptsCrlfAndBlankLines) {
  std::istringstream in("label,f0\r\n2,1\r\n\r\n0,2\r\n");
  const auto b = parse_csv(in, 5);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.num_classes, 5u);
}

std::string csv_error(const std::string& text, std::optional<std::size_t> classes = {}) {
  std::istringstream in(text);
  try {
    parse_csv(in, classes, "data.csv");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, ErrorsCarryLineNumbers) {
  EXPECT_NE(csv_error("label,f0\n0,1\n1,abc\n").find("data.csv:3"), std::string::npos);
  EXPECT_NE(csv_error("label,f0\n0,1,2\n").find("data.csv:2"), std::string::npos);
  EXPECT_NE(csv_error("label,f0\n0,1\n\n7,1\n", 3).find("data.csv:4"), std::string::npos);
  EXPECT_NE(csv_error("label,f0\n-1,1\n").find("data.csv:2"), std::string::npos);
  EXPECT_NE(csv_error("label,f0\n0,inf\n").find("data.csv:2"), std::string::npos);
  EXPECT_NE(csv_error("lbl,f0\n0,1\n").find("data.csv:1"), std::string::npos);
  EXPECT_NE(csv_error("label,f1\n0,1\n").find("data.csv:1"), std::string::npos);
  EXPECT_NE(csv_error("label,f0\n").find("no data rows"), std::string::npos);
  EXPECT_NE(csv_error("").find("missing header"), std::string::npos);
}

TEST(Csv, RoundTripIsExact) {
  const auto batch = gaussian_mixture(4, std::vector<std::size_t>{3, 1, 2, 5}, 3, 1.7, 99);
  std::stringstream buffer;
  write_csv(buffer, batch);
  EXPECT_EQ(parse_csv(buffer, batch.num_classes), batch);

  const auto path = std::filesystem::temp_directory_path() / "cfl_data_test_roundtrip.csv";
  write_csv(path.string(), batch);
  EXPECT_EQ(load_csv(path.string(), 4), batch);
  std::filesystem::remove(path);
  EXPECT_THROW(load_csv((path.parent_path() / "cfl_no_such_file.csv").string()), ValidationError);
}

TEST(SampleBatch, ValidateRejectsBadBatches) {
  SampleBatch b;
  b.dim = 1;
  b.num_classes = 2;
  EXPECT_THROW(b.validate(), ValidationError);
  b.push_back(std::vector<double>{0.0}, 2);
  EXPECT_THROW(b.validate(), ValidationError);
  b.labels[0] = 1;
  EXPECT_NO_THROW(b.validate());
  b.features[0] = NAN;
  EXPECT_THROW(b.validate(), ValidationError);
}

}  // namespace
}  // namespace cfl
