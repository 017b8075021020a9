#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "cfl/metrics.hpp"

namespace cfl {
namespace {

using Labels = std::vector<std::size_t>;

ImbalanceProfile counts(std::vector<std::size_t> c) { return {ProfileKind::Custom, std::move(c)}; }

TEST(ShotGroup, Boundaries) {
  EXPECT_EQ(shot_group(101), ShotGroup::ManyShot);
  EXPECT_EQ(shot_group(100), ShotGroup::MediumShot);
  EXPECT_EQ(shot_group(21), ShotGroup::MediumShot);
  EXPECT_EQ(shot_group(20), ShotGroup::FewShot);
  EXPECT_EQ(shot_group(0), ShotGroup::FewShot);
}

TEST(Score, AllCorrect) {
  const Labels y{0, 1, 2, 2, 1};
  const auto r = score(y, y, counts({150, 50, 10}));
  EXPECT_EQ(r.overall_accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.sample_count, 5u);
  for (const auto& acc : r.per_class_accuracy) EXPECT_EQ(acc, 1.0);
}

TEST(Score, ShotGroupsFromTrainingCounts) {
  const auto r = score(Labels{0, 0, 2}, Labels{0, 1, 2}, counts({150, 50, 10}));
  EXPECT_EQ(r.shot_group_accuracy.at(ShotGroup::ManyShot), 1.0);
  EXPECT_EQ(r.shot_group_accuracy.at(ShotGroup::MediumShot), 0.0);
  EXPECT_EQ(r.shot_group_accuracy.at(ShotGroup::FewShot), 1.0);
}

TEST(Score, EmptyGroupIsOmitted) {
  const auto r = score(Labels{0, 1}, Labels{0, 1}, counts({500, 400}));
  EXPECT_EQ(r.shot_group_accuracy.size(), 1u);
  EXPECT_EQ(r.shot_group_accuracy.count(ShotGroup::FewShot), 0u);
  const auto j = r.to_json();
  EXPECT_FALSE(j["shot_groups"].contains("few_shot"));
  EXPECT_TRUE(j["shot_groups"].contains("many_shot"));
}

TEST(Score, ClassWithoutTestSamplesIsUndefined) {
  const auto r = score(Labels{0, 0}, Labels{0, 0}, counts({5, 200}));
  EXPECT_FALSE(r.per_class_accuracy[1].has_value());
  EXPECT_EQ(r.shot_group_accuracy.count(ShotGroup::ManyShot), 0u);
  EXPECT_TRUE(r.to_json()["per_class_accuracy"][1].is_null());
}

TEST(Score, GroupAccuracyIsMacroOverClasses) {
  // Two few-shot classes: class 0 has 4 samples all right, class 1 has one
  // sample wrong. Macro mean 0.5, sample-weighted mean 0.8.
  const auto r = score(Labels{0, 0, 0, 0, 0}, Labels{0, 0, 0, 0, 1}, counts({10, 10}));
  EXPECT_DOUBLE_EQ(r.shot_group_accuracy.at(ShotGroup::FewShot), 0.5);
  EXPECT_DOUBLE_EQ(r.overall_accuracy, 0.8);
}

TEST(Score, MacroF1ByHand) {
  // class 0: TP 1, FP 1, FN 1 -> 0.5; class 1: TP 1, FP 1, FN 0 -> 2/3;
  // class 2: TP 0, FP 0, FN 1 -> 0.
  const auto r = score(Labels{0, 1, 0, 1}, Labels{0, 0, 2, 1}, counts({30, 30, 30}));
  EXPECT_NEAR(r.macro_f1, (0.5 + 2.0 / 3.0 + 0.0) / 3.0, 1e-15);
}

TEST(Score, OverallIsCountWeightedMeanOfPerClass) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    Labels y(200), pred(200);
    for (auto& v : y) v = gen() % 6;
    for (auto& v : pred) v = gen() % 6;
    const auto r = score(pred, y, counts({300, 120, 60, 21, 20, 3}));
    std::vector<double> n(6, 0.0);
    for (auto v : y) n[v] += 1;
    double weighted = 0;
    for (std::size_t c = 0; c < 6; ++c)
      if (r.per_class_accuracy[c]) weighted += n[c] * *r.per_class_accuracy[c];
    EXPECT_NEAR(r.overall_accuracy, weighted / 200.0, 1e-12);
    EXPECT_GE(r.macro_f1, 0.0);
    EXPECT_LE(r.macro_f1, 1.0);
  }
}

TEST(Score, InvariantUnderSamplePermutation) {
  std::mt19937_64 gen(6);
  Labels y(100), pred(100);
  for (auto& v : y) v = gen() % 4;
  for (auto& v : pred) v = gen() % 4;
  const auto base = score(pred, y, counts({200, 50, 10, 1})).to_json();
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), gen);
  Labels y2, p2;
  for (auto i : idx) {
    y2.push_back(y[i]);
    p2.push_back(pred[i]);
  }
  EXPECT_EQ(score(p2, y2, counts({200, 50, 10, 1})).to_json(), base);
}

TEST(Score, RejectsBadInput) {
  EXPECT_THROW(score(Labels{0}, Labels{0, 1}, counts({1, 1})), ValidationError);
  EXPECT_THROW(score(Labels{}, Labels{}, counts({1, 1})), ValidationError);
  EXPECT_THROW(score(Labels{2}, Labels{0}, counts({1, 1})), ValidationError);
}

TEST(MetricsJson, StableFieldNames) {
  const auto j = score(Labels{0, 1}, Labels{0, 0}, counts({150, 30})).to_json();
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"overall_accuracy", "per_class_accuracy",
                                            "shot_groups", "macro_f1", "sample_count"}));
  EXPECT_EQ(j["sample_count"], 2);
}

TEST(MetricsJson, SevenSignificantDigits) {
  EXPECT_EQ(round_sig7(1.0 / 3.0), 0.3333333);
  EXPECT_EQ(round_sig7(0.123456789), 0.1234568);
  EXPECT_EQ(round_sig7(1.0), 1.0);
}

}  // namespace
}  // namespace cfl
