#include "relci/relevance_model.h"

#include <gtest/gtest.h>

#include "relci/errors.h"
#include "relci/random.h"
#include "support/fixtures.h"

namespace relci {
namespace {

using testing::MakeDataset;

TEST(LabelScaleTest, NeedsTwoLabels) {
  EXPECT_THROW(LabelScale(0), Error);
  EXPECT_EQ(LabelScale(3).num_labels(), 4);
  EXPECT_TRUE(LabelScale(2).Contains(2));
  EXPECT_FALSE(LabelScale(2).Contains(3));
  EXPECT_FALSE(LabelScale(2).Contains(-1));
}

TEST(RelevanceDistributionTest, MakeValidates) {
  const LabelScale scale(1);
  EXPECT_NO_THROW(RelevanceDistribution::Make({0.4, 0.6}, scale));
  try {
    RelevanceDistribution::Make({0.6, 0.6}, scale);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDistribution);
  }
  try {
    RelevanceDistribution::Make({0.2, 0.3, 0.5}, scale);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScale);
  }
  EXPECT_THROW(RelevanceDistribution::Make({-0.1, 1.1}, scale), Error);
}

TEST(RelevanceDistributionTest, OneHot) {
  const auto d = RelevanceDistribution::OneHot(LabelScale(3), 2);
  EXPECT_EQ(d.size(), 4);
  EXPECT_EQ(d[2], 1.0);
  EXPECT_EQ(d[0] + d[1] + d[3], 0.0);
  EXPECT_THROW(RelevanceDistribution::OneHot(LabelScale(3), 4), Error);
}

TEST(ValidateDatasetTest, EmptyDatasetIsValid) {
  EXPECT_TRUE(ValidateDataset(Dataset{}).empty());
}

TEST(ValidateDatasetTest, MissingPredictionNamesPair) {
  Dataset d = MakeDataset(1, {{"q1", {{"d1", 1, {0, 1}}, {"d2", 0, {1, 0}}}}});
  d.predicted.erase({"q1", "d2"});
  const auto v = ValidateDataset(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].query_id, "q1");
  EXPECT_EQ(v[0].doc_id, "d2");
  EXPECT_EQ(v[0].rule, "missing-prediction");
}

TEST(ValidateDatasetTest, BadSumIsReported) {
  const Dataset d = MakeDataset(1, {{"q1", {{"d1", 1, {0.6, 0.6}}}}});
  const auto v = ValidateDataset(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "distribution");
  EXPECT_EQ(v[0].message, "probs sum 1.2 != 1");
}

TEST(ValidateDatasetTest, OtherRules) {
  Dataset d = MakeDataset(
      1, {{"q1", {{"d1", 0, {1, 0}}, {"d1", 0, {1, 0}}, {"d2", 5, {0.5, 0.5}}}}});
  const auto v = ValidateDataset(d);
  std::set<std::string> rules;
  for (const auto& x : v) rules.insert(x.rule);
  EXPECT_TRUE(rules.contains("unique-docs"));
  EXPECT_TRUE(rules.contains("label-scale"));
}

TEST(ValidateDatasetTest, IdempotentAndPure) {
  Dataset d = MakeDataset(1, {{"q1", {{"d1", 1, {0.6, 0.6}}}}});
  const Dataset copy = d;
  EXPECT_EQ(ValidateDataset(d), ValidateDataset(d));
  EXPECT_EQ(d.predicted, copy.predicted);
  EXPECT_EQ(d.truth, copy.truth);
}

TEST(DatasetTest, LabeledPredicateByConstructionAndDeletion) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<testing::DocSpec> docs;
    const int n = 1 + static_cast<int>(rng.Index(6));
    for (int j = 0; j < n; ++j) {
      docs.push_back({"d" + std::to_string(j), j % 2, {0.5, 0.5}});
    }
    Dataset d = MakeDataset(1, {{"q", docs}});
    EXPECT_TRUE(d.IsLabeled("q"));
    d.truth.erase({"q", "d" + std::to_string(rng.Index(n))});
    EXPECT_FALSE(d.IsLabeled("q"));
    EXPECT_TRUE(d.LabeledQueries().empty());
  }
}

TEST(DatasetTest, UnknownQueryThrows) {
  EXPECT_THROW(Dataset{}.Ranking("nope"), Error);
}

TEST(ValidateSplitTest, Rules) {
  Dataset d = MakeDataset(1, {{"a", {{"d", 1, {0, 1}}}},
                              {"b", {{"d", std::nullopt, {0, 1}}}}});
  Split ok{{"a"}, {"b"}, {}};
  EXPECT_TRUE(ValidateSplit(d, ok).empty());
  Split overlap{{"a"}, {"a", "b"}, {}};
  EXPECT_EQ(ValidateSplit(d, overlap).front().rule, "split-disjoint");
  Split unlabeled{{"b"}, {"a"}, {}};
  EXPECT_EQ(ValidateSplit(d, unlabeled).front().rule, "split-labeled");
  Split unknown{{"a"}, {"zzz"}, {}};
  EXPECT_EQ(ValidateSplit(d, unknown).front().rule, "split-subset");
}

}  // namespace
}  // namespace relci
